// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "msgpipe/frontend/ast.hpp"

namespace msgpipe::frontend {

// Canonical formatting: 4-space indent, one statement or clause per line,
// clauses in requires < modifies < aborts_if < ensures order, minimal
// parentheses. Output reparses to a structurally equal AST.

std::string pretty_print(const ast::SourceModule& module);
std::string pretty_print(const std::vector<ast::SourceModule>& modules);

std::string print_function(const ast::FunctionDef& fn, int indent = 0);
std::string print_struct(const ast::StructDef& s, int indent = 0);
std::string print_constant(const ast::ConstDef& c, int indent = 0);
/// Prints the block preceded by its helper `spec fun` declarations.
std::string print_spec_block(const ast::SpecBlock& block, int indent = 0);
std::string print_clause(const ast::Clause& clause);
std::string print_binding(const ast::Binding& binding);
std::string print_expr(const ast::Node& expr);
std::string print_type(const ast::Type& type);

} // namespace msgpipe::frontend
