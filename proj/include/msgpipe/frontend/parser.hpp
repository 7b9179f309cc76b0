// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "msgpipe/frontend/ast.hpp"

namespace msgpipe::frontend {

/// Parses a file holding one or more modules. Top-level `spec addr::m { ... }`
/// sections are merged into the module of the same name from the same file.
///
/// Throws SyntaxError / UnsupportedConstruct.
std::vector<ast::SourceModule> parse_modules(std::string_view source);

/// Parses a file that must hold exactly one module.
ast::SourceModule parse(std::string_view source);

/// Spec members collected from a `spec <fn> { ... }` body or from free text.
struct SpecMembers {
    std::vector<ast::Pragma> pragmas;
    std::vector<ast::Binding> bindings;
    std::vector<ast::Clause> clauses;
    std::vector<ast::SpecFun> helper_funs;
    std::vector<ast::SpecBlock> blocks; // nested `spec f { }` blocks
};

/// A separate spec file: sections `spec addr::m { spec f { ... } ... }`.
struct SpecSection {
    std::string address;
    std::string module;
    std::vector<ast::SpecBlock> blocks;
    std::vector<ast::Pragma> module_pragmas;
};

std::vector<SpecSection> parse_spec_file(std::string_view source);

/// Attaches the blocks of every section to the matching workspace module.
/// Throws TargetNotFound when a module or function is missing.
void merge_spec_sections(std::vector<ast::SourceModule>& workspace, const std::vector<SpecSection>& sections);

/// Free-standing fragments, used when reading model output.
ast::Node parse_expression(std::string_view text);
ast::Node parse_spec_expression(std::string_view text);
SpecMembers parse_spec_members(std::string_view text);
ast::FunctionDef parse_function(std::string_view text);

} // namespace msgpipe::frontend
