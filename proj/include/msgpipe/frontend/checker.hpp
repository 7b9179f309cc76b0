// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <unordered_map>
#include <vector>

#include "msgpipe/frontend/ast.hpp"
#include "msgpipe/frontend/diagnostic.hpp"

namespace msgpipe::frontend {

/// Expression types keyed by node id. Struct names are module-qualified.
using TypeTable = std::unordered_map<ast::NodeId, ast::Type>;

/// Subset well-formedness: names resolve, arities match, types unify,
/// every borrow_global* struct is acquired by the enclosing function, and
/// storage operations stay inside the defining module. Never throws.
///
/// Cross-module references resolve against `workspace`; the module itself
/// need not be an element of it.
std::vector<Diagnostic> check_wellformed(const ast::SourceModule& module);
std::vector<Diagnostic> check_wellformed(const ast::SourceModule& module,
                                         std::span<const ast::SourceModule> workspace);

/// Diagnostics for one function body (and its spec block, if any).
std::vector<Diagnostic> check_function(const ast::SourceModule& module, const ast::FunctionDef& fn,
                                       std::span<const ast::SourceModule> workspace);

TypeTable infer_types(const ast::SourceModule& module, const ast::FunctionDef& fn,
                      std::span<const ast::SourceModule> workspace);

} // namespace msgpipe::frontend
