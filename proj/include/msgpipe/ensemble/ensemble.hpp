// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "msgpipe/agents/agents.hpp"
#include "msgpipe/deps/deps.hpp"
#include "msgpipe/frontend/ast.hpp"
#include "msgpipe/llm/llm.hpp"

namespace msgpipe::ensemble {

/// Merges at most one snippet per class into one block: bindings first
/// (deduplicated by kind, name and structure), then requires, modifies,
/// aborts_if, ensures. A later binding that reuses a name with a different
/// expression is renamed `<name>_<class>` when only one side is referenced.
///
/// Throws PreconditionViolated on repeated classes, ConflictingBindings when
/// both colliding same-kind bindings are referenced.
ast::SpecBlock merge(const std::string& target_fn, const std::vector<agents::ClauseSnippet>& snippets,
                     std::vector<std::string>* warnings = nullptr);

/// The block as a single snippet (class tag Ensures).
agents::ClauseSnippet as_snippet(const ast::SpecBlock& block);

/// Replaces the target's spec block; `annotated` replaces its body.
/// Throws TargetNotFound.
ast::SourceModule attach(const ast::SourceModule& module, const ast::SpecBlock& block,
                         const std::optional<ast::FunctionDef>& annotated = std::nullopt);

/// Optional model pass that reorders and tidies a block. Any output that
/// fails to parse or changes the clause multiset is discarded.
ast::SpecBlock polish(const ast::SpecBlock& block, llm::ChatBackend& llm, const agents::AgentOptions& opts = {});

/// The modules a prover needs for one target: the target module plus every
/// module holding a callee or a struct of the closure, in workspace order.
struct VerificationUnit {
    std::vector<ast::SourceModule> modules;
    std::string target_module; // address::module
    std::string target_fn;

    static VerificationUnit from_closure(const deps::DependencyClosure& closure);
    const ast::SourceModule& module() const;
    /// Source text with `block` attached to the target and callee clauses
    /// added to the callee spec blocks.
    std::string render(const ast::SpecBlock& block, const std::optional<ast::FunctionDef>& annotated = std::nullopt,
                       const std::map<deps::FunctionPath, std::vector<ast::Clause>>& callee_clauses = {}) const;
    std::string render_modules(const std::vector<ast::SourceModule>& modules) const;
};

} // namespace msgpipe::ensemble
