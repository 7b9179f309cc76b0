// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "msgpipe/deps/deps.hpp"
#include "msgpipe/errors.hpp"
#include "msgpipe/frontend/ast.hpp"

namespace msgpipe::inliner {

struct Skip {
    deps::FunctionPath callee;
    std::string reason; // diagnostic code or one of Native, Recursive, EarlyReturn, UnsupportedCallSite, NotReached
};

struct InlineReport {
    std::vector<deps::FunctionPath> inlined;
    std::vector<Skip> skipped;
    ast::FunctionDef result;

    /// Report text: attempt policy, then one line per callee.
    std::string describe() const;
};

/// Greedy inlining over the closure's callees (topological order, repeated
/// until no attempt changes the body). A callee is kept only when every one
/// of its call sites can be replaced and the rewritten target still passes
/// the well-formedness check.
InlineReport inline_best_effort(const deps::DependencyClosure& closure);

/// Replaces the call at `callsite` with the callee's body. Parameters become
/// `let <param>__inl<suffix> = <arg>;` bindings hoisted in front of the
/// enclosing statement; callee locals get the same suffix.
///
/// Throws SignatureMismatch when `callsite` is not a call of matching arity,
/// UnsupportedCallSite when the call cannot be hoisted (short-circuit
/// operand, loop condition, or after another call in the same statement),
/// and EarlyReturn when the callee returns from a non-tail position.
ast::Node substitute(const ast::Node& body, ast::NodeId callsite, const ast::FunctionDef& callee, int suffix);

/// substitute() on a whole function; also merges the callee's acquires.
/// `callee_module` qualifies struct and function names when it differs from
/// `caller_module`.
ast::FunctionDef inline_call(const ast::FunctionDef& caller, ast::NodeId callsite, const ast::FunctionDef& callee,
                             int suffix, const std::string& caller_module = {},
                             const std::string& callee_module = {});

class UnsupportedCallSite : public Error {
  public:
    using Error::Error;
};

class EarlyReturn : public Error {
  public:
    using Error::Error;
};

} // namespace msgpipe::inliner
