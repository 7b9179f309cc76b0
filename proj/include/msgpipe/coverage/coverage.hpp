// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "msgpipe/frontend/ast.hpp"
#include "msgpipe/prover/prover.hpp"

namespace msgpipe::coverage {

inline constexpr int kDefaultMutants = 8;

struct Mutant {
    int id = 0;
    std::vector<ast::NodeId> deleted_nodes;
    std::string description; // "delete statement", "empty block", "default value"
    ast::FunctionDef function;
    std::string source; // module text with the mutated function, no spec
    std::string diff;   // unified diff against the original module text
};

struct CoverageReport {
    int total = 0;
    int covered = 0;
    std::vector<Mutant> uncovered;
    std::vector<int> timed_out; // mutant ids left out of `total`

    std::optional<double> ratio() const;
    std::string describe() const;
};

/// Draws up to `n` distinct well-formed deletion mutants of `fn_name`.
/// Candidates are whole statements, branch and loop bodies, and calls or
/// arithmetic in expression position (replaced by 0, false, @0x0 or an
/// empty vector). Throws NoCandidates, TargetNotFound.
std::vector<Mutant> mutate(const ast::SourceModule& module, std::string_view fn_name, unsigned seed, int n,
                           std::span<const ast::SourceModule> workspace = {});

/// Verifies every mutant against `spec`. Pass means uncovered;
/// Counterexample and CompileError mean covered; Timeout is excluded.
/// Throws PreconditionViolated when the spec fails on the original.
CoverageReport measure(const ast::SourceModule& module, const ast::SpecBlock& spec,
                       const std::vector<Mutant>& mutants, const prover::Prover& prover, int parallelism = 1);

/// Source text for a candidate function body.
using Renderer = std::function<std::string(const ast::FunctionDef&)>;

/// As measure, with the prover input produced by `render`.
CoverageReport measure_with(const Renderer& render, const ast::FunctionDef& original,
                            const std::vector<Mutant>& mutants, const prover::Prover& prover, int parallelism = 1);

/// Unified diffs of the uncovered mutants, in id order.
std::string feedback_diffs(const CoverageReport& report);

/// Line diff with three lines of context.
std::string unified_diff(const std::string& before, const std::string& after, const std::string& label);

/// The module with `fn` replacing its namesake and `spec` (if any) attached.
std::string render_with(const ast::SourceModule& module, const ast::FunctionDef& fn,
                        const ast::SpecBlock* spec);

} // namespace msgpipe::coverage
