// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "msgpipe/agents/agents.hpp"
#include "msgpipe/coverage/coverage.hpp"
#include "msgpipe/deps/deps.hpp"
#include "msgpipe/llm/llm.hpp"
#include "msgpipe/prover/prover.hpp"

namespace msgpipe::orchestrator {

struct RunConfig {
    int rounds = 5;
    int trials = 3;
    std::vector<deps::ContextMode> context_modes{deps::ContextMode::Inlined, deps::ContextMode::Listed};
    prover::ProverConfig prover;
    bool coverage_enabled = false;
    unsigned seed = 0;
    int mutants = coverage::kDefaultMutants;
    int workers = 1;          // targets in flight
    bool parallel_agents = true;
    bool polish = false;
    agents::AgentOptions agent;

    /// Throws ConfigError.
    void validate() const;
};

enum class Outcome { Success, Abstract, Fail };

const char* to_string(Outcome o);

struct Event {
    int trial = 0;
    std::string branch; // "V1", "V2" or empty for trial-wide events
    int round = 0;      // 0 outside the round loop
    std::string kind;   // precheck, agent, agent-error, merge, verify, summary, guidance, route, coverage, abstract
    std::string cls;
    std::string text;
};

struct ClauseCounts {
    int ensures = 0;
    int aborts_if = 0;
    int modifies = 0;
    int loop_invariants = 0;

    ClauseCounts& operator+=(const ClauseCounts& o);
};

struct RunRecord {
    std::string target;
    Outcome outcome = Outcome::Fail;
    int round = 0;    // earliest passing round (Success only)
    int trial = 0;    // trial the outcome was taken from
    std::string mode; // winning context, "V1" or "V2"
    ast::SpecBlock spec;
    std::optional<ast::FunctionDef> annotated;
    std::map<deps::FunctionPath, std::vector<ast::Clause>> callee_clauses;
    std::string source; // prover input of the recorded spec
    std::vector<Event> transcript;
    ClauseCounts counts;

    std::string transcript_text() const;
    /// Spec block, callee blocks and the annotated function as Move text.
    std::string spec_text() const;
};

/// Runs every trial of the generation loop for one target. Environment
/// failures (ToolNotFound, WorkspaceSetupFailed, ReplayMiss) propagate;
/// everything else becomes an outcome.
RunRecord run_target(const std::string& target, std::span<const ast::SourceModule> workspace,
                     const RunConfig& config, llm::ChatBackend& llm, const prover::Prover& prover);

struct Summary {
    int fail = 0;
    int success = 0;
    int abstract = 0;
    std::map<int, int> success_by_round;
    ClauseCounts clauses; // over successful targets

    std::string table() const;
};

struct SuiteResult {
    std::vector<RunRecord> records;
    Summary summary;
    RunConfig config;

    /// Deterministic text report: configuration, one row per target, summary.
    std::string report() const;
};

Summary summarize(const std::vector<RunRecord>& records, int rounds);

/// Runs `targets` (default: select_targets) with up to config.workers in flight.
SuiteResult run_suite(std::span<const ast::SourceModule> workspace, const RunConfig& config, llm::ChatBackend& llm,
                      const prover::Prover& prover, std::vector<std::string> targets = {});

} // namespace msgpipe::orchestrator
