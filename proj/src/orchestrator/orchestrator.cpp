// SPDX-License-Identifier: Apache-2.0

#include "msgpipe/orchestrator/orchestrator.hpp"

#include <algorithm>
#include <atomic>
#include <future>
#include <set>
#include <sstream>
#include <thread>

#include "msgpipe/ensemble/ensemble.hpp"
#include "msgpipe/errors.hpp"
#include "msgpipe/frontend/printer.hpp"
#include "msgpipe/inline/inline.hpp"

namespace msgpipe::orchestrator {

using agents::ClauseSnippet;
using deps::ContextMode;

const char* to_string(Outcome o)
{
    switch (o) {
    case Outcome::Success: return "Success";
    case Outcome::Abstract: return "Abstract";
    case Outcome::Fail: return "Fail";
    }
    return "Fail";
}

void RunConfig::validate() const
{
    if (rounds < 1)
        throw ConfigError("rounds must be at least 1");
    if (trials < 1)
        throw ConfigError("trials must be at least 1");
    if (context_modes.empty())
        throw ConfigError("at least one context mode is required");
    if (mutants < 1)
        throw ConfigError("mutant budget must be at least 1");
    if (workers < 1)
        throw ConfigError("workers must be at least 1");
}

ClauseCounts& ClauseCounts::operator+=(const ClauseCounts& o)
{
    ensures += o.ensures;
    aborts_if += o.aborts_if;
    modifies += o.modifies;
    loop_invariants += o.loop_invariants;
    return *this;
}

namespace {

struct Attempt {
    int round = 0; // earliest passing round, 0 when none passed
    ast::SpecBlock spec;
    std::optional<ast::FunctionDef> annotated;
    std::map<deps::FunctionPath, std::vector<ast::Clause>> callee_clauses;
    std::string source;
};

struct Shared {
    const RunConfig& config;
    llm::ChatBackend& llm;
    const prover::Prover& prover;
    const ensemble::VerificationUnit& unit;
    const deps::DependencyClosure& closure;
    const deps::GenerationContext& loop_ctx;
};

std::string join_classes(const ClassSet& s)
{
    std::string out;
    for (auto c : s)
        out += (out.empty() ? "" : ",") + std::string(to_string(c));
    return out;
}

std::string first_line(const std::string& s)
{
    return s.substr(0, s.find('\n'));
}

ClauseCounts count(const Attempt& a)
{
    ClauseCounts c;
    for (const auto& cl : a.spec.clauses) {
        c.ensures += cl.kind == ast::ClauseKind::Ensures;
        c.aborts_if += cl.kind == ast::ClauseKind::AbortsIf;
        c.modifies += cl.kind == ast::ClauseKind::Modifies;
    }
    for (const auto& [_, clauses] : a.callee_clauses)
        for (const auto& cl : clauses)
            c.modifies += cl.kind == ast::ClauseKind::Modifies;
    if (a.annotated && a.annotated->body)
        ast::visit(*a.annotated->body, [&](const ast::Node& n) {
            c.loop_invariants += static_cast<int>(n.invariant_count());
            return true;
        });
    return c;
}

/// Callee keys as full paths when they resolve inside the unit.
std::map<deps::FunctionPath, std::vector<ast::Clause>> resolve_callees(
    const std::map<deps::FunctionPath, std::vector<ast::Clause>>& in, const ensemble::VerificationUnit& unit)
{
    std::map<deps::FunctionPath, std::vector<ast::Clause>> out;
    for (const auto& [name, clauses] : in) {
        auto path = deps::resolve_call(unit.modules, unit.module(), name);
        if (path && *path != unit.target_module + "::" + unit.target_fn)
            out[*path] = clauses;
    }
    return out;
}

ast::SpecBlock merge_fail_safe(const std::string& fn, std::vector<ClauseSnippet> snippets, std::vector<Event>& ev,
                               const Event& at)
{
    for (;;) {
        std::vector<std::string> warnings;
        try {
            auto block = ensemble::merge(fn, snippets, &warnings);
            for (const auto& w : warnings)
                ev.push_back({at.trial, at.branch, at.round, "merge-warning", "", w});
            return block;
        } catch (const ConflictingBindings& e) {
            // Later classes yield: ensures, then aborts_if, then modifies.
            auto victim = std::max_element(snippets.begin(), snippets.end(), [](const auto& a, const auto& b) {
                auto rank = [](ClauseClass c) {
                    return c == ClauseClass::Ensures ? 2 : c == ClauseClass::AbortsIf ? 1 : 0;
                };
                return rank(a.cls) < rank(b.cls);
            });
            ev.push_back({at.trial, at.branch, at.round, "merge", to_string(victim->cls),
                          std::string("dropped after conflict: ") + e.what()});
            snippets.erase(victim);
        }
    }
}

Attempt run_branch(const Shared& sh, int trial, ContextMode mode, const deps::GenerationContext& ctx,
                   const std::optional<ClauseSnippet>& precheck, std::vector<Event>& ev)
{
    const RunConfig& cfg = sh.config;
    std::string branch = deps::to_string(mode);
    bool has_loops = ctx.metadata.has_loops;

    ClassSet active;
    if (!precheck)
        active.insert(ClauseClass::AbortsIf);
    if (ctx.metadata.has_global_mut)
        active.insert(ClauseClass::Modifies);
    active.insert(ClauseClass::Ensures);
    if (has_loops)
        active.insert(ClauseClass::LoopInvariant);

    std::map<ClauseClass, ClauseSnippet> snippets;
    if (precheck)
        snippets[ClauseClass::AbortsIf] = *precheck;
    std::map<ClauseClass, std::vector<std::string>> guidance;
    ClassSet pending = active;
    Attempt best;

    for (int round = 1; round <= cfg.rounds; ++round) {
        std::vector<ClauseClass> run(pending.begin(), pending.end());
        std::vector<std::future<ClauseSnippet>> futures;
        std::vector<agents::PromptBundle> bundles;
        for (ClauseClass c : run) {
            const auto& agent_ctx = c == ClauseClass::LoopInvariant ? sh.loop_ctx : ctx;
            std::optional<ClauseSnippet> prior;
            if (!guidance[c].empty() && snippets.count(c))
                prior = snippets[c];
            bundles.push_back(agents::make_bundle(c, agent_ctx, guidance[c], prior, cfg.agent));
        }
        for (std::size_t i = 0; i < run.size(); ++i) {
            ClauseClass c = run[i];
            const auto& agent_ctx = c == ClauseClass::LoopInvariant ? sh.loop_ctx : ctx;
            auto task = [&, c, i] {
                return agents::gen_clauses(c, agent_ctx, bundles[i], sh.llm, cfg.agent);
            };
            futures.push_back(std::async(cfg.parallel_agents ? std::launch::async : std::launch::deferred, task));
        }
        for (std::size_t i = 0; i < run.size(); ++i) {
            ClauseClass c = run[i];
            std::string note = bundles[i].guidance.empty() ? "" : " (with guidance)";
            try {
                ClauseSnippet s = futures[i].get();
                std::string text = agents::print_snippet(s);
                if (!s.diagnostics.empty())
                    text += "-- " + std::to_string(s.diagnostics.size()) + " member(s) dropped\n";
                ev.push_back({trial, branch, round, "agent", to_string(c), "generated" + note + "\n" + text});
                snippets[c] = std::move(s);
            } catch (const ReplayMiss&) {
                throw;
            } catch (const Error& e) {
                ev.push_back({trial, branch, round, "agent-error", to_string(c), first_line(e.what())});
            }
        }

        std::vector<ClauseSnippet> parts;
        std::optional<ast::FunctionDef> annotated;
        std::map<deps::FunctionPath, std::vector<ast::Clause>> callee;
        for (const auto& [c, s] : snippets) {
            parts.push_back(s);
            if (s.annotated_function)
                annotated = s.annotated_function;
            if (c == ClauseClass::Modifies)
                callee = resolve_callees(s.callee_snippets, sh.unit);
        }
        Event at{trial, branch, round, "", "", ""};
        ast::SpecBlock block = merge_fail_safe(sh.unit.target_fn, parts, ev, at);
        if (cfg.polish)
            block = ensemble::polish(block, sh.llm, cfg.agent);
        ev.push_back({trial, branch, round, "merge", "", frontend::print_spec_block(block)});

        std::string source = sh.unit.render(block, annotated, callee);
        auto verdict = sh.prover.verify(source);
        ev.push_back({trial, branch, round, "verify", "", prover::to_string(verdict.kind)});

        if (verdict.passed()) {
            if (best.round == 0)
                best.round = round;
            best.spec = block;
            best.annotated = annotated;
            best.callee_clauses = callee;
            best.source = source;
            if (!cfg.coverage_enabled || round == cfg.rounds)
                break;
            ast::SourceModule base = ensemble::attach(sh.unit.module(), block, annotated);
            std::vector<coverage::Mutant> mutants;
            try {
                unsigned seed = cfg.seed + static_cast<unsigned>(trial) * 7919u + static_cast<unsigned>(round);
                mutants = coverage::mutate(base, sh.unit.target_fn, seed, cfg.mutants, sh.closure.workspace);
            } catch (const NoCandidates&) {
                ev.push_back({trial, branch, round, "coverage", "", "no deletion candidates"});
                break;
            }
            auto render = [&](const ast::FunctionDef& f) { return sh.unit.render(block, f, callee); };
            coverage::CoverageReport report;
            try {
                report = coverage::measure_with(render, *base.find_function(sh.unit.target_fn), mutants, sh.prover,
                                                cfg.prover.parallelism);
            } catch (const PreconditionViolated& e) {
                ev.push_back({trial, branch, round, "coverage", "", first_line(e.what())});
                break;
            }
            ev.push_back({trial, branch, round, "coverage", "", report.describe()});
            if (report.uncovered.empty())
                break;
            guidance.clear();
            guidance[ClauseClass::Ensures] = {
                "The specification verifies, but it still verifies after each deletion below, so the deleted code "
                "is not constrained. Strengthen the ensures clauses to cover it:\n" +
                coverage::feedback_diffs(report)};
            pending = {ClauseClass::Ensures};
            ev.push_back({trial, branch, round, "route", "", "ensures"});
            continue;
        }
        if (best.round != 0) {
            // A refinement broke a verified spec; keep the verified one.
            ev.push_back({trial, branch, round, "route", "", "keeping the spec verified in an earlier round"});
            break;
        }

        std::string summary = agents::summarize_error(verdict, sh.llm, cfg.agent);
        ev.push_back({trial, branch, round, "summary", "", summary});
        std::vector<std::string> g{"Summary: " + summary};
        for (const auto& advice : prover::match_guidance(verdict, prover::builtin_guidance())) {
            g.push_back("Guidance: " + advice);
            ev.push_back({trial, branch, round, "guidance", "", advice});
        }
        std::string diag = verdict.diagnostic_text();
        if (!diag.empty())
            g.push_back("Prover output:\n" + diag);
        ClassSet responsible = prover::attribute_failure(verdict, active, has_loops, source);
        guidance.clear();
        for (auto c : responsible)
            guidance[c] = g;
        pending = responsible;
        ev.push_back({trial, branch, round, "route", "", join_classes(responsible)});
    }
    return best;
}

deps::GenerationContext context_for(const deps::DependencyClosure& closure, ContextMode mode)
{
    if (mode == ContextMode::Listed)
        return deps::build_context(closure, mode);
    auto report = inliner::inline_best_effort(closure);
    return deps::build_context(closure, mode, frontend::print_function(report.result));
}

std::string indent(const std::string& text)
{
    std::string out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line))
        out += "    " + line + "\n";
    return out;
}

} // namespace

std::string RunRecord::transcript_text() const
{
    std::ostringstream out;
    out << "target: " << target << "\noutcome: " << to_string(outcome);
    if (outcome == Outcome::Success)
        out << " (round " << round << ", trial " << trial << ", " << mode << ")";
    out << "\n";
    for (const auto& e : transcript) {
        if (e.trial == 0)
            out << "[final";
        else
            out << "[trial " << e.trial;
        if (!e.branch.empty())
            out << " " << e.branch;
        if (e.round)
            out << " round " << e.round;
        out << "] " << e.kind;
        if (!e.cls.empty())
            out << " " << e.cls;
        out << "\n" << indent(e.text);
    }
    return out.str();
}

std::string RunRecord::spec_text() const
{
    std::string out;
    if (annotated)
        out += frontend::print_function(*annotated) + "\n";
    out += frontend::print_spec_block(spec);
    for (const auto& [path, clauses] : callee_clauses) {
        ast::SpecBlock b;
        b.target_fn = ast::split_path(path).back();
        b.clauses = clauses;
        out += "\n" + frontend::print_spec_block(b);
    }
    return out;
}

RunRecord run_target(const std::string& target, std::span<const ast::SourceModule> workspace,
                     const RunConfig& config, llm::ChatBackend& llm, const prover::Prover& prover)
{
    config.validate();
    RunRecord rec;
    rec.target = target;

    deps::DependencyClosure closure;
    try {
        closure = deps::slice(workspace, target);
    } catch (const TargetNotFound& e) {
        rec.transcript.push_back({0, "", 0, "fail", "", e.what()});
        return rec;
    }
    rec.target = closure.target;
    auto unit = ensemble::VerificationUnit::from_closure(closure);

    std::vector<ContextMode> modes;
    for (auto m : {ContextMode::Inlined, ContextMode::Listed})
        if (std::find(config.context_modes.begin(), config.context_modes.end(), m) != config.context_modes.end())
            modes.push_back(m);
    std::map<ContextMode, deps::GenerationContext> contexts;
    for (auto m : modes)
        contexts[m] = context_for(closure, m);
    deps::GenerationContext listed =
        contexts.count(ContextMode::Listed) ? contexts[ContextMode::Listed] : context_for(closure, ContextMode::Listed);

    Shared sh{config, llm, prover, unit, closure, listed};
    std::optional<Attempt> best;
    std::string best_mode;
    int best_trial = 0;

    for (int trial = 1; trial <= config.trials; ++trial) {
        auto pre = agents::precheck_aborts_false(unit, prover);
        rec.transcript.push_back({trial, "", 0, "precheck", "aborts_if", pre ? "aborts_if false verified; agent skipped"
                                                                             : "aborts_if false not verified"});
        std::vector<std::vector<Event>> logs(modes.size());
        std::vector<std::future<Attempt>> runs;
        for (std::size_t i = 0; i < modes.size(); ++i) {
            auto task = [&, i, trial] { return run_branch(sh, trial, modes[i], contexts[modes[i]], pre, logs[i]); };
            runs.push_back(std::async(config.parallel_agents ? std::launch::async : std::launch::deferred, task));
        }
        std::vector<Attempt> results;
        for (auto& r : runs)
            results.push_back(r.get());
        for (auto& l : logs)
            rec.transcript.insert(rec.transcript.end(), l.begin(), l.end());

        // Earliest round wins; ties go to the listed context.
        for (std::size_t i = 0; i < modes.size(); ++i) {
            const Attempt& a = results[i];
            if (a.round == 0)
                continue;
            bool better = !best || a.round < best->round ||
                          (a.round == best->round && best_trial == trial && modes[i] == ContextMode::Listed);
            if (better) {
                best = a;
                best_mode = deps::to_string(modes[i]);
                best_trial = trial;
            }
        }
    }

    if (best) {
        rec.outcome = Outcome::Success;
        rec.round = best->round;
        rec.trial = best_trial;
        rec.mode = best_mode;
        rec.spec = best->spec;
        rec.annotated = best->annotated;
        rec.callee_clauses = best->callee_clauses;
        rec.source = best->source;
        rec.counts = count(*best);
        return rec;
    }

    const auto& ctx = contexts.count(ContextMode::Listed) ? contexts[ContextMode::Listed] : contexts[modes.front()];
    ast::SpecBlock abstract = agents::gen_abstract_spec(ctx, llm, config.agent);
    std::string source = unit.render(abstract);
    auto verdict = prover.verify(source);
    rec.transcript.push_back({0, "", 0, "abstract", "", frontend::print_spec_block(abstract) +
                                                            "verdict: " + prover::to_string(verdict.kind)});
    rec.spec = abstract;
    rec.source = source;
    rec.outcome = verdict.kind == prover::VerdictKind::CompileError ? Outcome::Fail : Outcome::Abstract;
    return rec;
}

Summary summarize(const std::vector<RunRecord>& records, int rounds)
{
    Summary s;
    for (int r = 1; r <= rounds; ++r)
        s.success_by_round[r] = 0;
    for (const auto& rec : records) {
        switch (rec.outcome) {
        case Outcome::Success:
            ++s.success;
            ++s.success_by_round[rec.round];
            s.clauses += rec.counts;
            break;
        case Outcome::Abstract: ++s.abstract; break;
        case Outcome::Fail: ++s.fail; break;
        }
    }
    return s;
}

std::string Summary::table() const
{
    std::ostringstream out;
    out << "Fail | Success | Abstract\n" << fail << " | " << success << " | " << abstract << "\n\n";
    out << "round | successes\n";
    for (const auto& [r, n] : success_by_round)
        out << r << " | " << n << "\n";
    out << "\nensures | aborts_if | modifies | loop_invariants\n";
    out << clauses.ensures << " | " << clauses.aborts_if << " | " << clauses.modifies << " | "
        << clauses.loop_invariants << "\n";
    return out.str();
}

std::string SuiteResult::report() const
{
    std::ostringstream out;
    out << "# msgpipe run report\n\n";
    out << "rounds: " << config.rounds << "\ntrials: " << config.trials << "\nmodes: ";
    for (std::size_t i = 0; i < config.context_modes.size(); ++i)
        out << (i ? "," : "") << deps::to_string(config.context_modes[i]);
    out << "\ncoverage: " << (config.coverage_enabled ? "on" : "off") << "\nseed: " << config.seed << "\n\n";
    out << "target | outcome | round | mode | ensures | aborts_if | modifies | loop_invariants\n";
    for (const auto& r : records) {
        out << r.target << " | " << to_string(r.outcome) << " | ";
        if (r.outcome == Outcome::Success)
            out << r.round << " | " << r.mode;
        else
            out << "- | -";
        out << " | " << r.counts.ensures << " | " << r.counts.aborts_if << " | " << r.counts.modifies << " | "
            << r.counts.loop_invariants << "\n";
    }
    out << "\n" << summary.table();
    return out.str();
}

SuiteResult run_suite(std::span<const ast::SourceModule> workspace, const RunConfig& config, llm::ChatBackend& llm,
                      const prover::Prover& prover, std::vector<std::string> targets)
{
    config.validate();
    if (targets.empty())
        targets = deps::select_targets(workspace);
    SuiteResult result;
    result.config = config;
    result.records.resize(targets.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex mu;
    auto worker = [&] {
        for (std::size_t i = next++; i < targets.size(); i = next++) {
            try {
                result.records[i] = run_target(targets[i], workspace, config, llm, prover);
            } catch (...) {
                std::lock_guard lock(mu);
                if (!failure)
                    failure = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    int n = std::min<int>(config.workers, static_cast<int>(targets.size()));
    for (int i = 1; i < n; ++i)
        pool.emplace_back(worker);
    worker();
    for (auto& t : pool)
        t.join();
    if (failure)
        std::rethrow_exception(failure);
    result.summary = summarize(result.records, config.rounds);
    return result;
}

} // namespace msgpipe::orchestrator
