// SPDX-License-Identifier: Apache-2.0

// Acceptance checks. Prints one PASS, FAIL or SKIP line per criterion and
// exits nonzero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "msgpipe/cli/cli.hpp"
#include "msgpipe/coverage/coverage.hpp"
#include "msgpipe/deps/deps.hpp"
#include "msgpipe/ensemble/ensemble.hpp"
#include "msgpipe/errors.hpp"
#include "msgpipe/frontend/checker.hpp"
#include "msgpipe/frontend/parser.hpp"
#include "msgpipe/frontend/printer.hpp"
#include "msgpipe/inline/inline.hpp"
#include "msgpipe/orchestrator/orchestrator.hpp"
#include "test_support.hpp"

using namespace msgpipe;
namespace fs = std::filesystem;
namespace fx = msgpipe::testing;

namespace {

enum class Status { Pass, Fail, Skip };

struct Result {
    Status status = Status::Pass;
    std::vector<std::string> notes;

    void check(bool ok, const std::string& what)
    {
        if (!ok) {
            status = Status::Fail;
            notes.push_back(what);
        }
    }
};

std::size_t calls_to(const ast::Node& body, const std::string& name)
{
    std::size_t n = 0;
    ast::visit(body, [&](const ast::Node& x) {
        if (x.is(ast::NodeKind::Call) && ast::split_path(x.text).back() == name)
            ++n;
        return true;
    });
    return n;
}

bool wellformed_in_place(const deps::DependencyClosure& c, const ast::FunctionDef& f)
{
    ast::SourceModule m = c.module();
    *m.find_function(f.name) = f;
    return frontend::check_function(m, f, c.workspace).empty();
}

std::vector<orchestrator::Event> select(const orchestrator::RunRecord& r, const std::string& kind)
{
    std::vector<orchestrator::Event> out;
    for (const auto& e : r.transcript)
        if (e.kind == kind)
            out.push_back(e);
    return out;
}

std::set<std::string> split_classes(const std::string& s)
{
    std::set<std::string> out;
    std::istringstream in(s);
    std::string item;
    while (std::getline(in, item, ','))
        if (!item.empty())
            out.insert(item);
    return out;
}

/// Each round after the first runs exactly the classes routed by the round
/// before it, with guidance, and no branch exceeds the round bound.
void check_routing(Result& res, const orchestrator::RunRecord& r, int rounds)
{
    using Key = std::tuple<int, std::string, int>;
    std::map<std::pair<int, std::string>, int> verifies;
    std::map<Key, std::set<std::string>> routed, ran;
    for (const auto& e : r.transcript) {
        if (e.kind == "verify")
            ++verifies[{e.trial, e.branch}];
        if (e.kind == "agent" || e.kind == "agent-error") {
            ran[{e.trial, e.branch, e.round}].insert(e.cls);
            if (e.round > 1 && e.kind == "agent")
                res.check(e.text.find("(with guidance)") != std::string::npos,
                          r.target + ": round " + std::to_string(e.round) + " agent without guidance");
        }
        if (e.kind == "route" && e.text.find(' ') == std::string::npos)
            routed[{e.trial, e.branch, e.round}] = split_classes(e.text);
    }
    for (const auto& [key, n] : verifies)
        res.check(n <= rounds, r.target + ": more than " + std::to_string(rounds) + " rounds in " + key.second);
    for (const auto& [key, classes] : ran) {
        auto [trial, branch, round] = key;
        if (round > 1)
            res.check(classes == routed[Key{trial, branch, round - 1}],
                      r.target + ": trial " + std::to_string(trial) + " " + branch + " round " +
                          std::to_string(round) + " re-ran classes that were not routed");
    }
}

Result check_parser_round_trip()
{
    Result res;
    auto start = std::chrono::steady_clock::now();
    auto files = fx::corpus_files();
    res.check(files.size() >= 25, "only " + std::to_string(files.size()) + " corpus files");
    for (const auto& f : files) {
        auto first = frontend::parse_modules(fx::read_text(f));
        std::string printed = frontend::pretty_print(first);
        auto second = frontend::parse_modules(printed);
        bool same = first.size() == second.size();
        for (std::size_t i = 0; same && i < first.size(); ++i)
            same = ast::equal(first[i], second[i]);
        res.check(same, f.filename().string() + ": reparse differs");
        res.check(frontend::pretty_print(second) == printed, f.filename().string() + ": print not a fixpoint");
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    res.check(secs < 5.0, "took " + std::to_string(secs) + " s");
    res.notes.push_back(std::to_string(files.size()) + " files in " + std::to_string(secs) + " s");
    return res;
}

Result check_slicing()
{
    Result res;
    for (unsigned seed = 0; seed < 50; ++seed) {
        auto g = fx::random_call_graph(seed, 12);
        auto ws = frontend::parse_modules(g.source);
        for (std::size_t root = 0; root < g.functions.size(); ++root) {
            auto c = deps::slice(ws, g.functions[root]);
            std::vector<std::string> got;
            for (const auto& cl : c.callees)
                got.push_back(cl.path);
            std::sort(got.begin(), got.end());
            res.check(got == fx::reachable_from(g, static_cast<int>(root)),
                      "seed " + std::to_string(seed) + " root " + g.functions[root]);
        }
    }
    res.notes.push_back("50 graphs");
    return res;
}

Result check_inliner()
{
    Result res;
    int checked = 0;
    std::vector<std::vector<ast::SourceModule>> sources;
    for (const auto& path : fx::corpus_files()) {
        try {
            sources.push_back(frontend::parse_modules(fx::read_text(path)));
        } catch (const SyntaxError&) {
        }
    }
    sources.push_back(fx::load_workspace());
    for (const auto& ws : sources)
        for (const auto& target : deps::select_targets(ws)) {
            auto c = deps::slice(ws, target);
            if (!c.target_fn.body || !wellformed_in_place(c, c.target_fn))
                continue;
            auto r = inliner::inline_best_effort(c);
            res.check(wellformed_in_place(c, r.result), target + ": inlined body is not well-formed");
            ++checked;
        }

    std::vector<ast::SourceModule> coin{fx::load_module("corpus/coin.move")};
    auto tc = deps::slice(coin, "coin::transfer");
    auto t = inliner::inline_best_effort(tc);
    res.check(ast::count_mut_borrows(*t.result.body) == 2, "transfer: borrow_global_mut count is not 2");
    res.check(calls_to(*t.result.body, "withdraw") == 0 && calls_to(*t.result.body, "deposit") == 0,
              "transfer: callee calls remain");

    std::vector<ast::SourceModule> greedy{fx::load_module("corpus/greedy_skip.move")};
    auto gc = deps::slice(greedy, "ledger::settle");
    auto g = inliner::inline_best_effort(gc);
    res.check(g.inlined == std::vector<std::string>{"0x9::ledger::double"}, "greedy: wrong inlined list");
    res.check(g.skipped.size() == 1 && g.skipped[0].callee == "0x9::ledger::bump", "greedy: wrong skipped list");
    res.check(wellformed_in_place(gc, g.result), "greedy: result is not well-formed");
    res.notes.push_back(std::to_string(checked) + " targets inlined");
    return res;
}

Result check_classification()
{
    Result res;
    std::istringstream in(fx::read_fixture("diagnostics/labels.tsv"));
    std::string line;
    int total = 0, agree = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#')
            continue;
        std::istringstream f(line);
        std::string file, kind, exit, killed;
        std::getline(f, file, '\t');
        std::getline(f, kind, '\t');
        std::getline(f, exit, '\t');
        std::getline(f, killed, '\t');
        auto v = prover::classify(fx::read_fixture("diagnostics/" + file), std::stoi(exit), killed == "1", 1.0, 60.0);
        ++total;
        if (kind == prover::to_string(v.kind))
            ++agree;
        else
            res.check(false, file + ": got " + prover::to_string(v.kind) + ", labelled " + kind);
    }
    res.check(total >= 12, "only " + std::to_string(total) + " labelled fixtures");
    res.notes.push_back(std::to_string(agree) + "/" + std::to_string(total) + " agree");
    return res;
}

Result check_coverage_pair()
{
    Result res;
    auto plain = fx::load_module("corpus/pair.move");
    auto plus = *fx::load_module("corpus/pair_spec_complete.move").find_spec("make_pair");
    auto minus = *fx::load_module("corpus/pair_spec_incomplete.move").find_spec("make_pair");
    auto second = *fx::load_module("corpus/pair_mutant.move").find_function("make_pair");
    auto prover = prover::MockProver::from_file(fx::fixture_path("mock/pair.rules").string());

    auto ms = coverage::mutate(plain, "make_pair", 7, 16);
    auto hit = std::find_if(ms.begin(), ms.end(), [&](const coverage::Mutant& m) { return ast::equal(m.function, second); });
    res.check(hit != ms.end(), "second-field deletion not sampled");
    auto rp = coverage::measure(plain, plus, ms, prover);
    auto rm = coverage::measure(plain, minus, ms, prover);
    if (hit != ms.end()) {
        auto uncovered = [&](const coverage::CoverageReport& r) {
            return std::any_of(r.uncovered.begin(), r.uncovered.end(),
                               [&](const coverage::Mutant& m) { return m.id == hit->id; });
        };
        res.check(!uncovered(rp), "complete spec misses the deletion");
        res.check(uncovered(rm), "incomplete spec catches the deletion");
    }
    res.check(rp.ratio() && rm.ratio() && *rp.ratio() > *rm.ratio(), "coverage does not separate the specs");

    auto ms2 = coverage::mutate(plain, "make_pair", 7, 16);
    bool same = ms.size() == ms2.size();
    for (std::size_t i = 0; same && i < ms.size(); ++i)
        same = ms[i].source == ms2[i].source && ms[i].diff == ms2[i].diff;
    res.check(same, "mutant sampling differs across seeded reruns");
    res.check(coverage::measure(plain, plus, ms2, prover).describe() == rp.describe(), "coverage report differs");

    std::vector<ast::SourceModule> ws{plain};
    auto config = fx::pair_run_config();
    llm::ReplayBackend llm(llm::ReplayStore::load(fx::fixture_path("replay/pair.jsonl").string()));
    auto p = prover::make_prover(config.prover);
    auto a = orchestrator::run_target("pair::make_pair", ws, config, llm, *p);
    auto b = orchestrator::run_target("pair::make_pair", ws, config, llm, *p);
    res.check(a.transcript_text() == b.transcript_text(), "seeded loop reruns differ");
    if (rp.ratio() && rm.ratio())
        res.notes.push_back("s+ " + std::to_string(rp.covered) + "/" + std::to_string(rp.total) + ", s- " +
                            std::to_string(rm.covered) + "/" + std::to_string(rm.total));
    return res;
}

Result check_loop_scenarios()
{
    Result res;
    auto ws = fx::load_workspace();
    auto config = fx::workspace_run_config();
    llm::ReplayBackend llm(llm::ReplayStore::load(fx::fixture_path("replay/workspace.jsonl").string()));
    auto p = prover::make_prover(config.prover);

    auto a = orchestrator::run_target("adder::add", ws, config, llm, *p);
    res.check(a.outcome == orchestrator::Outcome::Success && a.round == 2, "(a) not Success at round 2");
    auto guidance = select(a, "guidance");
    res.check(!guidance.empty() && guidance[0].text.find("avoid undefined functions") != std::string::npos,
              "(a) compile-error guidance missing");
    for (const auto& e : select(a, "agent"))
        if (e.round > 1)
            res.check(e.cls == "ensures", "(a) round 2 ran " + e.cls);
    check_routing(res, a, config.rounds);

    auto b = orchestrator::run_target("math::exp", ws, config, llm, *p);
    res.check(b.outcome == orchestrator::Outcome::Abstract, "(b) not Abstract");
    std::map<std::pair<int, std::string>, int> verifies;
    for (const auto& e : select(b, "verify")) {
        res.check(e.text != "Pass", "(b) a round passed");
        ++verifies[{e.trial, e.branch}];
    }
    for (const auto& [_, n] : verifies)
        res.check(n == config.rounds, "(b) branch stopped before " + std::to_string(config.rounds) + " rounds");
    res.check(!b.spec.clauses.empty() && std::all_of(b.spec.clauses.begin(), b.spec.clauses.end(),
                                                     [](const ast::Clause& c) { return c.abstract_flag; }),
              "(b) spec clauses are not abstract");
    check_routing(res, b, config.rounds);

    auto c = orchestrator::run_target("flags::is_zero", ws, config, llm, *p);
    res.check(c.outcome == orchestrator::Outcome::Success, "(c) not Success");
    for (const auto& e : c.transcript)
        if (e.kind == "agent" || e.kind == "agent-error")
            res.check(e.cls != "aborts_if", "(c) aborts_if agent ran");
    res.check(frontend::print_spec_block(c.spec).find("aborts_if false;") != std::string::npos,
              "(c) aborts_if false missing from the spec");

    for (const char* t : {"coin::transfer", "coin::withdraw", "oracle::mix"})
        check_routing(res, orchestrator::run_target(t, ws, config, llm, *p), config.rounds);
    return res;
}

int clause_order(ast::ClauseKind k)
{
    switch (k) {
    case ast::ClauseKind::Requires: return 0;
    case ast::ClauseKind::Modifies: return 1;
    case ast::ClauseKind::AbortsIf: return 2;
    case ast::ClauseKind::Ensures: return 3;
    }
    return 4;
}

Result check_ensembler()
{
    Result res;
    int merged = 0, conflicts = 0;
    for (unsigned seed = 0; seed < 200; ++seed) {
        auto set = fx::random_snippets(seed);
        ast::SpecBlock block;
        try {
            block = ensemble::merge("f", set);
        } catch (const ConflictingBindings&) {
            ++conflicts;
            continue;
        }
        ++merged;
        std::string s = "seed " + std::to_string(seed) + ": ";
        std::string text = frontend::print_spec_block(block);
        std::set<std::string> names;
        for (const auto& bd : block.bindings)
            res.check(names.insert(bd.name).second, s + "duplicate binding " + bd.name);
        for (std::size_t i = 1; i < block.clauses.size(); ++i)
            res.check(clause_order(block.clauses[i - 1].kind) <= clause_order(block.clauses[i].kind),
                      s + "clauses out of order");
        res.check(frontend::print_spec_block(ensemble::merge("f", {ensemble::as_snippet(block)})) == text,
                  s + "merge is not idempotent");
        auto reversed = set;
        std::reverse(reversed.begin(), reversed.end());
        res.check(frontend::print_spec_block(ensemble::merge("f", reversed)) == text, s + "input order matters");
    }
    res.check(merged >= 150, "only " + std::to_string(merged) + " sets merged");
    res.notes.push_back(std::to_string(merged) + " merged, " + std::to_string(conflicts) + " conflicts");
    return res;
}

Result check_determinism()
{
    Result res;
    auto ws = fx::load_workspace();
    auto config = fx::workspace_run_config();
    config.workers = 3;
    llm::ReplayBackend llm(llm::ReplayStore::load(fx::fixture_path("replay/workspace.jsonl").string()));
    auto p = prover::make_prover(config.prover);
    auto a = orchestrator::run_suite(ws, config, llm, *p);
    auto b = orchestrator::run_suite(ws, config, llm, *p);
    res.check(a.report() == b.report(), "reports differ");
    res.check(a.records.size() == b.records.size(), "record counts differ");
    for (std::size_t i = 0; i < std::min(a.records.size(), b.records.size()); ++i)
        res.check(a.records[i].transcript_text() == b.records[i].transcript_text(),
                  a.records[i].target + ": transcripts differ");
    std::string report = a.report();
    res.check(report.find("Fail | Success | Abstract\n") != std::string::npos, "outcome table missing");
    res.check(report.find("ensures | aborts_if | modifies | loop_invariants\n") != std::string::npos,
              "clause count table missing");
    const auto& s = a.summary;
    res.check(s.fail + s.success + s.abstract == static_cast<int>(a.records.size()), "outcome counts do not add up");
    res.notes.push_back(std::to_string(s.fail) + " | " + std::to_string(s.success) + " | " +
                        std::to_string(s.abstract));
    return res;
}

bool on_path(const std::string& tool)
{
    const char* path = std::getenv("PATH");
    if (!path)
        return false;
    std::istringstream in(path);
    std::string dir;
    while (std::getline(in, dir, ':'))
        if (!dir.empty() && fs::exists(fs::path(dir) / tool))
            return true;
    return false;
}

Result check_live_smoke()
{
    Result res;
    const char* key = std::getenv("MSGPIPE_LLM_API_KEY");
    const char* cmd = std::getenv("MSGPIPE_PROVER_CMD");
    if (!key || !*key || !((cmd && *cmd) || on_path("aptos"))) {
        res.status = Status::Skip;
        res.notes.push_back("needs MSGPIPE_LLM_API_KEY and a Move prover");
        return res;
    }
    fs::path out = fs::temp_directory_path() / "msgpipe-acceptance-live";
    fs::remove_all(out);
    std::vector<std::string> args{"msgpipe",   "--workspace", fx::fixture_path("workspace").string(),
                                  "--out",     out.string(),  "generate",
                                  "--target",  "coin::transfer",
                                  "--backend", "live",        "--prover",
                                  "external",  "--rounds",    "5"};
    std::ostringstream o, e;
    int code = cli::run(args, o, e);
    std::string report;
    if (fs::exists(out / "report.txt"))
        report = fx::read_text(out / "report.txt");
    bool ended = report.find("0x42::coin::transfer | Success") != std::string::npos ||
                 report.find("0x42::coin::transfer | Abstract") != std::string::npos;
    res.check(ended, "exit " + std::to_string(code) + ": " + e.str());
    return res;
}

} // namespace

int main()
{
    struct Criterion {
        const char* name;
        std::function<Result()> run;
    };
    std::vector<Criterion> criteria{
        {"parser round-trip", check_parser_round_trip}, {"slicing", check_slicing},
        {"inliner", check_inliner},                     {"classification", check_classification},
        {"coverage", check_coverage_pair},              {"loop scenarios", check_loop_scenarios},
        {"ensembler", check_ensembler},                 {"determinism", check_determinism},
        {"live smoke", check_live_smoke},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Result r;
        try {
            r = criteria[i].run();
        } catch (const std::exception& ex) {
            r.status = Status::Fail;
            r.notes.push_back(std::string("exception: ") + ex.what());
        }
        const char* tag = r.status == Status::Pass ? "PASS" : r.status == Status::Fail ? "FAIL" : "SKIP";
        std::cout << tag << " " << i + 1 << " " << criteria[i].name;
        for (std::size_t k = 0; k < r.notes.size() && k < 8; ++k)
            std::cout << (k == 0 ? ": " : "; ") << r.notes[k];
        std::cout << "\n";
        if (r.status == Status::Fail)
            ++failed;
    }
    return failed == 0 ? 0 : 1;
}
