// SPDX-License-Identifier: Apache-2.0

#include "msgpipe/cli/cli.hpp"

#include <CLI11.hpp>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <set>
#include <sstream>

#include "msgpipe/coverage/coverage.hpp"
#include "msgpipe/deps/deps.hpp"
#include "msgpipe/ensemble/ensemble.hpp"
#include "msgpipe/errors.hpp"
#include "msgpipe/frontend/parser.hpp"
#include "msgpipe/frontend/printer.hpp"
#include "msgpipe/inline/inline.hpp"
#include "msgpipe/llm/llm.hpp"
#include "msgpipe/orchestrator/orchestrator.hpp"
#include "msgpipe/prover/prover.hpp"

namespace msgpipe::cli {

namespace fs = std::filesystem;

namespace {

struct Settings {
    std::string config = "msgpipe.conf";
    bool config_given = false;
    std::string workspace = ".";
    std::string out_dir = "msgpipe-out";
    std::string prompts;

    std::vector<std::string> targets;
    int rounds = 5;
    int trials = 3;
    std::string modes = "v1,v2";
    bool coverage = false;
    int mutants = coverage::kDefaultMutants;
    unsigned seed = 0;
    int workers = 1;
    bool polish = false;
    bool sequential_agents = false;
    std::string report = "report.txt";

    std::string backend = "replay";
    std::string replay;
    std::string model;
    std::string endpoint;
    std::string api_key;
    int max_concurrent = 2;

    std::string prover = "external";
    std::string prover_cmd = prover::ProverConfig{}.command;
    std::string rules;
    double timeout = 60;
    int prover_jobs = 4;
    bool keep_workspace = false;
};

/// An error with its exit code and stable identifier.
struct Failure : std::runtime_error {
    Failure(int code, std::string id, const std::string& what) : std::runtime_error(what), code(code), id(std::move(id))
    {
    }
    int code;
    std::string id;
};

Failure usage(const std::string& what) { return {kUsage, "E001", what}; }
Failure config_error(const std::string& what) { return {kUsage, "E002", what}; }
Failure input_error(const std::string& what) { return {kUsage, "E003", what}; }

template <class T>
void take(const boost::property_tree::ptree& section, const std::string& key, T& into)
{
    if (auto v = section.get_optional<T>(key))
        into = *v;
}

bool parse_bool(const std::string& s, const std::string& key)
{
    if (s == "true" || s == "yes" || s == "on" || s == "1")
        return true;
    if (s == "false" || s == "no" || s == "off" || s == "0")
        return false;
    throw config_error("`" + key + "` expects a boolean, got `" + s + "`");
}

void load_config(Settings& s)
{
    if (!fs::exists(s.config)) {
        if (s.config_given)
            throw config_error("config file not found: " + s.config);
        return;
    }
    boost::property_tree::ptree tree;
    try {
        boost::property_tree::read_ini(s.config, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw config_error(e.what());
    }
    static const std::map<std::string, std::set<std::string>> known{
        {"paths", {"workspace", "out", "prompts"}},
        {"generate", {"rounds", "trials", "modes", "coverage", "mutants", "seed", "workers", "polish", "report",
                      "sequential-agents"}},
        {"llm", {"backend", "replay", "model", "endpoint", "max-concurrent"}},
        {"prover", {"backend", "command", "rules", "timeout", "jobs", "keep-workspace"}},
    };
    for (const auto& [name, section] : tree) {
        auto it = known.find(name);
        if (it == known.end())
            throw config_error("unknown config section [" + name + "]");
        for (const auto& [key, _] : section)
            if (!it->second.count(key))
                throw config_error("unknown config key " + name + "." + key);
    }
    try {
        auto sec = [&](const char* n) { return tree.get_child(n, {}); };
        auto paths = sec("paths");
        take(paths, "workspace", s.workspace);
        take(paths, "out", s.out_dir);
        take(paths, "prompts", s.prompts);
        auto gen = sec("generate");
        take(gen, "rounds", s.rounds);
        take(gen, "trials", s.trials);
        take(gen, "modes", s.modes);
        take(gen, "mutants", s.mutants);
        take(gen, "seed", s.seed);
        take(gen, "workers", s.workers);
        take(gen, "report", s.report);
        if (auto v = gen.get_optional<std::string>("coverage"))
            s.coverage = parse_bool(*v, "generate.coverage");
        if (auto v = gen.get_optional<std::string>("polish"))
            s.polish = parse_bool(*v, "generate.polish");
        if (auto v = gen.get_optional<std::string>("sequential-agents"))
            s.sequential_agents = parse_bool(*v, "generate.sequential-agents");
        auto llm = sec("llm");
        take(llm, "backend", s.backend);
        take(llm, "replay", s.replay);
        take(llm, "model", s.model);
        take(llm, "endpoint", s.endpoint);
        take(llm, "max-concurrent", s.max_concurrent);
        auto pr = sec("prover");
        take(pr, "backend", s.prover);
        take(pr, "command", s.prover_cmd);
        take(pr, "rules", s.rules);
        take(pr, "timeout", s.timeout);
        take(pr, "jobs", s.prover_jobs);
        if (auto v = pr.get_optional<std::string>("keep-workspace"))
            s.keep_workspace = parse_bool(*v, "prover.keep-workspace");
    } catch (const boost::property_tree::ptree_bad_data& e) {
        throw config_error(std::string("bad config value: ") + e.what());
    }
}

void apply_env(Settings& s)
{
    auto env = [](const char* name, std::string& into) {
        if (const char* v = std::getenv(name); v && *v)
            into = v;
    };
    env("MSGPIPE_LLM_ENDPOINT", s.endpoint);
    env("MSGPIPE_LLM_API_KEY", s.api_key);
    env("MSGPIPE_LLM_MODEL", s.model);
    env("MSGPIPE_PROMPTS", s.prompts);
    env("MSGPIPE_PROVER_CMD", s.prover_cmd);
}

/// Config path has to be known before the other options are bound.
void prescan_config(const std::vector<std::string>& args, Settings& s)
{
    for (std::size_t i = 1; i < args.size(); ++i) {
        const std::string& a = args[i];
        if (a == "--config" && i + 1 < args.size()) {
            s.config = args[i + 1];
            s.config_given = true;
        } else if (a.rfind("--config=", 0) == 0) {
            s.config = a.substr(9);
            s.config_given = true;
        }
    }
}

struct App {
    CLI::App app{"Generates and checks Move specifications for Move functions.", "msgpipe"};
    CLI::App* generate = nullptr;
    CLI::App* coverage = nullptr;
    CLI::App* analyze = nullptr;
    CLI::App* inline_ = nullptr;
    CLI::App* prove = nullptr;
};

void add_prover_flags(CLI::App* c, Settings& s)
{
    c->add_option("--prover", s.prover, "Prover backend: external or mock")
        ->check(CLI::IsMember({"external", "mock"}));
    c->add_option("--prover-cmd", s.prover_cmd, "External prover command; {workspace} and {file} are substituted");
    c->add_option("--rules", s.rules, "Rule file for the mock prover");
    c->add_option("--timeout", s.timeout, "Prover timeout in seconds")->check(CLI::PositiveNumber);
    c->add_option("--prover-jobs", s.prover_jobs, "Concurrent prover runs")->check(CLI::PositiveNumber);
    c->add_flag("--keep-workspace", s.keep_workspace, "Keep temporary prover packages under the output directory");
}

std::unique_ptr<App> build(Settings& s)
{
    auto a = std::make_unique<App>();
    CLI::App& app = a->app;
    app.require_subcommand(1);
    app.fallthrough();
    app.set_help_flag("-h,--help", "Print this help, including every subcommand, and exit");
    app.add_option("--config", s.config, "Config file (INI sections: paths, generate, llm, prover)");
    app.add_option("--workspace", s.workspace, "Directory searched recursively for .move files");
    app.add_option("--out", s.out_dir, "Output directory; nothing is written outside it");
    app.add_option("--prompts", s.prompts, "Directory of prompt templates");

    auto* g = a->generate = app.add_subcommand("generate", "Generate specifications with the agent loop");
    g->add_option("--target", s.targets, "Target function (fn, module::fn or address::module::fn); repeatable");
    g->add_option("--rounds", s.rounds, "Generation rounds per trial")->check(CLI::PositiveNumber);
    g->add_option("--trials", s.trials, "Independent trials per target")->check(CLI::PositiveNumber);
    g->add_option("--modes", s.modes, "Context variants: v1 (inlined), v2 (listed) or v1,v2");
    g->add_flag("--coverage", s.coverage, "Refine passing specs with deletion-mutant coverage feedback");
    g->add_option("--mutants", s.mutants, "Mutants sampled per coverage measurement")->check(CLI::PositiveNumber);
    g->add_option("--seed", s.seed, "Seed for mutant sampling");
    g->add_option("--workers", s.workers, "Targets processed in parallel")->check(CLI::PositiveNumber);
    g->add_flag("--polish", s.polish, "Run the model polish pass over merged spec blocks");
    g->add_flag("--sequential-agents", s.sequential_agents, "Run agents and context branches one at a time");
    g->add_option("--report", s.report, "Report file name inside the output directory");
    g->add_option("--backend", s.backend, "Chat backend: live, replay or record")
        ->check(CLI::IsMember({"live", "replay", "record"}));
    g->add_option("--replay", s.replay, "Replay store (JSONL); record mode writes it inside the output directory");
    g->add_option("--model", s.model, "Model name sent with each request");
    g->add_option("--endpoint", s.endpoint, "Chat completions URL for the live backend");
    g->add_option("--max-concurrent", s.max_concurrent, "Concurrent live requests")->check(CLI::PositiveNumber);
    add_prover_flags(g, s);

    auto* c = a->coverage = app.add_subcommand("coverage", "Measure how many deletion mutants a spec rules out");
    c->add_option("--target", s.targets, "Target function with a spec block")->required();
    c->add_option("--mutants", s.mutants, "Mutants to sample")->check(CLI::PositiveNumber);
    c->add_option("--seed", s.seed, "Seed for mutant sampling");
    add_prover_flags(c, s);

    a->analyze = app.add_subcommand("analyze", "Print the dependency closure of a function");
    a->analyze->add_option("--target", s.targets, "Target function")->required();

    a->inline_ = app.add_subcommand("inline", "Print a function with its callees inlined");
    a->inline_->add_option("--target", s.targets, "Target function")->required();

    auto* p = a->prove = app.add_subcommand("prove", "Verify functions against their existing spec blocks");
    p->add_option("--target", s.targets, "Target function; repeatable (default: every target)");
    add_prover_flags(p, s);
    return a;
}

/// Resolves `rel` inside the output directory, rejecting escapes.
fs::path inside_out(const Settings& s, const std::string& rel)
{
    fs::path out = fs::absolute(s.out_dir).lexically_normal();
    fs::path p = fs::path(rel).is_absolute() ? fs::path(rel) : out / rel;
    p = p.lexically_normal();
    auto [o, q] = std::mismatch(out.begin(), out.end(), p.begin(), p.end());
    if (o != out.end())
        throw usage("path `" + rel + "` is outside the output directory " + s.out_dir);
    return p;
}

void write_file(const fs::path& p, const std::string& text)
{
    fs::create_directories(p.parent_path());
    std::ofstream f(p, std::ios::binary);
    if (!f)
        throw Failure(kEnvironment, "E011", "cannot write " + p.string());
    f << text;
}

std::string file_stem(const std::string& path)
{
    std::string out = path;
    for (std::size_t pos = out.find("::"); pos != std::string::npos; pos = out.find("::"))
        out.replace(pos, 2, "__");
    return out;
}

std::vector<ast::SourceModule> load_workspace(const Settings& s)
{
    if (!fs::is_directory(s.workspace))
        throw input_error("workspace directory not found: " + s.workspace);
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(s.workspace))
        if (e.is_regular_file() && e.path().extension() == ".move")
            files.push_back(e.path());
    std::sort(files.begin(), files.end());
    std::vector<ast::SourceModule> modules;
    for (const auto& f : files) {
        std::ifstream in(f, std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        try {
            for (auto& m : frontend::parse_modules(ss.str()))
                modules.push_back(std::move(m));
        } catch (const SyntaxError& e) {
            throw input_error(f.string() + ": " + e.what());
        }
    }
    if (modules.empty())
        throw input_error("no Move modules under " + s.workspace);
    return modules;
}

prover::ProverConfig prover_config(const Settings& s)
{
    prover::ProverConfig c;
    c.backend = s.prover == "mock" ? prover::ProverConfig::Backend::Mock : prover::ProverConfig::Backend::External;
    c.command = s.prover_cmd;
    c.timeout_seconds = s.timeout;
    c.parallelism = s.prover_jobs;
    c.keep_workspace = s.keep_workspace;
    c.rulefile = s.rules;
    c.workspace_dir = inside_out(s, "prover-work").string();
    if (c.backend == prover::ProverConfig::Backend::Mock && s.rules.empty())
        throw usage("--prover mock needs --rules");
    return c;
}

std::unique_ptr<prover::Prover> make_prover(const Settings& s)
{
    auto c = prover_config(s);
    if (c.backend == prover::ProverConfig::Backend::External)
        fs::create_directories(c.workspace_dir);
    return prover::make_prover(c);
}

std::vector<deps::ContextMode> parse_modes(const std::string& text)
{
    std::vector<deps::ContextMode> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item == "v1" || item == "V1")
            out.push_back(deps::ContextMode::Inlined);
        else if (item == "v2" || item == "V2")
            out.push_back(deps::ContextMode::Listed);
        else
            throw usage("unknown context mode `" + item + "` (expected v1, v2)");
    }
    if (out.empty())
        throw usage("--modes needs at least one of v1, v2");
    return out;
}

std::shared_ptr<llm::ChatBackend> make_backend(const Settings& s, std::ostream& err)
{
    if (s.backend == "replay") {
        std::string path = s.replay.empty() ? (fs::path(s.workspace) / "replay.jsonl").string() : s.replay;
        if (!fs::exists(path))
            throw Failure(kEnvironment, "E013", "replay store not found: " + path);
        try {
            return std::make_shared<llm::ReplayBackend>(llm::ReplayStore::load(path));
        } catch (const ConfigError& e) {
            throw config_error(path + ": " + e.what());
        }
    }
    llm::LiveConfig live;
    live.endpoint = s.endpoint;
    live.api_key = s.api_key;
    live.model = s.model;
    live.max_concurrent = s.max_concurrent;
    if (live.api_key.empty())
        throw Failure(kEnvironment, "E012", "live backend needs an API key in MSGPIPE_LLM_API_KEY");
    if (live.endpoint.empty())
        throw Failure(kEnvironment, "E012", "live backend needs an endpoint (--endpoint or MSGPIPE_LLM_ENDPOINT)");
    auto backend = std::make_shared<llm::LiveBackend>(live, [&err](const std::string& m) { err << m << "\n"; });
    if (s.backend == "live")
        return backend;
    fs::path store = inside_out(s, s.replay.empty() ? "replay.jsonl" : s.replay);
    fs::create_directories(store.parent_path());
    return std::make_shared<llm::RecordBackend>(backend, store.string());
}

int cmd_generate(const Settings& s, std::ostream& out, std::ostream& err)
{
    auto ws = load_workspace(s);
    orchestrator::RunConfig config;
    config.rounds = s.rounds;
    config.trials = s.trials;
    config.context_modes = parse_modes(s.modes);
    config.prover = prover_config(s);
    config.coverage_enabled = s.coverage;
    config.seed = s.seed;
    config.mutants = s.mutants;
    config.workers = s.workers;
    config.parallel_agents = !s.sequential_agents;
    config.polish = s.polish;
    config.agent.model = s.model;
    config.agent.prompts = s.prompts;
    try {
        config.validate();
    } catch (const ConfigError& e) {
        throw usage(e.what());
    }
    fs::path report_path = inside_out(s, s.report);
    std::vector<std::string> targets;
    for (const auto& t : s.targets) {
        try {
            targets.push_back(deps::resolve_target(ws, t));
        } catch (const TargetNotFound& e) {
            throw input_error(std::string("target not found: ") + e.what());
        }
    }
    auto llm = make_backend(s, err);
    auto prover = make_prover(s);
    auto result = orchestrator::run_suite(ws, config, *llm, *prover, targets);

    for (const auto& r : result.records) {
        write_file(inside_out(s, "transcripts/" + file_stem(r.target) + ".txt"), r.transcript_text());
        if (r.outcome != orchestrator::Outcome::Fail)
            write_file(inside_out(s, "specs/" + file_stem(r.target) + ".move"), r.spec_text());
    }
    std::string report = result.report();
    write_file(report_path, report);
    out << report;
    return result.summary.fail > 0 ? kFailed : kOk;
}

std::string one_target(const Settings& s)
{
    if (s.targets.size() != 1)
        throw usage("exactly one --target is required");
    return s.targets[0];
}

deps::DependencyClosure closure_for(const std::vector<ast::SourceModule>& ws, const std::string& target)
{
    try {
        return deps::slice(ws, target);
    } catch (const TargetNotFound& e) {
        throw input_error(std::string("target not found: ") + e.what());
    }
}

int cmd_coverage(const Settings& s, std::ostream& out)
{
    auto ws = load_workspace(s);
    auto closure = closure_for(ws, one_target(s));
    auto unit = ensemble::VerificationUnit::from_closure(closure);
    const ast::SpecBlock* spec = unit.module().find_spec(unit.target_fn);
    if (!spec)
        throw input_error(closure.target + " has no spec block to measure");
    auto prover = make_prover(s);
    std::vector<coverage::Mutant> mutants;
    try {
        mutants = coverage::mutate(unit.module(), unit.target_fn, s.seed, s.mutants, ws);
    } catch (const NoCandidates& e) {
        throw input_error(e.what());
    }
    ast::SpecBlock block = *spec;
    auto render = [&](const ast::FunctionDef& f) { return unit.render(block, f); };
    coverage::CoverageReport report;
    try {
        report = coverage::measure_with(render, *unit.module().find_function(unit.target_fn), mutants, *prover,
                                        s.prover_jobs);
    } catch (const PreconditionViolated& e) {
        throw Failure(kFailed, "E020", std::string("spec does not verify on the original function: ") + e.what());
    }
    std::string text = closure.target + "\n" + report.describe();
    if (!report.uncovered.empty())
        text += "\n" + coverage::feedback_diffs(report);
    write_file(inside_out(s, "coverage/" + file_stem(closure.target) + ".txt"), text);
    out << text;
    return kOk;
}

int cmd_analyze(const Settings& s, std::ostream& out)
{
    auto ws = load_workspace(s);
    out << deps::analyze_report(closure_for(ws, one_target(s)));
    return kOk;
}

int cmd_inline(const Settings& s, std::ostream& out)
{
    auto ws = load_workspace(s);
    auto report = inliner::inline_best_effort(closure_for(ws, one_target(s)));
    out << frontend::print_function(report.result) << "\n" << report.describe();
    return kOk;
}

int cmd_prove(const Settings& s, std::ostream& out)
{
    auto ws = load_workspace(s);
    std::vector<std::string> targets = s.targets;
    if (targets.empty())
        targets = deps::select_targets(ws);
    auto prover = make_prover(s);
    bool all = true;
    for (const auto& t : targets) {
        auto unit = ensemble::VerificationUnit::from_closure(closure_for(ws, t));
        const ast::SpecBlock* spec = unit.module().find_spec(unit.target_fn);
        ast::SpecBlock block = spec ? *spec : ast::SpecBlock{unit.target_fn, {}, {}, {}, {}};
        auto verdict = prover->verify(unit.render(block));
        out << unit.target_module << "::" << unit.target_fn << ": " << prover::to_string(verdict.kind) << "\n";
        if (!verdict.passed()) {
            all = false;
            out << verdict.diagnostic_text();
        }
    }
    return all ? kOk : kFailed;
}

} // namespace

std::map<std::string, std::vector<std::string>> accepted_flags()
{
    Settings s;
    auto a = build(s);
    std::map<std::string, std::vector<std::string>> out;
    auto collect = [&](const std::string& key, const CLI::App* app) {
        for (const CLI::Option* o : app->get_options())
            for (const auto& n : o->get_lnames())
                out[key].push_back("--" + n);
    };
    collect("", &a->app);
    for (const CLI::App* sub : a->app.get_subcommands({}))
        collect(sub->get_name(), sub);
    return out;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    Settings s;
    std::unique_ptr<App> a;
    try {
        prescan_config(args, s);
        load_config(s);
        a = build(s);
        std::vector<std::string> rev(args.rbegin(), args.rend() - 1);
        try {
            a->app.parse(rev);
        } catch (const CLI::CallForHelp&) {
            out << a->app.help("", CLI::AppFormatMode::All);
            return kOk;
        } catch (const CLI::CallForAllHelp&) {
            out << a->app.help("", CLI::AppFormatMode::All);
            return kOk;
        } catch (const CLI::ParseError& e) {
            err << "error[E001]: " << e.what() << "\n\n" << a->app.help("", CLI::AppFormatMode::All);
            return kUsage;
        }
        apply_env(s);
        if (a->generate->parsed())
            return cmd_generate(s, out, err);
        if (a->coverage->parsed())
            return cmd_coverage(s, out);
        if (a->analyze->parsed())
            return cmd_analyze(s, out);
        if (a->inline_->parsed())
            return cmd_inline(s, out);
        return cmd_prove(s, out);
    } catch (const Failure& f) {
        err << "error[" << f.id << "]: " << f.what() << "\n";
        return f.code;
    } catch (const ReplayMiss& e) {
        err << "error[E013]: " << e.what() << "\n";
        return kEnvironment;
    } catch (const ToolNotFound& e) {
        err << "error[E010]: prover not found: " << e.what() << "\n";
        return kEnvironment;
    } catch (const WorkspaceSetupFailed& e) {
        err << "error[E011]: " << e.what() << "\n";
        return kEnvironment;
    } catch (const BackendError& e) {
        err << "error[E012]: " << e.what() << "\n";
        return kEnvironment;
    } catch (const ConfigError& e) {
        err << "error[E002]: " << e.what() << "\n";
        return kUsage;
    } catch (const std::exception& e) {
        err << "error[E099]: " << e.what() << "\n";
        return kFailed;
    }
}

} // namespace msgpipe::cli
