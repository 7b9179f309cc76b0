// SPDX-License-Identifier: Apache-2.0

#include "msgpipe/agents/agents.hpp"

#include <cstdlib>
#include <fstream>
#include <mutex>
#include <regex>
#include <sstream>

#include "msgpipe/ensemble/ensemble.hpp"
#include "msgpipe/errors.hpp"
#include "msgpipe/frontend/parser.hpp"
#include "msgpipe/frontend/printer.hpp"

namespace msgpipe::agents {

using ast::ClauseKind;

namespace {

std::string trim(const std::string& s)
{
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos)
        return {};
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string fill(std::string text, const std::map<std::string, std::string>& vars)
{
    for (const auto& [k, v] : vars) {
        std::string slot = "{{" + k + "}}";
        for (std::size_t pos = text.find(slot); pos != std::string::npos; pos = text.find(slot, pos + v.size()))
            text.replace(pos, slot.size(), v);
    }
    return text;
}

bool starts_member(const std::string& line)
{
    static const std::regex kw(R"(^(let|ensures|aborts_if|modifies|requires|spec|pragma|invariant|fun)\b)");
    return std::regex_search(line, kw);
}

std::optional<ClauseKind> kind_of(ClauseClass c)
{
    switch (c) {
    case ClauseClass::AbortsIf: return ClauseKind::AbortsIf;
    case ClauseClass::Modifies: return ClauseKind::Modifies;
    case ClauseClass::Ensures: return ClauseKind::Ensures;
    case ClauseClass::LoopInvariant: return std::nullopt;
    }
    return std::nullopt;
}

bool reparses(const std::string& text)
{
    try {
        frontend::parse_spec_members(text);
        return true;
    } catch (const SyntaxError&) {
        return false;
    }
}

std::string with_diagnostics(const std::string& reply, const std::vector<std::string>& diags)
{
    if (diags.empty())
        return reply;
    std::string out = reply;
    if (!out.empty() && out.back() != '\n')
        out += '\n';
    out += "-- parse diagnostics --\n";
    for (const auto& d : diags)
        out += d + "\n";
    return out;
}

/// Members of every item, filtered by `accept`. Nested blocks for other
/// functions land in `callees` when `keep_callees` is set.
void collect(const std::vector<std::string>& items, const std::string& target,
             const std::function<bool(ClauseKind)>& accept, bool keep_callees, ClauseSnippet& out)
{
    static const std::regex branch(R"(^(ensures|aborts_if|requires)\s*(\[abstract\]\s*)?if\b)");
    for (const auto& item : items) {
        std::string head = item.substr(0, 60);
        if (std::regex_search(item, branch)) {
            out.diagnostics.push_back("dropped `" + head + "`: branch form disallowed; use ==>");
            continue;
        }
        frontend::SpecMembers m;
        try {
            m = frontend::parse_spec_members(item);
        } catch (const SyntaxError& e) {
            out.diagnostics.push_back("dropped `" + head + "`: " + e.what());
            continue;
        }
        auto take = [&](std::vector<ast::Clause>& clauses, std::vector<ast::Clause>& into) {
            for (auto& c : clauses) {
                if (!accept(c.kind)) {
                    out.diagnostics.push_back("dropped `" + frontend::print_clause(c) + "`: " +
                                              ast::to_string(c.kind) + " is outside the " + to_string(out.cls) +
                                              " class");
                    continue;
                }
                if (!reparses(frontend::print_clause(c))) {
                    out.diagnostics.push_back("dropped `" + head + "`: does not reparse");
                    continue;
                }
                into.push_back(std::move(c));
            }
        };
        for (const auto& p : m.pragmas)
            out.diagnostics.push_back("dropped `pragma " + p.name + "`: pragmas are not generated");
        for (auto& b : m.bindings)
            out.bindings.push_back(std::move(b));
        for (auto& f : m.helper_funs)
            out.helper_funs.push_back(std::move(f));
        take(m.clauses, out.clauses);
        for (auto& b : m.blocks) {
            for (auto& f : b.helper_funs)
                out.helper_funs.push_back(std::move(f));
            if (b.target_fn == target) {
                for (auto& bd : b.bindings)
                    out.bindings.push_back(std::move(bd));
                take(b.clauses, out.clauses);
            } else if (keep_callees) {
                take(b.clauses, out.callee_snippets[b.target_fn]);
                if (out.callee_snippets[b.target_fn].empty())
                    out.callee_snippets.erase(b.target_fn);
            } else {
                out.diagnostics.push_back("dropped `spec " + b.target_fn + "`: block for another function");
            }
        }
    }
}

ClauseSnippet parse_annotated(const std::string& reply, const deps::GenerationContext& ctx)
{
    ClauseSnippet s;
    s.cls = ClauseClass::LoopInvariant;
    std::string body = extract_fenced(reply);
    std::erase(body, '`');
    std::optional<ast::FunctionDef> fn;
    try {
        fn = frontend::parse_function(body);
    } catch (const SyntaxError& e) {
        s.diagnostics.push_back(std::string("annotated function does not parse: ") + e.what());
    }
    if (fn && fn->name != ctx.target_name) {
        s.diagnostics.push_back("annotated function is `" + fn->name + "`, expected `" + ctx.target_name + "`");
        fn.reset();
    }
    if (fn) {
        std::size_t invariants = 0;
        ast::FunctionDef stripped = *fn;
        if (stripped.body)
            ast::visit_mut(*stripped.body, [&](ast::Node& n) {
                if (n.is(ast::NodeKind::While)) {
                    invariants += n.invariant_count();
                    n.children.resize(2);
                }
                return true;
            });
        if (invariants == 0) {
            s.diagnostics.push_back("annotated function carries no loop invariant");
            fn.reset();
        } else {
            try {
                auto original = frontend::parse_function(ctx.target_source);
                if (!ast::equal(original, stripped)) {
                    s.diagnostics.push_back("annotated function changes the code besides invariants");
                    fn.reset();
                }
            } catch (const SyntaxError&) {
            }
        }
    }
    s.annotated_function = std::move(fn);
    s.raw_model_text = with_diagnostics(reply, s.diagnostics);
    if (!s.annotated_function)
        throw EmptyOutput("loop_invariant: no usable annotated function\n" + s.raw_model_text);
    return s;
}

std::string truncate(std::string s, std::size_t limit)
{
    if (s.size() > limit)
        s = s.substr(0, limit) + "...";
    return s;
}

} // namespace

std::string print_snippet(const ClauseSnippet& s)
{
    if (s.annotated_function)
        return frontend::print_function(*s.annotated_function);
    std::string out;
    for (const auto& f : s.helper_funs) {
        ast::SpecBlock only;
        only.helper_funs = {f};
        std::string text = frontend::print_spec_block(only);
        out += text.substr(0, text.find("spec  {"));
    }
    for (const auto& b : s.bindings)
        out += frontend::print_binding(b) + "\n";
    for (const auto& c : s.clauses)
        out += frontend::print_clause(c) + "\n";
    for (const auto& [callee, clauses] : s.callee_snippets) {
        out += "spec " + ast::split_path(callee).back() + " {\n";
        for (const auto& c : clauses)
            out += "    " + frontend::print_clause(c) + "\n";
        out += "}\n";
    }
    return out;
}

PromptTemplate PromptTemplate::parse(const std::string& text)
{
    PromptTemplate t;
    std::string* cur = nullptr;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line == "[system]")
            cur = &t.system;
        else if (line == "[user]")
            cur = &t.user;
        else if (cur)
            *cur += line + "\n";
    }
    if (t.system.empty() || t.user.empty())
        throw ConfigError("prompt template needs [system] and [user] sections");
    t.system = trim(t.system);
    t.user = trim(t.user);
    return t;
}

std::string PromptTemplate::fill_system(const std::map<std::string, std::string>& vars) const
{
    return fill(system, vars);
}

std::string PromptTemplate::fill_user(const std::map<std::string, std::string>& vars) const
{
    return fill(user, vars);
}

std::string prompts_dir()
{
    if (const char* env = std::getenv("MSGPIPE_PROMPTS"))
        return env;
    return MSGPIPE_PROMPTS_DIR;
}

const PromptTemplate& load_prompt(const std::string& name, const std::string& dir)
{
    static std::mutex mu;
    static std::map<std::string, PromptTemplate> cache;
    std::string path = dir + "/" + name + ".txt";
    std::lock_guard lock(mu);
    auto it = cache.find(path);
    if (it != cache.end())
        return it->second;
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot read prompt " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return cache.emplace(path, PromptTemplate::parse(ss.str())).first->second;
}

std::string prompt_name(ClauseClass c) { return to_string(c); }

PromptBundle make_bundle(ClauseClass c, const deps::GenerationContext& ctx, std::vector<std::string> guidance,
                         std::optional<ClauseSnippet> prior, const AgentOptions& opts)
{
    const auto& t = load_prompt(prompt_name(c), opts.dir());
    std::map<std::string, std::string> vars{{"target", ctx.target}, {"context", trim(ctx.render())}};
    return PromptBundle{t.fill_system(vars), t.fill_user(vars), std::move(guidance), std::move(prior)};
}

std::string render_user(const PromptBundle& bundle)
{
    std::string out = bundle.user;
    if (!bundle.guidance.empty()) {
        out += "\n\nFeedback from the last verification attempt:";
        for (const auto& g : bundle.guidance)
            out += "\n\n" + trim(g);
    }
    if (bundle.prior_snippet)
        out += "\n\nYour previous answer:\n```\n" + print_snippet(*bundle.prior_snippet) + "```";
    return out + "\n";
}

llm::ChatRequest make_request(const PromptBundle& bundle, const AgentOptions& opts)
{
    llm::ChatRequest r;
    r.model = opts.model;
    r.temperature = opts.temperature;
    r.max_tokens = opts.max_tokens;
    r.messages = {{llm::Role::System, bundle.system}, {llm::Role::User, render_user(bundle)}};
    return r;
}

std::string extract_fenced(const std::string& reply)
{
    std::string out;
    std::istringstream in(reply);
    std::string line;
    bool inside = false;
    while (std::getline(in, line)) {
        if (trim(line).rfind("```", 0) == 0) {
            inside = !inside;
            continue;
        }
        if (inside)
            out += line + "\n";
    }
    return out;
}

std::vector<std::string> sanitize(const std::string& text)
{
    std::vector<std::string> lines;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        std::erase(line, '`');
        std::string norm;
        bool space = false;
        for (char c : line) {
            if (c == ' ' || c == '\t' || c == '\r') {
                space = true;
                continue;
            }
            if (space && !norm.empty() && c != ';')
                norm += ' ';
            space = false;
            norm += c;
        }
        if (norm.empty() || (norm.rfind("//", 0) == 0))
            continue;
        lines.push_back(norm);
    }

    std::vector<std::string> items;
    std::string cur;
    int depth = 0;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const std::string& l = lines[i];
        cur += (cur.empty() ? "" : cur.find('{') == std::string::npos ? " " : "\n") + l;
        for (char c : l)
            depth += c == '{' ? 1 : c == '}' ? -1 : 0;
        if (depth > 0)
            continue;
        depth = 0;
        char last = l.back();
        bool next_member = i + 1 == lines.size() || starts_member(lines[i + 1]);
        if (last == ';' || last == '}') {
            items.push_back(cur);
            cur.clear();
        } else if (next_member) {
            items.push_back(cur + ";");
            cur.clear();
        }
    }
    if (!cur.empty())
        items.push_back(cur);
    return items;
}

ClauseSnippet parse_reply(ClauseClass c, const std::string& reply, const deps::GenerationContext& ctx)
{
    if (c == ClauseClass::LoopInvariant)
        return parse_annotated(reply, ctx);
    ClauseSnippet s;
    s.cls = c;
    auto want = kind_of(c);
    collect(sanitize(extract_fenced(reply)), ctx.target_name, [&](ClauseKind k) { return k == want; },
            c == ClauseClass::Modifies, s);
    s.raw_model_text = with_diagnostics(reply, s.diagnostics);
    if (s.clauses.empty() && s.callee_snippets.empty())
        throw EmptyOutput(std::string(to_string(c)) + ": no parseable clause\n" + s.raw_model_text);
    return s;
}

ClauseSnippet gen_clauses(ClauseClass c, const deps::GenerationContext& ctx, const PromptBundle& bundle,
                          llm::ChatBackend& llm, const AgentOptions& opts)
{
    if (c == ClauseClass::LoopInvariant && !ctx.metadata.has_loops)
        throw PreconditionViolated("loop_invariant agent needs a context with loops");
    if (c == ClauseClass::Modifies && !ctx.metadata.has_global_mut)
        throw EmptyOutput("modifies: context has no borrow_global_mut");
    return parse_reply(c, llm.complete(make_request(bundle, opts)), ctx);
}

std::optional<ClauseSnippet> precheck_aborts_false(const ensemble::VerificationUnit& unit,
                                                   const prover::Prover& prover)
{
    ast::SpecBlock block;
    block.target_fn = unit.target_fn;
    block.clauses.push_back({ClauseKind::AbortsIf, ast::make_node(ast::NodeKind::Literal, "false"), false});
    auto v = prover.verify(unit.render(block));
    if (!v.passed())
        return std::nullopt;
    ClauseSnippet s;
    s.cls = ClauseClass::AbortsIf;
    s.clauses = block.clauses;
    s.raw_model_text = "aborts_if false;\n";
    return s;
}

std::string summarize_error(const prover::ProverVerdict& verdict, llm::ChatBackend& llm, const AgentOptions& opts)
{
    std::string diag = verdict.diagnostic_text();
    if (trim(diag).empty())
        diag = verdict.raw_output.empty() ? std::string(prover::to_string(verdict.kind)) : verdict.raw_output;
    const auto& t = load_prompt("summarizer", opts.dir());
    std::map<std::string, std::string> vars{{"diagnostic", trim(diag)}};
    PromptBundle b{t.fill_system(vars), t.fill_user(vars), {}, std::nullopt};
    try {
        std::string reply = trim(llm.complete(make_request(b, opts)));
        if (!reply.empty())
            return truncate(reply, opts.summary_limit);
    } catch (const BackendError&) {
    }
    return truncate(trim(diag), opts.summary_limit);
}

ast::SpecBlock minimal_abstract_block(const std::string& target_fn)
{
    ast::SpecBlock b;
    b.target_fn = target_fn;
    b.clauses.push_back({ClauseKind::AbortsIf, ast::make_node(ast::NodeKind::Literal, "true"), true});
    return b;
}

ast::SpecBlock gen_abstract_spec(const deps::GenerationContext& ctx, llm::ChatBackend& llm, const AgentOptions& opts)
{
    const auto& t = load_prompt("abstract", opts.dir());
    std::map<std::string, std::string> vars{{"target", ctx.target}, {"context", trim(ctx.render())}};
    PromptBundle b{t.fill_system(vars), t.fill_user(vars), {}, std::nullopt};
    std::string reply;
    try {
        reply = llm.complete(make_request(b, opts));
    } catch (const BackendError&) {
        return minimal_abstract_block(ctx.target_name);
    }
    ClauseSnippet s;
    collect(sanitize(extract_fenced(reply)), ctx.target_name, [](ClauseKind) { return true; }, false, s);
    if (s.clauses.empty())
        return minimal_abstract_block(ctx.target_name);
    ast::SpecBlock block;
    block.target_fn = ctx.target_name;
    block.bindings = std::move(s.bindings);
    block.helper_funs = std::move(s.helper_funs);
    block.clauses = std::move(s.clauses);
    for (auto& c : block.clauses)
        c.abstract_flag = true;
    std::stable_sort(block.clauses.begin(), block.clauses.end(),
                     [](const ast::Clause& x, const ast::Clause& y) { return x.kind < y.kind; });
    if (!reparses(frontend::print_spec_block(block)))
        return minimal_abstract_block(ctx.target_name);
    return block;
}

} // namespace msgpipe::agents
