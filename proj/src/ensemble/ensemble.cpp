// SPDX-License-Identifier: Apache-2.0

#include "msgpipe/ensemble/ensemble.hpp"

#include <algorithm>
#include <set>

#include "msgpipe/errors.hpp"
#include "msgpipe/frontend/parser.hpp"
#include "msgpipe/frontend/printer.hpp"

namespace msgpipe::ensemble {

using agents::ClauseSnippet;
using ast::Node;

namespace {

int rank(ClauseClass c)
{
    switch (c) {
    case ClauseClass::Modifies: return 0;
    case ClauseClass::AbortsIf: return 1;
    case ClauseClass::Ensures: return 2;
    case ClauseClass::LoopInvariant: return 3;
    }
    return 4;
}

bool references(const Node& n, const std::string& name)
{
    bool hit = false;
    ast::visit(n, [&](const Node& x) {
        if (x.is(ast::NodeKind::VarRef) && x.text == name)
            hit = true;
        return !hit;
    });
    return hit;
}

void rename_refs(Node& n, const std::map<std::string, std::string>& renames)
{
    if (renames.empty())
        return;
    ast::visit_mut(n, [&](Node& x) {
        if (x.is(ast::NodeKind::VarRef)) {
            auto it = renames.find(x.text);
            if (it != renames.end())
                x.text = it->second;
        }
        return true;
    });
}

bool same_clause(const ast::Clause& a, const ast::Clause& b)
{
    return a.kind == b.kind && a.abstract_flag == b.abstract_flag && ast::equal(a.expr, b.expr);
}

bool same_helper(const ast::SpecFun& a, const ast::SpecFun& b)
{
    if (a.name != b.name || a.params != b.params || !(a.return_type == b.return_type) ||
        a.body.has_value() != b.body.has_value())
        return false;
    return !a.body || ast::equal(*a.body, *b.body);
}

bool is_literal(const Node& n, const char* text) { return n.is(ast::NodeKind::Literal) && n.text == text; }

} // namespace

ast::SpecBlock merge(const std::string& target_fn, const std::vector<ClauseSnippet>& snippets,
                     std::vector<std::string>* warnings)
{
    std::vector<const ClauseSnippet*> order;
    std::set<ClauseClass> seen;
    for (const auto& s : snippets) {
        if (!seen.insert(s.cls).second)
            throw PreconditionViolated(std::string("two snippets for class ") + to_string(s.cls));
        order.push_back(&s);
    }
    std::stable_sort(order.begin(), order.end(),
                     [](const ClauseSnippet* a, const ClauseSnippet* b) { return rank(a->cls) < rank(b->cls); });

    ast::SpecBlock out;
    out.target_fn = target_fn;
    auto used_by_out = [&](const std::string& name, std::size_t skip_binding) {
        for (const auto& c : out.clauses)
            if (references(c.expr, name))
                return true;
        for (std::size_t i = 0; i < out.bindings.size(); ++i)
            if (i != skip_binding && references(out.bindings[i].expr, name))
                return true;
        return false;
    };

    for (const ClauseSnippet* s : order) {
        std::map<std::string, std::string> renames;
        auto used_by_snippet = [&](const std::string& name, std::size_t from_binding) {
            for (const auto& c : s->clauses)
                if (references(c.expr, name))
                    return true;
            for (std::size_t i = from_binding; i < s->bindings.size(); ++i)
                if (references(s->bindings[i].expr, name))
                    return true;
            return false;
        };
        for (std::size_t bi = 0; bi < s->bindings.size(); ++bi) {
            ast::Binding b = s->bindings[bi];
            rename_refs(b.expr, renames);
            auto existing = std::find_if(out.bindings.begin(), out.bindings.end(),
                                         [&](const ast::Binding& x) { return x.name == b.name; });
            if (existing == out.bindings.end()) {
                out.bindings.push_back(std::move(b));
                continue;
            }
            if (existing->post == b.post && ast::equal(existing->expr, b.expr))
                continue;
            bool new_used = used_by_snippet(b.name, bi + 1);
            auto idx = static_cast<std::size_t>(existing - out.bindings.begin());
            if (existing->post == b.post && new_used && used_by_out(b.name, idx))
                throw ConflictingBindings("binding `" + b.name + "` has different definitions in " +
                                          "two clause classes and both are used");
            if (!new_used)
                continue;
            std::string fresh = b.name + "_" + to_string(s->cls);
            for (int k = 2; std::any_of(out.bindings.begin(), out.bindings.end(),
                                        [&](const ast::Binding& x) { return x.name == fresh; });
                 ++k)
                fresh = b.name + "_" + to_string(s->cls) + std::to_string(k);
            renames[b.name] = fresh;
            b.name = fresh;
            out.bindings.push_back(std::move(b));
        }
        for (ast::Clause c : s->clauses) {
            rename_refs(c.expr, renames);
            if (std::none_of(out.clauses.begin(), out.clauses.end(),
                             [&](const ast::Clause& x) { return same_clause(x, c); }))
                out.clauses.push_back(std::move(c));
        }
        for (const auto& f : s->helper_funs) {
            auto it = std::find_if(out.helper_funs.begin(), out.helper_funs.end(),
                                   [&](const ast::SpecFun& x) { return x.name == f.name; });
            if (it == out.helper_funs.end())
                out.helper_funs.push_back(f);
            else if (!same_helper(*it, f) && warnings)
                warnings->push_back("helper `" + f.name + "` defined twice; keeping the first");
        }
    }
    std::stable_sort(out.clauses.begin(), out.clauses.end(),
                     [](const ast::Clause& a, const ast::Clause& b) { return a.kind < b.kind; });

    if (warnings) {
        bool never = false, concrete = false;
        for (const auto& c : out.clauses)
            if (c.kind == ast::ClauseKind::AbortsIf)
                (is_literal(c.expr, "false") ? never : concrete) = true;
        if (never && concrete)
            warnings->push_back("`aborts_if false` kept alongside concrete aborts_if clauses");
    }
    return out;
}

ClauseSnippet as_snippet(const ast::SpecBlock& block)
{
    ClauseSnippet s;
    s.cls = ClauseClass::Ensures;
    s.bindings = block.bindings;
    s.clauses = block.clauses;
    s.helper_funs = block.helper_funs;
    return s;
}

ast::SourceModule attach(const ast::SourceModule& module, const ast::SpecBlock& block,
                         const std::optional<ast::FunctionDef>& annotated)
{
    ast::SourceModule m = module;
    ast::FunctionDef* fn = m.find_function(block.target_fn);
    if (!fn)
        throw TargetNotFound(m.qualified_name() + "::" + block.target_fn);
    if (annotated && annotated->body)
        fn->body = annotated->body;
    std::erase_if(m.spec_blocks, [&](const ast::SpecBlock& b) { return b.target_fn == block.target_fn; });
    m.spec_blocks.push_back(block);
    ast::renumber(m);
    return m;
}

ast::SpecBlock polish(const ast::SpecBlock& block, llm::ChatBackend& llm, const agents::AgentOptions& opts)
{
    const auto& t = agents::load_prompt("ensembler", opts.dir());
    ast::SpecBlock body = block;
    body.helper_funs.clear();
    std::map<std::string, std::string> vars{{"target", block.target_fn},
                                            {"spec", frontend::print_spec_block(body)}};
    agents::PromptBundle b{t.fill_system(vars), t.fill_user(vars), {}, std::nullopt};
    std::string reply;
    try {
        reply = llm.complete(agents::make_request(b, opts));
    } catch (const BackendError&) {
        return block;
    }
    frontend::SpecMembers m;
    try {
        std::string text;
        for (const auto& item : agents::sanitize(agents::extract_fenced(reply)))
            text += item + "\n";
        m = frontend::parse_spec_members(text);
    } catch (const SyntaxError&) {
        return block;
    }
    if (m.blocks.size() == 1 && m.blocks[0].target_fn == block.target_fn && m.clauses.empty() && m.bindings.empty()) {
        m.bindings = std::move(m.blocks[0].bindings);
        m.clauses = std::move(m.blocks[0].clauses);
        m.blocks.clear();
    }
    auto covers = [](const std::vector<ast::Clause>& xs, const std::vector<ast::Clause>& ys) {
        return std::all_of(xs.begin(), xs.end(), [&](const ast::Clause& x) {
            return std::any_of(ys.begin(), ys.end(), [&](const ast::Clause& y) { return same_clause(x, y); });
        });
    };
    if (m.clauses.size() != block.clauses.size() || !covers(block.clauses, m.clauses) ||
        !covers(m.clauses, block.clauses) || !m.blocks.empty())
        return block;
    ast::SpecBlock out = block;
    out.bindings = std::move(m.bindings);
    out.clauses = std::move(m.clauses);
    std::set<std::string> names;
    for (const auto& bd : out.bindings)
        if (!names.insert(bd.name).second)
            return block;
    return out;
}

VerificationUnit VerificationUnit::from_closure(const deps::DependencyClosure& c)
{
    std::set<std::string> wanted{c.target_module};
    auto module_of = [](const std::string& path) { return path.substr(0, path.rfind("::")); };
    for (const auto& cl : c.callees)
        wanted.insert(module_of(cl.path));
    for (const auto& s : c.structs)
        wanted.insert(module_of(s.path));
    VerificationUnit u;
    for (const auto& m : c.workspace)
        if (wanted.count(m.qualified_name()))
            u.modules.push_back(m);
    u.target_module = c.target_module;
    u.target_fn = c.target_fn.name;
    return u;
}

const ast::SourceModule& VerificationUnit::module() const
{
    for (const auto& m : modules)
        if (m.qualified_name() == target_module)
            return m;
    throw TargetNotFound(target_module);
}

std::string VerificationUnit::render(const ast::SpecBlock& block, const std::optional<ast::FunctionDef>& annotated,
                                     const std::map<deps::FunctionPath, std::vector<ast::Clause>>& callee_clauses) const
{
    std::vector<ast::SourceModule> mods = modules;
    for (auto& m : mods)
        if (m.qualified_name() == target_module) {
            ast::SpecBlock b = block;
            b.target_fn = target_fn;
            m = attach(m, b, annotated);
        }
    const ast::SourceModule& home = module();
    for (const auto& [written, clauses] : callee_clauses) {
        auto path = deps::resolve_call(mods, home, written);
        if (!path)
            continue;
        auto parts = ast::split_path(*path);
        std::string qualified = parts[0] + "::" + parts[1];
        for (auto& m : mods) {
            if (m.qualified_name() != qualified || !m.find_function(parts[2]))
                continue;
            ast::SpecBlock* spec = m.find_spec(parts[2]);
            if (!spec) {
                m.spec_blocks.push_back(ast::SpecBlock{});
                spec = &m.spec_blocks.back();
                spec->target_fn = parts[2];
            }
            for (const auto& c : clauses)
                if (std::none_of(spec->clauses.begin(), spec->clauses.end(),
                                 [&](const ast::Clause& x) { return same_clause(x, c); }))
                    spec->clauses.push_back(c);
        }
    }
    return render_modules(mods);
}

std::string VerificationUnit::render_modules(const std::vector<ast::SourceModule>& mods) const
{
    return frontend::pretty_print(mods);
}

} // namespace msgpipe::ensemble
