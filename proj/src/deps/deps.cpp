// SPDX-License-Identifier: Apache-2.0

#include "msgpipe/deps/deps.hpp"

#include <algorithm>
#include <functional>
#include <set>
#include <sstream>

#include "msgpipe/errors.hpp"
#include "msgpipe/frontend/parser.hpp"
#include "msgpipe/frontend/printer.hpp"

namespace msgpipe::deps {

using ast::Node;
using ast::NodeKind;

namespace {

const ast::SourceModule* module_by_qname(std::span<const ast::SourceModule> ws, std::string_view qname)
{
    for (const auto& m : ws)
        if (m.qualified_name() == qname)
            return &m;
    return nullptr;
}

/// Module named by the leading components of a path as written in `from`.
const ast::SourceModule* module_for(std::span<const ast::SourceModule> ws, const ast::SourceModule& from,
                                    const std::vector<std::string>& parts)
{
    if (parts.size() == 1)
        return module_by_qname(ws, from.qualified_name());
    if (parts.size() == 2) {
        const ast::SourceModule* any = nullptr;
        for (const auto& m : ws) {
            if (m.name != parts[0])
                continue;
            if (m.address == from.address)
                return &m;
            if (!any)
                any = &m;
        }
        return any;
    }
    return module_by_qname(ws, parts[parts.size() - 3] + "::" + parts[parts.size() - 2]);
}

std::pair<std::string, std::string> split_last(const std::string& path)
{
    auto pos = path.rfind("::");
    return {path.substr(0, pos), path.substr(pos + 2)};
}

std::optional<std::string> resolve_struct(std::span<const ast::SourceModule> ws, const ast::SourceModule& from,
                                          const std::string& name)
{
    auto parts = ast::split_path(name);
    const ast::SourceModule* m = module_for(ws, from, parts);
    if (!m || !m->find_struct(parts.back()))
        return std::nullopt;
    return m->qualified_name() + "::" + parts.back();
}

void type_structs(const ast::Type& t, std::vector<std::string>& out)
{
    if (t.kind == ast::Type::Kind::Struct)
        out.push_back(t.name);
    for (const auto& i : t.inner)
        type_structs(i, out);
}

/// Struct names referenced by a function, in first-occurrence order, as written.
std::vector<std::string> referenced_structs(const ast::FunctionDef& f)
{
    std::vector<std::string> names;
    for (const auto& p : f.params)
        type_structs(p.type, names);
    if (f.return_type)
        type_structs(*f.return_type, names);
    for (const auto& a : f.acquires)
        names.push_back(a);
    if (f.body)
        ast::visit(*f.body, [&](const Node& n) {
            if (n.annotation)
                type_structs(*n.annotation, names);
            switch (n.kind) {
            case NodeKind::BorrowGlobal:
            case NodeKind::Exists:
            case NodeKind::Global:
            case NodeKind::Pack:
                names.push_back(n.text);
                break;
            case NodeKind::MoveTo:
                if (!n.text.empty())
                    names.push_back(n.text);
                break;
            default: break;
            }
            return true;
        });
    return names;
}

std::vector<std::string> call_texts(const ast::FunctionDef& f)
{
    std::vector<std::string> out;
    if (f.body)
        ast::visit(*f.body, [&](const Node& n) {
            if (n.is(NodeKind::Call) && std::find(out.begin(), out.end(), n.text) == out.end())
                out.push_back(n.text);
            return true;
        });
    return out;
}

bool contains_kind(const Node& n, NodeKind k) { return ast::count_nodes(n, k) > 0; }

template <typename T>
void push_unique(std::vector<T>& v, const T& x)
{
    if (std::find(v.begin(), v.end(), x) == v.end())
        v.push_back(x);
}

bool verify_disabled(const std::vector<ast::Pragma>& pragmas)
{
    return std::any_of(pragmas.begin(), pragmas.end(),
                       [](const ast::Pragma& p) { return p.name == "verify" && p.value == "false"; });
}

} // namespace

const char* to_string(ContextMode m) { return m == ContextMode::Inlined ? "V1" : "V2"; }

const ast::SourceModule& DependencyClosure::module() const
{
    const ast::SourceModule* m = module_by_qname(workspace, target_module);
    if (!m)
        throw TargetNotFound(target_module);
    return *m;
}

const Callee* DependencyClosure::find_callee(std::string_view path) const
{
    for (const auto& c : callees)
        if (c.path == path)
            return &c;
    return nullptr;
}

std::optional<FunctionPath> resolve_call(std::span<const ast::SourceModule> workspace, const ast::SourceModule& from,
                                         std::string_view call)
{
    auto parts = ast::split_path(call);
    const ast::SourceModule* m = parts.size() == 1 ? &from : module_for(workspace, from, parts);
    if (!m || !m->find_function(parts.back()))
        return std::nullopt;
    return m->qualified_name() + "::" + parts.back();
}

FunctionPath resolve_target(std::span<const ast::SourceModule> workspace, std::string_view path)
{
    auto parts = ast::split_path(path);
    std::vector<FunctionPath> hits;
    for (const auto& m : workspace) {
        bool match = parts.size() == 1 || (parts.size() == 2 && m.name == parts[0]) ||
                     (parts.size() == 3 && m.address == parts[0] && m.name == parts[1]);
        if (match && m.find_function(parts.back()))
            hits.push_back(m.qualified_name() + "::" + parts.back());
    }
    if (hits.size() != 1)
        throw TargetNotFound(std::string(path) + (hits.size() > 1 ? " (ambiguous)" : ""));
    return hits.front();
}

DependencyClosure slice(std::span<const ast::SourceModule> workspace, std::string_view target)
{
    DependencyClosure c;
    c.target = resolve_target(workspace, target);
    c.workspace.assign(workspace.begin(), workspace.end());
    std::tie(c.target_module, std::ignore) = split_last(c.target);

    auto fn_of = [&](const FunctionPath& p) -> std::pair<const ast::SourceModule*, const ast::FunctionDef*> {
        auto [mod, name] = split_last(p);
        const ast::SourceModule* m = module_by_qname(c.workspace, mod);
        return {m, m ? m->find_function(name) : nullptr};
    };
    c.target_fn = *fn_of(c.target).second;

    enum class Mark { White, Gray, Black };
    std::map<FunctionPath, Mark> mark;
    std::vector<FunctionPath> stack;
    std::vector<FunctionPath> postorder;

    std::function<void(const FunctionPath&)> dfs = [&](const FunctionPath& p) {
        mark[p] = Mark::Gray;
        stack.push_back(p);
        auto [m, f] = fn_of(p);
        auto& edges = c.call_graph[p];
        for (const auto& text : call_texts(*f)) {
            auto callee = resolve_call(c.workspace, *m, text);
            if (!callee) {
                push_unique(edges, text);
                push_unique(c.externals, text);
                continue;
            }
            push_unique(edges, *callee);
            Mark state = mark.count(*callee) ? mark[*callee] : Mark::White;
            if (state == Mark::Gray) {
                c.cyclic = true;
                auto from = std::find(stack.begin(), stack.end(), *callee);
                for (auto it = from; it != stack.end(); ++it)
                    push_unique(c.cycle_members, *it);
            } else if (state == Mark::White) {
                dfs(*callee);
            }
        }
        stack.pop_back();
        mark[p] = Mark::Black;
        postorder.push_back(p);
    };
    dfs(c.target);

    std::vector<std::pair<const ast::SourceModule*, const ast::FunctionDef*>> members;
    for (const auto& p : postorder) {
        auto [m, f] = fn_of(p);
        members.emplace_back(m, f);
        if (p == c.target)
            continue;
        c.callees.push_back(Callee{p, *f, f->is_native()});
    }

    // Structs: direct references first, then field-type closure.
    std::vector<std::string> struct_paths;
    std::vector<std::string> const_paths;
    auto t_pos = std::find(postorder.begin(), postorder.end(), c.target) - postorder.begin();
    std::rotate(members.begin(), members.begin() + t_pos, members.begin() + t_pos + 1);
    for (const auto& [m, f] : members) {
        for (const auto& name : referenced_structs(*f))
            if (auto s = resolve_struct(c.workspace, *m, name))
                push_unique(struct_paths, *s);
        if (f->body)
            ast::visit(*f->body, [&](const Node& n) {
                if (n.is(NodeKind::VarRef) && m->find_constant(n.text))
                    push_unique(const_paths, m->qualified_name() + "::" + n.text);
                return true;
            });
    }
    for (std::size_t i = 0; i < struct_paths.size(); ++i) {
        auto [mod, name] = split_last(struct_paths[i]);
        const ast::SourceModule* m = module_by_qname(c.workspace, mod);
        const ast::StructDef* s = m->find_struct(name);
        for (const auto& field : s->fields) {
            std::vector<std::string> names;
            type_structs(field.type, names);
            for (const auto& n : names)
                if (auto r = resolve_struct(c.workspace, *m, n))
                    push_unique(struct_paths, *r);
        }
        c.structs.push_back(StructEntry{struct_paths[i], *s});
    }
    for (const auto& p : const_paths) {
        auto [mod, name] = split_last(p);
        c.constants.push_back(ConstEntry{p, *module_by_qname(c.workspace, mod)->find_constant(name)});
    }
    return c;
}

GenerationContext build_context(const DependencyClosure& closure, ContextMode mode,
                                const std::optional<std::string>& inlined)
{
    if (mode == ContextMode::Inlined && !inlined)
        throw PreconditionViolated("V1 context requires inlined source");

    GenerationContext ctx;
    ctx.mode = mode;
    ctx.target = closure.target;
    ctx.target_name = closure.target_fn.name;

    std::vector<const Callee*> listed;
    ast::FunctionDef shown = closure.target_fn;
    if (mode == ContextMode::Listed) {
        ctx.target_source = frontend::print_function(closure.target_fn);
        for (const auto& cl : closure.callees)
            listed.push_back(&cl);
    } else {
        shown = frontend::parse_function(*inlined);
        ctx.target_source = frontend::print_function(shown);
        // Callees still called after inlining, plus what they reach.
        std::set<FunctionPath> reach;
        std::vector<FunctionPath> work;
        const ast::SourceModule& home = closure.module();
        for (const auto& text : call_texts(shown))
            if (auto p = resolve_call(closure.workspace, home, text))
                work.push_back(*p);
        while (!work.empty()) {
            FunctionPath p = work.back();
            work.pop_back();
            if (!reach.insert(p).second)
                continue;
            auto it = closure.call_graph.find(p);
            if (it != closure.call_graph.end())
                for (const auto& q : it->second)
                    work.push_back(q);
        }
        for (const auto& cl : closure.callees)
            if (reach.count(cl.path))
                listed.push_back(&cl);
    }

    ctx.metadata.has_loops = shown.body && contains_kind(*shown.body, NodeKind::While);
    ctx.metadata.has_global_mut = shown.body && ast::count_mut_borrows(*shown.body) > 0;
    for (const Callee* cl : listed)
        if (cl->def.body && ast::count_mut_borrows(*cl->def.body) > 0)
            ctx.metadata.has_global_mut = true;
    ctx.metadata.callee_count = static_cast<int>(closure.callees.size());

    for (const auto& s : closure.structs)
        ctx.dependency_sources.push_back("// " + split_last(s.path).first + "\n" + frontend::print_struct(s.def));
    for (const auto& k : closure.constants)
        ctx.dependency_sources.push_back("// " + split_last(k.path).first + "\n" + frontend::print_constant(k.def));
    for (const Callee* cl : listed)
        ctx.dependency_sources.push_back("// " + split_last(cl->path).first + "\n" + frontend::print_function(cl->def));

    std::ostringstream h;
    h << "// target: " << closure.target << "\n";
    h << "// context: " << to_string(mode)
      << (mode == ContextMode::Inlined ? " (callees inlined where possible)" : " (dependencies listed)") << "\n";
    h << "// callees: " << ctx.metadata.callee_count << ", loops: " << (ctx.metadata.has_loops ? "yes" : "no")
      << ", global writes: " << (ctx.metadata.has_global_mut ? "yes" : "no") << "\n";
    for (const auto& e : closure.externals)
        h << "// external, definition unavailable: " << e << "\n";
    for (const auto& cl : closure.callees)
        if (cl.native)
            h << "// native, signature only: " << cl.path << "\n";
    ctx.header = h.str();
    return ctx;
}

std::string GenerationContext::render() const
{
    std::string out = header + "\n// target function\n" + target_source;
    if (!dependency_sources.empty()) {
        out += "\n// dependencies\n";
        for (std::size_t i = 0; i < dependency_sources.size(); ++i) {
            if (i)
                out += "\n";
            out += dependency_sources[i];
        }
    }
    return out;
}

std::vector<FunctionPath> select_targets(std::span<const ast::SourceModule> workspace)
{
    std::vector<FunctionPath> out;
    for (const auto& m : workspace) {
        if (verify_disabled(m.module_pragmas))
            continue;
        for (const auto& f : m.functions) {
            if (f.is_native())
                continue;
            const ast::SpecBlock* spec = m.find_spec(f.name);
            if (spec && verify_disabled(spec->pragmas))
                continue;
            out.push_back(m.qualified_name() + "::" + f.name);
        }
    }
    return out;
}

std::string analyze_report(const DependencyClosure& c)
{
    std::ostringstream o;
    o << "target: " << c.target << "\n";
    o << "callees (callees first): " << c.callees.size() << "\n";
    for (const auto& cl : c.callees)
        o << "  " << cl.path << (cl.native ? " [native]" : "") << "\n";
    o << "structs: " << c.structs.size() << "\n";
    for (const auto& s : c.structs)
        o << "  " << s.path << "\n";
    o << "constants: " << c.constants.size() << "\n";
    for (const auto& k : c.constants)
        o << "  " << k.path << "\n";
    o << "call graph:\n";
    for (const auto& [from, to] : c.call_graph) {
        o << "  " << from << " ->";
        for (std::size_t i = 0; i < to.size(); ++i)
            o << (i ? ", " : " ") << to[i];
        o << "\n";
    }
    o << "externals: " << c.externals.size() << "\n";
    for (const auto& e : c.externals)
        o << "  " << e << "\n";
    o << "cyclic: " << (c.cyclic ? "yes" : "no") << "\n";
    for (const auto& m : c.cycle_members)
        o << "  " << m << "\n";
    return o.str();
}

} // namespace msgpipe::deps
