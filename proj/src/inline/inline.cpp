// SPDX-License-Identifier: Apache-2.0

#include "msgpipe/inline/inline.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "msgpipe/errors.hpp"
#include "msgpipe/frontend/checker.hpp"

namespace msgpipe::inliner {

using ast::Node;
using ast::NodeKind;

namespace {

bool find_path(Node& n, ast::NodeId id, std::vector<Node*>& path)
{
    path.push_back(&n);
    if (n.id == id)
        return true;
    for (Node& c : n.children)
        if (find_path(c, id, path))
            return true;
    path.pop_back();
    return false;
}

ast::NodeId max_id(const Node& n)
{
    ast::NodeId m = n.id;
    for (const Node& c : n.children)
        m = std::max(m, max_id(c));
    return m;
}

bool has_effects(const Node& n)
{
    return ast::count_nodes(n, NodeKind::Call) + ast::count_nodes(n, NodeKind::MoveTo) > 0;
}

std::string qualify_name(const std::string& name, const std::string& module)
{
    if (module.empty() || name.find("::") != std::string::npos)
        return name;
    return module + "::" + name;
}

void qualify_type(ast::Type& t, const std::string& module)
{
    if (t.kind == ast::Type::Kind::Struct)
        t.name = qualify_name(t.name, module);
    for (auto& i : t.inner)
        qualify_type(i, module);
}

/// The callee body with locals renamed, names qualified, spans moved to `at`
/// and a trailing `return e` folded into the tail.
Node prepared_body(const ast::FunctionDef& callee, int suffix, ast::Span at, const std::string& qualify_module)
{
    Node body = *callee.body;
    if (!body.has_tail() && !body.children.empty() && body.children.back().is(NodeKind::Return)) {
        Node ret = std::move(body.children.back());
        body.children.pop_back();
        if (!ret.children.empty()) {
            body.children.push_back(std::move(ret.children[0]));
            body.flag = true;
        }
    }
    if (ast::count_nodes(body, NodeKind::Return) > 0)
        throw EarlyReturn(callee.name + " returns early");

    std::set<std::string> locals;
    for (const auto& p : callee.params)
        locals.insert(p.name);
    ast::visit(body, [&](const Node& n) {
        if (n.is(NodeKind::Let))
            locals.insert(n.text);
        return true;
    });
    const std::string tag = "__inl" + std::to_string(suffix);
    ast::visit_mut(body, [&](Node& n) {
        n.span = at;
        n.id = 0;
        if ((n.is(NodeKind::Let) || n.is(NodeKind::VarRef)) && locals.count(n.text))
            n.text += tag;
        if (!qualify_module.empty()) {
            switch (n.kind) {
            case NodeKind::Call:
            case NodeKind::BorrowGlobal:
            case NodeKind::Exists:
            case NodeKind::Pack:
                n.text = qualify_name(n.text, qualify_module);
                break;
            case NodeKind::MoveTo:
                if (!n.text.empty())
                    n.text = qualify_name(n.text, qualify_module);
                break;
            default: break;
            }
            if (n.annotation)
                qualify_type(*n.annotation, qualify_module);
        }
        return true;
    });
    return body;
}

Node substitute_impl(const Node& body_in, ast::NodeId callsite, const ast::FunctionDef& callee, int suffix,
                     const std::string& qualify_module)
{
    Node body = body_in;
    std::vector<Node*> path;
    if (!find_path(body, callsite, path) || !path.back()->is(NodeKind::Call))
        throw SignatureMismatch("node " + std::to_string(callsite) + " is not a call site");
    Node& call = *path.back();
    if (!callee.body)
        throw SignatureMismatch(callee.name + " has no body");
    if (call.children.size() != callee.params.size())
        throw SignatureMismatch(callee.name + " expects " + std::to_string(callee.params.size()) +
                                " arguments, call passes " + std::to_string(call.children.size()));

    std::size_t b = path.size() - 1;
    while (b > 0 && !path[b - 1]->is(NodeKind::Block))
        --b;
    if (b == 0)
        throw UnsupportedCallSite("call outside any block");
    std::size_t block_at = b - 1; // path index of the innermost enclosing block
    for (std::size_t k = block_at + 1; k + 1 < path.size(); ++k) {
        const Node& parent = *path[k];
        std::size_t idx = static_cast<std::size_t>(path[k + 1] - parent.children.data());
        if (parent.is(NodeKind::BinOp) && (parent.text == "&&" || parent.text == "||") && idx == 1)
            throw UnsupportedCallSite("call in short-circuit operand");
        if (parent.is(NodeKind::While) && idx == 0)
            throw UnsupportedCallSite("call in loop condition");
        if (parent.is(NodeKind::If) && idx >= 1)
            throw UnsupportedCallSite("call in non-block branch");
        for (std::size_t s = 0; s < idx; ++s)
            if (has_effects(parent.children[s]))
                throw UnsupportedCallSite("call follows another call in the same statement");
    }

    const ast::Span call_span = call.span;
    Node inlined = prepared_body(callee, suffix, call_span, qualify_module);
    std::vector<Node> hoisted;
    const std::string tag = "__inl" + std::to_string(suffix);
    for (std::size_t i = 0; i < callee.params.size(); ++i) {
        Node let = ast::make_node(NodeKind::Let, callee.params[i].name + tag, {std::move(call.children[i])});
        let.span = call_span;
        hoisted.push_back(std::move(let));
    }
    std::optional<Node> tail;
    if (inlined.has_tail()) {
        tail = std::move(inlined.children.back());
        inlined.children.pop_back();
    }
    for (Node& s : inlined.children)
        hoisted.push_back(std::move(s));

    Node& block = *path[block_at];
    std::size_t stmt = static_cast<std::size_t>(path[block_at + 1] - block.children.data());
    bool call_is_stmt = path[block_at + 1] == &call;
    bool call_is_expr_stmt =
        path[block_at + 1]->is(NodeKind::ExprStmt) && path.size() == block_at + 3;

    std::vector<Node> replacement = std::move(hoisted);
    bool is_tail_slot = block.has_tail() && stmt + 1 == block.children.size();
    if (call_is_stmt) {
        // The call is the block's tail expression.
        if (tail)
            replacement.push_back(std::move(*tail));
        else
            block.flag = false;
    } else if (call_is_expr_stmt) {
        if (tail && !tail->is(NodeKind::Literal) && !tail->is(NodeKind::VarRef)) {
            Node es = ast::make_node(NodeKind::ExprStmt, {}, {std::move(*tail)});
            es.span = call_span;
            replacement.push_back(std::move(es));
        }
    } else {
        Node value = tail ? std::move(*tail) : ast::make_block({});
        value.span = call_span;
        call = std::move(value);
        replacement.push_back(std::move(block.children[stmt]));
    }
    if (!call_is_stmt && is_tail_slot && replacement.empty())
        block.flag = false;

    std::vector<Node> children;
    for (std::size_t i = 0; i < block.children.size(); ++i) {
        if (i != stmt) {
            children.push_back(std::move(block.children[i]));
            continue;
        }
        for (Node& r : replacement)
            children.push_back(std::move(r));
    }
    block.children = std::move(children);

    ast::NodeId next = max_id(body_in) + 1;
    ast::visit_mut(body, [&](Node& n) {
        if (n.id == 0)
            n.id = next++;
        return true;
    });
    return body;
}

int next_suffix(const ast::FunctionDef& f)
{
    int hi = 0;
    auto scan = [&](const std::string& name) {
        auto pos = name.rfind("__inl");
        if (pos == std::string::npos)
            return;
        try {
            hi = std::max(hi, std::stoi(name.substr(pos + 5)));
        } catch (const std::exception&) {
        }
    };
    for (const auto& p : f.params)
        scan(p.name);
    if (f.body)
        ast::visit(*f.body, [&](const Node& n) {
            if (n.is(NodeKind::Let) || n.is(NodeKind::VarRef))
                scan(n.text);
            return true;
        });
    return hi + 1;
}

std::vector<ast::NodeId> call_sites(const ast::FunctionDef& f, const deps::DependencyClosure& c,
                                    const ast::SourceModule& home, const std::string& callee)
{
    std::vector<ast::NodeId> out;
    if (!f.body)
        return out;
    ast::visit(*f.body, [&](const Node& n) {
        if (n.is(NodeKind::Call)) {
            auto p = deps::resolve_call(c.workspace, home, n.text);
            if (p && *p == callee)
                out.push_back(n.id);
        }
        return true;
    });
    return out;
}

std::string module_of(const std::string& path) { return path.substr(0, path.rfind("::")); }

} // namespace

Node substitute(const Node& body, ast::NodeId callsite, const ast::FunctionDef& callee, int suffix)
{
    return substitute_impl(body, callsite, callee, suffix, {});
}

ast::FunctionDef inline_call(const ast::FunctionDef& caller, ast::NodeId callsite, const ast::FunctionDef& callee,
                             int suffix, const std::string& caller_module, const std::string& callee_module)
{
    std::string qualify = callee_module != caller_module ? callee_module : std::string{};
    ast::FunctionDef out = caller;
    out.body = substitute_impl(*caller.body, callsite, callee, suffix, qualify);
    for (const auto& a : callee.acquires) {
        std::string name = qualify_name(a, qualify);
        if (std::find(out.acquires.begin(), out.acquires.end(), name) == out.acquires.end())
            out.acquires.push_back(name);
    }
    return out;
}

InlineReport inline_best_effort(const deps::DependencyClosure& closure)
{
    InlineReport report;
    report.result = closure.target_fn;
    const ast::SourceModule& home = closure.module();
    if (!report.result.body) {
        for (const auto& c : closure.callees)
            report.skipped.push_back({c.path, "NotReached"});
        return report;
    }
    int suffix = next_suffix(report.result);
    std::set<std::string> skipped;

    auto attempt = [&](const deps::Callee& callee) -> std::string {
        if (callee.native)
            return "Native";
        if (std::find(closure.cycle_members.begin(), closure.cycle_members.end(), callee.path) !=
            closure.cycle_members.end())
            return "Recursive";
        ast::FunctionDef state = report.result;
        int local_suffix = suffix;
        try {
            for (;;) {
                auto sites = call_sites(state, closure, home, callee.path);
                if (sites.empty())
                    break;
                state = inline_call(state, sites.front(), callee.def, local_suffix++, closure.target_module,
                                    module_of(callee.path));
            }
        } catch (const SignatureMismatch&) {
            return "SignatureMismatch";
        } catch (const UnsupportedCallSite&) {
            return "UnsupportedCallSite";
        } catch (const EarlyReturn&) {
            return "EarlyReturn";
        }
        ast::SourceModule m = home;
        *m.find_function(state.name) = state;
        auto diags = frontend::check_function(m, state, closure.workspace);
        if (!diags.empty())
            return diags.front().code;
        report.result = std::move(state);
        suffix = local_suffix;
        return {};
    };

    bool progress = true;
    while (progress) {
        progress = false;
        for (const auto& callee : closure.callees) {
            if (skipped.count(callee.path))
                continue;
            if (call_sites(report.result, closure, home, callee.path).empty())
                continue;
            std::string reason = attempt(callee);
            bool already = std::find(report.inlined.begin(), report.inlined.end(), callee.path) !=
                           report.inlined.end();
            if (reason.empty()) {
                if (!already)
                    report.inlined.push_back(callee.path);
                progress = true;
            } else {
                skipped.insert(callee.path);
                if (!already)
                    report.skipped.push_back({callee.path, reason});
            }
        }
    }
    for (const auto& callee : closure.callees) {
        bool seen = skipped.count(callee.path) ||
                    std::find(report.inlined.begin(), report.inlined.end(), callee.path) != report.inlined.end();
        if (!seen)
            report.skipped.push_back({callee.path, "NotReached"});
    }
    return report;
}

std::string InlineReport::describe() const
{
    std::ostringstream o;
    o << "// inlining: transitive callees attempted in topological order, repeated until no change\n";
    for (const auto& p : inlined)
        o << "inlined: " << p << "\n";
    for (const auto& s : skipped)
        o << "skipped: " << s.callee << " (" << s.reason << ")\n";
    return o.str();
}

} // namespace msgpipe::inliner
