// SPDX-License-Identifier: Apache-2.0

#include "msgpipe/frontend/ast.hpp"

#include <algorithm>

#include "msgpipe/frontend/diagnostic.hpp"

namespace msgpipe::ast {

std::string to_string(const Type& t)
{
    switch (t.kind) {
    case Type::Kind::U8: return "u8";
    case Type::Kind::U64: return "u64";
    case Type::Kind::U128: return "u128";
    case Type::Kind::Bool: return "bool";
    case Type::Kind::Address: return "address";
    case Type::Kind::Signer: return "signer";
    case Type::Kind::Vector: return "vector<" + to_string(t.inner.front()) + ">";
    case Type::Kind::Struct: return t.name;
    case Type::Kind::Ref: return "&" + to_string(t.inner.front());
    case Type::Kind::MutRef: return "&mut " + to_string(t.inner.front());
    case Type::Kind::Unit: return "()";
    case Type::Kind::Num: return "num";
    case Type::Kind::Any: return "_";
    }
    return "?";
}

const char* to_string(NodeKind k)
{
    switch (k) {
    case NodeKind::Let: return "Let";
    case NodeKind::Assign: return "Assign";
    case NodeKind::ExprStmt: return "ExprStmt";
    case NodeKind::While: return "While";
    case NodeKind::Return: return "Return";
    case NodeKind::Abort: return "Abort";
    case NodeKind::Assert: return "Assert";
    case NodeKind::Block: return "Block";
    case NodeKind::If: return "If";
    case NodeKind::Call: return "Call";
    case NodeKind::BorrowGlobal: return "BorrowGlobal";
    case NodeKind::Exists: return "Exists";
    case NodeKind::MoveTo: return "MoveTo";
    case NodeKind::Global: return "Global";
    case NodeKind::BinOp: return "BinOp";
    case NodeKind::UnOp: return "UnOp";
    case NodeKind::Literal: return "Literal";
    case NodeKind::VarRef: return "VarRef";
    case NodeKind::FieldAccess: return "FieldAccess";
    case NodeKind::Pack: return "Pack";
    case NodeKind::FieldInit: return "FieldInit";
    case NodeKind::VectorLit: return "VectorLit";
    }
    return "?";
}

const char* to_string(ClauseKind k)
{
    switch (k) {
    case ClauseKind::Requires: return "requires";
    case ClauseKind::Modifies: return "modifies";
    case ClauseKind::AbortsIf: return "aborts_if";
    case ClauseKind::Ensures: return "ensures";
    }
    return "?";
}

Node make_node(NodeKind kind, std::string text, std::vector<Node> children)
{
    Node n;
    n.kind = kind;
    n.text = std::move(text);
    n.children = std::move(children);
    return n;
}

Node make_block(std::vector<Node> stmts, bool has_tail)
{
    Node n = make_node(NodeKind::Block, {}, std::move(stmts));
    n.flag = has_tail && !n.children.empty();
    return n;
}

bool FunctionDef::is_native() const
{
    return std::find(attrs.begin(), attrs.end(), "native") != attrs.end();
}

namespace {

template <typename T, typename Pred>
auto find_by_name(T& items, std::string_view n, Pred pred) -> decltype(&items.front())
{
    auto it = std::find_if(items.begin(), items.end(), [&](const auto& x) { return pred(x) == n; });
    return it == items.end() ? nullptr : &*it;
}

} // namespace

const FunctionDef* SourceModule::find_function(std::string_view n) const
{
    return find_by_name(functions, n, [](const FunctionDef& f) -> const std::string& { return f.name; });
}
FunctionDef* SourceModule::find_function(std::string_view n)
{
    return find_by_name(functions, n, [](const FunctionDef& f) -> const std::string& { return f.name; });
}
const StructDef* SourceModule::find_struct(std::string_view n) const
{
    return find_by_name(structs, n, [](const StructDef& s) -> const std::string& { return s.name; });
}
const ConstDef* SourceModule::find_constant(std::string_view n) const
{
    return find_by_name(constants, n, [](const ConstDef& c) -> const std::string& { return c.name; });
}
const SpecBlock* SourceModule::find_spec(std::string_view fn) const
{
    return find_by_name(spec_blocks, fn, [](const SpecBlock& s) -> const std::string& { return s.target_fn; });
}
SpecBlock* SourceModule::find_spec(std::string_view fn)
{
    return find_by_name(spec_blocks, fn, [](const SpecBlock& s) -> const std::string& { return s.target_fn; });
}

bool equal(const Node& a, const Node& b)
{
    if (a.kind != b.kind || a.text != b.text || a.flag != b.flag || a.annotation != b.annotation ||
        a.children.size() != b.children.size())
        return false;
    for (std::size_t i = 0; i < a.children.size(); ++i)
        if (!equal(a.children[i], b.children[i]))
            return false;
    return true;
}

namespace {

bool equal_opt(const std::optional<Node>& a, const std::optional<Node>& b)
{
    if (a.has_value() != b.has_value())
        return false;
    return !a || equal(*a, *b);
}

bool equal(const SpecFun& a, const SpecFun& b)
{
    return a.name == b.name && a.params == b.params && a.return_type == b.return_type &&
           equal_opt(a.body, b.body);
}

template <typename T, typename Eq>
bool equal_range(const std::vector<T>& a, const std::vector<T>& b, Eq eq)
{
    return std::equal(a.begin(), a.end(), b.begin(), b.end(), eq);
}

} // namespace

bool equal(const FunctionDef& a, const FunctionDef& b)
{
    return a.name == b.name && a.visibility == b.visibility && a.attrs == b.attrs && a.params == b.params &&
           a.return_type == b.return_type && a.acquires == b.acquires && equal_opt(a.body, b.body);
}

bool equal(const SpecBlock& a, const SpecBlock& b)
{
    auto eq_binding = [](const Binding& x, const Binding& y) {
        return x.post == y.post && x.name == y.name && equal(x.expr, y.expr);
    };
    auto eq_clause = [](const Clause& x, const Clause& y) {
        return x.kind == y.kind && x.abstract_flag == y.abstract_flag && equal(x.expr, y.expr);
    };
    auto eq_fun = [](const SpecFun& x, const SpecFun& y) { return equal(x, y); };
    return a.target_fn == b.target_fn && a.pragmas == b.pragmas && equal_range(a.bindings, b.bindings, eq_binding) &&
           equal_range(a.clauses, b.clauses, eq_clause) && equal_range(a.helper_funs, b.helper_funs, eq_fun);
}

bool equal(const SourceModule& a, const SourceModule& b)
{
    auto eq_struct = [](const StructDef& x, const StructDef& y) {
        return x.name == y.name && x.abilities == y.abilities && x.fields == y.fields;
    };
    auto eq_const = [](const ConstDef& x, const ConstDef& y) {
        return x.name == y.name && x.type == y.type && equal(x.value, y.value);
    };
    auto eq_fn = [](const FunctionDef& x, const FunctionDef& y) { return equal(x, y); };
    auto eq_spec = [](const SpecBlock& x, const SpecBlock& y) { return equal(x, y); };
    return a.address == b.address && a.name == b.name && a.uses == b.uses && a.module_pragmas == b.module_pragmas &&
           equal_range(a.structs, b.structs, eq_struct) && equal_range(a.constants, b.constants, eq_const) &&
           equal_range(a.functions, b.functions, eq_fn) && equal_range(a.spec_blocks, b.spec_blocks, eq_spec);
}

std::size_t count_nodes(const Node& n, NodeKind kind)
{
    std::size_t count = 0;
    visit(n, [&](const Node& x) {
        count += x.kind == kind;
        return true;
    });
    return count;
}

std::size_t count_mut_borrows(const Node& n)
{
    std::size_t count = 0;
    visit(n, [&](const Node& x) {
        count += x.is_mut_borrow();
        return true;
    });
    return count;
}

Node* find_node(Node& root, NodeId id)
{
    if (root.id == id)
        return &root;
    for (Node& c : root.children)
        if (Node* hit = find_node(c, id))
            return hit;
    return nullptr;
}

const Node* find_node(const Node& root, NodeId id)
{
    return find_node(const_cast<Node&>(root), id);
}

void renumber(Node& n, NodeId& next)
{
    visit_mut(n, [&](Node& x) {
        x.id = next++;
        return true;
    });
}

void renumber(SourceModule& m)
{
    NodeId next = 1;
    for (ConstDef& c : m.constants)
        renumber(c.value, next);
    for (FunctionDef& f : m.functions)
        if (f.body)
            renumber(*f.body, next);
    for (SpecBlock& s : m.spec_blocks) {
        for (Binding& b : s.bindings)
            renumber(b.expr, next);
        for (Clause& c : s.clauses)
            renumber(c.expr, next);
        for (SpecFun& h : s.helper_funs)
            if (h.body)
                renumber(*h.body, next);
    }
    m.next_id = next;
}

std::vector<std::string> split_path(std::string_view path)
{
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = path.find("::", start);
        if (pos == std::string_view::npos) {
            parts.emplace_back(path.substr(start));
            break;
        }
        parts.emplace_back(path.substr(start, pos - start));
        start = pos + 2;
    }
    return parts;
}

} // namespace msgpipe::ast

namespace msgpipe {

const char* to_string(Severity s)
{
    switch (s) {
    case Severity::Error: return "error";
    case Severity::Warning: return "warning";
    case Severity::Note: return "note";
    }
    return "?";
}

std::string Diagnostic::format(std::string_view file) const
{
    std::string out(file);
    out += ":" + std::to_string(span.line) + ":" + std::to_string(span.col) + ": ";
    out += to_string(severity);
    out += ": ";
    if (!code.empty())
        out += "[" + code + "] ";
    out += message;
    return out;
}

std::string format_all(const std::vector<Diagnostic>& diags, std::string_view file)
{
    std::string out;
    for (const Diagnostic& d : diags)
        out += d.format(file) + "\n";
    return out;
}

} // namespace msgpipe
