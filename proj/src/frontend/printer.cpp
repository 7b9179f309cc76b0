// SPDX-License-Identifier: Apache-2.0

#include "msgpipe/frontend/printer.hpp"

#include <algorithm>

namespace msgpipe::frontend {

using ast::Node;
using ast::NodeKind;

namespace {

constexpr int kPrecLowest = 0;
constexpr int kPrecUnary = 7;
constexpr int kPrecPostfix = 8;

int binop_precedence(const std::string& op)
{
    if (op == "==>")
        return 1;
    if (op == "||")
        return 2;
    if (op == "&&")
        return 3;
    if (op == "==" || op == "!=" || op == "<" || op == ">" || op == "<=" || op == ">=")
        return 4;
    if (op == "+" || op == "-")
        return 5;
    return 6;
}

int precedence(const Node& n)
{
    switch (n.kind) {
    case NodeKind::BinOp: return binop_precedence(n.text);
    case NodeKind::UnOp: return kPrecUnary;
    case NodeKind::If:
    case NodeKind::Block: return kPrecLowest;
    default: return kPrecPostfix;
    }
}

std::string pad(int indent) { return std::string(static_cast<std::size_t>(indent) * 4, ' '); }

class Printer {
  public:
    std::string out;

    void line(int indent, const std::string& text)
    {
        out += pad(indent);
        out += text;
        out += '\n';
    }

    std::string expr(const Node& n, int indent) const
    {
        switch (n.kind) {
        case NodeKind::Literal:
        case NodeKind::VarRef: return n.text;
        case NodeKind::BinOp: {
            int p = binop_precedence(n.text);
            bool right_assoc = n.text == "==>";
            bool non_assoc = p == 4;
            const Node& l = n.children[0];
            const Node& r = n.children[1];
            int lp = precedence(l);
            int rp = precedence(r);
            bool lparen = lp < p || (lp == p && (right_assoc || non_assoc));
            bool rparen = rp < p || (rp == p && !right_assoc);
            return wrap(expr(l, indent), lparen) + " " + n.text + " " + wrap(expr(r, indent), rparen);
        }
        case NodeKind::UnOp: {
            const Node& operand = n.children[0];
            std::string op = n.text == "&mut" ? "&mut " : n.text;
            return op + wrap(expr(operand, indent), precedence(operand) < kPrecUnary);
        }
        case NodeKind::FieldAccess: {
            const Node& base = n.children[0];
            return wrap(expr(base, indent), precedence(base) < kPrecPostfix) + "." + n.text;
        }
        case NodeKind::Call: return n.text + "(" + list(n.children, indent) + ")";
        case NodeKind::BorrowGlobal:
            return std::string(n.flag ? "borrow_global_mut<" : "borrow_global<") + n.text + ">(" +
                   list(n.children, indent) + ")";
        case NodeKind::Exists: return "exists<" + n.text + ">(" + list(n.children, indent) + ")";
        case NodeKind::Global: return "global<" + n.text + ">(" + list(n.children, indent) + ")";
        case NodeKind::MoveTo:
            return std::string("move_to") + (n.text.empty() ? "" : "<" + n.text + ">") + "(" +
                   list(n.children, indent) + ")";
        case NodeKind::Pack: {
            if (n.children.empty())
                return n.text + " {}";
            std::string s = n.text + " { ";
            for (std::size_t i = 0; i < n.children.size(); ++i) {
                if (i)
                    s += ", ";
                s += expr(n.children[i], indent);
            }
            return s + " }";
        }
        case NodeKind::FieldInit: {
            const Node& v = n.children[0];
            if (v.is(NodeKind::VarRef) && v.text == n.text)
                return n.text;
            return n.text + ": " + expr(v, indent);
        }
        case NodeKind::VectorLit: {
            std::string s = "vector";
            if (n.annotation)
                s += "<" + print_type(*n.annotation) + ">";
            return s + "[" + list(n.children, indent) + "]";
        }
        case NodeKind::If: return if_expr(n, indent);
        case NodeKind::Block: return block(n, indent);
        default: return "/* " + std::string(ast::to_string(n.kind)) + " */";
        }
    }

    std::string block(const Node& b, int indent) const
    {
        if (b.children.empty())
            return "{}";
        Printer inner;
        for (std::size_t i = 0; i < b.children.size(); ++i) {
            bool is_tail = b.has_tail() && i + 1 == b.children.size();
            bool last_stmt = !b.has_tail() && i + 1 == b.children.size();
            if (is_tail)
                inner.line(indent + 1, expr(b.children[i], indent + 1));
            else
                inner.statement(b.children[i], indent + 1, last_stmt);
        }
        return "{\n" + inner.out + pad(indent) + "}";
    }

    void statement(const Node& s, int indent, bool last_in_block)
    {
        switch (s.kind) {
        case NodeKind::Let: {
            std::string t = "let " + s.text;
            if (s.annotation)
                t += ": " + print_type(*s.annotation);
            line(indent, t + " = " + expr(s.children[0], indent) + ";");
            return;
        }
        case NodeKind::Assign:
            line(indent, expr(s.children[0], indent) + " = " + expr(s.children[1], indent) + ";");
            return;
        case NodeKind::ExprStmt: {
            const Node& e = s.children[0];
            bool block_like = e.is(NodeKind::If) || e.is(NodeKind::Block);
            // A trailing if-else without ';' would reparse as the block tail.
            bool needs_semi = !block_like || (last_in_block && (e.is(NodeKind::Block) || e.children.size() == 3));
            line(indent, expr(e, indent) + (needs_semi ? ";" : ""));
            return;
        }
        case NodeKind::While: {
            std::string head = "while (" + expr(s.cond(), indent) + ") {";
            const Node& body = s.loop_body();
            line(indent, head);
            if (s.invariant_count() > 0) {
                line(indent + 1, "spec {");
                for (std::size_t i = 2; i < s.children.size(); ++i)
                    line(indent + 2, "invariant " + expr(s.children[i], indent + 2) + ";");
                line(indent + 1, "};");
            }
            for (std::size_t i = 0; i < body.children.size(); ++i) {
                bool is_tail = body.has_tail() && i + 1 == body.children.size();
                if (is_tail)
                    line(indent + 1, expr(body.children[i], indent + 1));
                else
                    statement(body.children[i], indent + 1, !body.has_tail() && i + 1 == body.children.size());
            }
            line(indent, "}");
            return;
        }
        case NodeKind::Return:
            line(indent, s.children.empty() ? "return;" : "return " + expr(s.children[0], indent) + ";");
            return;
        case NodeKind::Abort: line(indent, "abort " + expr(s.children[0], indent) + ";"); return;
        case NodeKind::Assert:
            line(indent, "assert!(" + expr(s.children[0], indent) + ", " + expr(s.children[1], indent) + ");");
            return;
        default: line(indent, expr(s, indent) + ";"); return;
        }
    }

    void function(const ast::FunctionDef& f, int indent)
    {
        std::string head;
        if (f.visibility == ast::Visibility::Public)
            head += "public ";
        for (const auto& a : f.attrs)
            head += a + " ";
        head += "fun " + f.name + "(";
        for (std::size_t i = 0; i < f.params.size(); ++i) {
            if (i)
                head += ", ";
            head += f.params[i].name + ": " + print_type(f.params[i].type);
        }
        head += ")";
        if (f.return_type)
            head += ": " + print_type(*f.return_type);
        if (!f.acquires.empty()) {
            head += " acquires ";
            for (std::size_t i = 0; i < f.acquires.size(); ++i)
                head += (i ? ", " : "") + f.acquires[i];
        }
        if (!f.body) {
            line(indent, head + ";");
            return;
        }
        line(indent, head + " " + block(*f.body, indent));
    }

    void spec_fun(const ast::SpecFun& f, int indent)
    {
        std::string head = "spec fun " + f.name + "(";
        for (std::size_t i = 0; i < f.params.size(); ++i) {
            if (i)
                head += ", ";
            head += f.params[i].name + ": " + print_type(f.params[i].type);
        }
        head += "): " + print_type(f.return_type);
        if (!f.body) {
            line(indent, head + ";");
            return;
        }
        line(indent, head + " {");
        line(indent + 1, expr(*f.body, indent + 1));
        line(indent, "}");
    }

    void pragmas(const std::vector<ast::Pragma>& ps, int indent)
    {
        for (const auto& p : ps)
            line(indent, "pragma " + p.name + (p.value.empty() ? "" : " = " + p.value) + ";");
    }

    void spec_block(const ast::SpecBlock& b, int indent)
    {
        for (const auto& f : b.helper_funs) {
            spec_fun(f, indent);
            out += '\n';
        }
        line(indent, "spec " + b.target_fn + " {");
        pragmas(b.pragmas, indent + 1);
        for (const auto& bind : b.bindings)
            line(indent + 1, print_binding(bind));
        std::vector<const ast::Clause*> sorted;
        for (const auto& c : b.clauses)
            sorted.push_back(&c);
        std::stable_sort(sorted.begin(), sorted.end(),
                         [](const ast::Clause* x, const ast::Clause* y) { return x->kind < y->kind; });
        for (const ast::Clause* c : sorted)
            line(indent + 1, print_clause(*c));
        line(indent, "}");
    }

    void module(const ast::SourceModule& m)
    {
        line(0, "module " + m.address + "::" + m.name + " {");
        bool first = true;
        auto section = [&] {
            if (!first)
                out += '\n';
            first = false;
        };
        if (!m.uses.empty()) {
            section();
            for (const auto& u : m.uses)
                line(1, "use " + u + ";");
        }
        for (const auto& s : m.structs) {
            section();
            structure(s, 1);
        }
        if (!m.constants.empty()) {
            section();
            for (const auto& c : m.constants)
                constant(c, 1);
        }
        if (!m.module_pragmas.empty()) {
            section();
            line(1, "spec module {");
            pragmas(m.module_pragmas, 2);
            line(1, "}");
        }
        for (const auto& f : m.functions) {
            section();
            function(f, 1);
            for (const auto& b : m.spec_blocks) {
                if (b.target_fn != f.name)
                    continue;
                out += '\n';
                spec_block(b, 1);
            }
        }
        line(0, "}");
    }

    void structure(const ast::StructDef& s, int indent)
    {
        std::string head = "struct " + s.name;
        if (!s.abilities.empty()) {
            head += " has ";
            for (std::size_t i = 0; i < s.abilities.size(); ++i)
                head += (i ? ", " : "") + s.abilities[i];
        }
        if (s.fields.empty()) {
            line(indent, head + " {}");
            return;
        }
        line(indent, head + " {");
        for (const auto& f : s.fields)
            line(indent + 1, f.name + ": " + print_type(f.type) + ",");
        line(indent, "}");
    }

    void constant(const ast::ConstDef& c, int indent)
    {
        line(indent, "const " + c.name + ": " + print_type(c.type) + " = " + expr(c.value, indent) + ";");
    }

  private:
    static std::string wrap(const std::string& s, bool paren) { return paren ? "(" + s + ")" : s; }

    std::string list(const std::vector<Node>& items, int indent) const
    {
        std::string s;
        for (std::size_t i = 0; i < items.size(); ++i) {
            if (i)
                s += ", ";
            s += expr(items[i], indent);
        }
        return s;
    }

    std::string branch(const Node& b, int indent) const { return expr(b, indent); }

    std::string if_expr(const Node& n, int indent) const
    {
        std::string s = "if (" + expr(n.children[0], indent) + ") " + branch(n.children[1], indent);
        if (n.children.size() == 3)
            s += " else " + branch(n.children[2], indent);
        return s;
    }
};

} // namespace

std::string print_type(const ast::Type& t) { return ast::to_string(t); }

std::string print_expr(const ast::Node& expr) { return Printer{}.expr(expr, 0); }

std::string print_clause(const ast::Clause& c)
{
    std::string s = ast::to_string(c.kind);
    if (c.abstract_flag)
        s += " [abstract]";
    return s + " " + print_expr(c.expr) + ";";
}

std::string print_binding(const ast::Binding& b)
{
    return std::string(b.post ? "let post " : "let ") + b.name + " = " + print_expr(b.expr) + ";";
}

std::string print_function(const ast::FunctionDef& fn, int indent)
{
    Printer p;
    p.function(fn, indent);
    return p.out;
}

std::string print_struct(const ast::StructDef& s, int indent)
{
    Printer p;
    p.structure(s, indent);
    return p.out;
}

std::string print_constant(const ast::ConstDef& c, int indent)
{
    Printer p;
    p.constant(c, indent);
    return p.out;
}

std::string print_spec_block(const ast::SpecBlock& block, int indent)
{
    Printer p;
    p.spec_block(block, indent);
    return p.out;
}

std::string pretty_print(const ast::SourceModule& module)
{
    Printer p;
    p.module(module);
    return p.out;
}

std::string pretty_print(const std::vector<ast::SourceModule>& modules)
{
    std::string out;
    for (std::size_t i = 0; i < modules.size(); ++i) {
        if (i)
            out += '\n';
        out += pretty_print(modules[i]);
    }
    return out;
}

} // namespace msgpipe::frontend
