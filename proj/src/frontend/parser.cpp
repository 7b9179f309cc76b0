// SPDX-License-Identifier: Apache-2.0

#include "msgpipe/frontend/parser.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "lexer.hpp"
#include "msgpipe/errors.hpp"

namespace msgpipe::frontend {

using ast::Node;
using ast::NodeKind;
using ast::Span;
using ast::Type;

namespace {

enum class Mode { Code, Spec };

void canonicalize_spec_order(ast::SourceModule& m);

const std::set<std::string, std::less<>> kClauseKeywords = {"requires", "modifies", "aborts_if", "ensures"};

// Keywords that name Move features deliberately left out of the subset.
const std::set<std::string, std::less<>> kUnsupportedCodeWords = {
    "loop", "break", "continue", "match", "move", "copy", "friend", "script", "enum", "mut"};

class Parser {
  public:
    explicit Parser(std::string_view src) : toks_(lex(src)) {}

    std::vector<ast::SourceModule> modules()
    {
        std::vector<ast::SourceModule> out;
        std::vector<SpecSection> sections;
        if (peek().kind == TokKind::End)
            throw SyntaxError(peek().span, "expected module");
        while (peek().kind != TokKind::End) {
            if (peek().ident("module")) {
                out.push_back(module());
            } else if (peek().ident("spec")) {
                sections.push_back(spec_section());
            } else {
                throw SyntaxError(peek().span, "expected module");
            }
        }
        if (out.empty())
            throw SyntaxError(toks_.front().span, "expected module");
        merge_spec_sections(out, sections);
        return out;
    }

    std::vector<SpecSection> spec_sections()
    {
        std::vector<SpecSection> out;
        while (peek().kind != TokKind::End)
            out.push_back(spec_section());
        return out;
    }

    Node expression_fragment(Mode mode)
    {
        mode_ = mode;
        Node e = expr();
        expect_end();
        return e;
    }

    SpecMembers members_fragment()
    {
        mode_ = Mode::Spec;
        SpecMembers m;
        std::vector<ast::SpecFun> pending;
        while (peek().kind != TokKind::End) {
            if (peek().ident("spec") && peek(1).ident("fun")) {
                next();
                next();
                pending.push_back(spec_fun());
            } else if (peek().ident("spec") && peek(1).kind == TokKind::Ident) {
                next();
                ast::SpecBlock b = spec_block_body(expect_ident());
                b.helper_funs = std::move(pending);
                pending.clear();
                m.blocks.push_back(std::move(b));
            } else if (peek().ident("fun")) {
                next();
                pending.push_back(spec_fun());
            } else {
                spec_member(m.pragmas, m.bindings, m.clauses);
            }
        }
        for (auto& f : pending)
            m.helper_funs.push_back(std::move(f));
        std::stable_sort(m.clauses.begin(), m.clauses.end(),
                         [](const ast::Clause& a, const ast::Clause& b) { return a.kind < b.kind; });
        return m;
    }

    ast::FunctionDef function_fragment()
    {
        mode_ = Mode::Code;
        ast::FunctionDef f = function();
        expect_end();
        return f;
    }

  private:
    std::vector<Token> toks_;
    std::size_t pos_ = 0;
    Mode mode_ = Mode::Code;

    const Token& peek(std::size_t k = 0) const { return toks_[std::min(pos_ + k, toks_.size() - 1)]; }
    const Token& next()
    {
        const Token& t = toks_[pos_];
        if (pos_ + 1 < toks_.size())
            ++pos_;
        return t;
    }
    bool accept_punct(std::string_view p)
    {
        if (peek().punct(p)) {
            next();
            return true;
        }
        return false;
    }
    bool accept_ident(std::string_view w)
    {
        if (peek().ident(w)) {
            next();
            return true;
        }
        return false;
    }
    [[noreturn]] void fail(const std::string& what) const
    {
        const Token& t = peek();
        std::string found = t.kind == TokKind::End ? "end of input" : "'" + t.text + "'";
        throw SyntaxError(t.span, "expected " + what + ", found " + found);
    }
    void expect_punct(std::string_view p)
    {
        if (!accept_punct(p))
            fail("'" + std::string(p) + "'");
    }
    void expect_keyword(std::string_view w)
    {
        if (!accept_ident(w))
            fail("'" + std::string(w) + "'");
    }
    std::string expect_ident()
    {
        if (peek().kind != TokKind::Ident)
            fail("identifier");
        return next().text;
    }
    void expect_end()
    {
        if (peek().kind != TokKind::End)
            fail("end of input");
    }

    Node node(NodeKind kind, Span span, std::string text = {}, std::vector<Node> children = {})
    {
        Node n = ast::make_node(kind, std::move(text), std::move(children));
        n.span = span;
        return n;
    }

    // ---- items -------------------------------------------------------

    std::string address_token()
    {
        if (peek().kind == TokKind::Number || peek().kind == TokKind::Ident)
            return next().text;
        fail("module address");
    }

    ast::SourceModule module()
    {
        expect_keyword("module");
        ast::SourceModule m;
        m.address = address_token();
        expect_punct("::");
        m.name = expect_ident();
        expect_punct("{");
        std::vector<ast::SpecFun> pending_funs;
        std::vector<Span> spec_spans;
        while (!accept_punct("}")) {
            const Token& t = peek();
            if (t.kind == TokKind::End)
                fail("'}'");
            if (t.ident("use")) {
                next();
                std::string path = expect_path_text();
                if (peek().punct("{"))
                    throw UnsupportedConstruct(peek().span, "grouped use declaration");
                expect_punct(";");
                m.uses.push_back(std::move(path));
            } else if (t.ident("struct")) {
                m.structs.push_back(struct_def());
            } else if (t.ident("const")) {
                m.constants.push_back(const_def());
            } else if (t.ident("spec")) {
                Span span = t.span;
                next();
                mode_ = Mode::Spec;
                if (accept_ident("fun")) {
                    pending_funs.push_back(spec_fun());
                } else if (accept_ident("module")) {
                    module_spec(m.module_pragmas);
                } else if (peek().ident("schema")) {
                    throw UnsupportedConstruct(peek().span, "spec schema");
                } else {
                    ast::SpecBlock b = spec_block_body(expect_ident());
                    b.helper_funs = std::move(pending_funs);
                    pending_funs.clear();
                    m.spec_blocks.push_back(std::move(b));
                    spec_spans.push_back(span);
                }
                mode_ = Mode::Code;
            } else if (t.ident("friend")) {
                throw UnsupportedConstruct(t.span, "friend declaration");
            } else {
                m.functions.push_back(function());
            }
        }
        if (!pending_funs.empty()) {
            if (m.spec_blocks.empty())
                throw SyntaxError(peek().span, "spec fun '" + pending_funs.front().name + "' without a spec block");
            auto& last = m.spec_blocks.back().helper_funs;
            for (auto& f : pending_funs)
                last.push_back(std::move(f));
        }
        validate_module(m, spec_spans);
        canonicalize_spec_order(m);
        ast::renumber(m);
        return m;
    }

    void validate_module(const ast::SourceModule& m, const std::vector<Span>& spec_spans)
    {
        std::set<std::string> seen;
        for (const auto& f : m.functions)
            if (!seen.insert(f.name).second)
                throw SyntaxError(f.span, "duplicate function '" + f.name + "'");
        seen.clear();
        for (const auto& s : m.structs)
            if (!seen.insert(s.name).second)
                throw SyntaxError(s.span, "duplicate struct '" + s.name + "'");
        for (std::size_t i = 0; i < m.spec_blocks.size(); ++i)
            if (!m.find_function(m.spec_blocks[i].target_fn))
                throw SyntaxError(spec_spans[i],
                                  "spec block for unknown function '" + m.spec_blocks[i].target_fn + "'");
    }

    ast::StructDef struct_def()
    {
        ast::StructDef s;
        s.span = peek().span;
        expect_keyword("struct");
        s.name = expect_ident();
        if (peek().punct("<"))
            throw UnsupportedConstruct(peek().span, "generic struct");
        if (accept_ident("has")) {
            do {
                std::string ability = expect_ident();
                if (ability != "key" && ability != "store" && ability != "copy" && ability != "drop")
                    throw SyntaxError(peek().span, "unknown ability '" + ability + "'");
                s.abilities.push_back(ability);
            } while (accept_punct(","));
        }
        expect_punct("{");
        while (!accept_punct("}")) {
            ast::Field f;
            f.name = expect_ident();
            expect_punct(":");
            f.type = type();
            s.fields.push_back(std::move(f));
            if (!accept_punct(",")) {
                expect_punct("}");
                break;
            }
        }
        return s;
    }

    ast::ConstDef const_def()
    {
        ast::ConstDef c;
        c.span = peek().span;
        expect_keyword("const");
        c.name = expect_ident();
        expect_punct(":");
        c.type = type();
        expect_punct("=");
        c.value = expr();
        expect_punct(";");
        return c;
    }

    ast::FunctionDef function()
    {
        ast::FunctionDef f;
        f.span = peek().span;
        while (true) {
            if (accept_ident("public")) {
                if (peek().punct("("))
                    throw UnsupportedConstruct(peek().span, "restricted visibility");
                f.visibility = ast::Visibility::Public;
            } else if (accept_ident("native")) {
                f.attrs.push_back("native");
            } else if (accept_ident("entry")) {
                f.attrs.push_back("entry");
            } else if (peek().ident("inline")) {
                throw UnsupportedConstruct(peek().span, "inline function");
            } else {
                break;
            }
        }
        std::sort(f.attrs.begin(), f.attrs.end());
        expect_keyword("fun");
        f.name = expect_ident();
        if (peek().punct("<"))
            throw UnsupportedConstruct(peek().span, "type parameters");
        f.params = params();
        std::set<std::string> names;
        for (const auto& p : f.params)
            if (!names.insert(p.name).second)
                throw SyntaxError(f.span, "duplicate parameter '" + p.name + "'");
        if (accept_punct(":"))
            f.return_type = type();
        if (accept_ident("acquires")) {
            do {
                f.acquires.push_back(expect_path_text());
            } while (accept_punct(","));
        }
        if (f.is_native()) {
            expect_punct(";");
        } else {
            mode_ = Mode::Code;
            f.body = block();
        }
        return f;
    }

    std::vector<ast::Param> params()
    {
        std::vector<ast::Param> out;
        expect_punct("(");
        while (!accept_punct(")")) {
            ast::Param p;
            p.name = expect_ident();
            expect_punct(":");
            p.type = type();
            out.push_back(std::move(p));
            if (!accept_punct(",")) {
                expect_punct(")");
                break;
            }
        }
        return out;
    }

    std::string expect_path_text()
    {
        std::string path = peek().kind == TokKind::Number && peek(1).punct("::") ? next().text : expect_ident();
        while (peek().punct("::")) {
            next();
            path += "::" + expect_ident();
        }
        return path;
    }

    Type type()
    {
        const Token& t = peek();
        if (accept_punct("&")) {
            bool mut = accept_ident("mut");
            return Type::ref(type(), mut);
        }
        if (t.punct("("))
            throw UnsupportedConstruct(t.span, "tuple type");
        if (t.kind == TokKind::Number && peek(1).punct("::")) {
            std::string head = next().text;
            next();
            return Type::structure(head + "::" + expect_path_text());
        }
        if (t.kind != TokKind::Ident)
            fail("type");
        std::string name = next().text;
        if (name == "u8")
            return Type::prim(Type::Kind::U8);
        if (name == "u64")
            return Type::prim(Type::Kind::U64);
        if (name == "u128")
            return Type::prim(Type::Kind::U128);
        if (name == "bool")
            return Type::prim(Type::Kind::Bool);
        if (name == "address")
            return Type::prim(Type::Kind::Address);
        if (name == "signer")
            return Type::prim(Type::Kind::Signer);
        if (name == "num" && mode_ == Mode::Spec)
            return Type::prim(Type::Kind::Num);
        if (name == "u16" || name == "u32" || name == "u256")
            throw UnsupportedConstruct(t.span, "integer type " + name);
        if (name == "vector") {
            expect_punct("<");
            Type elem = type();
            expect_punct(">");
            return Type::vector_of(std::move(elem));
        }
        while (accept_punct("::"))
            name += "::" + expect_ident();
        if (peek().punct("<"))
            throw UnsupportedConstruct(peek().span, "generic type");
        return Type::structure(name);
    }

    // ---- spec items ---------------------------------------------------

    SpecSection spec_section()
    {
        expect_keyword("spec");
        mode_ = Mode::Spec;
        SpecSection s;
        s.address = address_token();
        expect_punct("::");
        s.module = expect_ident();
        expect_punct("{");
        std::vector<ast::SpecFun> pending;
        while (!accept_punct("}")) {
            if (peek().kind == TokKind::End)
                fail("'}'");
            expect_keyword("spec");
            if (accept_ident("fun")) {
                pending.push_back(spec_fun());
            } else if (accept_ident("module")) {
                module_spec(s.module_pragmas);
            } else {
                ast::SpecBlock b = spec_block_body(expect_ident());
                b.helper_funs = std::move(pending);
                pending.clear();
                s.blocks.push_back(std::move(b));
            }
        }
        if (!pending.empty()) {
            if (s.blocks.empty())
                throw SyntaxError(peek().span, "spec fun without a spec block");
            for (auto& f : pending)
                s.blocks.back().helper_funs.push_back(std::move(f));
        }
        mode_ = Mode::Code;
        return s;
    }

    void module_spec(std::vector<ast::Pragma>& pragmas)
    {
        expect_punct("{");
        while (!accept_punct("}")) {
            if (!peek().ident("pragma"))
                throw UnsupportedConstruct(peek().span, "module-level spec member '" + peek().text + "'");
            pragma(pragmas);
        }
    }

    void pragma(std::vector<ast::Pragma>& out)
    {
        expect_keyword("pragma");
        do {
            ast::Pragma p;
            p.name = expect_ident();
            if (accept_punct("=")) {
                const Token& v = peek();
                if (v.kind != TokKind::Ident && v.kind != TokKind::Number)
                    fail("pragma value");
                p.value = next().text;
            }
            out.push_back(std::move(p));
        } while (accept_punct(","));
        expect_punct(";");
    }

    ast::SpecFun spec_fun()
    {
        ast::SpecFun f;
        f.name = expect_ident();
        if (peek().punct("<"))
            throw UnsupportedConstruct(peek().span, "type parameters");
        Mode saved = mode_;
        mode_ = Mode::Spec;
        f.params = params();
        expect_punct(":");
        f.return_type = type();
        if (accept_punct(";")) {
            mode_ = saved;
            return f;
        }
        expect_punct("{");
        f.body = expr();
        expect_punct("}");
        mode_ = saved;
        return f;
    }

    ast::SpecBlock spec_block_body(std::string target)
    {
        ast::SpecBlock b;
        b.target_fn = std::move(target);
        Mode saved = mode_;
        mode_ = Mode::Spec;
        expect_punct("{");
        while (!accept_punct("}")) {
            if (peek().kind == TokKind::End)
                fail("'}'");
            spec_member(b.pragmas, b.bindings, b.clauses);
        }
        std::set<std::string> names;
        for (const auto& bind : b.bindings)
            if (!names.insert(bind.name).second)
                throw SyntaxError(bind.expr.span, "duplicate binding '" + bind.name + "'");
        std::stable_sort(b.clauses.begin(), b.clauses.end(),
                         [](const ast::Clause& x, const ast::Clause& y) { return x.kind < y.kind; });
        mode_ = saved;
        return b;
    }

    void spec_member(std::vector<ast::Pragma>& pragmas, std::vector<ast::Binding>& bindings,
                     std::vector<ast::Clause>& clauses)
    {
        const Token& t = peek();
        if (t.ident("pragma")) {
            pragma(pragmas);
            return;
        }
        if (t.ident("let")) {
            next();
            ast::Binding b;
            b.post = accept_ident("post");
            b.name = expect_ident();
            expect_punct("=");
            b.expr = expr();
            expect_punct(";");
            bindings.push_back(std::move(b));
            return;
        }
        if (t.kind == TokKind::Ident && kClauseKeywords.count(t.text)) {
            ast::Clause c = clause();
            clauses.push_back(std::move(c));
            return;
        }
        if (t.kind == TokKind::Ident)
            throw UnsupportedConstruct(t.span, "spec member '" + t.text + "'");
        fail("spec member");
    }

    ast::Clause clause()
    {
        ast::Clause c;
        std::string kw = next().text;
        if (kw == "requires")
            c.kind = ast::ClauseKind::Requires;
        else if (kw == "modifies")
            c.kind = ast::ClauseKind::Modifies;
        else if (kw == "aborts_if")
            c.kind = ast::ClauseKind::AbortsIf;
        else
            c.kind = ast::ClauseKind::Ensures;
        if (accept_punct("[")) {
            const Token& prop = peek();
            if (!prop.ident("abstract"))
                throw UnsupportedConstruct(prop.span, "clause property '" + prop.text + "'");
            next();
            expect_punct("]");
            c.abstract_flag = true;
        }
        c.expr = expr();
        if (peek().ident("with"))
            throw UnsupportedConstruct(peek().span, "aborts_if with abort code");
        expect_punct(";");
        return c;
    }

    // ---- statements ---------------------------------------------------

    Node block()
    {
        Span span = peek().span;
        expect_punct("{");
        Node b = node(NodeKind::Block, span);
        statements_until_close(b);
        return b;
    }

    void statements_until_close(Node& b)
    {
        while (!accept_punct("}")) {
            const Token& t = peek();
            if (t.kind == TokKind::End)
                fail("'}'");
            if (t.ident("spec"))
                throw UnsupportedConstruct(t.span, "inline spec block outside a loop header");
            Node stmt = statement();
            if (stmt.kind == NodeKind::Block) { // tail marker
                b.children.push_back(std::move(stmt.children.front()));
                b.flag = true;
                expect_punct("}");
                return;
            }
            b.children.push_back(std::move(stmt));
        }
    }

    // Returns a Block wrapper around the expression when it is the block tail.
    Node statement()
    {
        const Token& t = peek();
        Span span = t.span;
        if (t.kind == TokKind::Ident && kUnsupportedCodeWords.count(t.text))
            throw UnsupportedConstruct(span, t.text);
        if (t.ident("let")) {
            next();
            if (peek().punct("("))
                throw UnsupportedConstruct(peek().span, "tuple destructuring");
            std::string name = expect_ident();
            if (peek().punct("{"))
                throw UnsupportedConstruct(peek().span, "struct destructuring");
            Node let = node(NodeKind::Let, span, name);
            if (accept_punct(":"))
                let.annotation = type();
            if (peek().punct(";"))
                throw UnsupportedConstruct(peek().span, "uninitialized let");
            expect_punct("=");
            let.children.push_back(expr());
            expect_punct(";");
            return let;
        }
        if (t.ident("return")) {
            next();
            Node ret = node(NodeKind::Return, span);
            if (!peek().punct(";") && !peek().punct("}"))
                ret.children.push_back(expr());
            accept_punct(";");
            return ret;
        }
        if (t.ident("abort")) {
            next();
            Node ab = node(NodeKind::Abort, span, {}, {expr()});
            if (!peek().punct("}"))
                expect_punct(";");
            return ab;
        }
        if (t.ident("assert") && peek(1).punct("!")) {
            next();
            next();
            expect_punct("(");
            Node cond = expr();
            expect_punct(",");
            Node code = expr();
            expect_punct(")");
            expect_punct(";");
            return node(NodeKind::Assert, span, {}, {std::move(cond), std::move(code)});
        }
        if (t.ident("while")) {
            next();
            expect_punct("(");
            Node cond = expr();
            expect_punct(")");
            Span body_span = peek().span;
            expect_punct("{");
            std::vector<Node> invariants;
            while (peek().ident("spec")) {
                next();
                loop_spec(invariants);
                accept_punct(";");
            }
            Node body = node(NodeKind::Block, body_span);
            statements_until_close(body);
            accept_punct(";");
            Node w = node(NodeKind::While, span, {}, {std::move(cond), std::move(body)});
            for (Node& inv : invariants)
                w.children.push_back(std::move(inv));
            return w;
        }

        if (t.ident("if") || t.punct("{")) {
            // Statement-position if/block: never continues into a binary expression.
            Node e = t.ident("if") ? if_expr() : block();
            accept_punct(";");
            bool statement_if = e.is(NodeKind::If) && e.children.size() == 2;
            if (peek().punct("}") && !statement_if && toks_[pos_ - 1].text != ";")
                return node(NodeKind::Block, span, {}, {std::move(e)});
            return node(NodeKind::ExprStmt, span, {}, {std::move(e)});
        }

        Node e = expr();
        if (accept_punct("=")) {
            if (!e.is(NodeKind::VarRef) && !e.is(NodeKind::FieldAccess) &&
                !(e.is(NodeKind::UnOp) && e.text == "*"))
                throw SyntaxError(e.span, "invalid assignment target");
            Node rhs = expr();
            expect_punct(";");
            return node(NodeKind::Assign, span, {}, {std::move(e), std::move(rhs)});
        }
        if (accept_punct(";"))
            return node(NodeKind::ExprStmt, span, {}, {std::move(e)});
        if (peek().punct("}"))
            return node(NodeKind::Block, span, {}, {std::move(e)});
        fail("';'");
    }

    void loop_spec(std::vector<Node>& invariants)
    {
        Mode saved = mode_;
        mode_ = Mode::Spec;
        expect_punct("{");
        while (!accept_punct("}")) {
            const Token& t = peek();
            if (!t.ident("invariant"))
                throw UnsupportedConstruct(t.span, "loop spec member '" + t.text + "'");
            next();
            invariants.push_back(expr());
            expect_punct(";");
        }
        mode_ = saved;
    }

    // ---- expressions --------------------------------------------------

    static int precedence(const Token& t, Mode mode)
    {
        if (t.kind != TokKind::Punct)
            return -1;
        const std::string& s = t.text;
        if (s == "==>")
            return mode == Mode::Spec ? 1 : 0;
        if (s == "||")
            return 2;
        if (s == "&&")
            return 3;
        if (s == "==" || s == "!=" || s == "<" || s == ">" || s == "<=" || s == ">=")
            return 4;
        if (s == "+" || s == "-")
            return 5;
        if (s == "*" || s == "/" || s == "%")
            return 6;
        return -1;
    }

    Node expr() { return binary(1); }

    Node binary(int min_prec)
    {
        Node lhs = unary();
        while (true) {
            const Token& op = peek();
            if (op.punct("==>") && mode_ == Mode::Code)
                throw UnsupportedConstruct(op.span, "implication outside specifications");
            int prec = precedence(op, mode_);
            if (prec < min_prec || prec <= 0)
                break;
            Span span = op.span;
            std::string text = next().text;
            // ==> is right-associative, everything else left-associative
            Node rhs = binary(text == "==>" ? prec : prec + 1);
            lhs = node(NodeKind::BinOp, span, text, {std::move(lhs), std::move(rhs)});
        }
        return lhs;
    }

    Node unary()
    {
        const Token& t = peek();
        Span span = t.span;
        if (t.punct("!")) {
            next();
            return node(NodeKind::UnOp, span, "!", {unary()});
        }
        if (t.punct("-"))
            throw UnsupportedConstruct(span, "unary minus");
        if (mode_ == Mode::Code && t.punct("*")) {
            next();
            return node(NodeKind::UnOp, span, "*", {unary()});
        }
        if (mode_ == Mode::Code && t.punct("&")) {
            next();
            bool mut = accept_ident("mut");
            return node(NodeKind::UnOp, span, mut ? "&mut" : "&", {unary()});
        }
        return postfix(primary());
    }

    Node postfix(Node base)
    {
        while (true) {
            if (peek().punct(".")) {
                Span span = next().span;
                std::string field = expect_ident();
                if (peek().punct("("))
                    throw UnsupportedConstruct(peek().span, "method call");
                base = node(NodeKind::FieldAccess, span, field, {std::move(base)});
            } else if (peek().punct("[")) {
                throw UnsupportedConstruct(peek().span, "index expression");
            } else if (peek().ident("as")) {
                throw UnsupportedConstruct(peek().span, "cast");
            } else {
                return base;
            }
        }
    }

    std::vector<Node> call_args()
    {
        std::vector<Node> args;
        expect_punct("(");
        while (!accept_punct(")")) {
            args.push_back(expr());
            if (!accept_punct(",")) {
                expect_punct(")");
                break;
            }
        }
        return args;
    }

    std::string generic_struct()
    {
        expect_punct("<");
        std::string name;
        if (peek().kind == TokKind::Number) {
            name = next().text;
            expect_punct("::");
            name += "::" + expect_path_text();
        } else {
            name = expect_path_text();
        }
        if (peek().punct("<"))
            throw UnsupportedConstruct(peek().span, "generic type");
        expect_punct(">");
        return name;
    }

    bool pack_ahead() const
    {
        if (!peek().punct("{"))
            return false;
        const Token& a = peek(1);
        if (a.punct("}"))
            return true;
        if (a.kind != TokKind::Ident)
            return false;
        const Token& b = peek(2);
        return b.punct(":") || b.punct(",") || b.punct("}");
    }

    Node primary()
    {
        const Token& t = peek();
        Span span = t.span;
        switch (t.kind) {
        case TokKind::Number:
            if (peek(1).punct("::"))
                return path_expr(span);
            return node(NodeKind::Literal, span, next().text);
        case TokKind::Address:
            return node(NodeKind::Literal, span, next().text);
        case TokKind::End:
            fail("expression");
        case TokKind::Punct:
            if (t.punct("(")) {
                next();
                if (peek().punct(")"))
                    throw UnsupportedConstruct(span, "unit literal");
                Node e = expr();
                if (peek().punct(","))
                    throw UnsupportedConstruct(peek().span, "tuple");
                expect_punct(")");
                return e;
            }
            if (t.punct("{")) {
                if (mode_ == Mode::Spec)
                    throw UnsupportedConstruct(span, "block expression in specification");
                return block();
            }
            fail("expression");
        case TokKind::Ident: break;
        }

        const std::string& w = t.text;
        if (w == "true" || w == "false")
            return node(NodeKind::Literal, span, next().text);
        if (mode_ == Mode::Code && kUnsupportedCodeWords.count(w))
            throw UnsupportedConstruct(span, w);
        if (w == "if") {
            if (mode_ == Mode::Spec)
                throw UnsupportedConstruct(span, "if-expression in specification");
            return if_expr();
        }
        if (w == "forall" || w == "choose" || w == "update_field" || w == "TRACE")
            throw UnsupportedConstruct(span, "specification builtin '" + w + "'");
        if (w == "borrow_global" || w == "borrow_global_mut") {
            if (mode_ == Mode::Spec)
                throw UnsupportedConstruct(span, w + " in specification");
            next();
            Node n = node(NodeKind::BorrowGlobal, span, generic_struct());
            n.flag = w == "borrow_global_mut";
            n.children = single_arg();
            return n;
        }
        if (w == "exists") {
            if (peek(1).kind == TokKind::Ident)
                throw UnsupportedConstruct(span, "existential quantifier");
            next();
            Node n = node(NodeKind::Exists, span, generic_struct());
            n.children = single_arg();
            return n;
        }
        if (w == "global" && mode_ == Mode::Spec && peek(1).punct("<")) {
            next();
            Node n = node(NodeKind::Global, span, generic_struct());
            n.children = single_arg();
            return n;
        }
        if (w == "move_to" || w == "move_from") {
            if (w == "move_from")
                throw UnsupportedConstruct(span, "move_from");
            if (mode_ == Mode::Spec)
                throw UnsupportedConstruct(span, "move_to in specification");
            next();
            std::string name;
            if (peek().punct("<"))
                name = generic_struct();
            Node n = node(NodeKind::MoveTo, span, name, call_args());
            if (n.children.size() != 2)
                throw SyntaxError(span, "move_to expects 2 arguments");
            return n;
        }
        if (w == "vector" && (peek(1).punct("[") || peek(1).punct("<"))) {
            next();
            Node n = node(NodeKind::VectorLit, span);
            if (accept_punct("<")) {
                n.annotation = type();
                expect_punct(">");
            }
            expect_punct("[");
            while (!accept_punct("]")) {
                n.children.push_back(expr());
                if (!accept_punct(",")) {
                    expect_punct("]");
                    break;
                }
            }
            return n;
        }

        return path_expr(span);
    }

    Node path_expr(Span span)
    {
        std::string path = next().text;
        while (peek().punct("::")) {
            next();
            path += "::" + expect_ident();
        }
        if (peek().punct("<") && peek(1).kind == TokKind::Ident && peek(2).punct(">") && peek(3).punct("("))
            throw UnsupportedConstruct(peek().span, "type arguments");
        if (peek().punct("("))
            return node(NodeKind::Call, span, path, call_args());
        if (peek().punct("!"))
            throw UnsupportedConstruct(span, "macro '" + path + "!'");
        bool upper = std::isupper(static_cast<unsigned char>(ast::split_path(path).back().front()));
        if (upper && pack_ahead() && mode_ == Mode::Code) {
            next();
            Node pack = node(NodeKind::Pack, span, path);
            while (!accept_punct("}")) {
                Span fspan = peek().span;
                std::string field = expect_ident();
                Node value = accept_punct(":") ? expr() : node(NodeKind::VarRef, fspan, field);
                pack.children.push_back(node(NodeKind::FieldInit, fspan, field, {std::move(value)}));
                if (!accept_punct(",")) {
                    expect_punct("}");
                    break;
                }
            }
            return pack;
        }
        if (path.find("::") != std::string::npos)
            throw UnsupportedConstruct(span, "qualified name '" + path + "'");
        return node(NodeKind::VarRef, span, path);
    }

    std::vector<Node> single_arg()
    {
        std::vector<Node> args = call_args();
        if (args.size() != 1)
            throw SyntaxError(peek().span, "expected exactly one argument");
        return args;
    }

    Node if_expr()
    {
        Span span = next().span;
        expect_punct("(");
        Node cond = expr();
        expect_punct(")");
        Node n = node(NodeKind::If, span, {}, {std::move(cond)});
        n.children.push_back(branch());
        if (accept_ident("else")) {
            if (peek().ident("if"))
                n.children.push_back(if_expr());
            else
                n.children.push_back(branch());
        }
        return n;
    }

    // `if (c) abort e` is sugar for a block holding the abort.
    Node branch()
    {
        if (peek().punct("{"))
            return block();
        if (peek().ident("abort") || peek().ident("return")) {
            Span span = peek().span;
            bool is_abort = next().text == "abort";
            Node stmt = node(is_abort ? NodeKind::Abort : NodeKind::Return, span);
            if (is_abort || (!peek().punct(";") && !peek().punct("}")))
                stmt.children.push_back(expr());
            Node b = node(NodeKind::Block, span);
            b.children.push_back(std::move(stmt));
            return b;
        }
        return expr();
    }
};

void canonicalize_spec_order(ast::SourceModule& m)
{
    std::stable_sort(m.spec_blocks.begin(), m.spec_blocks.end(),
                     [&](const ast::SpecBlock& a, const ast::SpecBlock& b) {
                         auto index = [&](const std::string& n) {
                             for (std::size_t i = 0; i < m.functions.size(); ++i)
                                 if (m.functions[i].name == n)
                                     return i;
                             return m.functions.size();
                         };
                         return index(a.target_fn) < index(b.target_fn);
                     });
}

} // namespace

std::vector<ast::SourceModule> parse_modules(std::string_view source) { return Parser(source).modules(); }

ast::SourceModule parse(std::string_view source)
{
    auto modules = parse_modules(source);
    if (modules.size() != 1)
        throw SyntaxError({1, 1}, "expected exactly one module, found " + std::to_string(modules.size()));
    return std::move(modules.front());
}

std::vector<SpecSection> parse_spec_file(std::string_view source) { return Parser(source).spec_sections(); }

void merge_spec_sections(std::vector<ast::SourceModule>& workspace, const std::vector<SpecSection>& sections)
{
    for (const SpecSection& s : sections) {
        auto it = std::find_if(workspace.begin(), workspace.end(), [&](const ast::SourceModule& m) {
            return m.name == s.module && m.address == s.address;
        });
        if (it == workspace.end())
            throw TargetNotFound(s.address + "::" + s.module);
        for (const ast::SpecBlock& b : s.blocks) {
            if (!it->find_function(b.target_fn))
                throw TargetNotFound(s.address + "::" + s.module + "::" + b.target_fn);
            it->spec_blocks.push_back(b);
        }
        for (const ast::Pragma& p : s.module_pragmas)
            it->module_pragmas.push_back(p);
        canonicalize_spec_order(*it);
        ast::renumber(*it);
    }
}

ast::Node parse_expression(std::string_view text)
{
    Node n = Parser(text).expression_fragment(Mode::Code);
    ast::NodeId next = 1;
    ast::renumber(n, next);
    return n;
}

ast::Node parse_spec_expression(std::string_view text)
{
    Node n = Parser(text).expression_fragment(Mode::Spec);
    ast::NodeId next = 1;
    ast::renumber(n, next);
    return n;
}

SpecMembers parse_spec_members(std::string_view text) { return Parser(text).members_fragment(); }

ast::FunctionDef parse_function(std::string_view text)
{
    ast::FunctionDef f = Parser(text).function_fragment();
    if (f.body) {
        ast::NodeId next = 1;
        ast::renumber(*f.body, next);
    }
    return f;
}

} // namespace msgpipe::frontend
