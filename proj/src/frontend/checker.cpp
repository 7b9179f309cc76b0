// SPDX-License-Identifier: Apache-2.0

#include "msgpipe/frontend/checker.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <string>

namespace msgpipe::frontend {

using ast::Node;
using ast::NodeKind;
using ast::Type;
using Kind = ast::Type::Kind;

namespace {

Type any() { return Type::prim(Kind::Any); }
Type never()
{
    Type t = any();
    t.name = "!";
    return t;
}
bool is_never(const Type& t) { return t.kind == Kind::Any && t.name == "!"; }
Type boolean() { return Type::prim(Kind::Bool); }
Type num() { return Type::prim(Kind::Num); }

std::string last_segment(const std::string& path)
{
    auto pos = path.rfind("::");
    return pos == std::string::npos ? path : path.substr(pos + 2);
}

class Checker {
  public:
    Checker(const ast::SourceModule& m, std::span<const ast::SourceModule> ws) : module_(m), workspace_(ws) {}

    std::vector<Diagnostic> diags;
    TypeTable types;

    void check_module()
    {
        for (const auto& s : module_.structs) {
            std::set<std::string> names;
            for (const auto& f : s.fields) {
                if (!names.insert(f.name).second)
                    report("DuplicateName", "duplicate field '" + f.name + "' in struct " + s.name, s.span);
                check_type(f.type, s.span);
            }
        }
        for (const auto& c : module_.constants) {
            fn_ = nullptr;
            Type t = expr(c.value);
            if (!compatible(t, qualify(c.type, module_)))
                report("TypeMismatch", "constant " + c.name + " declared " + ast::to_string(c.type) +
                                           " but initialized with " + ast::to_string(t),
                       c.value.span.line ? c.value.span : c.span);
        }
        for (const auto& f : module_.functions)
            check_function(f);
    }

    void check_function(const ast::FunctionDef& f)
    {
        fn_ = &f;
        for (const auto& p : f.params)
            check_type(p.type, f.span);
        if (f.return_type)
            check_type(*f.return_type, f.span);
        for (const auto& a : f.acquires)
            if (!resolve_struct(a))
                report("UnresolvedName", "acquires unknown struct '" + a + "'", f.span);
        if (f.body) {
            scopes_.clear();
            push_scope();
            for (const auto& p : f.params)
                bind(p.name, qualify(p.type, module_));
            Type body = expr(*f.body);
            Type expected = f.return_type ? qualify(*f.return_type, module_) : Type::prim(Kind::Unit);
            if (!compatible(body, expected)) {
                const Node* at = f.body->has_tail() ? &f.body->children.back() : &*f.body;
                report("TypeMismatch",
                       "function " + f.name + " returns " + ast::to_string(expected) + " but body has type " +
                           ast::to_string(body),
                       span_of(*at));
            }
            pop_scope();
        }
        if (const ast::SpecBlock* spec = module_.find_spec(f.name))
            check_spec(*spec, f);
        fn_ = nullptr;
    }

  private:
    const ast::SourceModule& module_;
    std::span<const ast::SourceModule> workspace_;
    const ast::FunctionDef* fn_ = nullptr;
    std::vector<std::map<std::string, Type>> scopes_;
    bool spec_mode_ = false;
    std::map<std::string, const ast::SpecFun*> spec_funs_;

    // ---- reporting --------------------------------------------------------

    ast::Span span_of(const Node& n) const
    {
        if (n.span.line > 0)
            return n.span;
        return fn_ ? fn_->span : ast::Span{1, 1};
    }

    void report(std::string code, std::string message, ast::Span span)
    {
        if (span.line <= 0)
            span = fn_ && fn_->span.line > 0 ? fn_->span : ast::Span{1, 1};
        Diagnostic d;
        d.code = std::move(code);
        d.message = std::move(message);
        d.span = span;
        d.function = fn_ ? fn_->name : std::string{};
        diags.push_back(std::move(d));
    }

    // ---- resolution -------------------------------------------------------

    const ast::SourceModule* find_module(const std::string& path) const
    {
        auto parts = ast::split_path(path);
        const std::string& name = parts.back();
        std::string addr = parts.size() > 1 ? parts[parts.size() - 2] : std::string{};
        auto matches = [&](const ast::SourceModule& m) {
            return m.name == name && (addr.empty() || m.address == addr);
        };
        if (matches(module_))
            return &module_;
        for (const auto& m : workspace_)
            if (matches(m))
                return &m;
        return nullptr;
    }

    struct StructRef {
        const ast::SourceModule* module;
        const ast::StructDef* def;
    };

    std::optional<StructRef> resolve_struct(const std::string& path) const
    {
        auto parts = ast::split_path(path);
        if (parts.size() == 1) {
            if (const auto* s = module_.find_struct(path))
                return StructRef{&module_, s};
            return std::nullopt;
        }
        std::string mod_path = path.substr(0, path.rfind("::"));
        const ast::SourceModule* m = find_module(mod_path);
        if (!m)
            return std::nullopt;
        if (const auto* s = m->find_struct(parts.back()))
            return StructRef{m, s};
        return std::nullopt;
    }

    /// Qualifies struct names in `t` relative to the module it was written in.
    Type qualify(const Type& t, const ast::SourceModule& where) const
    {
        Type out = t;
        if (t.kind == Kind::Struct) {
            if (t.name.find("::") == std::string::npos) {
                out.name = where.name + "::" + t.name;
            } else {
                auto parts = ast::split_path(t.name);
                out.name = parts[parts.size() - 2] + "::" + parts.back();
            }
        }
        for (auto& i : out.inner)
            i = qualify(i, where);
        return out;
    }

    void check_type(const Type& t, ast::Span span)
    {
        if (t.kind == Kind::Struct && !resolve_struct(t.name))
            report("UnresolvedName", "unknown type '" + t.name + "'", span);
        for (const auto& i : t.inner)
            check_type(i, span);
    }

    const ast::StructDef* struct_of_type(const Type& t, const ast::SourceModule** owner) const
    {
        const Type& d = t.deref();
        if (d.kind != Kind::Struct)
            return nullptr;
        auto ref = resolve_struct(d.name);
        if (!ref)
            return nullptr;
        if (owner)
            *owner = ref->module;
        return ref->def;
    }

    // ---- types ------------------------------------------------------------

    bool compatible(const Type& a, const Type& b) const
    {
        const Type& x = a.deref();
        const Type& y = b.deref();
        if (x.kind == Kind::Any || y.kind == Kind::Any)
            return true;
        if (x.is_integer() && y.is_integer())
            return spec_mode_ || x.kind == Kind::Num || y.kind == Kind::Num || x.kind == y.kind;
        if (x.kind != y.kind)
            return false;
        if (x.kind == Kind::Vector)
            return compatible(x.inner.front(), y.inner.front());
        if (x.kind == Kind::Struct)
            return x.name == y.name;
        return true;
    }

    static Type join(const Type& a, const Type& b)
    {
        if (a.kind == Kind::Any)
            return b;
        if (b.kind == Kind::Any)
            return a;
        if (a.deref().kind == Kind::Num)
            return b;
        return a;
    }

    // ---- scopes -----------------------------------------------------------

    void push_scope() { scopes_.emplace_back(); }
    void pop_scope() { scopes_.pop_back(); }
    void bind(const std::string& name, Type t) { scopes_.back()[name] = std::move(t); }
    const Type* lookup(const std::string& name) const
    {
        for (auto it = scopes_.rbegin(); it != scopes_.rend(); ++it) {
            auto hit = it->find(name);
            if (hit != it->end())
                return &hit->second;
        }
        return nullptr;
    }

    // ---- spec blocks --------------------------------------------------

    void collect_spec_funs()
    {
        spec_funs_.clear();
        for (const auto& b : module_.spec_blocks)
            for (const auto& f : b.helper_funs)
                spec_funs_[f.name] = &f;
    }

    void check_spec(const ast::SpecBlock& spec, const ast::FunctionDef& f)
    {
        collect_spec_funs();
        spec_mode_ = true;
        for (const auto& h : spec.helper_funs) {
            if (!h.body)
                continue;
            scopes_.clear();
            push_scope();
            for (const auto& p : h.params)
                bind(p.name, qualify(p.type, module_));
            Type t = expr(*h.body);
            if (!compatible(t, qualify(h.return_type, module_)))
                report("TypeMismatch", "spec fun " + h.name + " body has type " + ast::to_string(t), span_of(*h.body));
            pop_scope();
        }
        scopes_.clear();
        push_scope();
        for (const auto& p : f.params)
            bind(p.name, qualify(p.type, module_));
        if (f.return_type)
            bind("result", qualify(*f.return_type, module_));
        for (const auto& b : spec.bindings)
            bind(b.name, expr(b.expr));
        for (const auto& c : spec.clauses) {
            if (c.kind == ast::ClauseKind::Modifies) {
                if (!c.expr.is(NodeKind::Global))
                    report("InvalidModifies", "modifies target must be global<S>(addr)", span_of(c.expr));
                expr(c.expr);
                continue;
            }
            Type t = expr(c.expr);
            if (!compatible(t, boolean()))
                report("TypeMismatch",
                       std::string(ast::to_string(c.kind)) + " clause must be bool, found " + ast::to_string(t),
                       span_of(c.expr));
        }
        pop_scope();
        spec_mode_ = false;
    }

    // ---- expressions ------------------------------------------------------

    Type record(const Node& n, Type t)
    {
        types[n.id] = t;
        return t;
    }

    Type expect_bool(const Node& n, const char* what)
    {
        Type t = expr(n);
        if (!compatible(t, boolean()))
            report("TypeMismatch", std::string(what) + " must be bool, found " + ast::to_string(t), span_of(n));
        return t;
    }

    Type expect_int(const Node& n, const char* what)
    {
        Type t = expr(n);
        if (t.deref().kind != Kind::Any && !t.deref().is_integer())
            report("TypeMismatch", std::string(what) + " must be an integer, found " + ast::to_string(t), span_of(n));
        return t;
    }

    Type expect_address(const Node& n)
    {
        Type t = expr(n);
        if (!compatible(t, Type::prim(Kind::Address)))
            report("TypeMismatch", "expected address, found " + ast::to_string(t), span_of(n));
        return t;
    }

    Type storage_target(const Node& n, bool storage_op)
    {
        auto ref = resolve_struct(n.text);
        if (!ref) {
            report("UnresolvedName", "unknown struct '" + n.text + "'", span_of(n));
            return any();
        }
        if (storage_op && !spec_mode_ && ref->module != &module_ &&
            !(ref->module->name == module_.name && ref->module->address == module_.address))
            report("ForeignResource",
                   "storage operation on " + ref->module->name + "::" + ref->def->name +
                       " outside its defining module",
                   span_of(n));
        if (storage_op &&
            std::find(ref->def->abilities.begin(), ref->def->abilities.end(), "key") == ref->def->abilities.end())
            report("MissingAbility", "struct " + ref->def->name + " lacks the key ability", span_of(n));
        return Type::structure(ref->module->name + "::" + ref->def->name);
    }

    Type literal(const Node& n)
    {
        const std::string& s = n.text;
        if (s == "true" || s == "false")
            return boolean();
        if (!s.empty() && s.front() == '@')
            return Type::prim(Kind::Address);
        auto ends_with = [&](std::string_view suf) {
            return s.size() > suf.size() && s.compare(s.size() - suf.size(), suf.size(), suf) == 0;
        };
        if (ends_with("u128"))
            return Type::prim(Kind::U128);
        if (ends_with("u64"))
            return Type::prim(Kind::U64);
        if (ends_with("u8"))
            return Type::prim(Kind::U8);
        return num();
    }

    Type var_ref(const Node& n)
    {
        if (const Type* t = lookup(n.text))
            return *t;
        if (const ast::ConstDef* c = module_.find_constant(n.text))
            return qualify(c->type, module_);
        if (spec_mode_ && (n.text == "MAX_U8" || n.text == "MAX_U64" || n.text == "MAX_U128"))
            return num();
        report("UnresolvedName", "unbound variable '" + n.text + "'", span_of(n));
        return any();
    }

    Type call(const Node& n)
    {
        if (spec_mode_ && n.text == "old") {
            if (n.children.size() != 1) {
                report("ArityMismatch", "old expects 1 argument, got " + std::to_string(n.children.size()),
                       span_of(n));
                return any();
            }
            return expr(n.children[0]);
        }
        std::vector<Type> args;
        for (const Node& a : n.children)
            args.push_back(expr(a));

        if (spec_mode_ && n.text.find("::") == std::string::npos) {
            auto it = spec_funs_.find(n.text);
            if (it != spec_funs_.end()) {
                check_args(n, it->second->params, args, module_);
                return qualify(it->second->return_type, module_);
            }
        }

        const ast::SourceModule* owner = &module_;
        std::string fname = n.text;
        if (n.text.find("::") != std::string::npos) {
            owner = find_module(n.text.substr(0, n.text.rfind("::")));
            fname = last_segment(n.text);
            if (!owner) {
                report("UnresolvedName", "unknown module in call '" + n.text + "'", span_of(n));
                return any();
            }
        }
        const ast::FunctionDef* callee = owner->find_function(fname);
        if (!callee) {
            report("UnresolvedName", "unknown function '" + n.text + "'", span_of(n));
            return any();
        }
        if (owner != &module_ && callee->visibility != ast::Visibility::Public && !spec_mode_)
            report("VisibilityViolation", "function '" + n.text + "' is not public", span_of(n));
        check_args(n, callee->params, args, *owner);
        return callee->return_type ? qualify(*callee->return_type, *owner) : Type::prim(Kind::Unit);
    }

    void check_args(const Node& n, const std::vector<ast::Param>& params, const std::vector<Type>& args,
                    const ast::SourceModule& owner)
    {
        if (params.size() != args.size()) {
            report("ArityMismatch",
                   "'" + n.text + "' expects " + std::to_string(params.size()) + " argument(s), got " +
                       std::to_string(args.size()),
                   span_of(n));
            return;
        }
        for (std::size_t i = 0; i < params.size(); ++i) {
            Type want = qualify(params[i].type, owner);
            if (!compatible(args[i], want))
                report("TypeMismatch",
                       "argument " + std::to_string(i + 1) + " of '" + n.text + "' expects " + ast::to_string(want) +
                           ", found " + ast::to_string(args[i]),
                       span_of(n.children[i]));
        }
    }

    Type binop(const Node& n)
    {
        const std::string& op = n.text;
        if (op == "&&" || op == "||" || op == "==>") {
            expect_bool(n.children[0], "operand");
            expect_bool(n.children[1], "operand");
            return boolean();
        }
        Type l = expr(n.children[0]);
        Type r = expr(n.children[1]);
        if (op == "==" || op == "!=") {
            if (!compatible(l, r))
                report("TypeMismatch", "cannot compare " + ast::to_string(l) + " with " + ast::to_string(r),
                       span_of(n));
            return boolean();
        }
        bool l_ok = l.deref().kind == Kind::Any || l.deref().is_integer();
        bool r_ok = r.deref().kind == Kind::Any || r.deref().is_integer();
        if (!l_ok || !r_ok || !compatible(l, r)) {
            report("TypeMismatch",
                   "operator '" + op + "' needs matching integers, found " + ast::to_string(l) + " and " +
                       ast::to_string(r),
                   span_of(n));
            return op == "<" || op == ">" || op == "<=" || op == ">=" ? boolean() : any();
        }
        if (op == "<" || op == ">" || op == "<=" || op == ">=")
            return boolean();
        return join(l.deref(), r.deref());
    }

    Type unop(const Node& n)
    {
        const Node& x = n.children[0];
        if (n.text == "!") {
            expect_bool(x, "operand of '!'");
            return boolean();
        }
        Type t = expr(x);
        if (n.text == "*") {
            if (t.kind == Kind::Any)
                return t;
            if (!t.is_reference()) {
                report("TypeMismatch", "cannot dereference non-reference " + ast::to_string(t), span_of(n));
                return t;
            }
            return t.inner.front();
        }
        return Type::ref(t.deref(), n.text == "&mut");
    }

    Type field_access(const Node& n)
    {
        Type base = expr(n.children[0]);
        if (base.deref().kind == Kind::Any)
            return any();
        const ast::SourceModule* owner = nullptr;
        const ast::StructDef* s = struct_of_type(base, &owner);
        if (!s) {
            report("TypeMismatch", "field access '." + n.text + "' on non-struct " + ast::to_string(base), span_of(n));
            return any();
        }
        for (const auto& f : s->fields)
            if (f.name == n.text) {
                Type ft = qualify(f.type, *owner);
                if (base.is_reference())
                    return Type::ref(ft, base.kind == Kind::MutRef);
                return ft;
            }
        report("UnresolvedName", "struct " + s->name + " has no field '" + n.text + "'", span_of(n));
        return any();
    }

    Type pack(const Node& n)
    {
        auto ref = resolve_struct(n.text);
        if (!ref) {
            report("UnresolvedName", "unknown struct '" + n.text + "'", span_of(n));
            for (const Node& c : n.children)
                expr(c.children[0]);
            return any();
        }
        if (ref->module->name != module_.name && !spec_mode_)
            report("ForeignResource", "cannot pack " + n.text + " outside its defining module", span_of(n));
        std::set<std::string> seen;
        for (const Node& init : n.children) {
            Type t = expr(init.children[0]);
            record(init, t);
            auto it = std::find_if(ref->def->fields.begin(), ref->def->fields.end(),
                                   [&](const ast::Field& f) { return f.name == init.text; });
            if (it == ref->def->fields.end()) {
                report("UnresolvedName", "struct " + ref->def->name + " has no field '" + init.text + "'",
                       span_of(init));
                continue;
            }
            seen.insert(init.text);
            Type want = qualify(it->type, *ref->module);
            if (!compatible(t, want))
                report("TypeMismatch",
                       "field " + init.text + " expects " + ast::to_string(want) + ", found " + ast::to_string(t),
                       span_of(init));
        }
        for (const auto& f : ref->def->fields)
            if (!seen.count(f.name))
                report("TypeMismatch", "missing field '" + f.name + "' in " + ref->def->name + " literal",
                       span_of(n));
        return Type::structure(ref->module->name + "::" + ref->def->name);
    }

    Type block(const Node& b)
    {
        push_scope();
        Type result = Type::prim(Kind::Unit);
        bool diverges = false;
        for (std::size_t i = 0; i < b.children.size(); ++i) {
            const Node& s = b.children[i];
            bool is_tail = b.has_tail() && i + 1 == b.children.size();
            if (is_tail) {
                result = expr(s);
            } else {
                statement(s);
                if (s.is(NodeKind::Return) || s.is(NodeKind::Abort))
                    diverges = true;
                if (s.is(NodeKind::ExprStmt) && is_never(types[s.children[0].id]))
                    diverges = true;
            }
        }
        pop_scope();
        if (!b.has_tail() && diverges)
            return never();
        return result;
    }

    Type if_expr(const Node& n)
    {
        expect_bool(n.children[0], "if condition");
        Type then_t = expr(n.children[1]);
        if (n.children.size() < 3)
            return Type::prim(Kind::Unit);
        Type else_t = expr(n.children[2]);
        if (is_never(then_t))
            return else_t;
        if (is_never(else_t))
            return then_t;
        if (!compatible(then_t, else_t)) {
            report("TypeMismatch",
                   "if branches have incompatible types " + ast::to_string(then_t) + " and " + ast::to_string(else_t),
                   span_of(n));
            return any();
        }
        return join(then_t, else_t);
    }

    Type expr(const Node& n)
    {
        switch (n.kind) {
        case NodeKind::Literal: return record(n, literal(n));
        case NodeKind::VarRef: return record(n, var_ref(n));
        case NodeKind::BinOp: return record(n, binop(n));
        case NodeKind::UnOp: return record(n, unop(n));
        case NodeKind::FieldAccess: return record(n, field_access(n));
        case NodeKind::Call: return record(n, call(n));
        case NodeKind::Pack: return record(n, pack(n));
        case NodeKind::Block: return record(n, block(n));
        case NodeKind::If: return record(n, if_expr(n));
        case NodeKind::BorrowGlobal: {
            Type s = storage_target(n, true);
            expect_address(n.children[0]);
            if (fn_ && !spec_mode_) {
                bool acquired = std::any_of(fn_->acquires.begin(), fn_->acquires.end(), [&](const std::string& a) {
                    return last_segment(a) == last_segment(n.text);
                });
                if (!acquired)
                    report("MissingAcquires",
                           "function " + fn_->name + " uses " + std::string(n.flag ? "borrow_global_mut" : "borrow_global") +
                               "<" + n.text + "> without 'acquires " + n.text + "'",
                           span_of(n));
            }
            return record(n, Type::ref(s, n.flag));
        }
        case NodeKind::Exists:
            storage_target(n, !spec_mode_);
            expect_address(n.children[0]);
            return record(n, boolean());
        case NodeKind::Global: {
            if (!spec_mode_)
                report("UnresolvedName", "global<" + n.text + "> is only available in specifications", span_of(n));
            Type s = storage_target(n, false);
            expect_address(n.children[0]);
            return record(n, s);
        }
        case NodeKind::MoveTo: {
            Type signer = expr(n.children[0]);
            if (!compatible(signer, Type::prim(Kind::Signer)))
                report("TypeMismatch", "move_to expects a signer, found " + ast::to_string(signer),
                       span_of(n.children[0]));
            Type value = expr(n.children[1]);
            if (!n.text.empty()) {
                Type s = storage_target(n, true);
                if (!compatible(value, s))
                    report("TypeMismatch", "move_to<" + n.text + "> given " + ast::to_string(value),
                           span_of(n.children[1]));
            } else if (value.deref().kind == Kind::Struct) {
                Node probe = n;
                probe.text = value.deref().name;
                storage_target(probe, true);
            }
            return record(n, Type::prim(Kind::Unit));
        }
        case NodeKind::VectorLit: {
            Type elem = n.annotation ? qualify(*n.annotation, module_) : any();
            for (const Node& c : n.children) {
                Type t = expr(c);
                if (!compatible(t, elem))
                    report("TypeMismatch", "vector element has type " + ast::to_string(t), span_of(c));
                elem = join(elem, t);
            }
            return record(n, Type::vector_of(elem));
        }
        case NodeKind::FieldInit: return record(n, expr(n.children[0]));
        default:
            statement(n);
            return Type::prim(Kind::Unit);
        }
    }

    // ---- statements ---------------------------------------------------

    void statement(const Node& s)
    {
        switch (s.kind) {
        case NodeKind::Let: {
            Type t = expr(s.children[0]);
            if (s.annotation) {
                Type want = qualify(*s.annotation, module_);
                if (!compatible(t, want))
                    report("TypeMismatch",
                           "let " + s.text + " declared " + ast::to_string(want) + " but initialized with " +
                               ast::to_string(t),
                           span_of(s));
                t = want;
            }
            bind(s.text, t);
            return;
        }
        case NodeKind::Assign: {
            const Node& lhs = s.children[0];
            Type rhs = expr(s.children[1]);
            Type target;
            if (lhs.is(NodeKind::VarRef)) {
                const Type* local = lookup(lhs.text);
                if (!local) {
                    if (module_.find_constant(lhs.text))
                        report("InvalidAssignment", "cannot assign to constant '" + lhs.text + "'", span_of(lhs));
                    else
                        report("UnresolvedName", "unbound variable '" + lhs.text + "'", span_of(lhs));
                    return;
                }
                target = *local;
                record(lhs, target);
            } else if (lhs.is(NodeKind::UnOp) && lhs.text == "*") {
                Type r = expr(lhs.children[0]);
                if (r.kind == Kind::Ref)
                    report("InvalidAssignment", "cannot assign through an immutable reference", span_of(lhs));
                else if (r.kind != Kind::MutRef && r.kind != Kind::Any)
                    report("TypeMismatch", "cannot dereference non-reference " + ast::to_string(r), span_of(lhs));
                target = r.is_reference() ? r.inner.front() : any();
            } else {
                target = expr(lhs);
                if (target.kind == Kind::Ref)
                    report("InvalidAssignment", "cannot assign through an immutable reference", span_of(lhs));
            }
            if (!compatible(rhs, target))
                report("TypeMismatch", "cannot assign " + ast::to_string(rhs) + " to " + ast::to_string(target),
                       span_of(s));
            return;
        }
        case NodeKind::ExprStmt: expr(s.children[0]); return;
        case NodeKind::While: {
            expect_bool(s.children[0], "while condition");
            if (s.invariant_count() > 0) {
                bool saved = spec_mode_;
                spec_mode_ = true;
                collect_spec_funs();
                for (std::size_t i = 2; i < s.children.size(); ++i)
                    expect_bool(s.children[i], "loop invariant");
                spec_mode_ = saved;
            }
            expr(s.children[1]);
            return;
        }
        case NodeKind::Return: {
            Type want = fn_ && fn_->return_type ? qualify(*fn_->return_type, module_) : Type::prim(Kind::Unit);
            Type got = s.children.empty() ? Type::prim(Kind::Unit) : expr(s.children[0]);
            if (!compatible(got, want))
                report("TypeMismatch", "return of " + ast::to_string(got) + " from function returning " +
                                           ast::to_string(want),
                       span_of(s));
            return;
        }
        case NodeKind::Abort: expect_int(s.children[0], "abort code"); return;
        case NodeKind::Assert:
            expect_bool(s.children[0], "assert condition");
            expect_int(s.children[1], "assert code");
            return;
        default: expr(s); return;
        }
    }
};

} // namespace

std::vector<Diagnostic> check_wellformed(const ast::SourceModule& module)
{
    return check_wellformed(module, {});
}

std::vector<Diagnostic> check_wellformed(const ast::SourceModule& module, std::span<const ast::SourceModule> workspace)
{
    Checker c(module, workspace);
    c.check_module();
    return std::move(c.diags);
}

std::vector<Diagnostic> check_function(const ast::SourceModule& module, const ast::FunctionDef& fn,
                                       std::span<const ast::SourceModule> workspace)
{
    Checker c(module, workspace);
    c.check_function(fn);
    return std::move(c.diags);
}

TypeTable infer_types(const ast::SourceModule& module, const ast::FunctionDef& fn,
                      std::span<const ast::SourceModule> workspace)
{
    Checker c(module, workspace);
    c.check_function(fn);
    return std::move(c.types);
}

} // namespace msgpipe::frontend
