// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace msgpipe::ast {

/// 1-based source position. Synthesized nodes carry {0, 0}.
struct Span {
    int line = 0;
    int col = 0;

    friend bool operator==(const Span&, const Span&) = default;
};

using NodeId = std::uint32_t;

struct Type {
    enum class Kind { U8, U64, U128, Bool, Address, Signer, Vector, Struct, Ref, MutRef, Unit, Num, Any };

    Kind kind = Kind::Any;
    std::string name;        // struct path for Kind::Struct
    std::vector<Type> inner; // element type (Vector) or referent (Ref / MutRef)

    static Type prim(Kind k) { return Type{k, {}, {}}; }
    static Type structure(std::string n) { return Type{Kind::Struct, std::move(n), {}}; }
    static Type vector_of(Type elem) { return Type{Kind::Vector, {}, {std::move(elem)}}; }
    static Type ref(Type t, bool mut)
    {
        return Type{mut ? Kind::MutRef : Kind::Ref, {}, {std::move(t)}};
    }

    bool is_integer() const
    {
        return kind == Kind::U8 || kind == Kind::U64 || kind == Kind::U128 || kind == Kind::Num;
    }
    bool is_reference() const { return kind == Kind::Ref || kind == Kind::MutRef; }
    /// Strips any number of reference layers.
    const Type& deref() const { return is_reference() ? inner.front().deref() : *this; }

    friend bool operator==(const Type&, const Type&) = default;
};

std::string to_string(const Type& t);

enum class NodeKind {
    // statements
    Let,
    Assign,
    ExprStmt,
    While,
    Return,
    Abort,
    Assert,
    // expressions
    Block,
    If,
    Call,
    BorrowGlobal,
    Exists,
    MoveTo,
    Global,
    BinOp,
    UnOp,
    Literal,
    VarRef,
    FieldAccess,
    Pack,
    FieldInit,
    VectorLit,
};

const char* to_string(NodeKind k);

/// Uniform AST node. The meaning of `text`, `flag` and `children` depends on
/// the kind:
///
///   Let          text=name, annotation=optional type, children=[init]
///   Assign       children=[lhs, rhs]
///   ExprStmt     children=[expr]
///   While        children=[cond, body, invariant...]
///   Return       children=[] or [value]
///   Abort        children=[code]
///   Assert       children=[cond, code]
///   Block        flag=has tail expression (last child), children=stmts
///   If           children=[cond, then] or [cond, then, else]
///   Call         text=path ("f" or "m::f"), children=args
///   BorrowGlobal text=struct, flag=mut, children=[addr]
///   Exists       text=struct, children=[addr]
///   MoveTo       text=struct (may be empty), children=[signer, value]
///   Global       text=struct, children=[addr]            (spec only)
///   BinOp        text=operator, children=[lhs, rhs]
///   UnOp         text="!" | "*" | "&" | "&mut", children=[operand]
///   Literal      text=literal spelling
///   VarRef       text=name
///   FieldAccess  text=field, children=[base]
///   Pack         text=struct, children=FieldInit...
///   FieldInit    text=field, children=[value]
///   VectorLit    children=elements
struct Node {
    NodeKind kind = NodeKind::Literal;
    NodeId id = 0;
    Span span;
    std::string text;
    std::optional<Type> annotation;
    bool flag = false;
    std::vector<Node> children;

    bool is(NodeKind k) const { return kind == k; }
    bool is_mut_borrow() const { return kind == NodeKind::BorrowGlobal && flag; }
    bool has_tail() const { return kind == NodeKind::Block && flag && !children.empty(); }

    const Node& cond() const { return children.at(0); }
    const Node& loop_body() const { return children.at(1); }
    std::size_t invariant_count() const
    {
        return kind == NodeKind::While && children.size() > 2 ? children.size() - 2 : 0;
    }
};

Node make_node(NodeKind kind, std::string text = {}, std::vector<Node> children = {});
Node make_block(std::vector<Node> stmts, bool has_tail = false);

enum class Visibility { Private, Public };

struct Param {
    std::string name;
    Type type;

    friend bool operator==(const Param&, const Param&) = default;
};

struct Field {
    std::string name;
    Type type;

    friend bool operator==(const Field&, const Field&) = default;
};

struct StructDef {
    std::string name;
    std::vector<std::string> abilities;
    std::vector<Field> fields;
    Span span;
};

struct ConstDef {
    std::string name;
    Type type;
    Node value;
    Span span;
};

struct FunctionDef {
    std::string name;
    Visibility visibility = Visibility::Private;
    std::vector<std::string> attrs; // "native", "entry"
    std::vector<Param> params;
    std::optional<Type> return_type;
    std::vector<std::string> acquires;
    std::optional<Node> body; // absent iff native
    Span span;

    bool is_native() const;
};

struct Pragma {
    std::string name;
    std::string value;

    friend bool operator==(const Pragma&, const Pragma&) = default;
};

struct Binding {
    bool post = false;
    std::string name;
    Node expr;
};

/// Canonical ordering inside a spec block follows the enumerator order.
enum class ClauseKind { Requires, Modifies, AbortsIf, Ensures };

const char* to_string(ClauseKind k);

struct Clause {
    ClauseKind kind = ClauseKind::Ensures;
    Node expr;
    bool abstract_flag = false;
};

/// A specification helper. A helper without a body is uninterpreted.
struct SpecFun {
    std::string name;
    std::vector<Param> params;
    Type return_type;
    std::optional<Node> body;
};

struct SpecBlock {
    std::string target_fn;
    std::vector<Pragma> pragmas;
    std::vector<Binding> bindings;
    std::vector<Clause> clauses;
    std::vector<SpecFun> helper_funs;
};

struct SourceModule {
    std::string address;
    std::string name;
    std::vector<std::string> uses;
    std::vector<StructDef> structs;
    std::vector<ConstDef> constants;
    std::vector<FunctionDef> functions;
    std::vector<SpecBlock> spec_blocks;
    std::vector<Pragma> module_pragmas;
    NodeId next_id = 1;

    const FunctionDef* find_function(std::string_view n) const;
    FunctionDef* find_function(std::string_view n);
    const StructDef* find_struct(std::string_view n) const;
    const ConstDef* find_constant(std::string_view n) const;
    const SpecBlock* find_spec(std::string_view fn) const;
    SpecBlock* find_spec(std::string_view fn);
    std::string qualified_name() const { return address + "::" + name; }
};

// Structural equality ignoring spans and node ids.
bool equal(const Node& a, const Node& b);
bool equal(const FunctionDef& a, const FunctionDef& b);
bool equal(const SpecBlock& a, const SpecBlock& b);
bool equal(const SourceModule& a, const SourceModule& b);

/// Preorder visit; the visitor returns false to skip a subtree.
template <typename F>
void visit(const Node& n, F&& f)
{
    if (!f(n))
        return;
    for (const Node& c : n.children)
        visit(c, f);
}

template <typename F>
void visit_mut(Node& n, F&& f)
{
    if (!f(n))
        return;
    for (Node& c : n.children)
        visit_mut(c, f);
}

std::size_t count_nodes(const Node& n, NodeKind kind);
std::size_t count_mut_borrows(const Node& n);
Node* find_node(Node& root, NodeId id);
const Node* find_node(const Node& root, NodeId id);

/// Gives fresh ids to every node of `n`, drawing from `next`.
void renumber(Node& n, NodeId& next);
void renumber(SourceModule& m);

/// Splits "a::b::c" into its components.
std::vector<std::string> split_path(std::string_view path);

} // namespace msgpipe::ast
