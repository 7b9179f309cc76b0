// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "msgpipe/errors.hpp"
#include "msgpipe/frontend/checker.hpp"
#include "msgpipe/frontend/parser.hpp"
#include "msgpipe/frontend/printer.hpp"
#include "test_support.hpp"

using namespace msgpipe;
using namespace msgpipe::frontend;
using msgpipe::testing::load_module;
using msgpipe::testing::read_fixture;

namespace {

std::vector<std::string> names(const ast::SourceModule& m)
{
    std::vector<std::string> out;
    for (const auto& f : m.functions)
        out.push_back(f.name);
    return out;
}

std::size_t count_code(const std::vector<Diagnostic>& d, const std::string& code)
{
    return std::count_if(d.begin(), d.end(), [&](const Diagnostic& x) { return x.code == code; });
}

} // namespace

TEST(Parse, CoinModuleShape)
{
    auto m = load_module("corpus/coin.move");
    EXPECT_EQ(m.address, "0x42");
    EXPECT_EQ(m.name, "coin");
    EXPECT_EQ(names(m), (std::vector<std::string>{"transfer", "withdraw", "deposit"}));
    ASSERT_EQ(m.structs.size(), 2u);
    EXPECT_EQ(m.structs[0].name, "Coin");
    EXPECT_EQ(m.structs[1].name, "Balance");
}

TEST(Parse, EveryNodeHasSpan)
{
    auto m = load_module("corpus/coin_spec.move");
    for (const auto& f : m.functions)
        ast::visit(*f.body, [](const ast::Node& n) {
            EXPECT_GT(n.span.line, 0) << ast::to_string(n.kind);
            EXPECT_GT(n.id, 0u);
            return true;
        });
}

TEST(Parse, EmptyInputExpectsModule)
{
    try {
        parse("");
        FAIL() << "no throw";
    } catch (const SyntaxError& e) {
        EXPECT_EQ(e.message(), "expected module");
    }
}

TEST(Parse, TwoModulesKeepQualifiedCall)
{
    auto mods = parse_modules(R"(
module 0x1::a {
    public fun f(x: u64): u64 { 0x1::b::g(x) }
}
module 0x1::b {
    public fun g(x: u64): u64 { x + 1 }
}
)");
    ASSERT_EQ(mods.size(), 2u);
    const ast::Node& tail = mods[0].functions[0].body->children.back();
    ASSERT_TRUE(tail.is(ast::NodeKind::Call));
    EXPECT_EQ(tail.text, "0x1::b::g");
    ASSERT_EQ(tail.children.size(), 1u);
    EXPECT_EQ(tail.children[0].text, "x");
}

TEST(Parse, UnsupportedConstructNamesSpan)
{
    try {
        parse("module 0x1::m {\n    fun f() {\n        loop {}\n    }\n}\n");
        FAIL() << "no throw";
    } catch (const UnsupportedConstruct& e) {
        EXPECT_EQ(e.span().line, 3);
        EXPECT_EQ(e.construct(), "loop");
    }
}

TEST(Parse, QuantifierUnsupportedInSpec)
{
    EXPECT_THROW(parse_spec_expression("forall x: u64: x > 0"), UnsupportedConstruct);
}

TEST(Parse, SpecForUnknownFunctionRejected)
{
    EXPECT_THROW(parse("module 0x1::m { fun f() {} spec g { ensures true; } }"), SyntaxError);
}

TEST(Parse, NativeFunctionHasNoBody)
{
    auto m = parse("module 0x1::m { native public fun h(x: u64): u64; }");
    ASSERT_EQ(m.functions.size(), 1u);
    EXPECT_TRUE(m.functions[0].is_native());
    EXPECT_FALSE(m.functions[0].body.has_value());
}

TEST(Print, RoundTripCoin)
{
    auto m = load_module("corpus/coin_spec.move");
    auto text = pretty_print(m);
    auto again = parse(text);
    EXPECT_TRUE(ast::equal(m, again));
    EXPECT_EQ(pretty_print(again), text);
}

TEST(Print, CanonicalSourceIsFixpoint)
{
    std::string src = read_fixture("corpus/coin_spec.move");
    EXPECT_EQ(pretty_print(parse(src)), src);
}

TEST(Print, LoopInvariantsInsideBody)
{
    auto m = parse(R"(
module 0x1::loops {
    fun sum(n: u64): u64 {
        let i = 0;
        let s = 0;
        while (i < n) {
            spec {
                invariant i <= n;
            };
            s = s + i;
            i = i + 1;
        };
        s
    }
}
)");
    std::string text = pretty_print(m);
    auto body = text.find("while (i < n) {");
    auto inv = text.find("invariant i <= n;");
    auto upd = text.find("s = s + i;");
    ASSERT_NE(body, std::string::npos);
    EXPECT_LT(body, inv);
    EXPECT_LT(inv, upd);
    EXPECT_TRUE(ast::equal(m, parse(text)));
}

TEST(Print, ClausesCanonicalOrder)
{
    auto m = load_module("corpus/clause_order.move");
    EXPECT_EQ(pretty_print(m), read_fixture("golden/clause_order.move"));
}

TEST(Check, CoinIsClean)
{
    auto m = load_module("corpus/coin_spec.move");
    auto d = check_wellformed(m);
    EXPECT_TRUE(d.empty()) << format_all(d, "coin_spec.move");
}

TEST(Check, ArityMismatch)
{
    auto m = parse(R"(
module 0x1::m {
    fun g(a: u64, b: u64): u64 { a + b }
    fun f(): u64 { g(1) }
}
)");
    auto d = check_wellformed(m);
    ASSERT_EQ(d.size(), 1u) << format_all(d, "m.move");
    EXPECT_EQ(d[0].code, "ArityMismatch");
    EXPECT_EQ(d[0].span.line, 4);
}

TEST(Check, MissingAcquires)
{
    auto m = parse(R"(
module 0x1::m {
    struct Balance has key { value: u64 }
    fun bump(a: address) {
        let b = borrow_global_mut<Balance>(a);
        b.value = b.value + 1;
    }
}
)");
    auto d = check_wellformed(m);
    ASSERT_EQ(d.size(), 1u) << format_all(d, "m.move");
    EXPECT_EQ(d[0].code, "MissingAcquires");
}

TEST(Check, TypeMismatchAndUnresolved)
{
    auto m = parse(R"(
module 0x1::m {
    fun f(x: u64): bool {
        let y = x + true;
        z
    }
}
)");
    auto d = check_wellformed(m);
    EXPECT_EQ(count_code(d, "TypeMismatch"), 1u) << format_all(d, "m.move");
    EXPECT_EQ(count_code(d, "UnresolvedName"), 1u);
}

TEST(Check, ForeignResourceAccess)
{
    auto mods = parse_modules(R"(
module 0x1::a {
    struct R has key { v: u64 }
}
module 0x1::b {
    fun peek(x: address): u64 acquires 0x1::a::R {
        borrow_global<0x1::a::R>(x).v
    }
}
)");
    auto d = check_wellformed(mods[1], mods);
    EXPECT_EQ(count_code(d, "ForeignResource"), 1u) << format_all(d, "b.move");
}

TEST(Check, SpecNamesResolve)
{
    auto m = parse(R"(
module 0x1::m {
    fun f(x: u64): u64 { x }
    spec f {
        ensures result == y;
    }
}
)");
    auto d = check_wellformed(m);
    ASSERT_EQ(d.size(), 1u);
    EXPECT_EQ(d[0].code, "UnresolvedName");
}

TEST(Check, DiagnosticSpansInsideInput)
{
    std::string src = "module 0x1::m {\n    fun f(): u64 { g() }\n}\n";
    auto d = check_wellformed(parse(src));
    ASSERT_FALSE(d.empty());
    for (const auto& x : d) {
        EXPECT_GE(x.span.line, 1);
        EXPECT_LE(x.span.line, 3);
    }
    EXPECT_EQ(d[0].format("m.move").rfind("m.move:2:", 0), 0u);
}

TEST(Corpus, EveryFileIsAPrintFixpoint)
{
    auto files = msgpipe::testing::corpus_files();
    ASSERT_GE(files.size(), 25u);
    for (const auto& f : files) {
        auto first = parse_modules(msgpipe::testing::read_text(f));
        std::string printed = pretty_print(first);
        auto second = parse_modules(printed);
        ASSERT_EQ(first.size(), second.size()) << f;
        for (std::size_t i = 0; i < first.size(); ++i)
            EXPECT_TRUE(ast::equal(first[i], second[i])) << f;
        EXPECT_EQ(pretty_print(second), printed) << f;
    }
}

TEST(Corpus, EveryFileIsWellFormed)
{
    for (const auto& f : msgpipe::testing::corpus_files()) {
        if (f.filename() == "greedy_skip.move")
            continue;
        auto modules = parse_modules(msgpipe::testing::read_text(f));
        for (const auto& m : modules) {
            auto diags = check_wellformed(m, modules);
            EXPECT_TRUE(diags.empty()) << f << ": " << (diags.empty() ? "" : diags[0].message);
        }
    }
}

TEST(Corpus, WorkspaceParsesAndChecks)
{
    auto ws = msgpipe::testing::load_workspace();
    EXPECT_EQ(ws.size(), 5u);
    for (const auto& m : ws)
        EXPECT_TRUE(check_wellformed(m, ws).empty()) << m.name;
}
