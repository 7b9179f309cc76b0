// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "msgpipe/errors.hpp"
#include "msgpipe/frontend/checker.hpp"
#include "msgpipe/frontend/parser.hpp"
#include "msgpipe/frontend/printer.hpp"
#include "msgpipe/inline/inline.hpp"
#include "test_support.hpp"

using namespace msgpipe;
using msgpipe::testing::load_module;

namespace {

std::size_t calls_to(const ast::Node& body, const std::string& name)
{
    std::size_t n = 0;
    ast::visit(body, [&](const ast::Node& x) {
        if (x.is(ast::NodeKind::Call) && ast::split_path(x.text).back() == name)
            ++n;
        return true;
    });
    return n;
}

bool result_wellformed(const deps::DependencyClosure& c, const ast::FunctionDef& f)
{
    ast::SourceModule m = c.module();
    *m.find_function(f.name) = f;
    return frontend::check_function(m, f, c.workspace).empty();
}

} // namespace

TEST(Inline, TransferFoldsBothCallees)
{
    std::vector<ast::SourceModule> ws{load_module("corpus/coin.move")};
    auto c = deps::slice(ws, "coin::transfer");
    auto r = inliner::inline_best_effort(c);
    EXPECT_EQ(r.inlined, (std::vector<std::string>{"0x42::coin::withdraw", "0x42::coin::deposit"}));
    EXPECT_TRUE(r.skipped.empty());
    EXPECT_EQ(ast::count_mut_borrows(*r.result.body), 2u);
    EXPECT_EQ(calls_to(*r.result.body, "withdraw"), 0u);
    EXPECT_EQ(calls_to(*r.result.body, "deposit"), 0u);
    EXPECT_TRUE(result_wellformed(c, r.result));
    EXPECT_EQ(frontend::print_function(r.result), msgpipe::testing::read_fixture("golden/transfer_inlined.move"));
}

TEST(Inline, InlinedContextHasNoCalls)
{
    std::vector<ast::SourceModule> ws{load_module("corpus/coin.move")};
    auto c = deps::slice(ws, "coin::transfer");
    auto r = inliner::inline_best_effort(c);
    auto ctx = deps::build_context(c, deps::ContextMode::Inlined, frontend::print_function(r.result));
    auto reparsed = frontend::parse_function(ctx.target_source);
    EXPECT_EQ(calls_to(*reparsed.body, "withdraw") + calls_to(*reparsed.body, "deposit"), 0u);
    EXPECT_TRUE(ctx.metadata.has_global_mut);
    EXPECT_EQ(ctx.dependency_sources.size(), 3u); // two structs and a constant
}

TEST(Inline, GreedySkip)
{
    std::vector<ast::SourceModule> ws{load_module("corpus/greedy_skip.move")};
    auto c = deps::slice(ws, "ledger::settle");
    auto r = inliner::inline_best_effort(c);
    EXPECT_EQ(r.inlined, (std::vector<std::string>{"0x9::ledger::double"}));
    ASSERT_EQ(r.skipped.size(), 1u);
    EXPECT_EQ(r.skipped[0].callee, "0x9::ledger::bump");
    EXPECT_EQ(r.skipped[0].reason, "MissingAcquires");
    EXPECT_EQ(calls_to(*r.result.body, "bump"), 1u);
    EXPECT_TRUE(result_wellformed(c, r.result));
}

TEST(Inline, ZeroCallees)
{
    std::vector<ast::SourceModule> ws{load_module("corpus/pair.move")};
    auto c = deps::slice(ws, "pair::make_pair");
    auto r = inliner::inline_best_effort(c);
    EXPECT_TRUE(r.inlined.empty());
    EXPECT_TRUE(r.skipped.empty());
    EXPECT_TRUE(ast::equal(r.result, c.target_fn));
}

TEST(Inline, RerunInlinesNothingFurther)
{
    std::vector<ast::SourceModule> ws{load_module("corpus/coin.move")};
    auto c = deps::slice(ws, "coin::transfer");
    auto r = inliner::inline_best_effort(c);
    *ws[0].find_function("transfer") = r.result;
    auto again = inliner::inline_best_effort(deps::slice(ws, "coin::transfer"));
    EXPECT_TRUE(again.inlined.empty());
    EXPECT_TRUE(ast::equal(again.result, r.result));
}

TEST(Substitute, LiteralBodyReplacesCall)
{
    auto m = frontend::parse(R"(
module 0x1::s {
    fun seven(): u64 { 7 }
    fun f(): u64 { let x = seven(); x }
}
)");
    const auto& f = *m.find_function("f");
    ast::NodeId call = 0;
    ast::visit(*f.body, [&](const ast::Node& n) {
        if (n.is(ast::NodeKind::Call))
            call = n.id;
        return true;
    });
    auto body = inliner::substitute(*f.body, call, *m.find_function("seven"), 1);
    EXPECT_EQ(frontend::print_expr(body), "{\n    let x = 7;\n    x\n}");
}

TEST(Substitute, ParamsBoundWithSuffix)
{
    std::vector<ast::SourceModule> ws{load_module("corpus/coin.move")};
    const auto& t = *ws[0].find_function("transfer");
    const ast::Node& let = t.body->children[0];
    auto body = inliner::substitute(*t.body, let.children[0].id, *ws[0].find_function("withdraw"), 1);
    std::string text = frontend::print_expr(body);
    EXPECT_NE(text.find("let addr__inl1 = from;\n    let amount__inl1 = amount;"), std::string::npos) << text;
}

TEST(Substitute, CollisionRenamed)
{
    auto m = frontend::parse(R"(
module 0x1::s {
    fun inc(x: u64): u64 { let y = x + 1; y }
    fun f(x: u64): u64 {
        let y = 2;
        let z = inc(y);
        x + y + z
    }
}
)");
    auto c = deps::slice(std::vector<ast::SourceModule>{m}, "s::f");
    auto r = inliner::inline_best_effort(c);
    ASSERT_EQ(r.inlined.size(), 1u);
    EXPECT_TRUE(result_wellformed(c, r.result));
    std::string text = frontend::print_function(r.result);
    EXPECT_NE(text.find("let x__inl1 = y;"), std::string::npos) << text;
    EXPECT_NE(text.find("let y__inl1 = x__inl1 + 1;"), std::string::npos) << text;
    EXPECT_NE(text.find("let z = y__inl1;"), std::string::npos) << text;
}

TEST(Substitute, ArityMismatchRejected)
{
    auto m = frontend::parse(R"(
module 0x1::s {
    fun g(a: u64): u64 { a }
    fun f(): u64 { g(1) }
}
)");
    const auto& f = *m.find_function("f");
    ast::FunctionDef g2 = *m.find_function("g");
    g2.params.push_back({"b", ast::Type::prim(ast::Type::Kind::U64)});
    EXPECT_THROW(inliner::substitute(*f.body, f.body->children[0].id, g2, 1), SignatureMismatch);
}

TEST(Inline, EarlyReturnSkipped)
{
    auto m = frontend::parse(R"(
module 0x1::s {
    fun clamp(x: u64): u64 {
        if (x > 10) return 10;
        x
    }
    fun f(v: u64): u64 { clamp(v) + 1 }
}
)");
    auto c = deps::slice(std::vector<ast::SourceModule>{m}, "s::f");
    auto r = inliner::inline_best_effort(c);
    ASSERT_EQ(r.skipped.size(), 1u);
    EXPECT_EQ(r.skipped[0].reason, "EarlyReturn");
}

TEST(Inline, ShortCircuitCallSiteSkipped)
{
    auto m = frontend::parse(R"(
module 0x1::s {
    fun big(x: u64): bool { x > 10 }
    fun f(v: u64): bool { v > 0 && big(v) }
}
)");
    auto r = inliner::inline_best_effort(deps::slice(std::vector<ast::SourceModule>{m}, "s::f"));
    ASSERT_EQ(r.skipped.size(), 1u);
    EXPECT_EQ(r.skipped[0].reason, "UnsupportedCallSite");
}

TEST(Inline, TransitiveCalleesReached)
{
    auto m = frontend::parse(R"(
module 0x1::s {
    fun leaf(x: u64): u64 { x * 2 }
    fun mid(x: u64): u64 { leaf(x) + 1 }
    fun top(x: u64): u64 { mid(x) }
}
)");
    auto c = deps::slice(std::vector<ast::SourceModule>{m}, "s::top");
    auto r = inliner::inline_best_effort(c);
    EXPECT_EQ(r.inlined, (std::vector<std::string>{"0x1::s::mid", "0x1::s::leaf"}));
    EXPECT_EQ(ast::count_nodes(*r.result.body, ast::NodeKind::Call), 0u);
    EXPECT_TRUE(result_wellformed(c, r.result));
}

TEST(Inline, BorrowCountPreservedOnCorpus)
{
    for (const auto& path : msgpipe::testing::corpus_files()) {
        std::vector<ast::SourceModule> ws;
        try {
            ws = frontend::parse_modules(msgpipe::testing::read_text(path));
        } catch (const SyntaxError&) {
            continue;
        }
        for (const auto& target : deps::select_targets(ws)) {
            auto c = deps::slice(ws, target);
            auto r = inliner::inline_best_effort(c);
            if (r.result.body && result_wellformed(c, c.target_fn))
                EXPECT_TRUE(result_wellformed(c, r.result)) << target;
            std::size_t expected = c.target_fn.body ? ast::count_mut_borrows(*c.target_fn.body) : 0;
            bool single_site = true;
            for (const auto& p : r.inlined) {
                const auto* callee = c.find_callee(p);
                expected += ast::count_mut_borrows(*callee->def.body);
                std::size_t sites = 0;
                for (const auto& [from, to] : c.call_graph)
                    sites += std::count(to.begin(), to.end(), p);
                single_site = single_site && sites == 1;
            }
            if (single_site && r.result.body)
                EXPECT_EQ(ast::count_mut_borrows(*r.result.body), expected) << target;
        }
    }
}
