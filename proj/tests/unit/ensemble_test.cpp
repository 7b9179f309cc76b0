// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <set>

#include "msgpipe/ensemble/ensemble.hpp"
#include "msgpipe/errors.hpp"
#include "msgpipe/frontend/parser.hpp"
#include "msgpipe/frontend/printer.hpp"
#include "test_support.hpp"

using namespace msgpipe;
using agents::ClauseSnippet;
namespace fx = msgpipe::testing;

namespace {

ClauseSnippet snippet(ClauseClass c, const std::string& text)
{
    auto m = frontend::parse_spec_members(text);
    ClauseSnippet s;
    s.cls = c;
    s.bindings = m.bindings;
    s.clauses = m.clauses;
    s.helper_funs = m.helper_funs;
    return s;
}

std::vector<ClauseSnippet> transfer_snippets()
{
    return {
        snippet(ClauseClass::Modifies, "modifies global<Balance>(from);\nmodifies global<Balance>(to);"),
        snippet(ClauseClass::AbortsIf, "let balance_from = global<Balance>(from).coin.value;\n"
                                       "let balance_to = global<Balance>(to).coin.value;\n"
                                       "aborts_if !exists<Balance>(from);\n"
                                       "aborts_if !exists<Balance>(to);\n"
                                       "aborts_if balance_from < amount;\n"
                                       "aborts_if from != to && balance_to + amount > MAX_U64;"),
        snippet(ClauseClass::Ensures, "let balance_from = global<Balance>(from).coin.value;\n"
                                      "let balance_to = global<Balance>(to).coin.value;\n"
                                      "let post balance_from_post = global<Balance>(from).coin.value;\n"
                                      "let post balance_to_post = global<Balance>(to).coin.value;\n"
                                      "ensures from != to ==> balance_from_post == balance_from - amount;\n"
                                      "ensures from != to ==> balance_to_post == balance_to + amount;\n"
                                      "ensures from == to ==> balance_from_post == balance_from;"),
    };
}

std::string text(const ast::SpecBlock& b) { return frontend::print_spec_block(b); }

int order(ast::ClauseKind k)
{
    switch (k) {
    case ast::ClauseKind::Requires: return 0;
    case ast::ClauseKind::Modifies: return 1;
    case ast::ClauseKind::AbortsIf: return 2;
    case ast::ClauseKind::Ensures: return 3;
    }
    return 4;
}

} // namespace

TEST(Merge, SharedBindingAppearsOnce)
{
    auto block = ensemble::merge("transfer", transfer_snippets());
    std::vector<std::string> names;
    for (const auto& b : block.bindings)
        names.push_back(b.name);
    EXPECT_EQ(names, (std::vector<std::string>{"balance_from", "balance_to", "balance_from_post", "balance_to_post"}));
    EXPECT_EQ(block.clauses.size(), 2u + 4u + 3u);
}

TEST(Merge, EmptyListGivesEmptyBlock)
{
    auto block = ensemble::merge("f", {});
    EXPECT_EQ(block.target_fn, "f");
    EXPECT_TRUE(block.bindings.empty());
    EXPECT_TRUE(block.clauses.empty());
    EXPECT_EQ(text(block), "spec f {\n}\n");
}

TEST(Merge, InputOrderDoesNotMatter)
{
    auto forward = transfer_snippets();
    auto reverse = forward;
    std::reverse(reverse.begin(), reverse.end());
    EXPECT_EQ(text(ensemble::merge("transfer", forward)), text(ensemble::merge("transfer", reverse)));
}

TEST(Merge, CollidingUnusedBindingIsDropped)
{
    auto block = ensemble::merge("f", {snippet(ClauseClass::AbortsIf, "let a = x + 1;\naborts_if a > MAX_U64;"),
                                       snippet(ClauseClass::Ensures, "let a = x + 2;\nensures result == x;")});
    ASSERT_EQ(block.bindings.size(), 1u);
    EXPECT_EQ(frontend::print_binding(block.bindings[0]), "let a = x + 1;");
}

TEST(Merge, CollidingUsedBindingIsRenamed)
{
    std::vector<std::string> warnings;
    auto block = ensemble::merge("f",
                                 {snippet(ClauseClass::Ensures, "let a = x + 2;\nensures result == a;"),
                                  snippet(ClauseClass::AbortsIf, "let a = x + 1;\naborts_if x > 5;")},
                                 &warnings);
    EXPECT_EQ(text(block), "spec f {\n"
                           "    let a = x + 1;\n"
                           "    let a_ensures = x + 2;\n"
                           "    aborts_if x > 5;\n"
                           "    ensures result == a_ensures;\n"
                           "}\n");
}

TEST(Merge, PreAndPostBindingsOfOneNameAreSeparated)
{
    auto block = ensemble::merge("f", {snippet(ClauseClass::AbortsIf, "let b = global<R>(addr).v;\naborts_if b < 1;"),
                                       snippet(ClauseClass::Ensures,
                                               "let post b = global<R>(addr).v;\nensures b == 0;")});
    ASSERT_EQ(block.bindings.size(), 2u);
    EXPECT_EQ(frontend::print_binding(block.bindings[1]), "let post b_ensures = global<R>(addr).v;");
    EXPECT_EQ(frontend::print_clause(block.clauses.back()), "ensures b_ensures == 0;");
}

TEST(Merge, BothSidesUsingAConflictingBindingThrows)
{
    EXPECT_THROW(ensemble::merge("f", {snippet(ClauseClass::AbortsIf, "let a = x + 1;\naborts_if a > 5;"),
                                       snippet(ClauseClass::Ensures, "let a = x + 2;\nensures result == a;")}),
                 ConflictingBindings);
}

TEST(Merge, RepeatedClassIsRejected)
{
    EXPECT_THROW(ensemble::merge("f", {snippet(ClauseClass::Ensures, "ensures result == 1;"),
                                       snippet(ClauseClass::Ensures, "ensures result == 2;")}),
                 PreconditionViolated);
}

TEST(Merge, ContradictoryAbortsKeptWithWarning)
{
    std::vector<std::string> warnings;
    auto block = ensemble::merge("f",
                                 {snippet(ClauseClass::AbortsIf, "aborts_if false;\naborts_if x == 0;"),
                                  snippet(ClauseClass::Ensures, "ensures result == x;")},
                                 &warnings);
    EXPECT_EQ(block.clauses.size(), 3u);
    ASSERT_EQ(warnings.size(), 1u);
    EXPECT_NE(warnings[0].find("aborts_if false"), std::string::npos);
}

TEST(Merge, HelpersAreDeduplicated)
{
    std::vector<std::string> warnings;
    auto block = ensemble::merge(
        "f",
        {snippet(ClauseClass::AbortsIf, "spec fun h(x: u64): u64 { x }\naborts_if h(x) > 5;"),
         snippet(ClauseClass::Ensures, "spec fun h(x: u64): u64 { x + 1 }\nensures result == h(x);")},
        &warnings);
    ASSERT_EQ(block.helper_funs.size(), 1u);
    ASSERT_EQ(warnings.size(), 1u);
    EXPECT_NE(warnings[0].find("helper `h`"), std::string::npos);
}

TEST(Merge, PropertiesOverRandomSnippetSets)
{
    int merged = 0;
    for (unsigned seed = 0; seed < 200; ++seed) {
        auto set = fx::random_snippets(seed);
        ast::SpecBlock block;
        try {
            block = ensemble::merge("f", set);
        } catch (const ConflictingBindings&) {
            continue;
        }
        ++merged;
        std::set<std::string> names;
        for (const auto& b : block.bindings)
            EXPECT_TRUE(names.insert(b.name).second) << "seed " << seed << "\n" << text(block);
        for (std::size_t i = 1; i < block.clauses.size(); ++i)
            EXPECT_LE(order(block.clauses[i - 1].kind), order(block.clauses[i].kind)) << "seed " << seed;
        EXPECT_EQ(text(ensemble::merge("f", {ensemble::as_snippet(block)})), text(block)) << "seed " << seed;
        auto shuffled = set;
        std::reverse(shuffled.begin(), shuffled.end());
        EXPECT_EQ(text(ensemble::merge("f", shuffled)), text(block)) << "seed " << seed;
        EXPECT_NO_THROW(frontend::parse_spec_members(text(block)));
    }
    EXPECT_GE(merged, 150);
}

TEST(Attach, TransferMatchesGolden)
{
    auto module = fx::load_module("corpus/coin.move");
    auto block = ensemble::merge("transfer", transfer_snippets());
    auto attached = ensemble::attach(module, block);
    EXPECT_EQ(frontend::pretty_print(attached), fx::read_fixture("golden/transfer_spec_attached.move"));
    EXPECT_TRUE(module.spec_blocks.empty());
}

TEST(Attach, ReplacesExistingBlock)
{
    auto module = fx::load_module("corpus/coin_spec.move");
    ast::SpecBlock block;
    block.target_fn = "withdraw";
    block.clauses = snippet(ClauseClass::Ensures, "ensures result.value == amount;").clauses;
    auto attached = ensemble::attach(module, block);
    EXPECT_EQ(attached.spec_blocks.size(), module.spec_blocks.size());
    EXPECT_EQ(text(*attached.find_spec("withdraw")), "spec withdraw {\n    ensures result.value == amount;\n}\n");
}

TEST(Attach, MissingFunctionThrows)
{
    auto module = fx::load_module("corpus/coin.move");
    ast::SpecBlock block;
    block.target_fn = "mint";
    EXPECT_THROW(ensemble::attach(module, block), TargetNotFound);
}

TEST(Attach, AnnotatedLoopCarriesInvariants)
{
    auto module = fx::load_module("corpus/loop_sum.move");
    auto annotated = fx::load_module("corpus/loop_sum_annotated.move");
    ast::SpecBlock block;
    block.target_fn = "sum_to";
    auto out = ensemble::attach(module, block, *annotated.find_function("sum_to"));
    std::size_t invariants = 0;
    ast::visit(*out.find_function("sum_to")->body, [&](const ast::Node& n) {
        if (n.is(ast::NodeKind::While))
            invariants += n.invariant_count();
        return true;
    });
    EXPECT_EQ(invariants, 2u);
    EXPECT_EQ(frontend::parse(frontend::pretty_print(out)).functions.size(), 1u);
}

TEST(Unit, RenderAddsCalleeClauses)
{
    auto ws = fx::load_workspace();
    auto unit = ensemble::VerificationUnit::from_closure(deps::slice(ws, "coin::transfer"));
    EXPECT_EQ(unit.target_fn, "transfer");
    ASSERT_EQ(unit.modules.size(), 1u);
    auto block = ensemble::merge("transfer", transfer_snippets());
    std::map<deps::FunctionPath, std::vector<ast::Clause>> callee{
        {"0x42::coin::withdraw", snippet(ClauseClass::Modifies, "modifies global<Balance>(addr);").clauses}};
    std::string source = unit.render(block, std::nullopt, callee);
    auto parsed = frontend::parse(source);
    ASSERT_NE(parsed.find_spec("withdraw"), nullptr);
    EXPECT_EQ(text(*parsed.find_spec("withdraw")), "spec withdraw {\n    modifies global<Balance>(addr);\n}\n");
    EXPECT_EQ(text(*parsed.find_spec("transfer")), text(block));
}

TEST(Unit, IncludesOnlyModulesOfTheClosure)
{
    auto ws = fx::load_workspace();
    auto unit = ensemble::VerificationUnit::from_closure(deps::slice(ws, "adder::add"));
    ASSERT_EQ(unit.modules.size(), 1u);
    EXPECT_EQ(unit.modules[0].name, "adder");
    EXPECT_EQ(unit.render({}).find("coin"), std::string::npos);
}

TEST(Polish, AcceptsReorderedBlock)
{
    auto block = ensemble::merge("f", {snippet(ClauseClass::Ensures, "ensures result == x;\nensures x > 0 ==> result > 0;")});
    auto llm = llm::ScriptedBackend::parse(
        "@@ Agent: ensembler\n```\nspec f {\n    ensures x > 0 ==> result > 0;\n    ensures result == x;\n}\n```\n");
    auto out = ensemble::polish(block, llm);
    ASSERT_EQ(out.clauses.size(), 2u);
    EXPECT_EQ(frontend::print_clause(out.clauses[0]), "ensures x > 0 ==> result > 0;");
}

TEST(Polish, RejectsChangedMeaningAndOutages)
{
    auto block = ensemble::merge("f", {snippet(ClauseClass::Ensures, "ensures result == x;")});
    auto llm = llm::ScriptedBackend::parse("@@ Agent: ensembler\n```\nensures result == x + 1;\n```\n");
    EXPECT_EQ(text(ensemble::polish(block, llm)), text(block));
    llm::FailingBackend down;
    EXPECT_EQ(text(ensemble::polish(block, down)), text(block));
}
