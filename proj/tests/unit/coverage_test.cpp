// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "msgpipe/coverage/coverage.hpp"
#include "msgpipe/errors.hpp"
#include "msgpipe/frontend/checker.hpp"
#include "msgpipe/frontend/parser.hpp"
#include "test_support.hpp"

using namespace msgpipe;
using msgpipe::testing::fixture_path;
using msgpipe::testing::load_module;
using msgpipe::testing::read_fixture;

namespace {

const coverage::Mutant* second_deletion(const std::vector<coverage::Mutant>& ms)
{
    auto target = load_module("corpus/pair_mutant.move");
    for (const auto& m : ms)
        if (ast::equal(m.function, *target.find_function("make_pair")))
            return &m;
    return nullptr;
}

prover::MockProver pair_prover()
{
    return prover::MockProver::from_file(fixture_path("mock/pair.rules").string());
}

} // namespace

TEST(Mutate, ProducesSecondElementDeletion)
{
    auto m = load_module("corpus/pair.move");
    auto ms = coverage::mutate(m, "make_pair", 7, 16);
    const auto* hit = second_deletion(ms);
    ASSERT_NE(hit, nullptr);
    EXPECT_EQ(hit->diff, read_fixture("golden/pair_second_deleted.diff"));
    EXPECT_EQ(hit->description, "delete statement");
}

TEST(Mutate, EveryMutantIsWellFormed)
{
    for (const auto& path : msgpipe::testing::corpus_files()) {
        auto mods = frontend::parse_modules(msgpipe::testing::read_text(path));
        for (const auto& mod : mods)
            for (const auto& fn : mod.functions) {
                if (!fn.body || fn.body->children.empty())
                    continue;
                std::vector<coverage::Mutant> ms;
                try {
                    ms = coverage::mutate(mod, fn.name, 1, 8, mods);
                } catch (const NoCandidates&) {
                    continue;
                }
                EXPECT_LE(ms.size(), 8u);
                for (const auto& mu : ms) {
                    auto reparsed = frontend::parse_modules(mu.source);
                    auto r = std::find_if(reparsed.begin(), reparsed.end(),
                                           [&](const auto& x) { return x.name == mod.name; });
                    ASSERT_NE(r, reparsed.end());
                    EXPECT_TRUE(frontend::check_function(*r, *r->find_function(fn.name), mods).empty())
                        << path << " " << fn.name << " #" << mu.id;
                }
            }
    }
}

TEST(Mutate, SeededDeterminism)
{
    auto m = load_module("corpus/coin.move");
    auto a = coverage::mutate(m, "withdraw", 42, 3);
    auto b = coverage::mutate(m, "withdraw", 42, 3);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].source, b[i].source);
        EXPECT_EQ(a[i].id, static_cast<int>(i + 1));
    }
}

TEST(Mutate, EmptyBodyHasNoCandidates)
{
    auto m = frontend::parse("module 0x1::e { public fun f() { } }");
    EXPECT_THROW(coverage::mutate(m, "f", 1, 4), NoCandidates);
    EXPECT_THROW(coverage::mutate(m, "g", 1, 4), TargetNotFound);
}

TEST(Mutate, ExpressionReplacedByDefault)
{
    auto m = frontend::parse("module 0x1::e { fun g(x: u64): u64 { x } public fun f(a: u64): bool { let b = g(a); "
                             "b > 1 } }");
    auto ms = coverage::mutate(m, "f", 3, 20);
    bool saw = false;
    for (const auto& mu : ms)
        if (mu.description == "default value" && mu.source.find("let b = 0;") != std::string::npos)
            saw = true;
    EXPECT_TRUE(saw);
}

TEST(Measure, CompleteSpecCoversSecondDeletion)
{
    auto plain = load_module("corpus/pair.move");
    auto plus = *load_module("corpus/pair_spec_complete.move").find_spec("make_pair");
    auto minus = *load_module("corpus/pair_spec_incomplete.move").find_spec("make_pair");
    auto ms = coverage::mutate(plain, "make_pair", 7, 16);
    auto prover = pair_prover();
    auto rp = coverage::measure(plain, plus, ms, prover);
    auto rm = coverage::measure(plain, minus, ms, prover);
    const auto* hit = second_deletion(ms);
    ASSERT_NE(hit, nullptr);
    auto uncovered = [&](const coverage::CoverageReport& r) {
        return std::any_of(r.uncovered.begin(), r.uncovered.end(), [&](const auto& m) { return m.id == hit->id; });
    };
    EXPECT_FALSE(uncovered(rp));
    EXPECT_TRUE(uncovered(rm));
    ASSERT_TRUE(rp.ratio() && rm.ratio());
    EXPECT_GT(*rp.ratio(), *rm.ratio());
    EXPECT_EQ(rp.covered + static_cast<int>(rp.uncovered.size()), rp.total);
}

TEST(Measure, PreconditionAndEmpty)
{
    auto plain = load_module("corpus/pair.move");
    auto plus = *load_module("corpus/pair_spec_complete.move").find_spec("make_pair");
    auto mutant = load_module("corpus/pair_mutant.move");
    auto prover = pair_prover();
    EXPECT_THROW(coverage::measure(mutant, plus, {}, prover), PreconditionViolated);
    auto r = coverage::measure(plain, plus, {}, prover);
    EXPECT_EQ(r.total, 0);
    EXPECT_FALSE(r.ratio());
    EXPECT_EQ(coverage::feedback_diffs(r), "");
}

TEST(Measure, TimeoutsExcluded)
{
    auto plain = load_module("corpus/pair.move");
    auto plus = *load_module("corpus/pair_spec_complete.move").find_spec("make_pair");
    auto ms = coverage::mutate(plain, "make_pair", 7, 16);
    prover::MockProver p(prover::parse_mock_rules("!p.second = y + 1;\tTimeout\t\n*\tPass\n"), 1);
    auto r = coverage::measure(plain, plus, ms, p);
    EXPECT_FALSE(r.timed_out.empty());
    EXPECT_EQ(r.total + static_cast<int>(r.timed_out.size()), static_cast<int>(ms.size()));
}

TEST(FeedbackDiffs, IdOrder)
{
    auto plain = load_module("corpus/pair.move");
    auto minus = *load_module("corpus/pair_spec_incomplete.move").find_spec("make_pair");
    auto ms = coverage::mutate(plain, "make_pair", 7, 16);
    prover::MockProver p(prover::parse_mock_rules("*\tPass\n"), 1);
    auto r = coverage::measure(plain, minus, ms, p);
    ASSERT_GE(r.uncovered.size(), 2u);
    std::string expected;
    for (const auto& m : ms)
        expected += m.diff;
    EXPECT_EQ(coverage::feedback_diffs(r), expected);
}

TEST(UnifiedDiff, IdenticalIsEmpty)
{
    EXPECT_EQ(coverage::unified_diff("a\nb\n", "a\nb\n", "x"), "");
    EXPECT_EQ(coverage::unified_diff("a\n", "a\nb\n", "x"), "--- a/x\n+++ b/x\n@@ -1,1 +1,2 @@\n a\n+b\n");
}
