// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "msgpipe/errors.hpp"
#include "msgpipe/prover/prover.hpp"
#include "test_support.hpp"

using namespace msgpipe;
using namespace msgpipe::prover;
using msgpipe::testing::fixture_path;
using msgpipe::testing::read_fixture;

namespace {

struct Label {
    std::string file;
    VerdictKind kind;
    int exit_code;
    bool killed;
};

std::vector<Label> labels()
{
    std::vector<Label> out;
    std::istringstream in(read_fixture("diagnostics/labels.tsv"));
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#')
            continue;
        std::istringstream f(line);
        Label l;
        std::string kind, exit, killed;
        std::getline(f, l.file, '\t');
        std::getline(f, kind, '\t');
        std::getline(f, exit, '\t');
        std::getline(f, killed, '\t');
        l.kind = *verdict_from_string(kind);
        l.exit_code = std::stoi(exit);
        l.killed = killed == "1";
        out.push_back(l);
    }
    return out;
}

ClassSet all_active() { return {ClauseClass::AbortsIf, ClauseClass::Modifies, ClauseClass::Ensures}; }

const char* kObjectSource = R"(module 0x1::object {
    struct ObjectCore has key {
        owner: address,
    }

    struct TransferRef has drop {
        self: address,
    }

    public fun transfer_with_ref(ref: TransferRef, to: address) acquires ObjectCore {
        let o = borrow_global_mut<ObjectCore>(ref.self);
        o.owner = to;
    }
}
)";

} // namespace

TEST(Classify, CapturedFixturesMatchLabels)
{
    auto ls = labels();
    ASSERT_GE(ls.size(), 12u);
    for (const auto& l : ls) {
        auto v = classify(read_fixture("diagnostics/" + l.file), l.exit_code, l.killed, 1.0, 60.0);
        EXPECT_EQ(to_string(v.kind), std::string(to_string(l.kind))) << l.file;
        if (v.kind == VerdictKind::Counterexample)
            EXPECT_FALSE(v.diagnostics.empty()) << l.file;
        if (v.kind == VerdictKind::Timeout)
            EXPECT_GE(v.wall_time, 60.0) << l.file;
    }
}

TEST(Classify, StableAcrossRuns)
{
    for (const auto& l : labels()) {
        std::string text = read_fixture("diagnostics/" + l.file);
        auto a = classify(text, l.exit_code, l.killed, 1.0, 60.0);
        auto b = classify(text, l.exit_code, l.killed, 1.0, 60.0);
        EXPECT_EQ(a.kind, b.kind);
        EXPECT_EQ(a.diagnostic_text(), b.diagnostic_text());
    }
}

TEST(Classify, AbortNotCoveredLocatesBorrowLine)
{
    auto v = classify(read_fixture("diagnostics/01_abort_not_covered_short.txt"), 1, false, 0.5, 60, kObjectSource);
    ASSERT_EQ(v.kind, VerdictKind::Counterexample);
    ASSERT_TRUE(v.counterexample);
    ASSERT_EQ(v.counterexample->frames.size(), 1u);
    EXPECT_EQ(v.counterexample->frames[0].line, 11);
    EXPECT_EQ(v.counterexample->frames[0].function, "transfer_with_ref");
}

TEST(Classify, FramesWithAssignments)
{
    auto v = classify(read_fixture("diagnostics/02_post_condition_short.txt"), 1, false, 0.5, 60);
    ASSERT_TRUE(v.counterexample);
    const auto& f = v.counterexample->frames;
    ASSERT_EQ(f.size(), 2u);
    EXPECT_EQ(f[0].function, "create_object_internal");
    EXPECT_EQ(f[0].line, 12);
    ASSERT_EQ(f[0].assignments.size(), 1u);
    EXPECT_EQ(f[0].assignments[0].second, "1125899906842624");
    EXPECT_EQ(f[1].file, "guid.move");
    EXPECT_EQ(f[1].function, "create");
    EXPECT_EQ(f[1].line, 26);
}

TEST(Classify, CodespanFramesAndSpan)
{
    auto v = classify(read_fixture("diagnostics/03_abort_not_covered_codespan.txt"), 1, false, 0.5, 60);
    ASSERT_EQ(v.kind, VerdictKind::Counterexample);
    EXPECT_EQ(v.diagnostics[0].span.line, 17);
    EXPECT_EQ(v.diagnostics[0].file, "sources/coin.move");
    ASSERT_EQ(v.counterexample->frames.size(), 2u);
    EXPECT_EQ(v.counterexample->frames[1].line, 24);
    EXPECT_EQ(v.counterexample->frames[0].assignments.size(), 2u);
}

TEST(Classify, UnknownTextKeptRaw)
{
    auto v = classify("something odd happened\nsecond line\n", 2, false, 0.1, 60);
    EXPECT_EQ(v.kind, VerdictKind::CompileError);
    ASSERT_EQ(v.diagnostics.size(), 1u);
    EXPECT_EQ(v.diagnostics[0].message, "something odd happened");
    EXPECT_EQ(v.diagnostics[0].notes.size(), 2u);
}

TEST(Guidance, ImpureFunction)
{
    auto v = classify(read_fixture("diagnostics/14_impure_function.txt"), 1, false, 0, 60);
    auto advice = match_guidance(v, builtin_guidance());
    ASSERT_EQ(advice.size(), 1u);
    EXPECT_NE(advice[0].find("write a pure spec helper instead"), std::string::npos);
}

TEST(Guidance, UndefinedFunction)
{
    auto v = classify(read_fixture("diagnostics/08_unbound_function.txt"), 1, false, 0, 60);
    auto advice = match_guidance(v, builtin_guidance());
    ASSERT_EQ(advice.size(), 1u);
    EXPECT_NE(advice[0].find("avoid undefined functions"), std::string::npos);
}

TEST(Guidance, UnmatchedIsEmpty)
{
    auto v = classify(read_fixture("diagnostics/09_type_mismatch.txt"), 1, false, 0, 60);
    EXPECT_TRUE(match_guidance(v, builtin_guidance()).empty());
}

TEST(Guidance, OverlappingRulesInFileOrder)
{
    auto rules = parse_guidance_rules("# two rules\nsecond\tpost-condition\tB\nfirst\tdoes not hold\tA\n");
    auto v = classify(read_fixture("diagnostics/04_post_condition_codespan.txt"), 1, false, 0, 60);
    EXPECT_EQ(match_guidance(v, rules), (std::vector<std::string>{"B", "A"}));
}

TEST(Guidance, BadRulesRejected)
{
    EXPECT_THROW(parse_guidance_rules("a\t(unclosed\tx\n"), ConfigError);
    EXPECT_THROW(parse_guidance_rules("a\tx\ty\na\tz\tw\n"), ConfigError);
    for (const auto& r : builtin_guidance())
        EXPECT_NO_THROW(std::regex(r.pattern));
}

TEST(Attribute, PostConditionToEnsures)
{
    auto v = classify(read_fixture("diagnostics/04_post_condition_codespan.txt"), 1, false, 0, 60);
    EXPECT_EQ(attribute_failure(v, all_active(), false), (ClassSet{ClauseClass::Ensures}));
    ClassSet with_loop = all_active();
    with_loop.insert(ClauseClass::LoopInvariant);
    EXPECT_EQ(attribute_failure(v, with_loop, true), (ClassSet{ClauseClass::Ensures, ClauseClass::LoopInvariant}));
}

TEST(Attribute, AbortNotCoveredToAbortsIf)
{
    auto v = classify(read_fixture("diagnostics/01_abort_not_covered_short.txt"), 1, false, 0, 60);
    EXPECT_EQ(attribute_failure(v, all_active(), false), (ClassSet{ClauseClass::AbortsIf}));
}

TEST(Attribute, ModifiesAndSnippetKeyword)
{
    auto m = classify(read_fixture("diagnostics/06_modifies_permission.txt"), 1, false, 0, 60);
    EXPECT_EQ(attribute_failure(m, all_active(), false), (ClassSet{ClauseClass::Modifies}));
    auto u = classify(read_fixture("diagnostics/08_unbound_function.txt"), 1, false, 0, 60);
    EXPECT_EQ(attribute_failure(u, all_active(), false), (ClassSet{ClauseClass::Ensures}));
}

TEST(Attribute, NoClauseSpanMeansAllActive)
{
    auto v = classify(read_fixture("diagnostics/15_dependency_failure.txt"), 1, false, 0, 60);
    EXPECT_EQ(attribute_failure(v, all_active(), false), all_active());
}

TEST(Mock, RuleSemantics)
{
    auto rules = parse_mock_rules("alpha AND !beta\tCounterexample\terror: post-condition does not hold\n"
                                  "/gam+a/\tCompileError\terror[E1]: bad\\nsecond\n*\tPass\n");
    MockProver p(rules, 5);
    EXPECT_EQ(p.verify("alpha").kind, VerdictKind::Counterexample);
    EXPECT_EQ(p.verify("alpha beta").kind, VerdictKind::Pass);
    auto ce = p.verify("gammma");
    EXPECT_EQ(ce.kind, VerdictKind::CompileError);
    EXPECT_EQ(ce.diagnostics[0].notes, (std::vector<std::string>{"second"}));
    EXPECT_THROW(parse_mock_rules("x\tMaybe\t\n"), ConfigError);
}

TEST(Mock, WithdrawSpec)
{
    auto p = MockProver::from_file(fixture_path("mock/withdraw.rules").string());
    std::string spec = read_fixture("corpus/coin_spec.move");
    EXPECT_EQ(p.verify(spec).kind, VerdictKind::Pass);
    std::string missing = spec;
    missing.erase(missing.find("        aborts_if balance < amount;\n"),
                  std::string("        aborts_if balance < amount;\n").size());
    auto v = p.verify(missing);
    ASSERT_EQ(v.kind, VerdictKind::Counterexample);
    ASSERT_TRUE(v.counterexample);
    EXPECT_EQ(v.counterexample->frames.front().line, 22);
}

TEST(Mock, TimeoutWallTime)
{
    MockProver p(parse_mock_rules("*\tTimeout\t\n"), 7);
    auto v = p.verify("x");
    EXPECT_EQ(v.kind, VerdictKind::Timeout);
    EXPECT_GE(v.wall_time, 7.0);
}

namespace {

ProverConfig shell(const std::string& command, double timeout = 10)
{
    ProverConfig c;
    c.backend = ProverConfig::Backend::External;
    c.command = command;
    c.timeout_seconds = timeout;
    return c;
}

} // namespace

TEST(External, ParsesFixtureOutput)
{
    auto path = fixture_path("diagnostics/04_post_condition_codespan.txt").string();
    auto v = verify("module 0x1::m {}", shell("cat '" + path + "'; exit 1"));
    EXPECT_EQ(v.kind, VerdictKind::Counterexample);
}

TEST(External, WorkspaceHoldsSource)
{
    auto v = verify("module 0x1::probe { fun f() {} }",
                    shell("grep -q 'module 0x1::probe' {file} && test -f {workspace}/Move.toml"));
    EXPECT_EQ(v.kind, VerdictKind::Pass) << v.raw_output;
}

TEST(External, TimeoutEnforced)
{
    auto v = verify("module 0x1::m {}", shell("sleep 5", 0.3));
    EXPECT_EQ(v.kind, VerdictKind::Timeout);
    EXPECT_GE(v.wall_time, 0.3);
    EXPECT_LT(v.wall_time, 4.0);
}

TEST(External, MissingTool)
{
    EXPECT_THROW(verify("module 0x1::m {}", shell("definitely-not-a-prover-binary --x")), ToolNotFound);
}

TEST(External, WorkspaceSetupFailure)
{
    auto c = shell("true");
    c.workspace_dir = "/proc/msgpipe-cannot-create";
    EXPECT_THROW(verify("module 0x1::m {}", c), WorkspaceSetupFailed);
}

TEST(External, VerifyAllKeepsOrder)
{
    ExternalProver p(shell("grep -q ok {file}"));
    auto v = verify_all(p, {"module 0x1::a { } // ok", "module 0x1::b { }", "module 0x1::c { } // ok"}, 2);
    ASSERT_EQ(v.size(), 3u);
    EXPECT_EQ(v[0].kind, VerdictKind::Pass);
    EXPECT_EQ(v[1].kind, VerdictKind::CompileError);
    EXPECT_EQ(v[2].kind, VerdictKind::Pass);
}

// Shared contract: both backends honour the verdict invariants.
class VerdictContract : public ::testing::TestWithParam<std::string> {
  protected:
    std::unique_ptr<Prover> make(VerdictKind kind)
    {
        std::string file = kind == VerdictKind::Counterexample ? "04_post_condition_codespan.txt"
                           : kind == VerdictKind::CompileError ? "08_unbound_function.txt"
                           : kind == VerdictKind::Timeout      ? "11_solver_timeout.txt"
                                                               : "12_pass.txt";
        std::string text = read_fixture("diagnostics/" + file);
        if (GetParam() == "mock") {
            std::string escaped;
            for (char c : text)
                escaped += c == '\n' ? std::string("\\n") : std::string(1, c);
            return std::make_unique<MockProver>(
                parse_mock_rules(std::string("*\t") + to_string(kind) + "\t" + escaped + "\n"), 2);
        }
        std::string path = fixture_path("diagnostics/" + file).string();
        return std::make_unique<ExternalProver>(
            shell("cat '" + path + "'; exit " + (kind == VerdictKind::Pass ? "0" : "1"), 2));
    }
};

TEST_P(VerdictContract, Invariants)
{
    for (auto kind : {VerdictKind::Pass, VerdictKind::Counterexample, VerdictKind::Timeout,
                      VerdictKind::CompileError}) {
        auto p = make(kind);
        auto v = p->verify("module 0x1::m {}");
        EXPECT_EQ(v.kind, kind) << GetParam();
        if (v.kind == VerdictKind::Counterexample || v.kind == VerdictKind::CompileError)
            EXPECT_FALSE(v.diagnostics.empty());
        if (v.kind == VerdictKind::Timeout)
            EXPECT_GE(v.wall_time, p->timeout_seconds());
    }
}

INSTANTIATE_TEST_SUITE_P(Backends, VerdictContract, ::testing::Values("mock", "external"));
