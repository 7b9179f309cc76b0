// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "msgpipe/clause_class.hpp"
#include "msgpipe/frontend/diagnostic.hpp"

namespace msgpipe::prover {

enum class VerdictKind { Pass, Counterexample, Timeout, CompileError };

const char* to_string(VerdictKind k);
std::optional<VerdictKind> verdict_from_string(std::string_view s);

struct Frame {
    std::string function;
    std::string file;
    int line = 0;
    std::vector<std::pair<std::string, std::string>> assignments;
};

struct CallStackTrace {
    std::vector<Frame> frames;
};

struct ProverVerdict {
    VerdictKind kind = VerdictKind::Pass;
    std::vector<Diagnostic> diagnostics; // errors first, warnings after
    std::optional<CallStackTrace> counterexample;
    double wall_time = 0;
    std::string raw_output;

    bool passed() const { return kind == VerdictKind::Pass; }
    /// Error diagnostics rendered with their notes, for prompts and logs.
    std::string diagnostic_text() const;
};

struct ProverConfig {
    enum class Backend { External, Mock };

    Backend backend = Backend::Mock;
    /// External: shell command; `{workspace}` and `{file}` are substituted.
    std::string command = "aptos move prove --package-dir {workspace}";
    double timeout_seconds = 60;
    /// Parent directory for temporary workspaces; empty means the system temp dir.
    std::string workspace_dir;
    /// Extra text appended to the generated Move.toml (dependencies, addresses).
    std::string manifest_extra;
    bool keep_workspace = false;
    /// Mock: rule file path.
    std::string rulefile;
    int parallelism = 4;
};

class Prover {
  public:
    virtual ~Prover() = default;
    /// Blocking. Throws ToolNotFound / WorkspaceSetupFailed.
    virtual ProverVerdict verify(std::string_view module_source) const = 0;
    virtual double timeout_seconds() const = 0;
};

/// Rule: `pattern TAB verdict TAB diagnostic-text`. The pattern is `*` or a
/// list of conjuncts joined by ` AND `; a conjunct is a literal substring or
/// `/regex/`, optionally negated with a leading `!`. The first matching rule
/// wins; no match means Pass. `\n` and `\t` in the text are unescaped.
struct MockRule {
    struct Conjunct {
        bool negated = false;
        bool is_regex = false;
        std::string text;
        std::regex re;
    };
    std::vector<Conjunct> conjuncts; // empty means always
    VerdictKind verdict = VerdictKind::Pass;
    std::string diagnostic;

    bool matches(std::string_view source) const;
};

std::vector<MockRule> parse_mock_rules(std::string_view text);

class MockProver final : public Prover {
  public:
    explicit MockProver(std::vector<MockRule> rules, double timeout_seconds = 60);
    static MockProver from_file(const std::string& path, double timeout_seconds = 60);

    ProverVerdict verify(std::string_view module_source) const override;
    double timeout_seconds() const override { return timeout_; }

  private:
    std::vector<MockRule> rules_;
    double timeout_;
};

class ExternalProver final : public Prover {
  public:
    explicit ExternalProver(ProverConfig config);

    ProverVerdict verify(std::string_view module_source) const override;
    double timeout_seconds() const override { return config_.timeout_seconds; }

  private:
    ProverConfig config_;
};

std::unique_ptr<Prover> make_prover(const ProverConfig& config);

ProverVerdict verify(std::string_view module_source, const ProverConfig& config);

/// Verifies each source with at most `parallelism` concurrent runs.
std::vector<ProverVerdict> verify_all(const Prover& prover, const std::vector<std::string>& sources,
                                      int parallelism = 4);

/// Turns raw prover output into a verdict. `source` helps locate snippet
/// lines that carry no file position.
ProverVerdict classify(std::string_view output, int exit_code, bool killed_by_timeout, double elapsed,
                       double limit, std::string_view source = {});

/// Parses codespan-style diagnostics; unparsed lines are kept as notes.
std::vector<Diagnostic> parse_diagnostics(std::string_view output);

/// Counterexample frames (`at file:line: fn`, `at fn (Line N)`,
/// `at file:fn (Line N)`) with the assignments that follow them.
CallStackTrace parse_trace(const Diagnostic& d, std::string_view source = {});

struct GuidanceRule {
    std::string error_tag;
    std::string pattern;
    std::string advice;
};

/// Built-in rules for impure functions in specs and undefined functions.
const std::vector<GuidanceRule>& builtin_guidance();

/// TSV lines `tag TAB pattern TAB advice`. Throws ConfigError on a bad
/// regex or a duplicate tag.
std::vector<GuidanceRule> parse_guidance_rules(std::string_view text);

/// Advice of every rule matching any error diagnostic, in rule order.
std::vector<std::string> match_guidance(const ProverVerdict& verdict, const std::vector<GuidanceRule>& rules);

/// Clause classes responsible for a failure. Unattributable diagnostics map
/// to every active class.
ClassSet attribute_failure(const ProverVerdict& verdict, const ClassSet& active, bool has_loops,
                           std::string_view source = {});

} // namespace msgpipe::prover
