// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "msgpipe/clause_class.hpp"
#include "msgpipe/deps/deps.hpp"
#include "msgpipe/frontend/ast.hpp"
#include "msgpipe/llm/llm.hpp"
#include "msgpipe/prover/prover.hpp"

namespace msgpipe::ensemble {
struct VerificationUnit;
}

namespace msgpipe::agents {

struct ClauseSnippet {
    ClauseClass cls = ClauseClass::Ensures;
    std::vector<ast::Binding> bindings;
    std::vector<ast::Clause> clauses;
    std::vector<ast::SpecFun> helper_funs;
    std::optional<ast::FunctionDef> annotated_function; // LoopInvariant only
    std::map<deps::FunctionPath, std::vector<ast::Clause>> callee_snippets; // Modifies only
    std::string raw_model_text; // model reply followed by per-clause parse diagnostics
    std::vector<std::string> diagnostics;

    bool empty() const { return bindings.empty() && clauses.empty() && !annotated_function && callee_snippets.empty(); }
};

/// Target-side text of a snippet, as it would appear inside a spec block.
std::string print_snippet(const ClauseSnippet& s);

struct PromptBundle {
    std::string system;
    std::string user;
    std::vector<std::string> guidance;
    std::optional<ClauseSnippet> prior_snippet;
};

/// A prompt asset: `[system]` and `[user]` sections with `{{name}}` slots.
struct PromptTemplate {
    std::string system;
    std::string user;

    static PromptTemplate parse(const std::string& text);
    std::string fill_system(const std::map<std::string, std::string>& vars) const;
    std::string fill_user(const std::map<std::string, std::string>& vars) const;
};

/// Directory from MSGPIPE_PROMPTS if set, else the build-time default.
std::string prompts_dir();
/// Cached load of `<dir>/<name>.txt`. Throws ConfigError.
const PromptTemplate& load_prompt(const std::string& name, const std::string& dir = prompts_dir());
/// Asset name of a clause class agent.
std::string prompt_name(ClauseClass c);

struct AgentOptions {
    std::string model;
    double temperature = 0.0;
    int max_tokens = 2048;
    std::string prompts;
    std::size_t summary_limit = 1200;

    std::string dir() const { return prompts.empty() ? prompts_dir() : prompts; }
};

PromptBundle make_bundle(ClauseClass c, const deps::GenerationContext& ctx, std::vector<std::string> guidance = {},
                         std::optional<ClauseSnippet> prior = std::nullopt, const AgentOptions& opts = {});
/// User message: template text, then feedback and prior clauses when present.
std::string render_user(const PromptBundle& bundle);
llm::ChatRequest make_request(const PromptBundle& bundle, const AgentOptions& opts);

/// Text inside ``` fences, blocks joined by newlines. Empty when unfenced.
std::string extract_fenced(const std::string& reply);
/// Strips stray backticks, collapses blank runs and inner whitespace, inserts
/// missing semicolons, and splits the text into top-level members.
std::vector<std::string> sanitize(const std::string& text);

/// Parses a model reply into a snippet for `c`. Dropped members leave a
/// diagnostic. Throws EmptyOutput when nothing survives.
ClauseSnippet parse_reply(ClauseClass c, const std::string& reply, const deps::GenerationContext& ctx);

/// Throws PreconditionViolated for LoopInvariant without loops, EmptyOutput
/// for Modifies without borrow_global_mut, BackendError, EmptyOutput.
ClauseSnippet gen_clauses(ClauseClass c, const deps::GenerationContext& ctx, const PromptBundle& bundle,
                          llm::ChatBackend& llm, const AgentOptions& opts = {});

/// Verifies `aborts_if false;` alone. Pass yields the snippet; anything else
/// (including Timeout) yields nothing.
std::optional<ClauseSnippet> precheck_aborts_false(const ensemble::VerificationUnit& unit,
                                                   const prover::Prover& prover);

/// Bounded guidance paragraph. Falls back to the raw diagnostic on BackendError.
std::string summarize_error(const prover::ProverVerdict& verdict, llm::ChatBackend& llm,
                            const AgentOptions& opts = {});

/// Abstract block (`[abstract]` on every clause, helpers may be bodiless).
/// Falls back to `aborts_if [abstract] true;` on BackendError or unusable output.
ast::SpecBlock gen_abstract_spec(const deps::GenerationContext& ctx, llm::ChatBackend& llm,
                                 const AgentOptions& opts = {});

ast::SpecBlock minimal_abstract_block(const std::string& target_fn);

} // namespace msgpipe::agents
