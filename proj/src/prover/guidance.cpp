// SPDX-License-Identifier: Apache-2.0

#include <regex>
#include <set>

#include "msgpipe/errors.hpp"
#include "msgpipe/prover/prover.hpp"

namespace msgpipe::prover {

namespace {

std::string diagnostic_blob(const Diagnostic& d)
{
    std::string s = d.message;
    for (const auto& n : d.notes)
        s += "\n" + n;
    return s;
}

std::vector<std::string> split(std::string_view text, char sep)
{
    std::vector<std::string> out;
    std::string cur;
    for (char c : text) {
        if (c == sep) {
            out.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(std::move(cur));
    return out;
}

} // namespace

const std::vector<GuidanceRule>& builtin_guidance()
{
    static const std::vector<GuidanceRule> rules{
        {"impure-function", R"(not a pure function|is not pure|impure|cannot be (called|used) (from|in) (a )?spec)",
         "The specification calls a function that is not pure (early returns or global writes). Do not call it "
         "from the spec; write a pure spec helper instead."},
        {"undefined-function",
         R"([Uu]nbound (function|module member)|[Uu]ndefined function|[Uu]ndeclared function|[Uu]nbound .*function)",
         "The specification calls a function that does not exist. Use only functions from the module, its "
         "dependencies, or a `spec fun` you define; avoid undefined functions."},
    };
    return rules;
}

std::vector<GuidanceRule> parse_guidance_rules(std::string_view text)
{
    std::vector<GuidanceRule> out;
    std::set<std::string> tags;
    for (const auto& line : split(text, '\n')) {
        if (line.empty() || line[0] == '#')
            continue;
        auto f = split(line, '\t');
        if (f.size() != 3)
            throw ConfigError("guidance rule needs 3 tab-separated fields: " + line);
        try {
            std::regex re(f[1]);
        } catch (const std::regex_error& e) {
            throw ConfigError("guidance rule '" + f[0] + "' has a bad pattern: " + e.what());
        }
        if (!tags.insert(f[0]).second)
            throw ConfigError("duplicate guidance tag: " + f[0]);
        out.push_back({f[0], f[1], f[2]});
    }
    return out;
}

std::vector<std::string> match_guidance(const ProverVerdict& verdict, const std::vector<GuidanceRule>& rules)
{
    std::vector<std::string> out;
    if (verdict.passed())
        return out;
    for (const auto& r : rules) {
        std::regex re(r.pattern);
        for (const auto& d : verdict.diagnostics) {
            if (d.severity != Severity::Error)
                continue;
            if (std::regex_search(diagnostic_blob(d), re)) {
                out.push_back(r.advice);
                break;
            }
        }
    }
    return out;
}

ClassSet attribute_failure(const ProverVerdict& verdict, const ClassSet& active, bool has_loops,
                           std::string_view source)
{
    static const std::regex kAbort(R"(abort not covered|does not abort under this condition)");
    static const std::regex kPost(R"(post-condition does not hold)");
    static const std::regex kModify(R"(permission to modify|modifies)");
    static const std::regex kLoop(R"(loop invariant)");

    std::vector<std::string> source_lines;
    if (!source.empty())
        source_lines = split(source, '\n');

    auto from_text = [](const std::string& text, ClassSet& out) {
        static const std::regex kw(R"(\b(ensures|aborts_if|modifies|invariant)\b)");
        std::smatch m;
        if (!std::regex_search(text, m, kw))
            return;
        std::string k = m[1];
        if (k == "ensures")
            out.insert(ClauseClass::Ensures);
        else if (k == "aborts_if")
            out.insert(ClauseClass::AbortsIf);
        else if (k == "modifies")
            out.insert(ClauseClass::Modifies);
        else
            out.insert(ClauseClass::LoopInvariant);
    };

    ClassSet out;
    bool unattributed = false;
    for (const auto& d : verdict.diagnostics) {
        if (d.severity != Severity::Error)
            continue;
        ClassSet mine;
        if (std::regex_search(d.message, kAbort)) {
            mine.insert(ClauseClass::AbortsIf);
        } else if (std::regex_search(d.message, kPost)) {
            mine.insert(ClauseClass::Ensures);
            if (has_loops)
                mine.insert(ClauseClass::LoopInvariant);
        } else if (std::regex_search(d.message, kLoop)) {
            mine.insert(ClauseClass::LoopInvariant);
        } else if (std::regex_search(d.message, kModify)) {
            mine.insert(ClauseClass::Modifies);
        } else {
            // Clause keyword on the reported line, or in the quoted snippet.
            if (d.span.line > 0 && static_cast<std::size_t>(d.span.line) <= source_lines.size())
                from_text(source_lines[static_cast<std::size_t>(d.span.line) - 1], mine);
            for (std::size_t i = 0; mine.empty() && i < d.notes.size(); ++i) {
                const auto& n = d.notes[i];
                if (n.find("│") != std::string::npos || n.find('|') != std::string::npos)
                    from_text(n, mine);
            }
        }
        ClassSet kept;
        for (auto c : mine)
            if (active.count(c))
                kept.insert(c);
        if (kept.empty())
            unattributed = true;
        out.insert(kept.begin(), kept.end());
    }
    if (unattributed || out.empty())
        out.insert(active.begin(), active.end());
    return out;
}

} // namespace msgpipe::prover
