// SPDX-License-Identifier: Apache-2.0

#include <fstream>
#include <sstream>

#include "msgpipe/errors.hpp"
#include "msgpipe/prover/prover.hpp"

namespace msgpipe::prover {

namespace {

std::string unescape(std::string_view s)
{
    std::string out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '\\' && i + 1 < s.size()) {
            char n = s[i + 1];
            if (n == 'n' || n == 't' || n == '\\') {
                out += n == 'n' ? '\n' : n == 't' ? '\t' : '\\';
                ++i;
                continue;
            }
        }
        out += s[i];
    }
    return out;
}

std::string trim(std::string s)
{
    auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos)
        return {};
    return s.substr(b, s.find_last_not_of(" \t") - b + 1);
}

MockRule::Conjunct conjunct(std::string text, int line_no)
{
    MockRule::Conjunct c;
    text = trim(std::move(text));
    if (!text.empty() && text[0] == '!') {
        c.negated = true;
        text = trim(text.substr(1));
    }
    if (text.size() >= 2 && text.front() == '/' && text.back() == '/') {
        c.is_regex = true;
        text = text.substr(1, text.size() - 2);
        try {
            c.re = std::regex(text);
        } catch (const std::regex_error& e) {
            throw ConfigError("mock rule line " + std::to_string(line_no) + ": bad regex: " + e.what());
        }
    }
    c.text = unescape(text);
    return c;
}

} // namespace

bool MockRule::matches(std::string_view source) const
{
    for (const auto& c : conjuncts) {
        bool hit = c.is_regex ? std::regex_search(source.begin(), source.end(), c.re)
                              : source.find(c.text) != std::string_view::npos;
        if (hit == c.negated)
            return false;
    }
    return true;
}

std::vector<MockRule> parse_mock_rules(std::string_view text)
{
    std::vector<MockRule> rules;
    std::istringstream in{std::string(text)};
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (trim(line).empty() || line[0] == '#')
            continue;
        auto t1 = line.find('\t');
        if (t1 == std::string::npos)
            throw ConfigError("mock rule line " + std::to_string(line_no) + ": expected pattern TAB verdict");
        auto t2 = line.find('\t', t1 + 1);
        std::string pattern = line.substr(0, t1);
        std::string verdict = trim(line.substr(t1 + 1, t2 == std::string::npos ? std::string::npos : t2 - t1 - 1));
        MockRule r;
        auto kind = verdict_from_string(verdict);
        if (!kind)
            throw ConfigError("mock rule line " + std::to_string(line_no) + ": unknown verdict '" + verdict + "'");
        r.verdict = *kind;
        r.diagnostic = t2 == std::string::npos ? std::string{} : unescape(line.substr(t2 + 1));
        if (trim(pattern) != "*") {
            std::size_t pos = 0;
            for (;;) {
                auto next = pattern.find(" AND ", pos);
                r.conjuncts.push_back(conjunct(pattern.substr(pos, next - pos), line_no));
                if (next == std::string::npos)
                    break;
                pos = next + 5;
            }
        }
        rules.push_back(std::move(r));
    }
    return rules;
}

MockProver::MockProver(std::vector<MockRule> rules, double timeout_seconds)
    : rules_(std::move(rules)), timeout_(timeout_seconds)
{
}

MockProver MockProver::from_file(const std::string& path, double timeout_seconds)
{
    std::ifstream in(path);
    if (!in)
        throw ToolNotFound("mock rule file not found: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return MockProver(parse_mock_rules(ss.str()), timeout_seconds);
}

ProverVerdict MockProver::verify(std::string_view module_source) const
{
    for (const auto& r : rules_) {
        if (!r.matches(module_source))
            continue;
        int exit_code = r.verdict == VerdictKind::Pass ? 0 : 1;
        bool killed = r.verdict == VerdictKind::Timeout;
        ProverVerdict v = classify(r.diagnostic, exit_code, killed, 0, timeout_, module_source);
        if (v.kind != r.verdict) {
            v.kind = r.verdict;
            if (v.kind == VerdictKind::Pass) {
                v.counterexample.reset();
            } else if (v.diagnostics.empty()) {
                Diagnostic d;
                d.code = "prover";
                d.message = r.diagnostic.empty() ? std::string(to_string(v.kind)) : r.diagnostic;
                v.diagnostics.push_back(std::move(d));
            }
        }
        if (v.kind == VerdictKind::Timeout)
            v.wall_time = timeout_;
        return v;
    }
    return ProverVerdict{};
}

} // namespace msgpipe::prover
