// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <regex>
#include <sstream>

#include "msgpipe/prover/prover.hpp"

namespace msgpipe::prover {

namespace {

const std::regex kHeader(R"(^\s*(error|warning)(\[([A-Z]\d+)\])?:\s*(.*)$)");
const std::regex kLocation(R"((?:┌─|-->)\s*([^\s:]+):(\d+):(\d+))");
const std::regex kTimeout(R"(timeout|timed out|out of resources)", std::regex::icase);
const std::regex kVerificationFailure(
    R"(does not hold|abort not covered|does not abort under this condition|permission to modify|assertion failed|unexpected abort)");

const std::regex kFrameFileLine(R"(^at\s+([^\s:]+):(\d+):\s*([A-Za-z_]\w*))");
const std::regex kFrameFileFn(R"(^at\s+([^\s:]+):([A-Za-z_]\w*)\s*\(Line\s+(\d+)\))");
const std::regex kFrameFn(R"(^at\s+([A-Za-z_]\w*)\s*\(Line\s+(\d+)\))");
const std::regex kAssignment(R"(^([A-Za-z_][\w.]*)\s*=\s*(.+)$)");
const std::regex kSnippet(R"(^\s*(\d+)?\s*[│|](.*)$)");
const std::regex kFunDecl(R"(\bfun\s+([A-Za-z_]\w*))");

std::vector<std::string> split_lines(std::string_view text)
{
    std::vector<std::string> out;
    std::string cur;
    for (char c : text) {
        if (c == '\n') {
            if (!cur.empty() && cur.back() == '\r')
                cur.pop_back();
            out.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty())
        out.push_back(std::move(cur));
    return out;
}

std::string trim(std::string_view s)
{
    auto b = s.find_first_not_of(" \t");
    if (b == std::string_view::npos)
        return {};
    auto e = s.find_last_not_of(" \t");
    return std::string(s.substr(b, e - b + 1));
}

bool is_chatter(const std::string& line)
{
    std::string t = trim(line);
    return t.empty() || t.rfind("[INFO]", 0) == 0 || t.rfind("Error: exiting with", 0) == 0;
}

/// Strips gutter characters: `|`, `│`, `·`, `=` and whitespace.
std::string strip_gutter(const std::string& line)
{
    std::string s = line;
    for (;;) {
        std::string t = trim(s);
        if (t.rfind("|", 0) == 0)
            s = t.substr(1);
        else if (t.rfind("│", 0) == 0)
            s = t.substr(std::string("│").size());
        else if (t.rfind("·", 0) == 0)
            s = t.substr(std::string("·").size());
        else if (t.rfind("=", 0) == 0)
            s = t.substr(1);
        else
            return t;
    }
}

bool is_marker_only(const std::string& s)
{
    return s.find_first_not_of(" \t-^─╭╰│|·~") == std::string::npos ||
           s.find("abort happened here") != std::string::npos;
}

/// Enclosing function of a 1-based source line.
std::string enclosing_function(std::string_view source, int line)
{
    auto lines = split_lines(source);
    for (int i = std::min<int>(line, static_cast<int>(lines.size())) - 1; i >= 0; --i) {
        std::smatch m;
        if (std::regex_search(lines[static_cast<std::size_t>(i)], m, kFunDecl))
            return m[1];
    }
    return {};
}

int locate_line(std::string_view source, const std::string& snippet)
{
    std::string needle = trim(snippet);
    if (needle.empty())
        return 0;
    auto lines = split_lines(source);
    for (std::size_t i = 0; i < lines.size(); ++i)
        if (lines[i].find(needle) != std::string::npos)
            return static_cast<int>(i) + 1;
    return 0;
}

} // namespace

const char* to_string(VerdictKind k)
{
    switch (k) {
    case VerdictKind::Pass: return "Pass";
    case VerdictKind::Counterexample: return "Counterexample";
    case VerdictKind::Timeout: return "Timeout";
    case VerdictKind::CompileError: return "CompileError";
    }
    return "?";
}

std::optional<VerdictKind> verdict_from_string(std::string_view s)
{
    for (auto k : {VerdictKind::Pass, VerdictKind::Counterexample, VerdictKind::Timeout, VerdictKind::CompileError})
        if (s == to_string(k))
            return k;
    return std::nullopt;
}

std::string ProverVerdict::diagnostic_text() const
{
    std::string out;
    for (const auto& d : diagnostics) {
        if (d.severity != Severity::Error)
            continue;
        out += "error";
        if (!d.code.empty() && d.code != "prover")
            out += "[" + d.code + "]";
        out += ": " + d.message + "\n";
        for (const auto& n : d.notes)
            out += n + "\n";
    }
    return out;
}

std::vector<Diagnostic> parse_diagnostics(std::string_view output)
{
    std::vector<Diagnostic> out;
    Diagnostic* cur = nullptr;
    for (const auto& line : split_lines(output)) {
        std::smatch m;
        if (std::regex_match(line, m, kHeader)) {
            Diagnostic d;
            d.severity = m[1] == "error" ? Severity::Error : Severity::Warning;
            d.code = m[3].matched ? std::string(m[3]) : std::string("prover");
            d.message = trim(std::string(m[4]));
            out.push_back(std::move(d));
            cur = &out.back();
            continue;
        }
        if (!cur || is_chatter(line))
            continue;
        if (std::regex_search(line, m, kLocation) && cur->span.line == 0) {
            cur->file = m[1];
            cur->span = {std::stoi(m[2]), std::stoi(m[3])};
        }
        cur->notes.push_back(line);
    }
    std::stable_partition(out.begin(), out.end(), [](const Diagnostic& d) { return d.severity == Severity::Error; });
    return out;
}

CallStackTrace parse_trace(const Diagnostic& d, std::string_view source)
{
    CallStackTrace trace;
    for (const auto& raw : d.notes) {
        std::string s = strip_gutter(raw);
        std::smatch m;
        if (std::regex_search(s, m, kFrameFileLine)) {
            trace.frames.push_back({m[3], m[1], std::stoi(m[2]), {}});
        } else if (std::regex_search(s, m, kFrameFileFn)) {
            trace.frames.push_back({m[2], m[1], std::stoi(m[3]), {}});
        } else if (std::regex_search(s, m, kFrameFn)) {
            trace.frames.push_back({m[1], {}, std::stoi(m[2]), {}});
        } else if (!trace.frames.empty() && std::regex_match(s, m, kAssignment) && raw.find('=') < raw.size() &&
                   (trim(raw).rfind("=", 0) == 0 || trim(raw).rfind("|", 0) == 0)) {
            trace.frames.back().assignments.emplace_back(m[1], trim(std::string(m[2])));
        }
    }
    if (!trace.frames.empty())
        return trace;

    // No frames: anchor at the first code line of the snippet.
    for (const auto& raw : d.notes) {
        std::smatch m;
        if (!std::regex_match(raw, m, kSnippet))
            continue;
        std::string content = trim(std::string(m[2]));
        if (content.empty() || is_marker_only(content))
            continue;
        int line = m[1].matched ? std::stoi(m[1]) : locate_line(source, content);
        if (line == 0 && d.span.line > 0)
            line = d.span.line;
        Frame f;
        f.line = line;
        f.file = d.file;
        if (!source.empty() && line > 0)
            f.function = enclosing_function(source, line);
        trace.frames.push_back(std::move(f));
        break;
    }
    return trace;
}

ProverVerdict classify(std::string_view output, int exit_code, bool killed_by_timeout, double elapsed, double limit,
                       std::string_view source)
{
    ProverVerdict v;
    v.raw_output = std::string(output);
    v.wall_time = elapsed;
    v.diagnostics = parse_diagnostics(output);

    const Diagnostic* failure = nullptr;
    bool timeout_text = false;
    bool has_error = false;
    for (const auto& d : v.diagnostics) {
        if (d.severity != Severity::Error)
            continue;
        has_error = true;
        if (std::regex_search(d.message, kTimeout))
            timeout_text = true;
        else if (!failure && std::regex_search(d.message, kVerificationFailure))
            failure = &d;
    }

    if (killed_by_timeout || timeout_text) {
        v.kind = VerdictKind::Timeout;
        v.wall_time = std::max(elapsed, limit);
    } else if (failure) {
        v.kind = VerdictKind::Counterexample;
        v.counterexample = parse_trace(*failure, source);
    } else if (has_error || exit_code != 0) {
        v.kind = VerdictKind::CompileError;
        if (!has_error) {
            Diagnostic d;
            d.code = "prover";
            d.message = "prover exited with status " + std::to_string(exit_code);
            for (const auto& line : split_lines(output)) {
                if (is_chatter(line))
                    continue;
                if (d.notes.empty())
                    d.message = trim(line);
                d.notes.push_back(line);
            }
            v.diagnostics.insert(v.diagnostics.begin(), std::move(d));
        }
    } else {
        v.kind = VerdictKind::Pass;
    }
    return v;
}

} // namespace msgpipe::prover
