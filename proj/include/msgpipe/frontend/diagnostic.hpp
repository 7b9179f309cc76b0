// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "msgpipe/frontend/ast.hpp"

namespace msgpipe {

enum class Severity { Error, Warning, Note };

const char* to_string(Severity s);

/// A located finding. `code` is a stable identifier such as "ArityMismatch".
struct Diagnostic {
    Severity severity = Severity::Error;
    std::string code;
    std::string message;
    ast::Span span;
    std::string function; // enclosing function, when known
    std::string file;     // reported file, when the source names one
    std::vector<std::string> notes; // snippet and annotation lines, verbatim

    /// `file:line:col: severity: message`
    std::string format(std::string_view file) const;
};

std::string format_all(const std::vector<Diagnostic>& diags, std::string_view file);

} // namespace msgpipe
