// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "msgpipe/frontend/ast.hpp"

namespace msgpipe::frontend {

enum class TokKind { Ident, Number, Address, Punct, End };

struct Token {
    TokKind kind = TokKind::End;
    std::string text;
    ast::Span span;

    bool is(TokKind k, std::string_view t) const { return kind == k && text == t; }
    bool punct(std::string_view t) const { return is(TokKind::Punct, t); }
    bool ident(std::string_view t) const { return is(TokKind::Ident, t); }
};

/// Tokenizes Move-subset text. Comments are dropped. Throws SyntaxError on
/// characters outside the lexical grammar.
std::vector<Token> lex(std::string_view source);

} // namespace msgpipe::frontend
