// SPDX-License-Identifier: Apache-2.0

#include "lexer.hpp"

#include <array>
#include <cctype>

#include "msgpipe/errors.hpp"

namespace msgpipe::frontend {

namespace {

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

// Longest match first.
constexpr std::array<std::string_view, 27> kPuncts = {
    "==>", "::", "==", "!=", "<=", ">=", "&&", "||", "{", "}", "(", ")", "[", "]",
    "<",   ">",  ",",  ";",  ":",  ".",  "=",  "+",  "-", "*", "/", "%", "&",
};

} // namespace

std::vector<Token> lex(std::string_view src)
{
    std::vector<Token> out;
    std::size_t i = 0;
    int line = 1;
    int col = 1;

    auto advance = [&](std::size_t n) {
        for (std::size_t k = 0; k < n && i < src.size(); ++k, ++i) {
            if (src[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
    };

    while (i < src.size()) {
        char c = src[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            advance(1);
            continue;
        }
        if (src.substr(i, 2) == "//") {
            while (i < src.size() && src[i] != '\n')
                advance(1);
            continue;
        }
        if (src.substr(i, 2) == "/*") {
            ast::Span start{line, col};
            advance(2);
            while (i < src.size() && src.substr(i, 2) != "*/")
                advance(1);
            if (i >= src.size())
                throw SyntaxError(start, "unterminated block comment");
            advance(2);
            continue;
        }

        Token tok;
        tok.span = {line, col};
        std::size_t start = i;
        if (ident_start(c)) {
            while (i < src.size() && ident_char(src[i]))
                advance(1);
            tok.kind = TokKind::Ident;
        } else if (std::isdigit(static_cast<unsigned char>(c))) {
            if (src.substr(i, 2) == "0x") {
                advance(2);
                while (i < src.size() && std::isxdigit(static_cast<unsigned char>(src[i])))
                    advance(1);
            } else {
                while (i < src.size() && (std::isdigit(static_cast<unsigned char>(src[i])) || src[i] == '_'))
                    advance(1);
            }
            // type suffix such as 10u64
            while (i < src.size() && ident_char(src[i]))
                advance(1);
            tok.kind = TokKind::Number;
        } else if (c == '@') {
            advance(1);
            while (i < src.size() && ident_char(src[i]))
                advance(1);
            if (i - start < 2)
                throw SyntaxError(tok.span, "expected address after '@'");
            tok.kind = TokKind::Address;
        } else {
            std::string_view matched;
            for (std::string_view p : kPuncts) {
                if (src.substr(i, p.size()) == p) {
                    matched = p;
                    break;
                }
            }
            if (matched.empty()) {
                if (c == '!') {
                    matched = "!";
                } else if (c == '|' || c == '^') {
                    throw UnsupportedConstruct(tok.span, std::string("bitwise operator '") + c + "'");
                } else if (c == '"' || c == '\'') {
                    throw UnsupportedConstruct(tok.span, "string literal");
                } else if (c == '#') {
                    throw UnsupportedConstruct(tok.span, "attribute");
                } else {
                    throw SyntaxError(tok.span, std::string("unexpected character '") + c + "'");
                }
            }
            advance(matched.size());
            tok.kind = TokKind::Punct;
        }
        tok.text = std::string(src.substr(start, i - start));
        out.push_back(std::move(tok));
    }
    Token end;
    end.kind = TokKind::End;
    end.span = {line, col};
    out.push_back(end);
    return out;
}

} // namespace msgpipe::frontend
