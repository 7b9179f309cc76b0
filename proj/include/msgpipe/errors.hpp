// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

#include "msgpipe/frontend/ast.hpp"

namespace msgpipe {

class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class SyntaxError : public Error {
  public:
    SyntaxError(ast::Span span, const std::string& message)
        : Error(std::to_string(span.line) + ":" + std::to_string(span.col) + ": " + message),
          span_(span), message_(message)
    {
    }
    ast::Span span() const { return span_; }
    const std::string& message() const { return message_; }

  private:
    ast::Span span_;
    std::string message_;
};

class UnsupportedConstruct : public SyntaxError {
  public:
    UnsupportedConstruct(ast::Span span, const std::string& construct)
        : SyntaxError(span, "unsupported construct: " + construct), construct_(construct)
    {
    }
    const std::string& construct() const { return construct_; }

  private:
    std::string construct_;
};

class TargetNotFound : public Error {
  public:
    explicit TargetNotFound(const std::string& target)
        : Error("target not found: " + target), target_(target)
    {
    }
    const std::string& target() const { return target_; }

  private:
    std::string target_;
};

class SignatureMismatch : public Error {
  public:
    using Error::Error;
};

class ConflictingBindings : public Error {
  public:
    using Error::Error;
};

class NoCandidates : public Error {
  public:
    using Error::Error;
};

class PreconditionViolated : public Error {
  public:
    using Error::Error;
};

class EmptyOutput : public Error {
  public:
    using Error::Error;
};

class BackendError : public Error {
  public:
    BackendError(int status, std::string body)
        : Error("backend error (status " + std::to_string(status) + "): " + body),
          status_(status), body_(std::move(body))
    {
    }
    int status() const { return status_; }
    const std::string& body() const { return body_; }

  private:
    int status_;
    std::string body_;
};

class ReplayMiss : public Error {
  public:
    ReplayMiss(std::string digest, std::string hint)
        : Error("replay miss for digest " + digest +
                (hint.empty() ? std::string{} : "; nearest recorded prompt: " + hint)),
          digest_(std::move(digest)), hint_(std::move(hint))
    {
    }
    const std::string& digest() const { return digest_; }
    const std::string& hint() const { return hint_; }

  private:
    std::string digest_;
    std::string hint_;
};

class ToolNotFound : public Error {
  public:
    using Error::Error;
};

class WorkspaceSetupFailed : public Error {
  public:
    using Error::Error;
};

class ConfigError : public Error {
  public:
    using Error::Error;
};

} // namespace msgpipe
