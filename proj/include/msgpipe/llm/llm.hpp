// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <condition_variable>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace msgpipe::llm {

enum class Role { System, User, Assistant };

const char* to_string(Role r);

struct Message {
    Role role = Role::User;
    std::string content;
};

struct ChatRequest {
    std::string model;
    std::vector<Message> messages;
    double temperature = 0.0;
    int max_tokens = 2048;
};

/// Byte-exact serialization used for digests: keys in fixed order, no
/// insignificant whitespace, strings escaped as JSON with raw UTF-8,
/// temperature printed with three decimals.
std::string canonicalize(const ChatRequest& req);
/// Lowercase hex SHA-256 of canonicalize(req).
std::string digest(const ChatRequest& req);
/// Throws PreconditionViolated unless the first message is the system
/// message and every content is nonempty.
void validate(const ChatRequest& req);

class ChatBackend {
  public:
    virtual ~ChatBackend() = default;
    virtual std::string complete(const ChatRequest& req) = 0;
};

struct ReplayRecord {
    std::string request_digest;
    std::string response;
    std::string recorded_at;
    std::string model;
    std::string prompt; // last user message, for miss hints
};

std::string to_jsonl(const ReplayRecord& r);
ReplayRecord record_from_json(const std::string& line);

class ReplayStore {
  public:
    ReplayStore() = default;
    /// Reads line-delimited records. Missing file yields an empty store.
    static ReplayStore load(const std::string& path);
    void add(ReplayRecord r);
    const ReplayRecord* find(const std::string& digest) const;
    /// Recorded prompt sharing the longest prefix with `prompt`.
    std::string nearest(const std::string& prompt) const;
    const std::vector<ReplayRecord>& records() const { return records_; }
    void save(const std::string& path) const;

  private:
    std::vector<ReplayRecord> records_;
    std::map<std::string, std::size_t> index_;
};

class ReplayBackend : public ChatBackend {
  public:
    explicit ReplayBackend(ReplayStore store) : store_(std::move(store)) {}
    /// Throws ReplayMiss.
    std::string complete(const ChatRequest& req) override;

  private:
    ReplayStore store_;
};

struct LiveConfig {
    std::string endpoint; // e.g. https://host/v1/chat/completions
    std::string api_key;
    std::string model;
    int attempts = 3;
    int backoff_ms = 500; // doubled after each failed attempt
    int max_concurrent = 2;
    int timeout_seconds = 120;

    /// Fills unset fields from MSGPIPE_LLM_ENDPOINT, MSGPIPE_LLM_API_KEY and
    /// MSGPIPE_LLM_MODEL.
    void apply_env();
};

class LiveBackend : public ChatBackend {
  public:
    using Logger = std::function<void(const std::string&)>;

    /// Throws ConfigError when the endpoint or key is missing.
    explicit LiveBackend(LiveConfig config, Logger log = {});
    /// Retries on transport failure, 429 and 5xx. Throws BackendError.
    std::string complete(const ChatRequest& req) override;
    int retries() const;

  private:
    LiveConfig config_;
    Logger log_;
    mutable std::mutex mu_;
    std::condition_variable cv_;
    int in_flight_ = 0;
    int retries_ = 0;
};

/// Forwards to `inner` and appends each exchange to the store file.
class RecordBackend : public ChatBackend {
  public:
    RecordBackend(std::shared_ptr<ChatBackend> inner, std::string path);
    std::string complete(const ChatRequest& req) override;

  private:
    std::shared_ptr<ChatBackend> inner_;
    std::string path_;
    std::mutex mu_;
    ReplayStore seen_;
};

/// Canned responses chosen by matching the whole conversation. Used to
/// author replay fixtures without a model.
///
/// Script format: a line `@@ <pattern>` opens an entry whose response is
/// every following line up to the next `@@`. Pattern conjuncts are joined by
/// ` AND `; each is a substring or `/regex/`, `!` negates, `*` matches all.
class ScriptedBackend : public ChatBackend {
  public:
    struct Entry {
        std::vector<std::string> conjuncts;
        std::string response;
    };

    explicit ScriptedBackend(std::vector<Entry> entries) : entries_(std::move(entries)) {}
    static ScriptedBackend parse(const std::string& text);
    static ScriptedBackend from_file(const std::string& path);
    /// Throws BackendError(404) when nothing matches.
    std::string complete(const ChatRequest& req) override;

  private:
    std::vector<Entry> entries_;
};

/// Always fails with BackendError; stands in for an outage.
class FailingBackend : public ChatBackend {
  public:
    explicit FailingBackend(int status = 503) : status_(status) {}
    std::string complete(const ChatRequest&) override;

  private:
    int status_;
};

/// Conversation text used by the scripted matcher: `[role]\ncontent\n` per message.
std::string transcript_text(const ChatRequest& req);

} // namespace msgpipe::llm
