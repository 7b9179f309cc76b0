// SPDX-License-Identifier: Apache-2.0

#include "msgpipe/llm/llm.hpp"

#include <openssl/evp.h>

#include <charconv>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <regex>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "msgpipe/errors.hpp"

namespace msgpipe::llm {

using nlohmann::json;

const char* to_string(Role r)
{
    switch (r) {
    case Role::System: return "system";
    case Role::User: return "user";
    case Role::Assistant: return "assistant";
    }
    return "user";
}

namespace {

std::string quote(const std::string& s) { return json(s).dump(-1, ' ', false, json::error_handler_t::replace); }

std::string fixed3(double v)
{
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, 3);
    return ec == std::errc{} ? std::string(buf, end) : "0.000";
}

std::string now_utc()
{
    std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::ostringstream out;
    out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return out.str();
}

std::string last_user(const ChatRequest& req)
{
    for (auto it = req.messages.rbegin(); it != req.messages.rend(); ++it)
        if (it->role == Role::User)
            return it->content;
    return {};
}

bool conjunct_matches(const std::string& c, const std::string& text)
{
    if (c == "*")
        return true;
    bool negate = !c.empty() && c.front() == '!';
    std::string p = negate ? c.substr(1) : c;
    bool hit;
    if (p.size() >= 2 && p.front() == '/' && p.back() == '/')
        hit = std::regex_search(text, std::regex(p.substr(1, p.size() - 2)));
    else
        hit = text.find(p) != std::string::npos;
    return hit != negate;
}

} // namespace

std::string canonicalize(const ChatRequest& req)
{
    std::string out = "{\"model\":" + quote(req.model) + ",\"messages\":[";
    for (std::size_t i = 0; i < req.messages.size(); ++i) {
        if (i)
            out += ',';
        out += "{\"role\":" + quote(to_string(req.messages[i].role)) +
               ",\"content\":" + quote(req.messages[i].content) + "}";
    }
    out += "],\"temperature\":" + fixed3(req.temperature) + ",\"max_tokens\":" + std::to_string(req.max_tokens) + "}";
    return out;
}

std::string digest(const ChatRequest& req)
{
    std::string text = canonicalize(req);
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(text.data(), text.size(), md, &len, EVP_sha256(), nullptr) != 1)
        throw Error("sha256 failed");
    std::ostringstream hex;
    for (unsigned int i = 0; i < len; ++i)
        hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
    return hex.str();
}

void validate(const ChatRequest& req)
{
    if (req.messages.empty() || req.messages.front().role != Role::System)
        throw PreconditionViolated("chat request must start with a system message");
    for (const auto& m : req.messages)
        if (m.content.empty())
            throw PreconditionViolated("chat message content is empty");
}

std::string transcript_text(const ChatRequest& req)
{
    std::string out;
    for (const auto& m : req.messages)
        out += std::string("[") + to_string(m.role) + "]\n" + m.content + "\n";
    return out;
}

std::string to_jsonl(const ReplayRecord& r)
{
    json j;
    j["request_digest"] = r.request_digest;
    j["response"] = r.response;
    j["metadata"] = {{"recorded_at", r.recorded_at}, {"model", r.model}};
    j["prompt"] = r.prompt;
    return j.dump(-1, ' ', false, json::error_handler_t::replace);
}

ReplayRecord record_from_json(const std::string& line)
{
    try {
        json j = json::parse(line);
        ReplayRecord r;
        r.request_digest = j.at("request_digest").get<std::string>();
        r.response = j.at("response").get<std::string>();
        if (j.contains("metadata")) {
            r.recorded_at = j["metadata"].value("recorded_at", "");
            r.model = j["metadata"].value("model", "");
        }
        r.prompt = j.value("prompt", "");
        return r;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad replay record: ") + e.what());
    }
}

ReplayStore ReplayStore::load(const std::string& path)
{
    ReplayStore s;
    std::ifstream in(path);
    std::string line;
    while (std::getline(in, line))
        if (!line.empty())
            s.add(record_from_json(line));
    return s;
}

void ReplayStore::add(ReplayRecord r)
{
    auto it = index_.find(r.request_digest);
    if (it != index_.end()) {
        records_[it->second] = std::move(r);
        return;
    }
    index_[r.request_digest] = records_.size();
    records_.push_back(std::move(r));
}

const ReplayRecord* ReplayStore::find(const std::string& d) const
{
    auto it = index_.find(d);
    return it == index_.end() ? nullptr : &records_[it->second];
}

std::string ReplayStore::nearest(const std::string& prompt) const
{
    std::string best;
    std::size_t best_len = 0;
    for (const auto& r : records_) {
        std::size_t n = 0;
        while (n < r.prompt.size() && n < prompt.size() && r.prompt[n] == prompt[n])
            ++n;
        if (n > best_len || best.empty()) {
            best_len = n;
            best = r.prompt;
        }
    }
    if (best.size() > 120)
        best = best.substr(0, 120) + "...";
    return best;
}

void ReplayStore::save(const std::string& path) const
{
    std::ofstream out(path, std::ios::trunc);
    for (const auto& r : records_)
        out << to_jsonl(r) << '\n';
}

std::string ReplayBackend::complete(const ChatRequest& req)
{
    std::string d = digest(req);
    if (const auto* r = store_.find(d))
        return r->response;
    throw ReplayMiss(d, store_.nearest(last_user(req)));
}

void LiveConfig::apply_env()
{
    auto fill = [](std::string& field, const char* var) {
        if (field.empty())
            if (const char* v = std::getenv(var))
                field = v;
    };
    fill(endpoint, "MSGPIPE_LLM_ENDPOINT");
    fill(api_key, "MSGPIPE_LLM_API_KEY");
    fill(model, "MSGPIPE_LLM_MODEL");
}

LiveBackend::LiveBackend(LiveConfig config, Logger log) : config_(std::move(config)), log_(std::move(log))
{
    if (config_.endpoint.empty())
        throw ConfigError("live backend needs an endpoint (MSGPIPE_LLM_ENDPOINT)");
    if (config_.api_key.empty())
        throw ConfigError("live backend needs an API key (MSGPIPE_LLM_API_KEY)");
    if (config_.max_concurrent < 1)
        config_.max_concurrent = 1;
}

int LiveBackend::retries() const
{
    std::lock_guard lock(mu_);
    return retries_;
}

std::string LiveBackend::complete(const ChatRequest& req)
{
    validate(req);
    static const std::regex url(R"(^(https?://[^/]+)(/.*)?$)");
    std::smatch m;
    if (!std::regex_match(config_.endpoint, m, url))
        throw ConfigError("malformed endpoint: " + config_.endpoint);
    std::string base = m[1];
    std::string path = m[2].matched ? std::string(m[2]) : "/";

    json body;
    body["model"] = req.model.empty() ? config_.model : req.model;
    body["messages"] = json::array();
    for (const auto& msg : req.messages)
        body["messages"].push_back({{"role", to_string(msg.role)}, {"content", msg.content}});
    body["temperature"] = req.temperature;
    body["max_tokens"] = req.max_tokens;
    std::string payload = body.dump();

    {
        std::unique_lock lock(mu_);
        cv_.wait(lock, [&] { return in_flight_ < config_.max_concurrent; });
        ++in_flight_;
    }
    struct Release {
        LiveBackend* self;
        ~Release()
        {
            std::lock_guard lock(self->mu_);
            --self->in_flight_;
            self->cv_.notify_one();
        }
    } release{this};

    httplib::Client client(base);
    client.set_connection_timeout(config_.timeout_seconds);
    client.set_read_timeout(config_.timeout_seconds);
    httplib::Headers headers{{"Authorization", "Bearer " + config_.api_key}};

    int status = 0;
    std::string last_body;
    int delay = config_.backoff_ms;
    for (int attempt = 1; attempt <= config_.attempts; ++attempt) {
        auto res = client.Post(path, headers, payload, "application/json");
        if (res) {
            status = res->status;
            last_body = res->body;
            if (status == 200) {
                try {
                    json j = json::parse(res->body);
                    return j.at("choices").at(0).at("message").at("content").get<std::string>();
                } catch (const json::exception& e) {
                    throw BackendError(status, std::string("unreadable response: ") + e.what());
                }
            }
            if (status != 429 && status < 500)
                throw BackendError(status, last_body);
        } else {
            status = 0;
            last_body = httplib::to_string(res.error());
        }
        if (attempt == config_.attempts)
            break;
        {
            std::lock_guard lock(mu_);
            ++retries_;
        }
        if (log_)
            log_("retry " + std::to_string(attempt) + " after status " + std::to_string(status));
        std::this_thread::sleep_for(std::chrono::milliseconds(delay));
        delay *= 2;
    }
    throw BackendError(status, last_body);
}

RecordBackend::RecordBackend(std::shared_ptr<ChatBackend> inner, std::string path)
    : inner_(std::move(inner)), path_(std::move(path)), seen_(ReplayStore::load(path_))
{
}

std::string RecordBackend::complete(const ChatRequest& req)
{
    std::string response = inner_->complete(req);
    ReplayRecord r{digest(req), response, now_utc(), req.model, last_user(req)};
    std::lock_guard lock(mu_);
    const ReplayRecord* prior = seen_.find(r.request_digest);
    if (prior && prior->response == response)
        return response;
    seen_.add(r);
    std::ofstream out(path_, std::ios::app);
    if (!out)
        throw WorkspaceSetupFailed("cannot append to replay store " + path_);
    out << to_jsonl(r) << '\n';
    return response;
}

ScriptedBackend ScriptedBackend::parse(const std::string& text)
{
    std::vector<Entry> entries;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.rfind("@@", 0) == 0) {
            Entry e;
            std::string pattern = line.substr(2);
            pattern.erase(0, pattern.find_first_not_of(' '));
            std::size_t pos = 0;
            for (;;) {
                std::size_t next = pattern.find(" AND ", pos);
                e.conjuncts.push_back(pattern.substr(pos, next - pos));
                if (next == std::string::npos)
                    break;
                pos = next + 5;
            }
            for (const auto& c : e.conjuncts) {
                std::string p = !c.empty() && c.front() == '!' ? c.substr(1) : c;
                if (p.size() >= 2 && p.front() == '/' && p.back() == '/') {
                    try {
                        std::regex re(p.substr(1, p.size() - 2));
                    } catch (const std::regex_error&) {
                        throw ConfigError("bad script pattern: " + c);
                    }
                }
            }
            entries.push_back(std::move(e));
        } else if (!entries.empty()) {
            entries.back().response += line + "\n";
        } else if (!line.empty() && line.front() != '#') {
            throw ConfigError("script text before first @@ entry: " + line);
        }
    }
    for (auto& e : entries)
        while (e.response.size() >= 2 && e.response.ends_with("\n\n"))
            e.response.pop_back();
    return ScriptedBackend(std::move(entries));
}

ScriptedBackend ScriptedBackend::from_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot read script " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

std::string ScriptedBackend::complete(const ChatRequest& req)
{
    std::string text = transcript_text(req);
    for (const auto& e : entries_) {
        bool all = true;
        for (const auto& c : e.conjuncts)
            if (!conjunct_matches(c, text)) {
                all = false;
                break;
            }
        if (all)
            return e.response;
    }
    throw BackendError(404, "no scripted response for: " + last_user(req).substr(0, 80));
}

std::string FailingBackend::complete(const ChatRequest&) { throw BackendError(status_, "backend unavailable"); }

} // namespace msgpipe::llm
