// SPDX-License-Identifier: Apache-2.0

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <regex>
#include <thread>

#include <fcntl.h>
#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

#include "msgpipe/errors.hpp"
#include "msgpipe/prover/prover.hpp"

namespace fs = std::filesystem;

namespace msgpipe::prover {

namespace {

struct RunResult {
    std::string output;
    int exit_code = 0;
    bool killed = false;
    double elapsed = 0;
};

bool executable_on_path(const std::string& program)
{
    if (program.find('/') != std::string::npos)
        return ::access(program.c_str(), X_OK) == 0;
    const char* path = std::getenv("PATH");
    std::string p = path ? path : "/usr/bin:/bin";
    std::size_t start = 0;
    while (start <= p.size()) {
        auto end = p.find(':', start);
        std::string dir = p.substr(start, end == std::string::npos ? std::string::npos : end - start);
        if (!dir.empty() && ::access((dir + "/" + program).c_str(), X_OK) == 0)
            return true;
        if (end == std::string::npos)
            break;
        start = end + 1;
    }
    return false;
}

std::string first_word(const std::string& cmd)
{
    auto b = cmd.find_first_not_of(" \t");
    if (b == std::string::npos)
        return {};
    auto e = cmd.find_first_of(" \t", b);
    return cmd.substr(b, e == std::string::npos ? std::string::npos : e - b);
}

std::string replace_all(std::string s, const std::string& from, const std::string& to)
{
    for (auto pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size()))
        s.replace(pos, from.size(), to);
    return s;
}

RunResult run_command(const std::string& cmd, const fs::path& cwd, double timeout)
{
    int fds[2];
    if (::pipe(fds) != 0)
        throw WorkspaceSetupFailed("pipe() failed");
    auto start = std::chrono::steady_clock::now();
    pid_t pid = ::fork();
    if (pid < 0) {
        ::close(fds[0]);
        ::close(fds[1]);
        throw WorkspaceSetupFailed("fork() failed");
    }
    if (pid == 0) {
        ::setpgid(0, 0);
        ::dup2(fds[1], STDOUT_FILENO);
        ::dup2(fds[1], STDERR_FILENO);
        ::close(fds[0]);
        ::close(fds[1]);
        if (::chdir(cwd.c_str()) != 0)
            ::_exit(126);
        ::execl("/bin/sh", "sh", "-c", cmd.c_str(), static_cast<char*>(nullptr));
        ::_exit(127);
    }
    ::close(fds[1]);
    ::setpgid(pid, pid);

    RunResult r;
    auto deadline = start + std::chrono::duration<double>(timeout);
    char buf[4096];
    bool open = true;
    while (open) {
        auto now = std::chrono::steady_clock::now();
        if (now >= deadline) {
            ::kill(-pid, SIGKILL);
            r.killed = true;
            break;
        }
        int ms = static_cast<int>(std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now).count()) + 1;
        pollfd p{fds[0], POLLIN, 0};
        int rc = ::poll(&p, 1, std::min(ms, 200));
        if (rc > 0) {
            ssize_t n = ::read(fds[0], buf, sizeof buf);
            if (n > 0)
                r.output.append(buf, static_cast<std::size_t>(n));
            else
                open = false;
        }
    }
    ::close(fds[0]);
    int status = 0;
    ::waitpid(pid, &status, 0);
    if (r.killed)
        ::kill(-pid, SIGKILL);
    r.elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -(WIFSIGNALED(status) ? WTERMSIG(status) : 1);
    return r;
}

} // namespace

ExternalProver::ExternalProver(ProverConfig config) : config_(std::move(config)) {}

ProverVerdict ExternalProver::verify(std::string_view module_source) const
{
    std::string program = first_word(config_.command);
    if (program.empty() || !executable_on_path(program))
        throw ToolNotFound("prover command not found: " + (program.empty() ? config_.command : program));

    std::error_code ec;
    fs::path parent = config_.workspace_dir.empty() ? fs::temp_directory_path(ec) : fs::path(config_.workspace_dir);
    fs::create_directories(parent, ec);
    std::string tmpl = (parent / "msgpipe-XXXXXX").string();
    if (!::mkdtemp(tmpl.data()))
        throw WorkspaceSetupFailed("cannot create workspace under " + parent.string());
    fs::path ws(tmpl);

    static const std::regex kModule(R"(module\s+\w+::(\w+))");
    std::cmatch m;
    std::string name = std::regex_search(module_source.begin(), module_source.end(), m, kModule) ? m[1].str()
                                                                                                   : "target";
    fs::path file = ws / "sources" / (name + ".move");
    {
        fs::create_directories(ws / "sources", ec);
        std::ofstream toml(ws / "Move.toml");
        toml << "[package]\nname = \"MsgpipeTarget\"\nversion = \"0.0.1\"\n\n[addresses]\n";
        if (!config_.manifest_extra.empty())
            toml << "\n" << config_.manifest_extra << "\n";
        std::ofstream src(file);
        src << module_source;
        if (!toml || !src) {
            fs::remove_all(ws, ec);
            throw WorkspaceSetupFailed("cannot write workspace files in " + ws.string());
        }
    }

    std::string cmd = replace_all(replace_all(config_.command, "{workspace}", ws.string()), "{file}", file.string());
    RunResult r = run_command(cmd, ws, config_.timeout_seconds);
    if (!config_.keep_workspace)
        fs::remove_all(ws, ec);
    if (!r.killed && r.exit_code == 127)
        throw ToolNotFound("prover command failed to start: " + cmd);
    return classify(r.output, r.exit_code, r.killed, r.elapsed, config_.timeout_seconds, module_source);
}

std::unique_ptr<Prover> make_prover(const ProverConfig& config)
{
    if (config.backend == ProverConfig::Backend::Mock)
        return std::make_unique<MockProver>(MockProver::from_file(config.rulefile, config.timeout_seconds));
    return std::make_unique<ExternalProver>(config);
}

ProverVerdict verify(std::string_view module_source, const ProverConfig& config)
{
    return make_prover(config)->verify(module_source);
}

std::vector<ProverVerdict> verify_all(const Prover& prover, const std::vector<std::string>& sources, int parallelism)
{
    std::vector<ProverVerdict> out(sources.size());
    std::vector<std::exception_ptr> errors(sources.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < sources.size(); i = next++) {
            try {
                out[i] = prover.verify(sources[i]);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    std::size_t n = std::min<std::size_t>(static_cast<std::size_t>(std::max(parallelism, 1)), sources.size());
    std::vector<std::thread> pool;
    for (std::size_t i = 1; i < n; ++i)
        pool.emplace_back(worker);
    worker();
    for (auto& t : pool)
        t.join();
    for (auto& e : errors)
        if (e)
            std::rethrow_exception(e);
    return out;
}

} // namespace msgpipe::prover
