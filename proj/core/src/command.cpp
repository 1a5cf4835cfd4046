#include "mera/command.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <array>
#include <cerrno>
#include <chrono>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <thread>

#include "mera/error.hpp"

extern char** environ;

namespace mera {

namespace fs = std::filesystem;

namespace {

class Fd {
  public:
    Fd() = default;
    explicit Fd(int fd) : fd_{fd} {}
    ~Fd() { reset(); }
    Fd(Fd const&) = delete;
    auto operator=(Fd const&) -> Fd& = delete;
    Fd(Fd&& other) noexcept : fd_{std::exchange(other.fd_, -1)} {}
    auto operator=(Fd&& other) noexcept -> Fd& {
        if (this != &other) {
            reset();
            fd_ = std::exchange(other.fd_, -1);
        }
        return *this;
    }
    [[nodiscard]] auto get() const -> int { return fd_; }
    [[nodiscard]] auto valid() const -> bool { return fd_ >= 0; }
    void reset() {
        if (fd_ >= 0) {
            ::close(fd_);
            fd_ = -1;
        }
    }

  private:
    int fd_{-1};
};

struct Pipe {
    Fd read;
    Fd write;
};

auto make_pipe() -> Pipe {
    std::array<int, 2> fds{};
    if (::pipe2(fds.data(), O_CLOEXEC) != 0) {
        throw Error{ErrorCode::SpawnFailure, std::string{"pipe: "} + std::strerror(errno)};
    }
    return Pipe{Fd{fds[0]}, Fd{fds[1]}};
}

void set_nonblocking(int fd) {
    int const flags = ::fcntl(fd, F_GETFL);
    ::fcntl(fd, F_SETFL, flags | O_NONBLOCK);
}

void ignore_sigpipe_once() {
    static bool const done = [] {
        ::signal(SIGPIPE, SIG_IGN);
        return true;
    }();
    (void)done;
}

/// Child environment: the parent's plus settings that keep Python runs
/// reproducible and free of bytecode litter in the workspace.
auto child_environment() -> std::vector<std::string> {
    std::vector<std::string> env;
    for (char** e = environ; e != nullptr && *e != nullptr; ++e) {
        std::string_view entry{*e};
        if (entry.starts_with("PYTHONDONTWRITEBYTECODE=") || entry.starts_with("PYTHONHASHSEED=")) {
            continue;
        }
        env.emplace_back(entry);
    }
    env.emplace_back("PYTHONDONTWRITEBYTECODE=1");
    env.emplace_back("PYTHONHASHSEED=0");
    return env;
}

auto exit_status_of(int status) -> int {
    if (WIFEXITED(status)) {
        return WEXITSTATUS(status);
    }
    if (WIFSIGNALED(status)) {
        return 128 + WTERMSIG(status);
    }
    return -1;
}

}  // namespace

auto Allowlist::load(fs::path const& file) -> Allowlist {
    std::ifstream in{file};
    if (!in) {
        throw Error{ErrorCode::InvalidConfig, "cannot read allowlist " + file.string()};
    }
    std::set<std::string> programs;
    std::string line;
    while (std::getline(in, line)) {
        auto const first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') {
            continue;
        }
        auto const last = line.find_last_not_of(" \t\r");
        programs.insert(line.substr(first, last - first + 1));
    }
    return Allowlist{std::move(programs)};
}

auto Allowlist::from_environment(Allowlist fallback) -> Allowlist {
    if (char const* path = std::getenv(kAllowlistEnv); path != nullptr && *path != '\0') {
        return load(path);
    }
    return fallback;
}

auto Allowlist::defaults() -> Allowlist { return Allowlist{{"python3", "python"}}; }

auto is_within(fs::path const& root, fs::path const& path) -> bool {
    std::error_code ec;
    auto const base = fs::weakly_canonical(fs::absolute(root), ec);
    if (ec) {
        return false;
    }
    auto const target = fs::weakly_canonical(fs::absolute(path), ec);
    if (ec) {
        return false;
    }
    auto const rel = target.lexically_relative(base);
    if (rel.empty()) {
        return false;
    }
    auto const first = *rel.begin();
    return first != "..";
}

auto run_bounded_command(CommandSpec const& spec, Allowlist const& allowlist) -> CommandResult {
    if (!allowlist.contains(spec.program)) {
        throw Error{ErrorCode::DisallowedCommand, "'" + spec.program + "' is not allowlisted"};
    }
    if (!(spec.timeout > 0.0)) {
        throw Error{ErrorCode::InvalidConfig, "command timeout must be positive"};
    }
    fs::path const workdir = spec.workdir.empty() ? spec.workspace : spec.workdir;
    if (!spec.workspace.empty() && !is_within(spec.workspace, workdir)) {
        throw Error{ErrorCode::WorkspaceEscape,
                    "workdir " + workdir.string() + " is outside " + spec.workspace.string()};
    }
    ignore_sigpipe_once();

    auto out = make_pipe();
    auto err = make_pipe();
    std::optional<Pipe> in;
    if (spec.stdin_data) {
        in = make_pipe();
    }

    posix_spawn_file_actions_t actions;
    posix_spawn_file_actions_init(&actions);
    if (in) {
        posix_spawn_file_actions_adddup2(&actions, in->read.get(), STDIN_FILENO);
    } else {
        posix_spawn_file_actions_addopen(&actions, STDIN_FILENO, "/dev/null", O_RDONLY, 0);
    }
    posix_spawn_file_actions_adddup2(&actions, out.write.get(), STDOUT_FILENO);
    posix_spawn_file_actions_adddup2(&actions, err.write.get(), STDERR_FILENO);
    if (!workdir.empty()) {
        posix_spawn_file_actions_addchdir_np(&actions, workdir.c_str());
    }

    posix_spawnattr_t attr;
    posix_spawnattr_init(&attr);
    posix_spawnattr_setflags(&attr, POSIX_SPAWN_SETPGROUP);
    posix_spawnattr_setpgroup(&attr, 0);

    std::vector<std::string> argv_storage;
    argv_storage.reserve(spec.args.size() + 1);
    argv_storage.push_back(spec.program);
    argv_storage.insert(argv_storage.end(), spec.args.begin(), spec.args.end());
    std::vector<char*> argv;
    for (auto& a : argv_storage) {
        argv.push_back(a.data());
    }
    argv.push_back(nullptr);
    auto env_storage = child_environment();
    std::vector<char*> envp;
    for (auto& e : env_storage) {
        envp.push_back(e.data());
    }
    envp.push_back(nullptr);

    auto const start = std::chrono::steady_clock::now();
    pid_t pid = -1;
    int const rc =
        ::posix_spawnp(&pid, spec.program.c_str(), &actions, &attr, argv.data(), envp.data());
    posix_spawn_file_actions_destroy(&actions);
    posix_spawnattr_destroy(&attr);
    if (rc != 0) {
        throw Error{ErrorCode::SpawnFailure, spec.program + ": " + std::strerror(rc)};
    }

    out.write.reset();
    err.write.reset();
    if (in) {
        in->read.reset();
        set_nonblocking(in->write.get());
    }
    set_nonblocking(out.read.get());
    set_nonblocking(err.read.get());

    auto const deadline = start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                      std::chrono::duration<double>(spec.timeout));

    CommandResult result;
    std::string_view pending_stdin = spec.stdin_data ? std::string_view{*spec.stdin_data} : "";
    if (in && pending_stdin.empty()) {
        in->write.reset();
    }
    std::string* overflowed = nullptr;
    bool exited = false;
    int status = 0;
    std::array<char, 65536> buffer{};

    auto consume = [&](Fd& fd, std::string& sink) {
        for (;;) {
            ssize_t const n = ::read(fd.get(), buffer.data(), buffer.size());
            if (n > 0) {
                auto const room = spec.output_cap - std::min(spec.output_cap, result.captured_bytes);
                auto const keep = std::min(room, static_cast<std::size_t>(n));
                sink.append(buffer.data(), keep);
                result.captured_bytes += keep;
                if (keep < static_cast<std::size_t>(n) && overflowed == nullptr) {
                    result.truncated = true;
                    overflowed = &sink;
                }
                continue;
            }
            if (n == 0) {
                fd.reset();
            } else if (errno == EINTR) {
                continue;
            }
            return;
        }
    };

    auto kill_group = [&] { ::kill(-pid, SIGKILL); };

    while (out.read.valid() || err.read.valid() || !exited) {
        auto const now = std::chrono::steady_clock::now();
        if (now >= deadline) {
            kill_group();
            if (!exited) {
                ::waitpid(pid, &status, 0);
            }
            throw Error{ErrorCode::Timeout, spec.program + " exceeded " +
                                                std::to_string(spec.timeout) + " s"};
        }
        if (!exited) {
            pid_t const w = ::waitpid(pid, &status, WNOHANG);
            if (w == pid) {
                exited = true;
                // Stray descendants must not keep the pipes open.
                kill_group();
            }
        }

        std::vector<pollfd> fds;
        if (out.read.valid()) {
            fds.push_back({out.read.get(), POLLIN, 0});
        }
        if (err.read.valid()) {
            fds.push_back({err.read.get(), POLLIN, 0});
        }
        if (in && in->write.valid()) {
            fds.push_back({in->write.get(), POLLOUT, 0});
        }
        auto const remaining =
            std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now).count();
        int const wait_ms = static_cast<int>(std::clamp<long long>(remaining, 0, exited ? 50 : 20));
        if (fds.empty()) {
            std::this_thread::sleep_for(std::chrono::milliseconds(std::max(1, wait_ms / 4)));
            continue;
        }
        int const ready = ::poll(fds.data(), fds.size(), wait_ms);
        if (ready < 0 && errno != EINTR) {
            kill_group();
            ::waitpid(pid, &status, 0);
            throw Error{ErrorCode::SpawnFailure, std::string{"poll: "} + std::strerror(errno)};
        }
        for (auto const& p : fds) {
            if (p.revents == 0) {
                continue;
            }
            if (out.read.valid() && p.fd == out.read.get()) {
                consume(out.read, result.stdout_text);
            } else if (err.read.valid() && p.fd == err.read.get()) {
                consume(err.read, result.stderr_text);
            } else if (in && in->write.valid() && p.fd == in->write.get()) {
                if ((p.revents & (POLLERR | POLLHUP)) != 0) {
                    in->write.reset();
                    continue;
                }
                ssize_t const n =
                    ::write(in->write.get(), pending_stdin.data(), pending_stdin.size());
                if (n > 0) {
                    pending_stdin.remove_prefix(static_cast<std::size_t>(n));
                } else if (n < 0 && errno != EAGAIN && errno != EINTR) {
                    in->write.reset();
                }
                if (pending_stdin.empty()) {
                    in->write.reset();
                }
            }
        }
    }

    result.exit_status = exit_status_of(status);
    result.duration =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (overflowed != nullptr) {
        overflowed->append(kTruncationMarker);
    }
    return result;
}

}  // namespace mera
