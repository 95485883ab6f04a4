#pragma once

#include "tabe/io.hpp"
#include "tabe/wire.hpp"

#include <chrono>
#include <csignal>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include <fcntl.h>
#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

#include "httplib.h"
#include "json.hpp"

namespace tabe {

/// One neural stage reachable through the wire protocol.
class Backend {
  public:
    virtual ~Backend() = default;
    /// Sends one request and returns the raw response object. Transport failures throw BackendError.
    virtual json call(const json& request) = 0;
    virtual std::string describe() const = 0;
};

/// Checked round trip: sends the request and validates the response schema.
inline json round_trip(Backend& backend, const json& request) {
    const auto type = wire::check_envelope(request);
    json response = backend.call(request);
    wire::check_response(type, request, response);
    return response;
}

inline void health_check(Backend& backend, const std::string& stage) {
    try {
        round_trip(backend, wire::make_health("health-" + stage));
    } catch (const BackendError& e) {
        throw BackendError(stage + " failed its health check: " + e.what());
    }
}

// ---------------------------------------------------------------------------
// In-process: a handler function speaking the protocol directly (used for test doubles).
// ---------------------------------------------------------------------------

class InProcessBackend : public Backend {
  public:
    using Handler = std::function<json(const json&)>;
    InProcessBackend(Handler handler, std::string name) : handler_(std::move(handler)), name_(std::move(name)) {}

    json call(const json& request) override {
        // Round-trip through text so in-process calls see exactly what a remote peer would.
        return json::parse(handler_(json::parse(request.dump())).dump());
    }
    std::string describe() const override { return "in-process:" + name_; }

  private:
    Handler handler_;
    std::string name_;
};

// ---------------------------------------------------------------------------
// Subprocess: long-running child, one JSON object per line on stdin/stdout.
// ---------------------------------------------------------------------------

class SubprocessBackend : public Backend {
  public:
    SubprocessBackend(std::vector<std::string> command, std::chrono::milliseconds timeout)
        : command_(std::move(command)), timeout_(timeout) {
        if (command_.empty()) throw ConfigError("subprocess backend needs a command");
    }

    SubprocessBackend(const SubprocessBackend&) = delete;
    SubprocessBackend& operator=(const SubprocessBackend&) = delete;

    ~SubprocessBackend() override { stop(); }

    json call(const json& request) override {
        std::lock_guard lock(mutex_);
        if (pid_ <= 0) start();
        const std::string line = request.dump() + "\n";
        std::size_t written = 0;
        while (written < line.size()) {
            const auto n = ::write(to_child_, line.data() + written, line.size() - written);
            if (n < 0) {
                if (errno == EINTR) continue;
                throw BackendError(describe() + ": write failed (process exited?)");
            }
            written += static_cast<std::size_t>(n);
        }
        const std::string reply = read_line();
        try {
            return json::parse(reply);
        } catch (const json::parse_error&) {
            throw BackendError(describe() + ": response is not valid JSON");
        }
    }

    std::string describe() const override { return "subprocess:" + command_.front(); }

  private:
    void start() {
        // Writes to a dead child must surface as errors, not kill the orchestrator.
        std::signal(SIGPIPE, SIG_IGN);
        int in_pipe[2];
        int out_pipe[2];
        if (::pipe(in_pipe) != 0 || ::pipe(out_pipe) != 0) throw BackendError("cannot create pipes");
        const pid_t pid = ::fork();
        if (pid < 0) throw BackendError("fork failed");
        if (pid == 0) {
            ::dup2(in_pipe[0], STDIN_FILENO);
            ::dup2(out_pipe[1], STDOUT_FILENO);
            ::close(in_pipe[0]);
            ::close(in_pipe[1]);
            ::close(out_pipe[0]);
            ::close(out_pipe[1]);
            std::vector<char*> argv;
            for (auto& a : command_) argv.push_back(a.data());
            argv.push_back(nullptr);
            ::execvp(argv[0], argv.data());
            ::_exit(127);
        }
        ::close(in_pipe[0]);
        ::close(out_pipe[1]);
        ::fcntl(in_pipe[1], F_SETFD, FD_CLOEXEC);
        ::fcntl(out_pipe[0], F_SETFD, FD_CLOEXEC);
        pid_ = pid;
        to_child_ = in_pipe[1];
        from_child_ = out_pipe[0];
    }

    std::string read_line() {
        const auto deadline = std::chrono::steady_clock::now() + timeout_;
        while (true) {
            if (const auto nl = buffer_.find('\n'); nl != std::string::npos) {
                std::string line = buffer_.substr(0, nl);
                buffer_.erase(0, nl + 1);
                return line;
            }
            const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
            if (left.count() <= 0) throw BackendError(describe() + ": timed out after " + std::to_string(timeout_.count()) + " ms");
            pollfd p{from_child_, POLLIN, 0};
            const int r = ::poll(&p, 1, static_cast<int>(std::min<long long>(left.count(), 1000)));
            if (r < 0 && errno != EINTR) throw BackendError(describe() + ": poll failed");
            if (r <= 0) continue;
            char chunk[4096];
            const auto n = ::read(from_child_, chunk, sizeof chunk);
            if (n == 0) throw BackendError(describe() + ": process closed its output");
            if (n < 0) {
                if (errno == EINTR) continue;
                throw BackendError(describe() + ": read failed");
            }
            buffer_.append(chunk, static_cast<std::size_t>(n));
        }
    }

    void stop() {
        if (pid_ <= 0) return;
        ::close(to_child_);
        ::close(from_child_);
        int status = 0;
        for (int i = 0; i < 50; ++i) {
            if (::waitpid(pid_, &status, WNOHANG) == pid_) {
                pid_ = -1;
                return;
            }
            ::usleep(10000);
        }
        ::kill(pid_, SIGKILL);
        ::waitpid(pid_, &status, 0);
        pid_ = -1;
    }

    std::vector<std::string> command_;
    std::chrono::milliseconds timeout_;
    std::mutex mutex_;
    pid_t pid_ = -1;
    int to_child_ = -1;
    int from_child_ = -1;
    std::string buffer_;
};

// ---------------------------------------------------------------------------
// HTTP: the same JSON bodies POSTed to `<address>/<type>`.
// ---------------------------------------------------------------------------

class HttpBackend : public Backend {
  public:
    HttpBackend(std::string address, std::chrono::milliseconds timeout)
        : address_(std::move(address)), timeout_(timeout) {}

    json call(const json& request) override {
        httplib::Client client(address_);
        const auto secs = timeout_.count() / 1000;
        const auto usecs = (timeout_.count() % 1000) * 1000;
        client.set_read_timeout(secs, usecs);
        client.set_write_timeout(secs, usecs);
        client.set_connection_timeout(secs, usecs);
        const std::string path = "/" + request.value("type", std::string{});
        auto res = client.Post(path, request.dump(), "application/json");
        if (!res) throw BackendError(describe() + ": request failed (" + httplib::to_string(res.error()) + ")");
        try {
            return json::parse(res->body);
        } catch (const json::parse_error&) {
            throw BackendError(describe() + ": HTTP " + std::to_string(res->status) + " with a non-JSON body");
        }
    }

    std::string describe() const override { return "http:" + address_; }

  private:
    std::string address_;
    std::chrono::milliseconds timeout_;
};

// ---------------------------------------------------------------------------
// Endpoint descriptors (backends.json)
//
// { "segmenter":       {"kind": "subprocess", "command": ["python", "serve.py"], "timeout_ms": 600000},
//   "depth_estimator": {"kind": "http", "address": "http://localhost:8081"},
//   "outpainter":      {...} }
// ---------------------------------------------------------------------------

struct EndpointDescriptor {
    enum class Kind { Subprocess, Http } kind = Kind::Subprocess;
    std::vector<std::string> command;
    std::string address;
    std::chrono::milliseconds timeout{600000};
};

struct BackendEndpoints {
    EndpointDescriptor segmenter;
    EndpointDescriptor depth_estimator;
    EndpointDescriptor outpainter;
};

inline EndpointDescriptor parse_endpoint(const json& j, const std::string& stage) {
    EndpointDescriptor d;
    try {
        const auto kind = j.at("kind").get<std::string>();
        if (kind == "subprocess") {
            d.kind = EndpointDescriptor::Kind::Subprocess;
            d.command = j.at("command").get<std::vector<std::string>>();
            if (d.command.empty()) throw ConfigError(stage + ": empty command");
        } else if (kind == "http") {
            d.kind = EndpointDescriptor::Kind::Http;
            d.address = j.at("address").get<std::string>();
        } else {
            throw ConfigError(stage + ": unknown backend kind '" + kind + "'");
        }
        if (j.contains("timeout_ms")) d.timeout = std::chrono::milliseconds(j.at("timeout_ms").get<long long>());
    } catch (const json::exception& e) {
        throw ConfigError(stage + ": malformed endpoint descriptor: " + e.what());
    }
    return d;
}

inline BackendEndpoints parse_endpoints(const json& j) {
    auto get = [&](const char* key) {
        if (!j.contains(key)) throw ConfigError(std::string("backends: missing '") + key + "'");
        return parse_endpoint(j.at(key), key);
    };
    return {get("segmenter"), get("depth_estimator"), get("outpainter")};
}

inline std::shared_ptr<Backend> connect(const EndpointDescriptor& d) {
    if (d.kind == EndpointDescriptor::Kind::Http) return std::make_shared<HttpBackend>(d.address, d.timeout);
    return std::make_shared<SubprocessBackend>(d.command, d.timeout);
}

/// The three live backends a pipeline run talks to.
struct BackendSet {
    std::shared_ptr<Backend> segmenter;
    std::shared_ptr<Backend> depth_estimator;
    std::shared_ptr<Backend> outpainter;
};

inline BackendSet connect(const BackendEndpoints& e) {
    return {connect(e.segmenter), connect(e.depth_estimator), connect(e.outpainter)};
}

} // namespace tabe
