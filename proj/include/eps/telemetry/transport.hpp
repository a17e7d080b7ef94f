#pragma once

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <cstring>
#include <deque>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace eps::telemetry {

/// Send or bind/connect failure of a transport.
class TransportError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Datagram-style transport: each send is delivered (or lost) as one unit.
class Transport {
public:
    virtual ~Transport() = default;
    virtual void send(std::span<const std::uint8_t> datagram) = 0;
    /// Next datagram, or nothing once closed and drained or after `timeout` of silence.
    virtual std::optional<std::vector<std::uint8_t>> receive(std::chrono::milliseconds timeout) = 0;
    /// Signals end of stream to the receiving side where the medium supports it.
    virtual void close() {}
};

/// Thread-safe in-process queue. A single producer and a single consumer may run concurrently.
class InMemoryTransport : public Transport {
public:
    void send(std::span<const std::uint8_t> datagram) override {
        {
            std::lock_guard lock(mu_);
            if (closed_) throw TransportError("in-memory transport closed");
            queue_.emplace_back(datagram.begin(), datagram.end());
        }
        cv_.notify_one();
    }

    std::optional<std::vector<std::uint8_t>> receive(std::chrono::milliseconds timeout) override {
        std::unique_lock lock(mu_);
        if (!cv_.wait_for(lock, timeout, [&] { return !queue_.empty() || closed_; })) return std::nullopt;
        if (queue_.empty()) return std::nullopt;
        auto d = std::move(queue_.front());
        queue_.pop_front();
        return d;
    }

    void close() override {
        {
            std::lock_guard lock(mu_);
            closed_ = true;
        }
        cv_.notify_all();
    }

    std::size_t pending() const {
        std::lock_guard lock(mu_);
        return queue_.size();
    }

private:
    mutable std::mutex mu_;
    std::condition_variable cv_;
    std::deque<std::vector<std::uint8_t>> queue_;
    bool closed_ = false;
};

/// "host:port" split; the host part may be empty (wildcard for binding).
struct Endpoint {
    std::string host;
    std::uint16_t port = 0;

    static Endpoint parse(const std::string& s) {
        const auto colon = s.rfind(':');
        if (colon == std::string::npos) throw TransportError("endpoint '" + s + "' is not host:port");
        Endpoint e;
        e.host = s.substr(0, colon);
        try {
            const long p = std::stol(s.substr(colon + 1));
            if (p < 0 || p > 65535) throw std::out_of_range("port");
            e.port = static_cast<std::uint16_t>(p);
        } catch (const std::exception&) {
            throw TransportError("endpoint '" + s + "' has an invalid port");
        }
        return e;
    }
};

/// IPv4 UDP socket, one packet per datagram. Construct with `bind_local` for the receiving side,
/// or with a remote endpoint for the sending side.
class UdpTransport : public Transport {
public:
    static UdpTransport bind_local(const Endpoint& local) {
        UdpTransport t;
        // Room for a burst of unpaced packets.
        const int rcvbuf = 4 << 20;
        ::setsockopt(t.fd_, SOL_SOCKET, SO_RCVBUF, &rcvbuf, sizeof rcvbuf);
        const sockaddr_in addr = resolve(local.host.empty() ? "0.0.0.0" : local.host, local.port);
        if (::bind(t.fd_, reinterpret_cast<const sockaddr*>(&addr), sizeof addr) != 0) {
            throw TransportError("bind " + local.host + ":" + std::to_string(local.port) + ": " + std::strerror(errno));
        }
        return t;
    }
    static UdpTransport connect_to(const Endpoint& remote) {
        UdpTransport t;
        t.remote_ = resolve(remote.host.empty() ? "127.0.0.1" : remote.host, remote.port);
        t.has_remote_ = true;
        return t;
    }

    UdpTransport(UdpTransport&& o) noexcept : fd_(o.fd_), remote_(o.remote_), has_remote_(o.has_remote_) { o.fd_ = -1; }
    UdpTransport& operator=(UdpTransport&&) = delete;
    ~UdpTransport() override {
        if (fd_ >= 0) ::close(fd_);
    }

    /// Locally bound port (useful after binding port 0).
    std::uint16_t local_port() const {
        sockaddr_in a{};
        socklen_t len = sizeof a;
        if (::getsockname(fd_, reinterpret_cast<sockaddr*>(&a), &len) != 0) return 0;
        return ntohs(a.sin_port);
    }

    void send(std::span<const std::uint8_t> datagram) override {
        if (!has_remote_) throw TransportError("udp: no remote endpoint");
        const auto n = ::sendto(fd_, datagram.data(), datagram.size(), 0, reinterpret_cast<const sockaddr*>(&remote_),
                                sizeof remote_);
        if (n < 0 || static_cast<std::size_t>(n) != datagram.size()) {
            throw TransportError(std::string("udp send: ") + std::strerror(errno));
        }
    }

    std::optional<std::vector<std::uint8_t>> receive(std::chrono::milliseconds timeout) override {
        pollfd p{fd_, POLLIN, 0};
        const int r = ::poll(&p, 1, static_cast<int>(timeout.count()));
        if (r <= 0) return std::nullopt;
        std::vector<std::uint8_t> buf(65536);
        const auto n = ::recv(fd_, buf.data(), buf.size(), 0);
        if (n < 0) return std::nullopt;
        buf.resize(static_cast<std::size_t>(n));
        return buf;
    }

private:
    UdpTransport() : fd_(::socket(AF_INET, SOCK_DGRAM, 0)) {
        if (fd_ < 0) throw TransportError(std::string("udp socket: ") + std::strerror(errno));
    }

    static sockaddr_in resolve(const std::string& host, std::uint16_t port) {
        addrinfo hints{};
        hints.ai_family = AF_INET;
        hints.ai_socktype = SOCK_DGRAM;
        addrinfo* res = nullptr;
        if (::getaddrinfo(host.c_str(), nullptr, &hints, &res) != 0 || res == nullptr) {
            throw TransportError("cannot resolve host '" + host + "'");
        }
        sockaddr_in a = *reinterpret_cast<sockaddr_in*>(res->ai_addr);
        ::freeaddrinfo(res);
        a.sin_port = htons(port);
        return a;
    }

    int fd_ = -1;
    sockaddr_in remote_{};
    bool has_remote_ = false;
};

}  // namespace eps::telemetry
