// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <atomic>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "arena/session.hpp"

namespace arena {

/// Connection-oriented byte stream carrying whole protocol frames.
class ByteChannel {
public:
    virtual ~ByteChannel() = default;
    virtual void write(std::span<const std::uint8_t> bytes) = 0;
    /// Next complete frame, or nullopt once the peer has closed cleanly.
    virtual std::optional<std::vector<std::uint8_t>> read_frame() = 0;
    virtual void close() = 0;
};

/// In-process duplex pipe. Single-threaded: reads never block, an empty
/// buffer on an open pipe is a logic error.
class LoopbackChannel final : public ByteChannel {
public:
    /// Two connected endpoints.
    static std::pair<std::unique_ptr<LoopbackChannel>, std::unique_ptr<LoopbackChannel>> make_pair();

    void write(std::span<const std::uint8_t> bytes) override;
    std::optional<std::vector<std::uint8_t>> read_frame() override;
    void close() override;
    std::size_t pending() const { return in_->bytes.size(); }

private:
    struct Buffer {
        std::deque<std::uint8_t> bytes;
        bool closed = false;
    };
    std::shared_ptr<Buffer> in_;
    std::shared_ptr<Buffer> out_;
};

class TcpChannel final : public ByteChannel {
public:
    explicit TcpChannel(int fd) : fd_(fd) {}
    ~TcpChannel() override;
    TcpChannel(const TcpChannel&) = delete;
    TcpChannel& operator=(const TcpChannel&) = delete;

    static std::unique_ptr<TcpChannel> connect(const std::string& host, std::uint16_t port);

    void write(std::span<const std::uint8_t> bytes) override;
    std::optional<std::vector<std::uint8_t>> read_frame() override;
    void close() override;

private:
    bool read_exact(std::uint8_t* dst, std::size_t n, bool allow_eof);
    int fd_ = -1;
};

/// Reads one frame, dispatches it to the session and writes the reply.
/// Returns false when the stream has ended (EOF or BYE).
bool serve_one(ByteChannel& channel, ServerSession& session);

/// Accept loop; one ServerSession and thread per connection, engine shared.
class TcpServer {
public:
    using SessionFactory = std::function<std::unique_ptr<ServerSession>()>;

    TcpServer(std::uint16_t port, SessionFactory factory, std::string bind_host = "127.0.0.1");
    ~TcpServer();
    TcpServer(const TcpServer&) = delete;
    TcpServer& operator=(const TcpServer&) = delete;

    /// Bound port; useful when constructed with port 0.
    std::uint16_t port() const { return port_; }
    void start();
    void run();  // blocks until stop()
    void stop();
    std::size_t connections_served() const { return served_.load(); }

private:
    void handle(int fd);

    int listen_fd_ = -1;
    std::uint16_t port_ = 0;
    SessionFactory factory_;
    std::atomic<bool> stopping_{false};
    std::atomic<std::size_t> served_{0};
    std::thread acceptor_;
    std::mutex workers_mu_;
    std::vector<std::thread> workers_;
    std::mutex fds_mu_;
    std::set<int> open_fds_;
};

}  // namespace arena
