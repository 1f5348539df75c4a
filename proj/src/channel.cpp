// SPDX-License-Identifier: Apache-2.0
#include "arena/channel.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <stdexcept>

#include <spdlog/spdlog.h>

namespace arena {

std::pair<std::unique_ptr<LoopbackChannel>, std::unique_ptr<LoopbackChannel>> LoopbackChannel::make_pair() {
    auto ab = std::make_shared<Buffer>();
    auto ba = std::make_shared<Buffer>();
    auto a = std::unique_ptr<LoopbackChannel>(new LoopbackChannel);
    auto b = std::unique_ptr<LoopbackChannel>(new LoopbackChannel);
    a->out_ = ab;
    a->in_ = ba;
    b->out_ = ba;
    b->in_ = ab;
    return {std::move(a), std::move(b)};
}

void LoopbackChannel::write(std::span<const std::uint8_t> bytes) {
    if (out_->closed) throw std::runtime_error("write on closed loopback channel");
    out_->bytes.insert(out_->bytes.end(), bytes.begin(), bytes.end());
}

std::optional<std::vector<std::uint8_t>> LoopbackChannel::read_frame() {
    auto& q = in_->bytes;
    if (q.empty()) {
        if (in_->closed) return std::nullopt;
        throw std::runtime_error("loopback read with no pending frame");
    }
    std::vector<std::uint8_t> head(q.begin(), q.begin() + static_cast<std::ptrdiff_t>(std::min(q.size(), kHeaderSize)));
    const auto total = peek_frame_length(head);
    if (!total || q.size() < *total) throw ProtocolError(ProtocolErrc::Truncated, "loopback stream ends mid-frame");
    std::vector<std::uint8_t> frame(q.begin(), q.begin() + static_cast<std::ptrdiff_t>(*total));
    q.erase(q.begin(), q.begin() + static_cast<std::ptrdiff_t>(*total));
    return frame;
}

void LoopbackChannel::close() { out_->closed = true; }

TcpChannel::~TcpChannel() { close(); }

std::unique_ptr<TcpChannel> TcpChannel::connect(const std::string& host, std::uint16_t port) {
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    const std::string service = std::to_string(port);
    if (int rc = ::getaddrinfo(host.c_str(), service.c_str(), &hints, &res); rc != 0)
        throw std::runtime_error("cannot resolve " + host + ": " + ::gai_strerror(rc));
    int fd = -1;
    for (addrinfo* ai = res; ai; ai = ai->ai_next) {
        fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
        if (fd < 0) continue;
        if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
        ::close(fd);
        fd = -1;
    }
    ::freeaddrinfo(res);
    if (fd < 0) throw std::runtime_error("cannot connect to " + host + ":" + service);
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    return std::make_unique<TcpChannel>(fd);
}

void TcpChannel::write(std::span<const std::uint8_t> bytes) {
    std::size_t off = 0;
    while (off < bytes.size()) {
        const ssize_t n = ::send(fd_, bytes.data() + off, bytes.size() - off, MSG_NOSIGNAL);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw std::runtime_error(std::string("socket send failed: ") + std::strerror(errno));
        }
        off += static_cast<std::size_t>(n);
    }
}

bool TcpChannel::read_exact(std::uint8_t* dst, std::size_t n, bool allow_eof) {
    std::size_t off = 0;
    while (off < n) {
        const ssize_t r = ::recv(fd_, dst + off, n - off, 0);
        if (r < 0) {
            if (errno == EINTR) continue;
            throw std::runtime_error(std::string("socket recv failed: ") + std::strerror(errno));
        }
        if (r == 0) {
            if (off == 0 && allow_eof) return false;
            throw ProtocolError(ProtocolErrc::Truncated, "connection closed mid-frame");
        }
        off += static_cast<std::size_t>(r);
    }
    return true;
}

std::optional<std::vector<std::uint8_t>> TcpChannel::read_frame() {
    std::vector<std::uint8_t> frame(kHeaderSize);
    if (!read_exact(frame.data(), kHeaderSize, true)) return std::nullopt;
    const std::size_t total = *peek_frame_length(frame);
    if (total > kMaxFrameBytes) throw ProtocolError(ProtocolErrc::LengthMismatch, "frame exceeds the size limit");
    frame.resize(total);
    read_exact(frame.data() + kHeaderSize, total - kHeaderSize, false);
    return frame;
}

void TcpChannel::close() {
    if (fd_ >= 0) {
        ::shutdown(fd_, SHUT_RDWR);
        ::close(fd_);
        fd_ = -1;
    }
}

bool serve_one(ByteChannel& channel, ServerSession& session) {
    const auto frame = channel.read_frame();
    if (!frame) return false;
    const Message m = decode_message(*frame);
    if (auto reply = session.handle(m, frame->size())) channel.write(encode_message(*reply));
    return session.state() != ServerSession::State::Closed;
}

TcpServer::TcpServer(std::uint16_t port, SessionFactory factory, std::string bind_host) : factory_(std::move(factory)) {
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd_ < 0) throw std::runtime_error("cannot create socket");
    int one = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    if (::inet_pton(AF_INET, bind_host.c_str(), &addr.sin_addr) != 1)
        throw std::runtime_error("invalid bind address " + bind_host);
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 || ::listen(listen_fd_, 16) != 0) {
        ::close(listen_fd_);
        throw std::runtime_error(std::string("cannot listen: ") + std::strerror(errno));
    }
    socklen_t len = sizeof addr;
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
}

TcpServer::~TcpServer() { stop(); }

void TcpServer::start() {
    acceptor_ = std::thread([this] { run(); });
}

void TcpServer::run() {
    spdlog::info("edge server listening on port {}", port_);
    while (!stopping_) {
        const int fd = ::accept(listen_fd_, nullptr, nullptr);
        if (fd < 0) {
            if (errno == EINTR) continue;
            break;
        }
        int one = 1;
        ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
        {
            std::lock_guard fds(fds_mu_);
            open_fds_.insert(fd);
        }
        std::lock_guard lock(workers_mu_);
        workers_.emplace_back([this, fd] { handle(fd); });
    }
}

void TcpServer::handle(int fd) {
    TcpChannel channel(fd);
    auto session = factory_();
    try {
        while (serve_one(channel, *session)) {
        }
    } catch (const ProtocolError& e) {
        spdlog::warn("resetting connection: {}", e.what());
    } catch (const std::exception& e) {
        spdlog::error("connection failed: {}", e.what());
    }
    {
        std::lock_guard fds(fds_mu_);
        open_fds_.erase(fd);
    }
    served_.fetch_add(1);
}

void TcpServer::stop() {
    if (stopping_.exchange(true)) return;
    if (listen_fd_ >= 0) {
        ::shutdown(listen_fd_, SHUT_RDWR);
        ::close(listen_fd_);
        listen_fd_ = -1;
    }
    if (acceptor_.joinable()) acceptor_.join();
    {
        std::lock_guard fds(fds_mu_);
        for (int fd : open_fds_) ::shutdown(fd, SHUT_RDWR);
    }
    std::vector<std::thread> workers;
    {
        std::lock_guard lock(workers_mu_);
        workers.swap(workers_);
    }
    for (auto& t : workers)
        if (t.joinable()) t.join();
}

}  // namespace arena
