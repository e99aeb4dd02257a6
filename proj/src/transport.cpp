#include "mgsim/transport.hpp"

#include <algorithm>
#include <array>
#include <cerrno>
#include <cstring>
#include <string>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include "mgsim/types.hpp"

namespace mgsim::transport {

namespace {

[[noreturn]] void fail(const std::string& what) {
    throw RuntimeFailure(what + ": " + std::strerror(errno));
}

}  // namespace

void PipeBuffer::write(std::span<const std::uint8_t> data) {
    {
        std::lock_guard lock(mu_);
        if (closed_) throw RuntimeFailure("write to closed pipe");
        bytes_.insert(bytes_.end(), data.begin(), data.end());
    }
    cv_.notify_all();
}

std::size_t PipeBuffer::read(std::span<std::uint8_t> out) {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return !bytes_.empty() || closed_; });
    const std::size_t n = std::min(out.size(), bytes_.size());
    std::copy_n(bytes_.begin(), n, out.begin());
    bytes_.erase(bytes_.begin(), bytes_.begin() + static_cast<std::ptrdiff_t>(n));
    return n;
}

void PipeBuffer::close() {
    {
        std::lock_guard lock(mu_);
        closed_ = true;
    }
    cv_.notify_all();
}

MemoryStream::~MemoryStream() {
    if (!write_closed_) tx_->close();
}

void MemoryStream::write_all(std::span<const std::uint8_t> data) { tx_->write(data); }

std::size_t MemoryStream::read_some(std::span<std::uint8_t> out) { return rx_->read(out); }

void MemoryStream::close_write() {
    if (!write_closed_) {
        write_closed_ = true;
        tx_->close();
    }
}

std::pair<std::unique_ptr<ByteStream>, std::unique_ptr<ByteStream>> memory_pair() {
    auto a_to_b = std::make_shared<PipeBuffer>();
    auto b_to_a = std::make_shared<PipeBuffer>();
    return {std::make_unique<MemoryStream>(b_to_a, a_to_b), std::make_unique<MemoryStream>(a_to_b, b_to_a)};
}

TcpStream::~TcpStream() {
    if (fd_ >= 0) ::close(fd_);
}

void TcpStream::write_all(std::span<const std::uint8_t> data) {
    std::size_t sent = 0;
    while (sent < data.size()) {
        const ssize_t n = ::send(fd_, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
        if (n < 0) {
            if (errno == EINTR) continue;
            fail("send");
        }
        sent += static_cast<std::size_t>(n);
    }
}

std::size_t TcpStream::read_some(std::span<std::uint8_t> out) {
    for (;;) {
        const ssize_t n = ::recv(fd_, out.data(), out.size(), 0);
        if (n >= 0) return static_cast<std::size_t>(n);
        if (errno == EINTR) continue;
        if (errno == ECONNRESET) return 0;
        fail("recv");
    }
}

void TcpStream::close_write() { ::shutdown(fd_, SHUT_WR); }

TcpListener::TcpListener(std::uint16_t port) {
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd_ < 0) fail("socket");
    const int one = 1;
    ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = htons(port);
    if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0) {
        ::close(fd_);
        fail("bind");
    }
    if (::listen(fd_, 4) < 0) {
        ::close(fd_);
        fail("listen");
    }
    socklen_t len = sizeof addr;
    ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
}

TcpListener::~TcpListener() {
    if (fd_ >= 0) ::close(fd_);
}

std::unique_ptr<ByteStream> TcpListener::accept() {
    for (;;) {
        const int fd = ::accept(fd_, nullptr, nullptr);
        if (fd >= 0) {
            const int one = 1;
            ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
            return std::make_unique<TcpStream>(fd);
        }
        if (errno != EINTR) fail("accept");
    }
}

std::unique_ptr<ByteStream> tcp_connect(std::uint16_t port) {
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) fail("socket");
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = htons(port);
    if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0) {
        ::close(fd);
        fail("connect to port " + std::to_string(port));
    }
    const int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    return std::make_unique<TcpStream>(fd);
}

std::optional<wire::Bytes> FrameReader::next() {
    std::array<std::uint8_t, 512> chunk{};
    for (;;) {
        if (auto frame = splitter_.next()) return frame;
        if (eof_) return std::nullopt;
        const std::size_t n = stream_.read_some(chunk);
        if (n == 0) {
            eof_ = true;
            continue;
        }
        splitter_.feed(std::span<const std::uint8_t>(chunk.data(), n));
    }
}

}  // namespace mgsim::transport
