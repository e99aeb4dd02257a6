#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <utility>

#include "mgsim/wire.hpp"

// Reliable ordered byte transport. Two implementations: an in-memory pipe
// for tests and in-process runs, and TCP over loopback. Components only see
// ByteStream so an attacker proxy can be spliced between any two ends.
namespace mgsim::transport {

class ByteStream {
public:
    virtual ~ByteStream() = default;

    virtual void write_all(std::span<const std::uint8_t> data) = 0;
    /// Blocks until at least one byte is available; returns 0 at end of stream.
    virtual std::size_t read_some(std::span<std::uint8_t> out) = 0;
    /// Signals end of stream to the peer. Further writes are an error.
    virtual void close_write() = 0;
};

/// One direction of an in-memory pipe, shared by both endpoints.
class PipeBuffer {
public:
    void write(std::span<const std::uint8_t> data);
    std::size_t read(std::span<std::uint8_t> out);
    void close();

private:
    std::mutex mu_;
    std::condition_variable cv_;
    std::deque<std::uint8_t> bytes_;
    bool closed_ = false;
};

class MemoryStream final : public ByteStream {
public:
    MemoryStream(std::shared_ptr<PipeBuffer> rx, std::shared_ptr<PipeBuffer> tx)
        : rx_(std::move(rx)), tx_(std::move(tx)) {}
    ~MemoryStream() override;

    void write_all(std::span<const std::uint8_t> data) override;
    std::size_t read_some(std::span<std::uint8_t> out) override;
    void close_write() override;

private:
    std::shared_ptr<PipeBuffer> rx_;
    std::shared_ptr<PipeBuffer> tx_;
    bool write_closed_ = false;
};

/// Connected pair of in-memory endpoints.
std::pair<std::unique_ptr<ByteStream>, std::unique_ptr<ByteStream>> memory_pair();

class TcpStream final : public ByteStream {
public:
    explicit TcpStream(int fd) : fd_(fd) {}
    TcpStream(const TcpStream&) = delete;
    TcpStream& operator=(const TcpStream&) = delete;
    ~TcpStream() override;

    void write_all(std::span<const std::uint8_t> data) override;
    std::size_t read_some(std::span<std::uint8_t> out) override;
    void close_write() override;

private:
    int fd_;
};

class TcpListener {
public:
    /// Binds 127.0.0.1; port 0 picks an ephemeral port.
    explicit TcpListener(std::uint16_t port = 0);
    TcpListener(const TcpListener&) = delete;
    TcpListener& operator=(const TcpListener&) = delete;
    ~TcpListener();

    std::uint16_t port() const noexcept { return port_; }
    std::unique_ptr<ByteStream> accept();

private:
    int fd_ = -1;
    std::uint16_t port_ = 0;
};

std::unique_ptr<ByteStream> tcp_connect(std::uint16_t port);

/// Frame-level reader on top of a ByteStream.
class FrameReader {
public:
    explicit FrameReader(ByteStream& stream) : stream_(stream) {}

    /// Next delimited frame, or nullopt at end of stream.
    std::optional<wire::Bytes> next();
    std::size_t skipped_bytes() const noexcept { return splitter_.skipped_bytes(); }

private:
    ByteStream& stream_;
    wire::FrameSplitter splitter_;
    bool eof_ = false;
};

}  // namespace mgsim::transport
