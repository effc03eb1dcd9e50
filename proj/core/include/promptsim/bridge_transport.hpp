#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "promptsim/bridge_frame.hpp"

namespace promptsim {

/// Stream over POSIX file descriptors (pipes or sockets).
class FdStream final : public ByteStream {
 public:
  /// `read_fd` and `write_fd` may be the same descriptor (a socket).
  FdStream(int read_fd, int write_fd, bool owns = true) noexcept;
  ~FdStream() override;
  FdStream(const FdStream&) = delete;
  FdStream& operator=(const FdStream&) = delete;

  void write_all(std::span<const std::uint8_t> bytes) override;
  void read_exact(std::span<std::uint8_t> bytes) override;
  void close_write() override;

 private:
  int read_fd_;
  int write_fd_;
  bool owns_;
  bool is_socket_;
};

/// Connected pair of local sockets, for in-process loopback.
std::pair<std::unique_ptr<ByteStream>, std::unique_ptr<ByteStream>> socket_pair();

/// The process's own stdin/stdout (not closed on destruction).
std::unique_ptr<ByteStream> stdio_stream();

std::unique_ptr<ByteStream> connect_tcp(const std::string& host, std::uint16_t port);

/// Listening TCP socket. Port 0 picks an ephemeral port.
class TcpListener {
 public:
  explicit TcpListener(std::uint16_t port = 0, const std::string& host = "127.0.0.1");
  ~TcpListener();
  TcpListener(const TcpListener&) = delete;
  TcpListener& operator=(const TcpListener&) = delete;

  std::uint16_t port() const noexcept { return port_; }
  std::unique_ptr<ByteStream> accept();

 private:
  int fd_ = -1;
  std::uint16_t port_ = 0;
};

/// Child process whose stdin/stdout are connected to a stream; stderr is
/// inherited.
class ChildProcess {
 public:
  explicit ChildProcess(const std::vector<std::string>& argv);
  ~ChildProcess();
  ChildProcess(const ChildProcess&) = delete;
  ChildProcess& operator=(const ChildProcess&) = delete;

  ByteStream& stream() noexcept { return *stream_; }
  /// Closes the pipe to the child and waits for it; returns its exit status
  /// (128 + signal for signalled children).
  int wait();

 private:
  int pid_ = -1;
  std::unique_ptr<FdStream> stream_;
  int status_ = -1;
};

/// Parses "host:port" (host may be omitted: ":9000").
std::pair<std::string, std::uint16_t> parse_host_port(const std::string& text);

}  // namespace promptsim
