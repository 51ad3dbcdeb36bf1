#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "beliefbench/eval/protocol.hpp"

namespace beliefbench::eval {

/// Sends a batch of queries and collects the responses. Responses are
/// matched by id, so the model may answer out of order. Queries without a
/// response before the timeout are absent from the result.
class ProbeClient {
 public:
  virtual ~ProbeClient() = default;
  virtual std::vector<ProbeResponse> exchange(std::span<const ProbeQuery> queries) = 0;
};

/// Calls an in-process responder.
class LocalClient : public ProbeClient {
 public:
  explicit LocalClient(Responder& responder) : responder_(responder) {}
  std::vector<ProbeResponse> exchange(std::span<const ProbeQuery> queries) override;

 private:
  Responder& responder_;
};

/// Newline-delimited records over a pair of file descriptors.
class LineChannel {
 public:
  LineChannel(int read_fd, int write_fd, bool owns);
  LineChannel(const LineChannel&) = delete;
  LineChannel& operator=(const LineChannel&) = delete;
  ~LineChannel();

  void write_line(const std::string& line);
  /// Next line, or nullopt on end of stream or timeout.
  std::optional<std::string> read_line(std::chrono::milliseconds timeout);
  void close_write();

 private:
  int read_fd_;
  int write_fd_;
  bool owns_;
  std::string buffer_;
};

/// Pipelines queries over a channel with at most `window` in flight.
class StreamClient : public ProbeClient {
 public:
  StreamClient(std::size_t window, std::chrono::milliseconds timeout)
      : window_(window ? window : 1), timeout_(timeout) {}
  std::vector<ProbeResponse> exchange(std::span<const ProbeQuery> queries) override;

 protected:
  virtual LineChannel& channel() = 0;

 private:
  std::size_t window_;
  std::chrono::milliseconds timeout_;
  std::vector<std::string> abandoned_;  // ids given up on after a timeout
};

/// Runs `sh -c command` and talks to its stdin/stdout.
class ExecClient : public StreamClient {
 public:
  ExecClient(const std::string& command, std::size_t window, std::chrono::milliseconds timeout);
  ~ExecClient() override;

 protected:
  LineChannel& channel() override { return *channel_; }

 private:
  int pid_ = -1;
  std::unique_ptr<LineChannel> channel_;
};

/// Connects to HOST:PORT.
class TcpClient : public StreamClient {
 public:
  TcpClient(const std::string& address, std::size_t window, std::chrono::milliseconds timeout);

 protected:
  LineChannel& channel() override { return *channel_; }

 private:
  std::unique_ptr<LineChannel> channel_;
};

/// Reads queries line by line and writes one response per query until end
/// of input. Undecodable lines get an error response (with the id when one
/// can be recovered).
void serve_stream(Responder& responder, int read_fd, int write_fd);

/// Bound and listening TCP socket on 127.0.0.1; port 0 picks a free port.
struct Listener {
  int fd = -1;
  std::uint16_t port = 0;
};
Listener listen_tcp(std::uint16_t port);
/// Accepts one connection and serves it to completion.
void serve_one_connection(Responder& responder, const Listener& listener);

}  // namespace beliefbench::eval
