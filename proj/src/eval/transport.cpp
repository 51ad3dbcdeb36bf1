#include "beliefbench/eval/transport.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <thread>
#include <unordered_map>

#include <nlohmann/json.hpp>

namespace beliefbench::eval {

namespace {

[[noreturn]] void sys_fail(const std::string& what) {
  throw Error(what + ": " + std::strerror(errno));
}

}  // namespace

std::vector<ProbeResponse> LocalClient::exchange(std::span<const ProbeQuery> queries) {
  std::vector<ProbeResponse> out;
  out.reserve(queries.size());
  for (const auto& q : queries) out.push_back(responder_.respond(q));
  return out;
}

// ---------------------------------------------------------------------------

LineChannel::LineChannel(int read_fd, int write_fd, bool owns)
    : read_fd_(read_fd), write_fd_(write_fd), owns_(owns) {}

LineChannel::~LineChannel() {
  if (!owns_) return;
  if (write_fd_ >= 0 && write_fd_ != read_fd_) ::close(write_fd_);
  if (read_fd_ >= 0) ::close(read_fd_);
}

void LineChannel::close_write() {
  if (write_fd_ < 0) return;
  if (write_fd_ == read_fd_)
    ::shutdown(write_fd_, SHUT_WR);
  else if (owns_)
    ::close(write_fd_);
  write_fd_ = -1;
}

void LineChannel::write_line(const std::string& line) {
  if (write_fd_ < 0) throw Error("channel closed for writing");
  std::string data = line;
  data += '\n';
  std::size_t done = 0;
  while (done < data.size()) {
    const ssize_t n = ::write(write_fd_, data.data() + done, data.size() - done);
    if (n < 0) {
      if (errno == EINTR) continue;
      if (errno == EPIPE) throw Error("model endpoint closed the connection");
      sys_fail("write");
    }
    done += static_cast<std::size_t>(n);
  }
}

std::optional<std::string> LineChannel::read_line(std::chrono::milliseconds timeout) {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  for (;;) {
    if (const auto nl = buffer_.find('\n'); nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      return line;
    }
    int wait_ms = -1;
    if (timeout.count() >= 0) {
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
          deadline - std::chrono::steady_clock::now());
      if (left.count() <= 0) return std::nullopt;
      wait_ms = static_cast<int>(std::min<long long>(left.count(), 1 << 30));
    }
    pollfd pfd{read_fd_, POLLIN, 0};
    const int ready = ::poll(&pfd, 1, wait_ms);
    if (ready < 0) {
      if (errno == EINTR) continue;
      sys_fail("poll");
    }
    if (ready == 0) return std::nullopt;
    char chunk[65536];
    const ssize_t n = ::read(read_fd_, chunk, sizeof chunk);
    if (n < 0) {
      if (errno == EINTR) continue;
      sys_fail("read");
    }
    if (n == 0) {
      if (buffer_.empty()) return std::nullopt;
      std::string rest = std::move(buffer_);
      buffer_.clear();
      return rest;
    }
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

// ---------------------------------------------------------------------------

std::vector<ProbeResponse> StreamClient::exchange(std::span<const ProbeQuery> queries) {
  std::unordered_map<std::string, std::size_t> pending;
  std::vector<std::optional<ProbeResponse>> slots(queries.size());
  std::size_t next = 0, received = 0;
  LineChannel& ch = channel();

  while (received < queries.size()) {
    while (next < queries.size() && pending.size() < window_) {
      if (!pending.emplace(queries[next].id, next).second)
        throw ProtocolError("duplicate query id '" + queries[next].id + "'");
      ch.write_line(encode(queries[next]));
      ++next;
    }
    const auto line = ch.read_line(timeout_);
    if (!line) break;
    if (line->empty()) continue;
    ProbeResponse r = decode_response(*line);
    const auto it = pending.find(r.id);
    if (it == pending.end()) {
      if (std::find(abandoned_.begin(), abandoned_.end(), r.id) != abandoned_.end()) continue;
      throw ProtocolError("response for unknown id '" + r.id + "'");
    }
    slots[it->second] = std::move(r);
    pending.erase(it);
    ++received;
  }
  for (const auto& [id, index] : pending) abandoned_.push_back(id);
  // queries never sent are also abandoned; their ids cannot come back

  std::vector<ProbeResponse> out;
  for (auto& s : slots)
    if (s) out.push_back(std::move(*s));
  return out;
}

// ---------------------------------------------------------------------------

ExecClient::ExecClient(const std::string& command, std::size_t window,
                       std::chrono::milliseconds timeout)
    : StreamClient(window, timeout) {
  ::signal(SIGPIPE, SIG_IGN);
  int to_child[2], from_child[2];
  if (::pipe2(to_child, O_CLOEXEC) != 0) sys_fail("pipe");
  if (::pipe2(from_child, O_CLOEXEC) != 0) {
    ::close(to_child[0]);
    ::close(to_child[1]);
    sys_fail("pipe");
  }
  pid_ = ::fork();
  if (pid_ < 0) sys_fail("fork");
  if (pid_ == 0) {
    ::dup2(to_child[0], STDIN_FILENO);
    ::dup2(from_child[1], STDOUT_FILENO);
    ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::close(to_child[0]);
  ::close(from_child[1]);
  channel_ = std::make_unique<LineChannel>(from_child[0], to_child[1], true);
}

ExecClient::~ExecClient() {
  channel_->close_write();
  for (int i = 0; i < 200; ++i) {
    int status = 0;
    if (::waitpid(pid_, &status, WNOHANG) == pid_) return;
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
  ::kill(pid_, SIGTERM);
  ::waitpid(pid_, nullptr, 0);
}

TcpClient::TcpClient(const std::string& address, std::size_t window,
                     std::chrono::milliseconds timeout)
    : StreamClient(window, timeout) {
  ::signal(SIGPIPE, SIG_IGN);
  const auto colon = address.rfind(':');
  if (colon == std::string::npos) throw Error("tcp address must be HOST:PORT");
  const std::string host = address.substr(0, colon);
  const std::string port = address.substr(colon + 1);
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* found = nullptr;
  if (const int rc = ::getaddrinfo(host.c_str(), port.c_str(), &hints, &found); rc != 0)
    throw Error("cannot resolve " + address + ": " + ::gai_strerror(rc));
  int fd = -1;
  for (addrinfo* a = found; a; a = a->ai_next) {
    fd = ::socket(a->ai_family, a->ai_socktype | SOCK_CLOEXEC, a->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, a->ai_addr, a->ai_addrlen) == 0) break;
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(found);
  if (fd < 0) throw Error("cannot connect to " + address);
  channel_ = std::make_unique<LineChannel>(fd, fd, true);
}

// ---------------------------------------------------------------------------

void serve_stream(Responder& responder, int read_fd, int write_fd) {
  LineChannel ch(read_fd, write_fd, false);
  while (const auto line = ch.read_line(std::chrono::milliseconds(-1))) {
    if (line->empty()) continue;
    ProbeResponse r;
    try {
      r = responder.respond(decode_query(*line));
    } catch (const std::exception& e) {
      r = ProbeResponse{};
      try {
        const auto j = nlohmann::json::parse(*line);
        if (j.is_object() && j.contains("id") && j["id"].is_string())
          r.id = j["id"].get<std::string>();
      } catch (const nlohmann::json::exception&) {
      }
      r.error = e.what();
    }
    ch.write_line(encode(r));
  }
}

Listener listen_tcp(std::uint16_t port) {
  const int fd = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
  if (fd < 0) sys_fail("socket");
  const int one = 1;
  ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = htons(port);
  if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
    ::close(fd);
    sys_fail("bind");
  }
  if (::listen(fd, 4) != 0) {
    ::close(fd);
    sys_fail("listen");
  }
  socklen_t len = sizeof addr;
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  return {fd, ntohs(addr.sin_port)};
}

void serve_one_connection(Responder& responder, const Listener& listener) {
  ::signal(SIGPIPE, SIG_IGN);
  const int fd = ::accept4(listener.fd, nullptr, nullptr, SOCK_CLOEXEC);
  if (fd < 0) sys_fail("accept");
  try {
    serve_stream(responder, fd, fd);
  } catch (...) {
    ::close(fd);
    throw;
  }
  ::close(fd);
}

}  // namespace beliefbench::eval
