#include "freqsift/external.hpp"

#include <fcntl.h>
#include <netdb.h>
#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <map>

namespace freqsift {
namespace {

using Clock = std::chrono::steady_clock;

// Buffered line I/O over a pair of file descriptors.
class FdTransport : public Transport {
 public:
  FdTransport(int read_fd, int write_fd, bool socket)
      : read_fd_(read_fd), write_fd_(write_fd), socket_(socket) {}

  ~FdTransport() override {
    if (read_fd_ >= 0) ::close(read_fd_);
    if (write_fd_ >= 0 && write_fd_ != read_fd_) ::close(write_fd_);
  }

  void send_line(std::string_view line) override {
    std::string buf(line);
    buf.push_back('\n');
    std::size_t off = 0;
    while (off < buf.size()) {
      const ssize_t n = socket_ ? ::send(write_fd_, buf.data() + off, buf.size() - off, MSG_NOSIGNAL)
                                : ::write(write_fd_, buf.data() + off, buf.size() - off);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw Error(ErrorKind::BackendError, std::string("write to oracle failed: ") + std::strerror(errno));
      }
      off += static_cast<std::size_t>(n);
    }
  }

  std::string recv_line(std::chrono::milliseconds timeout) override {
    const auto deadline = Clock::now() + timeout;
    for (;;) {
      if (auto nl = buffer_.find('\n'); nl != std::string::npos) {
        std::string line = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        return line;
      }
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
      if (left.count() <= 0) throw Error(ErrorKind::BackendError, "oracle timed out");
      pollfd pfd{read_fd_, POLLIN, 0};
      const int ready = ::poll(&pfd, 1, static_cast<int>(left.count()));
      if (ready < 0) {
        if (errno == EINTR) continue;
        throw Error(ErrorKind::BackendError, std::string("poll failed: ") + std::strerror(errno));
      }
      if (ready == 0) throw Error(ErrorKind::BackendError, "oracle timed out");
      char chunk[65536];
      const ssize_t n = ::read(read_fd_, chunk, sizeof(chunk));
      if (n < 0) {
        if (errno == EINTR) continue;
        throw Error(ErrorKind::BackendError, std::string("read failed: ") + std::strerror(errno));
      }
      if (n == 0) throw Error(ErrorKind::BackendError, "oracle closed the connection", buffer_);
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }

 private:
  int read_fd_;
  int write_fd_;
  bool socket_;
  std::string buffer_;
};

class ProcessTransport final : public FdTransport {
 public:
  ProcessTransport(int read_fd, int write_fd, pid_t pid) : FdTransport(read_fd, write_fd, false), pid_(pid) {}
  ~ProcessTransport() override {
    ::kill(pid_, SIGTERM);
    int status = 0;
    ::waitpid(pid_, &status, 0);
  }

 private:
  pid_t pid_;
};

}  // namespace

std::unique_ptr<Transport> spawn_process(const std::string& command) {
  ::signal(SIGPIPE, SIG_IGN);
  int to_child[2];
  int from_child[2];
  if (::pipe(to_child) != 0 || ::pipe(from_child) != 0) {
    throw Error(ErrorKind::BackendError, "pipe() failed");
  }
  const pid_t pid = ::fork();
  if (pid < 0) throw Error(ErrorKind::BackendError, "fork() failed");
  if (pid == 0) {
    ::dup2(to_child[0], STDIN_FILENO);
    ::dup2(from_child[1], STDOUT_FILENO);
    ::close(to_child[0]);
    ::close(to_child[1]);
    ::close(from_child[0]);
    ::close(from_child[1]);
    ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::close(to_child[0]);
  ::close(from_child[1]);
  ::fcntl(to_child[1], F_SETFD, FD_CLOEXEC);
  ::fcntl(from_child[0], F_SETFD, FD_CLOEXEC);
  return std::make_unique<ProcessTransport>(from_child[0], to_child[1], pid);
}

std::unique_ptr<Transport> connect_tcp(const std::string& host, int port,
                                       std::chrono::milliseconds timeout) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const std::string service = std::to_string(port);
  if (const int rc = ::getaddrinfo(host.c_str(), service.c_str(), &hints, &res); rc != 0) {
    throw Error(ErrorKind::BackendError, "cannot resolve " + host + ": " + ::gai_strerror(rc));
  }
  int fd = -1;
  for (addrinfo* ai = res; ai != nullptr; ai = ai->ai_next) {
    fd = ::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol);
    if (fd < 0) continue;
    timeval tv{static_cast<time_t>(timeout.count() / 1000),
               static_cast<suseconds_t>((timeout.count() % 1000) * 1000)};
    ::setsockopt(fd, SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof(tv));
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(res);
  if (fd < 0) throw Error(ErrorKind::BackendError, "cannot connect to " + host + ":" + service);
  return std::make_unique<FdTransport>(fd, fd, true);
}

ExternalClassifier::ExternalClassifier(std::string id, std::unique_ptr<Transport> transport,
                                       ExternalOptions options)
    : id_(std::move(id)), transport_(std::move(transport)), options_(options) {
  if (options_.max_in_flight == 0) options_.max_in_flight = 1;
  handshake_ = protocol::parse_handshake(transport_->recv_line(options_.timeout));
}

std::shared_ptr<ExternalClassifier> ExternalClassifier::connect(std::string id,
                                                                std::string_view endpoint,
                                                                ExternalOptions options) {
  if (endpoint.starts_with("stdio:")) {
    return std::make_shared<ExternalClassifier>(
        std::move(id), spawn_process(std::string(endpoint.substr(6))), options);
  }
  if (endpoint.starts_with("tcp:")) {
    const std::string_view rest = endpoint.substr(4);
    const auto colon = rest.rfind(':');
    if (colon == std::string_view::npos) {
      throw Error(ErrorKind::InvalidParameter, "tcp endpoint needs host:port");
    }
    int port = 0;
    try {
      port = std::stoi(std::string(rest.substr(colon + 1)));
    } catch (const std::exception&) {
      throw Error(ErrorKind::InvalidParameter, "bad port in endpoint " + std::string(endpoint));
    }
    return std::make_shared<ExternalClassifier>(
        std::move(id), connect_tcp(std::string(rest.substr(0, colon)), port, options.timeout),
        options);
  }
  throw Error(ErrorKind::InvalidParameter, "unknown endpoint '" + std::string(endpoint) + "'");
}

ClassDistribution ExternalClassifier::predict(const Signal& signal) const {
  auto out = predict_batch(std::span<const Signal>(&signal, 1));
  return out.front().value();
}

std::vector<BatchOutcome> ExternalClassifier::predict_batch(std::span<const Signal> signals) const {
  std::lock_guard lock(mutex_);
  std::vector<std::optional<BatchOutcome>> results(signals.size());
  std::map<std::string, std::size_t> pending;
  std::size_t next = 0;

  auto fail_pending = [&](const Error& e) {
    for (const auto& [rid, idx] : pending) results[idx] = BatchOutcome(e);
    pending.clear();
  };

  while (next < signals.size() || !pending.empty()) {
    try {
      while (next < signals.size() && pending.size() < options_.max_in_flight) {
        std::string rid = "r" + std::to_string(next_request_++);
        transport_->send_line(protocol::encode_request(rid, signals[next]));
        pending.emplace(std::move(rid), next++);
      }
    } catch (const Error& e) {
      fail_pending(e);
      for (; next < signals.size(); ++next) results[next] = BatchOutcome(e);
      break;
    }

    std::string line;
    try {
      line = transport_->recv_line(options_.timeout);
    } catch (const Error& e) {
      fail_pending(e);
      if (std::string_view(e.what()).find("closed") != std::string_view::npos) {
        for (; next < signals.size(); ++next) results[next] = BatchOutcome(e);
        break;
      }
      continue;
    }

    protocol::Response response;
    try {
      response = protocol::parse_response(line);
    } catch (const Error& e) {
      // No usable id: every outstanding request is suspect.
      fail_pending(e);
      continue;
    }
    auto it = pending.find(response.id);
    if (it == pending.end()) continue;  // late answer to a request that already timed out
    const std::size_t idx = it->second;
    pending.erase(it);
    try {
      results[idx] = BatchOutcome(protocol::to_distribution(response, handshake_.labels));
    } catch (const Error& e) {
      results[idx] = BatchOutcome(e);
    }
  }

  std::vector<BatchOutcome> out;
  out.reserve(results.size());
  for (auto& r : results) out.push_back(std::move(*r));
  return out;
}

}  // namespace freqsift
