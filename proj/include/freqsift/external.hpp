#pragma once

#include <chrono>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>

#include "freqsift/oracle.hpp"
#include "freqsift/protocol.hpp"

namespace freqsift {

// Line-oriented byte stream to an oracle server.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual void send_line(std::string_view line) = 0;
  // Throws backend-error on timeout or end of stream.
  virtual std::string recv_line(std::chrono::milliseconds timeout) = 0;
};

// Child process spoken to over its stdin/stdout. The command runs under
// /bin/sh -c; the child is terminated when the transport is destroyed.
std::unique_ptr<Transport> spawn_process(const std::string& command);

// Plain TCP connection to host:port.
std::unique_ptr<Transport> connect_tcp(const std::string& host, int port,
                                       std::chrono::milliseconds timeout);

struct ExternalOptions {
  std::chrono::milliseconds timeout{30000};
  std::size_t max_in_flight = 16;
};

// Classifier behind the freqsift-oracle/1 protocol. Requests are
// serialized over the single connection.
class ExternalClassifier final : public Classifier {
 public:
  // Reads the handshake; throws backend-error if it is missing or invalid.
  ExternalClassifier(std::string id, std::unique_ptr<Transport> transport,
                     ExternalOptions options = {});

  // endpoint is "stdio:<command>" or "tcp:<host>:<port>".
  static std::shared_ptr<ExternalClassifier> connect(std::string id, std::string_view endpoint,
                                                     ExternalOptions options = {});

  const std::string& id() const noexcept override { return id_; }
  const std::vector<std::string>& labels() const noexcept override { return handshake_.labels; }
  int sample_rate() const noexcept override { return handshake_.sample_rate; }
  std::string backend() const override { return "external"; }

 protected:
  ClassDistribution predict(const Signal& signal) const override;
  std::vector<BatchOutcome> predict_batch(std::span<const Signal> signals) const override;

 private:
  std::string id_;
  std::unique_ptr<Transport> transport_;
  ExternalOptions options_;
  protocol::Handshake handshake_;
  mutable std::mutex mutex_;
  mutable std::uint64_t next_request_ = 0;
};

}  // namespace freqsift
