#pragma once

// freqsift-oracle/1: newline-delimited JSON spoken between the engine and an
// external classifier over stdio or TCP.
//
//   server -> {"protocol":"freqsift-oracle/1","n_classes":N,"labels":[...],"sample_rate":R}
//   engine -> {"id":"r0","sample_rate":R,"samples_b64":"<little-endian float32>"}
//   server -> {"id":"r0","probs":[...],"labels":[...]}   (labels optional)
//   server -> {"id":"r0","error":"..."}
//
// Responses are matched to requests by id, never by arrival order.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "freqsift/oracle.hpp"
#include "freqsift/signal.hpp"

namespace freqsift::protocol {

inline constexpr std::string_view kName = "freqsift-oracle/1";

// Renormalization window for incoming probability vectors.
inline constexpr double kNormTolerance = 1e-4;

struct Handshake {
  int n_classes = 0;
  std::vector<std::string> labels;
  int sample_rate = 0;
};

struct Request {
  std::string id;
  int sample_rate = 0;
  std::vector<float> samples;
};

struct Response {
  std::string id;
  std::vector<double> probs;
  std::optional<std::vector<std::string>> labels;
  std::optional<std::string> error;
  std::string raw;
};

std::string base64_encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> base64_decode(std::string_view text);

// Float32 little-endian samples as base64.
std::string encode_samples(std::span<const double> samples);
std::vector<float> decode_samples(std::string_view b64);

std::string encode_handshake(const Handshake& handshake);
Handshake parse_handshake(std::string_view line);

std::string encode_request(std::string_view id, const Signal& signal);
Request parse_request(std::string_view line);

std::string encode_response(std::string_view id, std::span<const double> probs,
                            const std::vector<std::string>* labels = nullptr);
std::string encode_error(std::string_view id, std::string_view message);
// Throws backend-error on anything that is not a well-formed response.
Response parse_response(std::string_view line);

// Turns a response into a distribution over `labels`: sums within
// kNormTolerance of 1 are renormalized, anything else is a backend error
// carrying the raw payload.
ClassDistribution to_distribution(const Response& response, const std::vector<std::string>& labels);

}  // namespace freqsift::protocol
