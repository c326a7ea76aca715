#include "freqsift/protocol.hpp"

#include <boost/beast/core/detail/base64.hpp>
#include <cmath>
#include <cstring>
#include <nlohmann/json.hpp>

#include "freqsift/error.hpp"

namespace freqsift::protocol {
namespace {

namespace b64 = boost::beast::detail::base64;
using nlohmann::json;

json parse_object(std::string_view line, ErrorKind kind) {
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw Error(kind, "malformed protocol message", std::string(line));
  }
  return j;
}

}  // namespace

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  std::string out(b64::encoded_size(bytes.size()), '\0');
  out.resize(b64::encode(out.data(), bytes.data(), bytes.size()));
  return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
  if (text.size() % 4 != 0) throw Error(ErrorKind::InvalidInput, "invalid base64 payload");
  std::size_t body = text.size();
  for (int i = 0; i < 2 && body > 0 && text[body - 1] == '='; ++i) --body;
  std::vector<std::uint8_t> out(b64::decoded_size(text.size()));
  // The decoder stops at the first '=' or invalid character.
  const auto [written, read] = b64::decode(out.data(), text.data(), body);
  if (read != body) throw Error(ErrorKind::InvalidInput, "invalid base64 payload");
  out.resize(written);
  return out;
}

std::string encode_samples(std::span<const double> samples) {
  std::vector<std::uint8_t> bytes(samples.size() * sizeof(float));
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto f = static_cast<float>(samples[i]);
    std::memcpy(bytes.data() + i * sizeof(float), &f, sizeof(float));
  }
  return base64_encode(bytes);
}

std::vector<float> decode_samples(std::string_view text) {
  const auto bytes = base64_decode(text);
  if (bytes.size() % sizeof(float) != 0) {
    throw Error(ErrorKind::InvalidInput, "sample payload is not a whole number of float32 values");
  }
  std::vector<float> out(bytes.size() / sizeof(float));
  std::memcpy(out.data(), bytes.data(), bytes.size());
  return out;
}

std::string encode_handshake(const Handshake& h) {
  return json{{"protocol", kName}, {"n_classes", h.n_classes}, {"labels", h.labels},
              {"sample_rate", h.sample_rate}}
      .dump();
}

Handshake parse_handshake(std::string_view line) {
  const json j = parse_object(line, ErrorKind::BackendError);
  try {
    if (j.at("protocol").get<std::string>() != kName) {
      throw Error(ErrorKind::BackendError, "unsupported protocol", std::string(line));
    }
    Handshake h;
    h.n_classes = j.at("n_classes").get<int>();
    h.labels = j.at("labels").get<std::vector<std::string>>();
    h.sample_rate = j.at("sample_rate").get<int>();
    if (h.n_classes < 2 || static_cast<std::size_t>(h.n_classes) != h.labels.size() ||
        h.sample_rate <= 0) {
      throw Error(ErrorKind::BackendError, "inconsistent handshake", std::string(line));
    }
    validate_labels(h.labels);
    return h;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::BackendError, std::string("bad handshake: ") + e.what(), std::string(line));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::BackendError) throw;
    throw Error(ErrorKind::BackendError, e.what(), std::string(line));
  }
}

std::string encode_request(std::string_view id, const Signal& signal) {
  return json{{"id", id}, {"sample_rate", signal.sample_rate()},
              {"samples_b64", encode_samples(signal.samples())}}
      .dump();
}

Request parse_request(std::string_view line) {
  const json j = parse_object(line, ErrorKind::InvalidInput);
  try {
    Request r;
    r.id = j.at("id").get<std::string>();
    r.sample_rate = j.at("sample_rate").get<int>();
    r.samples = decode_samples(j.at("samples_b64").get<std::string>());
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::InvalidInput, std::string("bad request: ") + e.what(), std::string(line));
  }
}

std::string encode_response(std::string_view id, std::span<const double> probs,
                            const std::vector<std::string>* labels) {
  json j{{"id", id}, {"probs", std::vector<double>(probs.begin(), probs.end())}};
  if (labels != nullptr) j["labels"] = *labels;
  return j.dump();
}

std::string encode_error(std::string_view id, std::string_view message) {
  return json{{"id", id}, {"error", message}}.dump();
}

Response parse_response(std::string_view line) {
  const json j = parse_object(line, ErrorKind::BackendError);
  Response r;
  r.raw = std::string(line);
  try {
    r.id = j.at("id").get<std::string>();
    if (j.contains("error")) {
      r.error = j.at("error").is_string() ? j.at("error").get<std::string>() : j.at("error").dump();
      return r;
    }
    for (const auto& p : j.at("probs")) {
      if (!p.is_number()) throw Error(ErrorKind::BackendError, "non-numeric probability", r.raw);
      r.probs.push_back(p.get<double>());
    }
    if (j.contains("labels")) r.labels = j.at("labels").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::BackendError, std::string("bad response: ") + e.what(), r.raw);
  }
  return r;
}

ClassDistribution to_distribution(const Response& response, const std::vector<std::string>& labels) {
  if (response.error) {
    throw Error(ErrorKind::BackendError, "oracle reported: " + *response.error, response.raw);
  }
  if (response.labels && *response.labels != labels) {
    throw Error(ErrorKind::BackendError, "response labels differ from handshake", response.raw);
  }
  if (response.probs.size() != labels.size()) {
    throw Error(ErrorKind::BackendError,
                "expected " + std::to_string(labels.size()) + " probabilities, got " +
                    std::to_string(response.probs.size()),
                response.raw);
  }
  double sum = 0.0;
  for (double p : response.probs) {
    if (!std::isfinite(p) || p < 0.0 || p > 1.0 + kNormTolerance) {
      throw Error(ErrorKind::BackendError, "probability outside [0, 1]", response.raw);
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > kNormTolerance) {
    throw Error(ErrorKind::BackendError,
                "probabilities sum to " + std::to_string(sum) + " (logits?)", response.raw);
  }
  std::vector<double> probs = response.probs;
  for (double& p : probs) p = std::min(1.0, p / sum);
  return ClassDistribution(std::move(probs), labels);
}

}  // namespace freqsift::protocol
