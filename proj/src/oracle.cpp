#include "freqsift/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace freqsift {

void validate_labels(const std::vector<std::string>& labels) {
  if (labels.size() < 2) throw Error(ErrorKind::InvalidParameter, "need at least two classes");
  std::set<std::string> seen;
  for (const auto& l : labels) {
    if (l.empty()) throw Error(ErrorKind::InvalidParameter, "empty class label");
    if (!seen.insert(l).second) throw Error(ErrorKind::InvalidParameter, "duplicate class label '" + l + "'");
  }
}

ClassDistribution::ClassDistribution(std::vector<double> probs, std::vector<std::string> labels)
    : probs_(std::move(probs)), labels_(std::move(labels)) {
  if (probs_.size() < 2) throw Error(ErrorKind::InvalidInput, "distribution needs at least two classes");
  if (labels_.size() != probs_.size()) {
    throw Error(ErrorKind::InvalidInput, "label count does not match probability count");
  }
  double sum = 0.0;
  for (double p : probs_) {
    if (!std::isfinite(p) || p < 0.0 || p > 1.0) {
      throw Error(ErrorKind::InvalidInput, "probability outside [0, 1]");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-6) throw Error(ErrorKind::InvalidInput, "probabilities do not sum to 1");
}

std::size_t top1(const ClassDistribution& dist) noexcept {
  const auto p = dist.probs();
  // max_element returns the first maximum.
  return static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
}

double shannon_entropy(const ClassDistribution& dist) noexcept {
  double h = 0.0;
  for (double p : dist.probs()) {
    if (p > 0.0) h -= p * std::log2(p);
  }
  return std::max(0.0, h);
}

std::vector<double> softmax(std::span<const double> logits, double temperature) {
  if (!(temperature > 0.0)) throw Error(ErrorKind::InvalidParameter, "temperature must be positive");
  const double top = *std::max_element(logits.begin(), logits.end());
  std::vector<double> out(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp((logits[i] - top) / temperature);
    sum += out[i];
  }
  for (double& p : out) p /= sum;
  return out;
}

const ClassDistribution& BatchOutcome::value() const {
  if (!dist_) throw *error_;
  return *dist_;
}

std::vector<BatchOutcome> Classifier::predict_batch(std::span<const Signal> signals) const {
  std::vector<BatchOutcome> out;
  out.reserve(signals.size());
  for (const auto& s : signals) {
    try {
      out.emplace_back(predict(s));
    } catch (const Error& e) {
      out.emplace_back(e);
    }
  }
  return out;
}

namespace {

void check_rate(const Classifier& classifier, const Signal& signal) {
  if (signal.sample_rate() != classifier.sample_rate()) {
    throw Error(ErrorKind::InvalidInput, "classifier '" + classifier.id() + "' expects " +
                                             std::to_string(classifier.sample_rate()) +
                                             " Hz, signal is " +
                                             std::to_string(signal.sample_rate()) + " Hz");
  }
}

}  // namespace

ClassDistribution classify(const Classifier& classifier, const Signal& signal) {
  check_rate(classifier, signal);
  return classifier.predict(signal);
}

std::vector<BatchOutcome> classify_batch(const Classifier& classifier,
                                         std::span<const Signal> signals) {
  // Rate mismatches become per-element errors; the rest go to the backend
  // as one batch.
  std::vector<std::optional<Error>> rejected(signals.size());
  std::vector<Signal> accepted;
  std::vector<std::size_t> where;
  for (std::size_t i = 0; i < signals.size(); ++i) {
    try {
      check_rate(classifier, signals[i]);
      accepted.push_back(signals[i]);
      where.push_back(i);
    } catch (const Error& e) {
      rejected[i] = e;
    }
  }
  auto results = accepted.empty() ? std::vector<BatchOutcome>{} : classifier.predict_batch(accepted);
  if (results.size() != accepted.size()) {
    throw Error(ErrorKind::BackendError, "backend returned wrong batch size");
  }
  std::vector<BatchOutcome> out;
  out.reserve(signals.size());
  std::size_t next = 0;
  for (std::size_t i = 0; i < signals.size(); ++i) {
    if (rejected[i]) {
      out.emplace_back(*rejected[i]);
    } else {
      out.push_back(std::move(results[next++]));
    }
  }
  return out;
}

}  // namespace freqsift
