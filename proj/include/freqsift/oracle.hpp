#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "freqsift/error.hpp"
#include "freqsift/signal.hpp"

namespace freqsift {

// Probability vector over a classifier's classes.
class ClassDistribution {
 public:
  // Requires n >= 2, every p in [0, 1] and sum within 1e-6 of 1.
  ClassDistribution(std::vector<double> probs, std::vector<std::string> labels);

  std::span<const double> probs() const noexcept { return probs_; }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  std::size_t size() const noexcept { return probs_.size(); }
  double operator[](std::size_t i) const { return probs_.at(i); }

  bool operator==(const ClassDistribution&) const = default;

 private:
  std::vector<double> probs_;
  std::vector<std::string> labels_;
};

// Index of the most probable class; ties go to the lowest index.
std::size_t top1(const ClassDistribution& dist) noexcept;

// Shannon entropy in bits, with 0 log 0 = 0.
double shannon_entropy(const ClassDistribution& dist) noexcept;

// Softmax of logits / temperature with max subtraction.
std::vector<double> softmax(std::span<const double> logits, double temperature);

// Result slot of a batch call: either a distribution or the error for
// that element.
class BatchOutcome {
 public:
  BatchOutcome(ClassDistribution dist) : dist_(std::move(dist)) {}
  BatchOutcome(Error error) : error_(std::move(error)) {}

  bool ok() const noexcept { return dist_.has_value(); }
  // Throws the stored error when !ok().
  const ClassDistribution& value() const;
  const std::optional<Error>& error() const noexcept { return error_; }

 private:
  std::optional<ClassDistribution> dist_;
  std::optional<Error> error_;
};

// The black-box f of every search and transfer definition. Implementations
// must be safe to call concurrently from several threads.
class Classifier {
 public:
  virtual ~Classifier() = default;

  virtual const std::string& id() const noexcept = 0;
  virtual const std::vector<std::string>& labels() const noexcept = 0;
  virtual int sample_rate() const noexcept = 0;
  virtual std::string backend() const = 0;

  std::size_t n_classes() const noexcept { return labels().size(); }

 protected:
  friend ClassDistribution classify(const Classifier&, const Signal&);
  friend std::vector<BatchOutcome> classify_batch(const Classifier&, std::span<const Signal>);

  // Called with signals whose sample rate already matches.
  virtual ClassDistribution predict(const Signal& signal) const = 0;
  virtual std::vector<BatchOutcome> predict_batch(std::span<const Signal> signals) const;
};

using ClassifierPtr = std::shared_ptr<const Classifier>;

ClassDistribution classify(const Classifier& classifier, const Signal& signal);

// Element-wise classify; one failing element does not abort the batch.
std::vector<BatchOutcome> classify_batch(const Classifier& classifier,
                                         std::span<const Signal> signals);

// Labels must be non-empty, pairwise distinct, and at least two.
void validate_labels(const std::vector<std::string>& labels);

}  // namespace freqsift
