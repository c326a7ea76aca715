#pragma once

#include <cstddef>
#include <nlohmann/json.hpp>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "freqsift/oracle.hpp"
#include "freqsift/search.hpp"

namespace freqsift {

struct TransferVerdict {
  std::string model_id;
  std::size_t predicted_class = 0;
  bool class_match = false;
  double entropy_bits = 0.0;
  // entropy_bits <= epsilon * log2(n) (+1e-12)
  bool entropy_ok = false;
};

// Strict and partial transferability of one signal from a source model to a
// set of target models M:
//   alpha = |{f in M : f(s) = c}| / |M|
//   beta  = |{f in M : H(f(s)) <= epsilon log2 n}| / |M|
//   transferable <=> alpha = 1 and beta = 1
struct TransferReport {
  std::string source_model;
  std::string signal_id;
  std::size_t target_class = 0;
  double epsilon = 0.9;
  std::vector<TransferVerdict> verdicts;
  double alpha = 0.0;
  double beta = 0.0;
  bool transferable = false;
};

inline constexpr double kDefaultEpsilon = 0.9;

TransferVerdict make_verdict(std::string model_id, const ClassDistribution& dist,
                             std::size_t target_class, double epsilon);

// Report from already-computed target outputs.
TransferReport summarize_transfer(std::string source_id, std::string signal_id,
                                  std::size_t target_class, double epsilon,
                                  std::span<const std::pair<std::string, ClassDistribution>> outputs);

// One classify per target. All targets must share the source's label list.
TransferReport assess_transfer(const Signal& signal, std::size_t target_class,
                               const Classifier& source, std::span<const ClassifierPtr> targets,
                               double epsilon = kDefaultEpsilon, std::string signal_id = {});

enum class SubsetKind { Sufficient, Complete };

struct NamedSignal {
  std::string id;
  Signal signal;
};

struct TransferCell {
  std::size_t matches = 0;
  std::size_t samples = 0;
  // NaN when there are no samples.
  double value() const;
};

// Rows are source models, columns target models; the diagonal is blank.
struct TransferMatrix {
  std::vector<std::string> model_ids;
  std::vector<std::string> labels;
  SubsetKind kind = SubsetKind::Sufficient;
  double delta = 0.5;
  double epsilon = kDefaultEpsilon;
  std::vector<std::vector<TransferCell>> cells;
  // [source][target][class] counts, split by the subset's class.
  std::vector<std::vector<std::vector<TransferCell>>> by_class;
  std::vector<std::size_t> extracted;
  std::vector<std::size_t> excluded;
  // Per (source, signal) reports, ordered by source then corpus position.
  std::vector<TransferReport> reports;

  std::size_t size() const noexcept { return model_ids.size(); }
  double cell(std::size_t source, std::size_t target) const;
  // Means over defined off-diagonal cells.
  double row_average(std::size_t source) const;
  double column_average(std::size_t target) const;
};

struct MatrixOptions {
  SubsetKind kind = SubsetKind::Sufficient;
  double epsilon = kDefaultEpsilon;
  SearchOptions search;
  std::size_t workers = 1;
};

TransferMatrix transfer_matrix(std::span<const ClassifierPtr> models,
                               std::span<const NamedSignal> corpus, const MatrixOptions& options);

// CSV: "source,<targets...>,avg"; blank diagonal.
std::string matrix_csv(const TransferMatrix& matrix);
nlohmann::json matrix_json(const TransferMatrix& matrix);
nlohmann::json to_json(const TransferReport& report);
std::string verdicts_jsonl(const TransferMatrix& matrix);

struct TTestResult {
  double t = 0.0;
  double p_value = 1.0;
  std::size_t dof = 0;
};

// Paired two-sided t-test on x - y.
TTestResult paired_t_test(std::span<const double> x, std::span<const double> y);

}  // namespace freqsift
