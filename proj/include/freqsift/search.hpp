#pragma once

#include <cstddef>
#include <cstdint>
#include <nlohmann/json.hpp>
#include <optional>
#include <span>
#include <vector>

#include "freqsift/oracle.hpp"
#include "freqsift/signal.hpp"

namespace freqsift {

enum class AnalysisMode { Whole, Stft };

// How a mask turns back into a signal.
struct AnalysisConfig {
  AnalysisMode mode = AnalysisMode::Whole;
  std::size_t n_fft = 0;  // whole mode; 0 means the signal length
  StftConfig stft;        // stft mode; the mask is applied to every frame
  FillPolicy fill;

  std::size_t resolved_n_fft(const Signal& signal) const;
  std::size_t n_bins(const Signal& signal) const;
};

Signal reconstruct(const Signal& signal, const FrequencyMask& mask, const AnalysisConfig& analysis);

struct SearchBudget {
  std::size_t max_queries = 1'000'000;
  std::size_t max_refine_depth = 64;
  std::uint64_t seed = 0;
};

struct SearchOptions {
  double delta = 0.5;
  // Minimum target-class probability for any accepted mask; nullopt means
  // 1.5 / n_classes. Inputs whose own confidence is below it are refused.
  std::optional<double> confidence_floor;
  // Bins per search unit; 0 picks ceil(bins / 256) and then refines the
  // result down to single bins.
  std::size_t granularity = 0;
  // Whether a complete mask may be the whole spectrum (empty complement,
  // inverse undefined). When false such inputs raise not-found.
  bool allow_full_complete = true;
  AnalysisConfig analysis;
  SearchBudget budget;
};

// Bins-per-unit that splits n_bins into (about) `units` units.
std::size_t granularity_for_units(std::size_t n_bins, std::size_t units);

struct SufficiencyCheck {
  bool sufficient = false;
  std::size_t target_class = 0;
  double original_confidence = 0.0;
  ClassDistribution distribution;
};

// Sufficient iff top1(masked) == top1(original) and the masked target
// probability is at least max(delta * sigma, floor).
SufficiencyCheck verify_sufficient(const Classifier& oracle, const Signal& signal,
                                   const FrequencyMask& mask, double delta,
                                   const AnalysisConfig& analysis = {}, double floor = 0.0);

struct SufficiencyResult {
  FrequencyMask mask;
  std::size_t target_class = 0;
  double achieved_confidence = 0.0;
  double original_confidence = 0.0;
  double delta = 0.5;
  std::size_t oracle_queries = 0;
  bool one_minimal = false;
  AnalysisConfig analysis;
};

struct CompletenessResult {
  FrequencyMask mask;
  std::size_t target_class = 0;
  double achieved_confidence = 0.0;
  double original_confidence = 0.0;
  double delta = 0.5;
  std::optional<std::size_t> inverse_class;
  bool inverse_defined = false;
  std::size_t oracle_queries = 0;
  bool one_minimal = false;
  AnalysisConfig analysis;
};

SufficiencyResult find_sufficient(const Classifier& oracle, const Signal& signal,
                                  const SearchOptions& options);
CompletenessResult find_complete(const Classifier& oracle, const Signal& signal,
                                 const SearchOptions& options);

// Reconstruction from the complement of a complete mask.
Signal inverse_signal(const Signal& signal, const CompletenessResult& complete);

struct ExhaustiveResult {
  std::size_t unit_count = 0;
  std::size_t granularity = 1;
  std::size_t n_bins = 0;
  std::size_t target_class = 0;
  // sufficient[bits] for every unit subset, bit u = unit u.
  std::vector<bool> sufficient;
  // Unit subsets that are sufficient with no sufficient strict subset.
  std::vector<std::uint32_t> minimal;
  std::size_t oracle_queries = 0;

  FrequencyMask mask(std::uint32_t bits) const;
  std::uint32_t bits_of(const FrequencyMask& mask) const;
  // True if some strict subset of `bits` is sufficient.
  bool has_sufficient_strict_subset(std::uint32_t bits) const;
};

inline constexpr std::size_t kMaxExhaustiveUnits = 16;

// Enumerates all 2^units masks at options.granularity (which must be set).
// Refuses more than 16 units.
ExhaustiveResult exhaustive_minimal(const Classifier& oracle, const Signal& signal,
                                    const SearchOptions& options);

// {"n_bins":N,"granularity":G,"rle":[...]} where runs alternate
// dropped/kept starting with a (possibly empty) dropped run.
nlohmann::json mask_to_json(const FrequencyMask& mask);
FrequencyMask mask_from_json(const nlohmann::json& j);

nlohmann::json to_json(const SufficiencyResult& result, const Classifier& oracle);
nlohmann::json to_json(const CompletenessResult& result, const Classifier& oracle);

}  // namespace freqsift
