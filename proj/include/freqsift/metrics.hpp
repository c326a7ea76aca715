#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "freqsift/signal.hpp"

namespace freqsift {

// ---- power spectral density -------------------------------------------------

enum class PsdMethod { Periodogram, Welch };

struct PsdConfig {
  PsdMethod method = PsdMethod::Periodogram;
  Window window = Window::Rect;
  std::size_t nperseg = 256;  // welch only
  std::size_t overlap = 128;  // welch only, samples shared by consecutive segments

  static PsdConfig welch(std::size_t nperseg, std::size_t overlap, Window window = Window::Hann) {
    return {PsdMethod::Welch, window, nperseg, overlap};
  }
};

// One-sided density in power per Hz.
struct PsdEstimate {
  std::vector<double> freqs;
  std::vector<double> power;
  PsdConfig config;

  double bin_width() const { return freqs.size() > 1 ? freqs[1] - freqs[0] : 0.0; }
  // Sum of power * bin width: the estimate's total signal power.
  double total_power() const;
};

PsdEstimate psd(const Signal& signal, const PsdConfig& config = {});

// Shannon entropy (bits) of the PSD normalized to a distribution; with
// `normalized`, divided by log2(#bins) into [0, 1]. Zero-energy signals have
// no entropy (undefined-entropy).
double spectral_entropy(const Signal& signal, bool normalized = true, const PsdConfig& config = {});

// Two columns "freq_hz,power" for external plotting.
std::string psd_csv(const PsdEstimate& estimate);

// ---- intelligibility --------------------------------------------------------

// Rational resampling by up/down through a Kaiser-windowed sinc polyphase
// filter with its group delay removed.
std::vector<double> resample_poly(std::span<const double> x, std::size_t up, std::size_t down);
Signal resample(const Signal& signal, int target_rate);

// Short-time objective intelligibility. The degraded signal is padded or
// trimmed to the clean one. Throws too-short when fewer than one 384 ms
// segment of non-silent frames remain.
double stoi(const Signal& clean, const Signal& degraded);

// ---- string distance ---------------------------------------------------------

// Unit-cost edit distance over Unicode code points (UTF-8 input).
std::size_t levenshtein(std::string_view a, std::string_view b);
// Same over whitespace-separated words.
std::size_t levenshtein_words(std::string_view a, std::string_view b);

enum class TokenLevel { Character, Word };

// 1 - d / max(|a|, |b|); two empty strings give 1.
double levenshtein_ratio(std::string_view a, std::string_view b,
                         TokenLevel level = TokenLevel::Character);

std::u32string decode_utf8(std::string_view text);
std::vector<std::string> split_words(std::string_view text);

template <typename T>
std::size_t edit_distance(std::span<const T> a, std::span<const T> b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

// ---- rank test ----------------------------------------------------------------

struct MannWhitneyResult {
  double u = 0.0;  // U statistic of the first sample
  double z = 0.0;
  double p_value = 1.0;  // two-sided, normal approximation with continuity correction
  // False when either sample has fewer than 8 values.
  bool reliable = false;
};

MannWhitneyResult mann_whitney_u(std::span<const double> x, std::span<const double> y);

}  // namespace freqsift
