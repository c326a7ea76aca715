#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace freqsift {

using Complex = std::complex<double>;

// Mono time-domain audio. Samples are finite doubles, nominally in [-1, 1].
class Signal {
 public:
  Signal(std::vector<double> samples, int sample_rate_hz);

  static Signal zeros(std::size_t length, int sample_rate_hz);

  std::span<const double> samples() const noexcept { return samples_; }
  std::size_t size() const noexcept { return samples_.size(); }
  int sample_rate() const noexcept { return sample_rate_; }
  double duration_s() const noexcept {
    return static_cast<double>(samples_.size()) / sample_rate_;
  }

  // Sum of squared samples.
  double energy() const noexcept;

  // Copy zero-padded (or truncated) to `length` samples.
  Signal resized(std::size_t length) const;

  bool operator==(const Signal&) const = default;

 private:
  std::vector<double> samples_;
  int sample_rate_;
};

// One-sided spectrum of a real signal: floor(n_fft/2)+1 bins, bin k at
// k * sample_rate / n_fft Hz.
class Spectrum {
 public:
  Spectrum(std::vector<Complex> bins, std::size_t n_fft, int sample_rate_hz);

  std::span<const Complex> bins() const noexcept { return bins_; }
  std::size_t n_bins() const noexcept { return bins_.size(); }
  std::size_t n_fft() const noexcept { return n_fft_; }
  int sample_rate() const noexcept { return sample_rate_; }
  double bin_frequency(std::size_t k) const noexcept {
    return static_cast<double>(k) * sample_rate_ / static_cast<double>(n_fft_);
  }

  // Time-domain energy of the n_fft-sample inverse, via Parseval.
  double energy() const noexcept;

  // Multiplicity of bin k in the two-sided spectrum (1 for DC and Nyquist).
  double bin_weight(std::size_t k) const noexcept;

 private:
  std::vector<Complex> bins_;
  std::size_t n_fft_;
  int sample_rate_;
};

inline std::size_t one_sided_bins(std::size_t n_fft) { return n_fft / 2 + 1; }

// Keep/drop bit per spectrum bin. Bins are grouped into units of
// `granularity` consecutive bins (the last unit may be shorter); search
// operates on units, application on bins.
class FrequencyMask {
 public:
  FrequencyMask(std::vector<bool> keep, std::size_t granularity = 1);

  static FrequencyMask full(std::size_t n_bins, std::size_t granularity = 1);
  static FrequencyMask none(std::size_t n_bins, std::size_t granularity = 1);
  // Bit u of `units` (LSB = lowest frequency unit) selects unit u.
  static FrequencyMask from_unit_bits(std::size_t n_bins, std::size_t granularity,
                                      std::uint64_t units);
  static FrequencyMask from_units(std::size_t n_bins, std::size_t granularity,
                                  const std::vector<bool>& units);

  std::size_t size() const noexcept { return keep_.size(); }
  std::size_t granularity() const noexcept { return granularity_; }
  std::size_t unit_count() const noexcept;
  std::size_t unit_begin(std::size_t unit) const noexcept { return unit * granularity_; }
  std::size_t unit_end(std::size_t unit) const noexcept;

  bool keeps(std::size_t bin) const { return keep_.at(bin); }
  // A unit counts as kept if any of its bins is kept.
  bool keeps_unit(std::size_t unit) const;
  std::size_t popcount() const noexcept;
  std::size_t kept_units() const;
  const std::vector<bool>& bits() const noexcept { return keep_; }
  std::vector<bool> unit_bits() const;

  FrequencyMask with_unit(std::size_t unit, bool keep) const;
  FrequencyMask complement() const;
  FrequencyMask regrouped(std::size_t granularity) const;
  bool is_full() const noexcept;
  bool is_empty() const noexcept;
  // True if every bin kept here is kept in `other`.
  bool subset_of(const FrequencyMask& other) const;

  bool operator==(const FrequencyMask& other) const noexcept {
    return keep_ == other.keep_ && granularity_ == other.granularity_;
  }

 private:
  std::vector<bool> keep_;
  std::size_t granularity_;
};

// What replaces a dropped bin.
struct FillPolicy {
  enum class Kind { Zero, Constant, Noise };
  Kind kind = Kind::Zero;
  double value = 0.0;  // constant value, or noise standard deviation per component
  std::uint64_t seed = 0;

  static FillPolicy zero() { return {}; }
  static FillPolicy constant(double c) { return {Kind::Constant, c, 0}; }
  static FillPolicy noise(double stddev, std::uint64_t seed) {
    return {Kind::Noise, stddev, seed};
  }
};

Spectrum forward_fft(const Signal& signal, std::size_t n_fft);
Signal inverse_fft(const Spectrum& spectrum, std::size_t out_len);
Spectrum apply_mask(const Spectrum& spectrum, const FrequencyMask& mask,
                    const FillPolicy& fill = FillPolicy::zero());

// Reconstruct only the masked part of `signal` under the given analysis size.
Signal masked_signal(const Signal& signal, const FrequencyMask& mask, std::size_t n_fft,
                     const FillPolicy& fill = FillPolicy::zero());

enum class Window { Rect, Hann };

// Hann is the periodic variant so that 50% overlap sums to a constant.
std::vector<double> make_window(Window window, std::size_t length);

struct StftConfig {
  std::size_t win_len = 512;
  std::size_t hop = 256;
  Window window = Window::Hann;
};

// Frames of an STFT. The signal is front-padded by win_len - hop zeros so
// every original sample is covered by the same number of frames.
struct StftFrames {
  StftConfig config;
  std::vector<Spectrum> frames;
  std::size_t signal_length = 0;
  std::size_t front_pad = 0;
  int sample_rate = 0;
};

bool is_cola(Window window, std::size_t win_len, std::size_t hop);

StftFrames stft(const Signal& signal, const StftConfig& config);
Signal istft(const StftFrames& frames);
// Same mask applied to every frame.
StftFrames apply_mask(const StftFrames& frames, const FrequencyMask& mask,
                      const FillPolicy& fill = FillPolicy::zero());

}  // namespace freqsift
