#include "freqsift/signal.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "fft_backend.hpp"
#include "freqsift/error.hpp"

namespace freqsift {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidParameter: return "invalid-parameter";
    case ErrorKind::InvalidInput: return "invalid-input";
    case ErrorKind::UnsupportedConfiguration: return "unsupported-configuration";
    case ErrorKind::BackendError: return "backend-error";
    case ErrorKind::NotFound: return "not-found";
    case ErrorKind::UndefinedInverse: return "undefined-inverse";
    case ErrorKind::DegenerateInput: return "degenerate-input";
    case ErrorKind::IncompatibleModels: return "incompatible-models";
    case ErrorKind::UndefinedEntropy: return "undefined-entropy";
    case ErrorKind::TooShort: return "too-short";
    case ErrorKind::Io: return "io-error";
  }
  return "unknown";
}

// ---- Signal ---------------------------------------------------------------

Signal::Signal(std::vector<double> samples, int sample_rate_hz)
    : samples_(std::move(samples)), sample_rate_(sample_rate_hz) {
  if (sample_rate_ <= 0) throw Error(ErrorKind::InvalidParameter, "sample rate must be positive");
  if (samples_.empty()) throw Error(ErrorKind::InvalidParameter, "signal must have at least one sample");
  for (double s : samples_) {
    if (!std::isfinite(s)) throw Error(ErrorKind::InvalidInput, "signal contains non-finite samples");
  }
}

Signal Signal::zeros(std::size_t length, int sample_rate_hz) {
  return Signal(std::vector<double>(length, 0.0), sample_rate_hz);
}

double Signal::energy() const noexcept {
  double e = 0.0;
  for (double s : samples_) e += s * s;
  return e;
}

Signal Signal::resized(std::size_t length) const {
  std::vector<double> out(length, 0.0);
  std::copy_n(samples_.begin(), std::min(length, samples_.size()), out.begin());
  return Signal(std::move(out), sample_rate_);
}

// ---- Spectrum -------------------------------------------------------------

Spectrum::Spectrum(std::vector<Complex> bins, std::size_t n_fft, int sample_rate_hz)
    : bins_(std::move(bins)), n_fft_(n_fft), sample_rate_(sample_rate_hz) {
  if (n_fft_ < 1) throw Error(ErrorKind::InvalidParameter, "n_fft must be positive");
  if (sample_rate_ <= 0) throw Error(ErrorKind::InvalidParameter, "sample rate must be positive");
  if (bins_.size() != one_sided_bins(n_fft_)) {
    throw Error(ErrorKind::InvalidParameter,
                "spectrum has " + std::to_string(bins_.size()) + " bins, expected " +
                    std::to_string(one_sided_bins(n_fft_)));
  }
}

double Spectrum::bin_weight(std::size_t k) const noexcept {
  if (k == 0) return 1.0;
  if (n_fft_ % 2 == 0 && k == n_fft_ / 2) return 1.0;
  return 2.0;
}

double Spectrum::energy() const noexcept {
  double e = 0.0;
  for (std::size_t k = 0; k < bins_.size(); ++k) e += bin_weight(k) * std::norm(bins_[k]);
  return e / static_cast<double>(n_fft_);
}

// ---- FrequencyMask --------------------------------------------------------

FrequencyMask::FrequencyMask(std::vector<bool> keep, std::size_t granularity)
    : keep_(std::move(keep)), granularity_(granularity) {
  if (granularity_ == 0) throw Error(ErrorKind::InvalidParameter, "mask granularity must be positive");
}

FrequencyMask FrequencyMask::full(std::size_t n_bins, std::size_t granularity) {
  return FrequencyMask(std::vector<bool>(n_bins, true), granularity);
}

FrequencyMask FrequencyMask::none(std::size_t n_bins, std::size_t granularity) {
  return FrequencyMask(std::vector<bool>(n_bins, false), granularity);
}

FrequencyMask FrequencyMask::from_unit_bits(std::size_t n_bins, std::size_t granularity,
                                            std::uint64_t units) {
  FrequencyMask mask = none(n_bins, granularity);
  for (std::size_t u = 0; u < mask.unit_count() && u < 64; ++u) {
    if ((units >> u) & 1u) {
      for (std::size_t k = mask.unit_begin(u); k < mask.unit_end(u); ++k) mask.keep_[k] = true;
    }
  }
  return mask;
}

FrequencyMask FrequencyMask::from_units(std::size_t n_bins, std::size_t granularity,
                                        const std::vector<bool>& units) {
  FrequencyMask mask = none(n_bins, granularity);
  if (units.size() != mask.unit_count()) {
    throw Error(ErrorKind::InvalidParameter, "unit vector length does not match unit count");
  }
  for (std::size_t u = 0; u < units.size(); ++u) {
    if (!units[u]) continue;
    for (std::size_t k = mask.unit_begin(u); k < mask.unit_end(u); ++k) mask.keep_[k] = true;
  }
  return mask;
}

std::size_t FrequencyMask::unit_count() const noexcept {
  return (keep_.size() + granularity_ - 1) / granularity_;
}

std::size_t FrequencyMask::unit_end(std::size_t unit) const noexcept {
  return std::min(keep_.size(), (unit + 1) * granularity_);
}

bool FrequencyMask::keeps_unit(std::size_t unit) const {
  for (std::size_t k = unit_begin(unit); k < unit_end(unit); ++k) {
    if (keep_[k]) return true;
  }
  return false;
}

std::size_t FrequencyMask::popcount() const noexcept {
  return static_cast<std::size_t>(std::count(keep_.begin(), keep_.end(), true));
}

std::size_t FrequencyMask::kept_units() const {
  std::size_t n = 0;
  for (std::size_t u = 0; u < unit_count(); ++u) n += keeps_unit(u) ? 1 : 0;
  return n;
}

std::vector<bool> FrequencyMask::unit_bits() const {
  std::vector<bool> out(unit_count());
  for (std::size_t u = 0; u < out.size(); ++u) out[u] = keeps_unit(u);
  return out;
}

FrequencyMask FrequencyMask::with_unit(std::size_t unit, bool keep) const {
  if (unit >= unit_count()) throw Error(ErrorKind::InvalidParameter, "unit index out of range");
  FrequencyMask out = *this;
  for (std::size_t k = unit_begin(unit); k < unit_end(unit); ++k) out.keep_[k] = keep;
  return out;
}

FrequencyMask FrequencyMask::complement() const {
  FrequencyMask out = *this;
  out.keep_.flip();
  return out;
}

FrequencyMask FrequencyMask::regrouped(std::size_t granularity) const {
  return FrequencyMask(keep_, granularity);
}

bool FrequencyMask::is_full() const noexcept {
  return std::all_of(keep_.begin(), keep_.end(), [](bool b) { return b; });
}

bool FrequencyMask::is_empty() const noexcept {
  return std::none_of(keep_.begin(), keep_.end(), [](bool b) { return b; });
}

bool FrequencyMask::subset_of(const FrequencyMask& other) const {
  if (other.size() != size()) return false;
  for (std::size_t k = 0; k < keep_.size(); ++k) {
    if (keep_[k] && !other.keep_[k]) return false;
  }
  return true;
}

// ---- transforms -----------------------------------------------------------

Spectrum forward_fft(const Signal& signal, std::size_t n_fft) {
  if (n_fft < 2) throw Error(ErrorKind::InvalidParameter, "n_fft must be at least 2");
  if (n_fft < signal.size()) {
    throw Error(ErrorKind::InvalidParameter, "n_fft " + std::to_string(n_fft) +
                                                 " is shorter than the signal (" +
                                                 std::to_string(signal.size()) + ")");
  }
  std::vector<double> padded(n_fft, 0.0);
  std::copy(signal.samples().begin(), signal.samples().end(), padded.begin());
  std::vector<Complex> bins(one_sided_bins(n_fft));
  detail::real_fft(padded, bins);
  return Spectrum(std::move(bins), n_fft, signal.sample_rate());
}

Signal inverse_fft(const Spectrum& spectrum, std::size_t out_len) {
  if (out_len == 0 || out_len > spectrum.n_fft()) {
    throw Error(ErrorKind::InvalidParameter, "out_len must be in [1, n_fft]");
  }
  std::vector<double> full(spectrum.n_fft());
  detail::real_ifft(spectrum.bins(), full);
  const double scale = 1.0 / static_cast<double>(spectrum.n_fft());
  full.resize(out_len);
  for (double& s : full) s *= scale;
  return Signal(std::move(full), spectrum.sample_rate());
}

Spectrum apply_mask(const Spectrum& spectrum, const FrequencyMask& mask, const FillPolicy& fill) {
  if (mask.size() != spectrum.n_bins()) {
    throw Error(ErrorKind::InvalidParameter, "mask has " + std::to_string(mask.size()) +
                                                 " bits for " + std::to_string(spectrum.n_bins()) +
                                                 " bins");
  }
  std::vector<Complex> bins(spectrum.bins().begin(), spectrum.bins().end());
  std::mt19937_64 rng(fill.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const std::size_t last = bins.size() - 1;
  const bool has_nyquist = spectrum.n_fft() % 2 == 0;
  for (std::size_t k = 0; k < bins.size(); ++k) {
    if (mask.keeps(k)) continue;
    switch (fill.kind) {
      case FillPolicy::Kind::Zero:
        bins[k] = 0.0;
        break;
      case FillPolicy::Kind::Constant:
        bins[k] = fill.value;
        break;
      case FillPolicy::Kind::Noise: {
        const double re = fill.value * gauss(rng);
        const double im = fill.value * gauss(rng);
        const bool real_only = k == 0 || (has_nyquist && k == last);
        bins[k] = Complex(re, real_only ? 0.0 : im);
        break;
      }
    }
  }
  return Spectrum(std::move(bins), spectrum.n_fft(), spectrum.sample_rate());
}

Signal masked_signal(const Signal& signal, const FrequencyMask& mask, std::size_t n_fft,
                     const FillPolicy& fill) {
  return inverse_fft(apply_mask(forward_fft(signal, n_fft), mask, fill), signal.size());
}

// ---- STFT -----------------------------------------------------------------

std::vector<double> make_window(Window window, std::size_t length) {
  std::vector<double> w(length, 1.0);
  if (window == Window::Hann) {
    for (std::size_t i = 0; i < length; ++i) {
      w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                  static_cast<double>(length));
    }
  }
  return w;
}

bool is_cola(Window window, std::size_t win_len, std::size_t hop) {
  if (hop == 0 || hop > win_len) return false;
  const auto w = make_window(window, win_len);
  double first = 0.0;
  for (std::size_t n = 0; n < hop; ++n) {
    double sum = 0.0;
    for (std::size_t i = n; i < win_len; i += hop) sum += w[i];
    if (n == 0) first = sum;
    if (std::abs(sum - first) > 1e-10 * std::max(1.0, std::abs(first))) return false;
  }
  return first > 0.0;
}

StftFrames stft(const Signal& signal, const StftConfig& config) {
  if (config.win_len < 2) throw Error(ErrorKind::InvalidParameter, "win_len must be at least 2");
  if (config.hop == 0 || config.hop > config.win_len) {
    throw Error(ErrorKind::InvalidParameter, "hop must be in (0, win_len]");
  }
  StftFrames out;
  out.config = config;
  out.signal_length = signal.size();
  out.front_pad = config.win_len - config.hop;
  out.sample_rate = signal.sample_rate();

  const std::size_t covered = out.front_pad + signal.size();
  const std::size_t n_frames = std::max<std::size_t>(1, (covered + config.hop - 1) / config.hop);
  std::vector<double> padded((n_frames - 1) * config.hop + config.win_len, 0.0);
  std::copy(signal.samples().begin(), signal.samples().end(),
            padded.begin() + static_cast<std::ptrdiff_t>(out.front_pad));

  const auto w = make_window(config.window, config.win_len);
  std::vector<double> frame(config.win_len);
  out.frames.reserve(n_frames);
  for (std::size_t f = 0; f < n_frames; ++f) {
    for (std::size_t i = 0; i < config.win_len; ++i) frame[i] = padded[f * config.hop + i] * w[i];
    std::vector<Complex> bins(one_sided_bins(config.win_len));
    detail::real_fft(frame, bins);
    out.frames.emplace_back(std::move(bins), config.win_len, signal.sample_rate());
  }
  return out;
}

Signal istft(const StftFrames& frames) {
  const auto& cfg = frames.config;
  if (!is_cola(cfg.window, cfg.win_len, cfg.hop)) {
    throw Error(ErrorKind::UnsupportedConfiguration,
                "window/hop combination does not satisfy constant overlap-add");
  }
  if (frames.frames.empty()) throw Error(ErrorKind::InvalidParameter, "no frames to invert");
  const auto w = make_window(cfg.window, cfg.win_len);
  double overlap_gain = 0.0;
  for (std::size_t i = 0; i < cfg.win_len; i += cfg.hop) overlap_gain += w[i];

  std::vector<double> acc((frames.frames.size() - 1) * cfg.hop + cfg.win_len, 0.0);
  std::vector<double> frame(cfg.win_len);
  const double scale = 1.0 / static_cast<double>(cfg.win_len);
  for (std::size_t f = 0; f < frames.frames.size(); ++f) {
    const Spectrum& spec = frames.frames[f];
    if (spec.n_fft() != cfg.win_len) throw Error(ErrorKind::InvalidParameter, "frame size mismatch");
    detail::real_ifft(spec.bins(), frame);
    for (std::size_t i = 0; i < cfg.win_len; ++i) acc[f * cfg.hop + i] += frame[i] * scale;
  }
  std::vector<double> out(frames.signal_length);
  for (std::size_t t = 0; t < out.size(); ++t) out[t] = acc[frames.front_pad + t] / overlap_gain;
  return Signal(std::move(out), frames.sample_rate);
}

StftFrames apply_mask(const StftFrames& frames, const FrequencyMask& mask, const FillPolicy& fill) {
  StftFrames out = frames;
  for (std::size_t f = 0; f < out.frames.size(); ++f) {
    FillPolicy frame_fill = fill;
    frame_fill.seed = fill.seed + f;
    out.frames[f] = apply_mask(frames.frames[f], mask, frame_fill);
  }
  return out;
}

}  // namespace freqsift
