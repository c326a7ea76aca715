#include "freqsift/builtin.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace freqsift {
namespace {

// Mean-square power below which a signal is treated as silence; well above
// the round-off floor of an inverse FFT of a masked unit-scale signal.
constexpr double kSilencePower = 1e-20;
constexpr double kFractionFloor = 1e-12;

bool is_silent(const Signal& signal) {
  return signal.energy() / static_cast<double>(signal.size()) < kSilencePower;
}

Spectrum analysis_spectrum(const Signal& signal) {
  return forward_fft(signal, std::max<std::size_t>(2, signal.size()));
}

ClassDistribution uniform(const std::vector<std::string>& labels) {
  const std::vector<double> zeros(labels.size(), 0.0);
  return ClassDistribution(softmax(zeros, 1.0), labels);
}

}  // namespace

BandEnergyClassifier::BandEnergyClassifier(std::string id, std::vector<std::string> labels,
                                           int sample_rate_hz, std::vector<double> band_edges_hz,
                                           double temperature)
    : id_(std::move(id)),
      labels_(std::move(labels)),
      sample_rate_(sample_rate_hz),
      edges_(std::move(band_edges_hz)),
      temperature_(temperature) {
  validate_labels(labels_);
  if (sample_rate_ <= 0) throw Error(ErrorKind::InvalidParameter, "sample rate must be positive");
  if (!(temperature_ > 0.0)) throw Error(ErrorKind::InvalidParameter, "temperature must be positive");
  if (edges_.size() != labels_.size() + 1) {
    throw Error(ErrorKind::InvalidParameter, "need n+1 band edges for n classes");
  }
  const double nyquist = sample_rate_ / 2.0;
  for (std::size_t i = 0; i < edges_.size(); ++i) {
    if (edges_[i] < 0.0 || edges_[i] > nyquist) {
      throw Error(ErrorKind::InvalidParameter, "band edge outside [0, Nyquist]");
    }
    if (i > 0 && !(edges_[i] > edges_[i - 1])) {
      throw Error(ErrorKind::InvalidParameter, "band edges must be strictly ascending");
    }
  }
}

namespace {

// Band energies plus the total over all bins, from one transform.
std::pair<std::vector<double>, double> banded(const Signal& signal,
                                              const std::vector<double>& edges) {
  const Spectrum spec = analysis_spectrum(signal);
  const std::size_t n_bands = edges.size() - 1;
  std::vector<double> energy(n_bands, 0.0);
  double total = 0.0;
  for (std::size_t k = 0; k < spec.n_bins(); ++k) {
    const double e = spec.bin_weight(k) * std::norm(spec.bins()[k]);
    total += e;
    const double f = spec.bin_frequency(k);
    if (f < edges.front() || f > edges.back()) continue;
    auto band = static_cast<std::size_t>(std::upper_bound(edges.begin(), edges.end(), f) -
                                         edges.begin()) - 1;
    energy[std::min(band, n_bands - 1)] += e;
  }
  return {std::move(energy), total};
}

}  // namespace

std::vector<double> BandEnergyClassifier::band_energies(const Signal& signal) const {
  return banded(signal, edges_).first;
}

ClassDistribution BandEnergyClassifier::predict(const Signal& signal) const {
  if (is_silent(signal)) return uniform(labels_);
  const auto [energy, total] = banded(signal, edges_);
  std::vector<double> logits(energy.size());
  for (std::size_t b = 0; b < energy.size(); ++b) {
    logits[b] = std::log(energy[b] / total + kFractionFloor);
  }
  return ClassDistribution(softmax(logits, temperature_), labels_);
}

TemplateClassifier::TemplateClassifier(std::string id, std::vector<std::string> labels,
                                       int sample_rate_hz,
                                       std::vector<std::vector<double>> templates,
                                       double temperature)
    : id_(std::move(id)),
      labels_(std::move(labels)),
      sample_rate_(sample_rate_hz),
      templates_(std::move(templates)),
      temperature_(temperature) {
  validate_labels(labels_);
  if (sample_rate_ <= 0) throw Error(ErrorKind::InvalidParameter, "sample rate must be positive");
  if (!(temperature_ > 0.0)) throw Error(ErrorKind::InvalidParameter, "temperature must be positive");
  if (templates_.size() != labels_.size()) {
    throw Error(ErrorKind::InvalidParameter, "need one template per class");
  }
  for (const auto& t : templates_) {
    if (t.size() < 2 || t.size() != templates_.front().size()) {
      throw Error(ErrorKind::InvalidParameter, "templates must share a length of at least 2");
    }
  }
}

std::vector<double> TemplateClassifier::profile(const Signal& signal, std::size_t n_bands) {
  const Spectrum spec = analysis_spectrum(signal);
  std::vector<double> power(n_bands, 0.0);
  const double nyquist = signal.sample_rate() / 2.0;
  double total = 0.0;
  for (std::size_t k = 0; k < spec.n_bins(); ++k) {
    const double f = spec.bin_frequency(k);
    auto band = static_cast<std::size_t>(f / nyquist * static_cast<double>(n_bands));
    band = std::min(band, n_bands - 1);
    const double e = spec.bin_weight(k) * std::norm(spec.bins()[k]);
    power[band] += e;
    total += e;
  }
  const bool silent = is_silent(signal);
  for (double& p : power) p = silent ? 0.0 : std::log10(p / total + 1e-10);
  return power;
}

double pearson(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = std::min(a.size(), b.size());
  if (n == 0) return 0.0;
  const double ma = std::accumulate(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(n), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.begin() + static_cast<std::ptrdiff_t>(n), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa <= 0.0 || sbb <= 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

ClassDistribution TemplateClassifier::predict(const Signal& signal) const {
  const auto feat = profile(signal, templates_.front().size());
  std::vector<double> sims(templates_.size());
  for (std::size_t c = 0; c < templates_.size(); ++c) sims[c] = pearson(feat, templates_[c]);
  return ClassDistribution(softmax(sims, temperature_), labels_);
}

}  // namespace freqsift
