#pragma once

#include <string>
#include <vector>

#include "freqsift/oracle.hpp"

namespace freqsift {

// Desk-scale classifier: one class per frequency band. Class b scores the
// fraction of signal energy that falls in [edges[b], edges[b+1]) (the last
// band is closed). Logits are log(fraction + 1e-12), so at temperature 1 the
// output is the energy fraction itself. Silence maps to the uniform
// distribution.
class BandEnergyClassifier final : public Classifier {
 public:
  BandEnergyClassifier(std::string id, std::vector<std::string> labels, int sample_rate_hz,
                       std::vector<double> band_edges_hz, double temperature = 1.0);

  const std::string& id() const noexcept override { return id_; }
  const std::vector<std::string>& labels() const noexcept override { return labels_; }
  int sample_rate() const noexcept override { return sample_rate_; }
  std::string backend() const override { return "band-energy"; }

  const std::vector<double>& band_edges() const noexcept { return edges_; }
  double temperature() const noexcept { return temperature_; }

  // Per-band energy of the whole-signal spectrum (one-sided, Parseval weighted).
  std::vector<double> band_energies(const Signal& signal) const;

 protected:
  ClassDistribution predict(const Signal& signal) const override;

 private:
  std::string id_;
  std::vector<std::string> labels_;
  int sample_rate_;
  std::vector<double> edges_;
  double temperature_;
};

// Structurally different oracle family: log band-energy profile over
// equal-width bands, Pearson-correlated against one stored template per
// class, softmax over the correlations.
class TemplateClassifier final : public Classifier {
 public:
  TemplateClassifier(std::string id, std::vector<std::string> labels, int sample_rate_hz,
                     std::vector<std::vector<double>> templates, double temperature = 0.1);

  const std::string& id() const noexcept override { return id_; }
  const std::vector<std::string>& labels() const noexcept override { return labels_; }
  int sample_rate() const noexcept override { return sample_rate_; }
  std::string backend() const override { return "template"; }

  const std::vector<std::vector<double>>& templates() const noexcept { return templates_; }
  double temperature() const noexcept { return temperature_; }

  // log10 of each band's share of total energy (floored at 1e-10);
  // constant for silence.
  static std::vector<double> profile(const Signal& signal, std::size_t n_bands);

 protected:
  ClassDistribution predict(const Signal& signal) const override;

 private:
  std::string id_;
  std::vector<std::string> labels_;
  int sample_rate_;
  std::vector<std::vector<double>> templates_;
  double temperature_;
};

// Pearson correlation; 0 when either input is constant.
double pearson(std::span<const double> a, std::span<const double> b);

}  // namespace freqsift
