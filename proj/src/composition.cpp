#include "freqsift/composition.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "freqsift/error.hpp"

namespace freqsift {

CompositeSignature compose_global(const Classifier& oracle, std::span<const NamedSignal> signals) {
  if (signals.empty()) throw Error(ErrorKind::InvalidParameter, "composition needs at least one signal");
  const int rate = signals.front().signal.sample_rate();
  std::size_t length = 0;
  for (const auto& s : signals) {
    if (s.signal.sample_rate() != rate) throw Error(ErrorKind::InvalidInput, "signals differ in sample rate");
    length = std::max(length, s.signal.size());
  }

  std::vector<Signal> padded;
  for (const auto& s : signals) padded.push_back(s.signal.resized(length));
  std::vector<ClassDistribution> dists;
  for (auto& outcome : classify_batch(oracle, padded)) dists.push_back(outcome.value());
  const std::size_t cls = top1(dists.front());
  for (std::size_t i = 0; i < dists.size(); ++i) {
    if (top1(dists[i]) != cls) {
      throw Error(ErrorKind::InvalidInput, "signal '" + signals[i].id + "' is not of class " +
                                               oracle.labels()[cls]);
    }
  }

  std::vector<std::size_t> order(signals.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return dists[a][cls] > dists[b][cls]; });

  CompositeSignature out{Signal::zeros(length, rate)};
  out.class_index = cls;
  out.class_label = oracle.labels()[cls];
  out.oracle_id = oracle.id();
  out.candidates_considered = signals.size();

  std::vector<double> sum(length, 0.0);
  std::size_t members = 0;
  std::vector<double> trial(length);
  for (std::size_t idx : order) {
    out.construction_order.push_back(signals[idx].id);
    const auto x = padded[idx].samples();
    const double count = static_cast<double>(members + 1);
    for (std::size_t t = 0; t < length; ++t) trial[t] = (sum[t] + x[t]) / count;
    Signal candidate(trial, rate);
    if (top1(classify(oracle, candidate)) != cls) continue;
    for (std::size_t t = 0; t < length; ++t) sum[t] += x[t];
    ++members;
    out.member_ids.push_back(signals[idx].id);
    out.signal = std::move(candidate);
  }
  out.degree = static_cast<double>(members) / static_cast<double>(signals.size());

  if (top1(classify(oracle, out.signal)) != cls) {
    throw Error(ErrorKind::BackendError, "composite no longer classifies to its class on re-query");
  }
  return out;
}

TransplantResult cross_label_transplant(const Classifier& oracle, const CompositeSignature& composite,
                                        const Signal& target, TransplantMode mode) {
  if (composite.signal.sample_rate() != target.sample_rate()) {
    throw Error(ErrorKind::InvalidInput, "composite and target differ in sample rate");
  }
  const std::size_t original = top1(classify(oracle, target));
  if (original == composite.class_index) {
    throw Error(ErrorKind::InvalidParameter,
                "target already classifies to " + composite.class_label + "; transplant is vacuous");
  }
  const std::size_t length = std::max(composite.signal.size(), target.size());
  const Signal base = target.resized(length);
  const Signal overlay = composite.signal.resized(length);

  std::vector<double> mixed(length);
  if (mode == TransplantMode::Add) {
    double peak = 0.0;
    for (std::size_t t = 0; t < length; ++t) {
      mixed[t] = base.samples()[t] + overlay.samples()[t];
      peak = std::max(peak, std::abs(mixed[t]));
    }
    if (peak > 1.0) {
      for (double& s : mixed) s /= peak;
    }
  } else {
    const std::size_t n_fft = std::max<std::size_t>(2, length);
    const Spectrum target_spec = forward_fft(base, n_fft);
    const Spectrum overlay_spec = forward_fft(overlay, n_fft);
    double largest = 0.0;
    for (const auto& b : overlay_spec.bins()) largest = std::max(largest, std::abs(b));
    // Bins more than 180 dB below the composite's peak count as empty.
    const double cutoff = largest * 1e-9;
    std::vector<Complex> bins(target_spec.bins().begin(), target_spec.bins().end());
    for (std::size_t k = 0; k < bins.size(); ++k) {
      if (largest > 0.0 && std::abs(overlay_spec.bins()[k]) > cutoff) bins[k] = overlay_spec.bins()[k];
    }
    const Signal replaced = inverse_fft(Spectrum(std::move(bins), n_fft, target.sample_rate()), length);
    mixed.assign(replaced.samples().begin(), replaced.samples().end());
  }

  Signal result(std::move(mixed), target.sample_rate());
  ClassDistribution dist = classify(oracle, result);
  const bool flipped = top1(dist) == composite.class_index;
  return TransplantResult{flipped, original, std::move(result), std::move(dist)};
}

nlohmann::json to_json(const CompositeSignature& c) {
  return {{"oracle", c.oracle_id},
          {"class_index", c.class_index},
          {"class_label", c.class_label},
          {"degree", c.degree},
          {"members", c.member_ids},
          {"construction_order", c.construction_order},
          {"candidates_considered", c.candidates_considered},
          {"sample_rate", c.signal.sample_rate()},
          {"length", c.signal.size()},
          {"construction", "greedy, descending confidence"}};
}

}  // namespace freqsift
