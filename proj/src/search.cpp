#include "freqsift/search.hpp"

#include <algorithm>
#include <bit>
#include <functional>

#include "freqsift/error.hpp"

namespace freqsift {

// ---- analysis -------------------------------------------------------------

std::size_t AnalysisConfig::resolved_n_fft(const Signal& signal) const {
  if (mode == AnalysisMode::Stft) return stft.win_len;
  return n_fft == 0 ? std::max<std::size_t>(2, signal.size()) : n_fft;
}

std::size_t AnalysisConfig::n_bins(const Signal& signal) const {
  return one_sided_bins(resolved_n_fft(signal));
}

Signal reconstruct(const Signal& signal, const FrequencyMask& mask, const AnalysisConfig& analysis) {
  if (analysis.mode == AnalysisMode::Stft) {
    return istft(apply_mask(stft(signal, analysis.stft), mask, analysis.fill));
  }
  return masked_signal(signal, mask, analysis.resolved_n_fft(signal), analysis.fill);
}

std::size_t granularity_for_units(std::size_t n_bins, std::size_t units) {
  if (units == 0) throw Error(ErrorKind::InvalidParameter, "unit count must be positive");
  return std::max<std::size_t>(1, (n_bins + units - 1) / units);
}

namespace {

struct BudgetExhausted {};

// Oracle access for one (signal, classifier, options) search: caches the
// analysis, counts queries and applies the acceptance gate.
class Probe {
 public:
  Probe(const Classifier& oracle, const Signal& signal, const SearchOptions& options, double floor)
      : oracle_(oracle),
        signal_(signal),
        analysis_(options.analysis),
        max_queries_(options.budget.max_queries),
        original_(classify(oracle, signal)) {
    if (!(options.delta > 0.0 && options.delta <= 1.0)) {
      throw Error(ErrorKind::InvalidParameter, "delta must be in (0, 1]");
    }
    if (max_queries_ < 1) throw Error(ErrorKind::InvalidParameter, "budget needs at least one query");
    queries_ = 1;
    n_bins_ = analysis_.n_bins(signal);
    if (analysis_.mode == AnalysisMode::Stft) {
      frames_ = stft(signal, analysis_.stft);
    } else {
      spectrum_ = forward_fft(signal, analysis_.resolved_n_fft(signal));
    }
    target_ = top1(original_);
    sigma_ = original_[target_];
    threshold_ = std::max(options.delta * sigma_, floor);
  }

  std::size_t n_bins() const { return n_bins_; }
  std::size_t target() const { return target_; }
  double sigma() const { return sigma_; }
  std::size_t queries() const { return queries_; }
  const ClassDistribution& original() const { return original_; }

  void check_size(const FrequencyMask& mask) const {
    if (mask.size() != n_bins_) {
      throw Error(ErrorKind::InvalidParameter, "mask has " + std::to_string(mask.size()) +
                                                   " bins, analysis has " + std::to_string(n_bins_));
    }
  }

  Signal reconstruct(const FrequencyMask& mask) const {
    check_size(mask);
    if (analysis_.mode == AnalysisMode::Stft) {
      return istft(apply_mask(*frames_, mask, analysis_.fill));
    }
    return inverse_fft(apply_mask(*spectrum_, mask, analysis_.fill), signal_.size());
  }

  // Full masks reproduce the input exactly and are answered from the
  // original classification. `enforce_budget` false is used for the final
  // bookkeeping queries of a finished search.
  std::vector<ClassDistribution> classify_masks(const std::vector<FrequencyMask>& masks,
                                                bool enforce_budget = true) {
    std::vector<Signal> pending;
    std::vector<std::size_t> where;
    for (std::size_t i = 0; i < masks.size(); ++i) {
      check_size(masks[i]);
      if (masks[i].is_full()) continue;
      pending.push_back(reconstruct(masks[i]));
      where.push_back(i);
    }
    if (enforce_budget && queries_ + pending.size() > max_queries_) throw BudgetExhausted{};
    queries_ += pending.size();
    auto outcomes = classify_batch(oracle_, pending);
    std::vector<std::optional<ClassDistribution>> slots(masks.size());
    for (std::size_t j = 0; j < where.size(); ++j) slots[where[j]] = outcomes[j].value();
    std::vector<ClassDistribution> out;
    out.reserve(masks.size());
    for (auto& s : slots) out.push_back(s ? std::move(*s) : original_);
    return out;
  }

  bool accepts(const ClassDistribution& dist) const {
    return top1(dist) == target_ && dist[target_] >= threshold_;
  }

 private:
  const Classifier& oracle_;
  const Signal& signal_;
  AnalysisConfig analysis_;
  std::size_t max_queries_;
  ClassDistribution original_;
  std::optional<Spectrum> spectrum_;
  std::optional<StftFrames> frames_;
  std::size_t n_bins_ = 0;
  std::size_t target_ = 0;
  double sigma_ = 0.0;
  double threshold_ = 0.0;
  std::size_t queries_ = 0;
};

double resolve_floor(const Classifier& oracle, const SearchOptions& options) {
  return options.confidence_floor.value_or(1.5 / static_cast<double>(oracle.n_classes()));
}

Probe open_probe(const Classifier& oracle, const Signal& signal, const SearchOptions& options) {
  const double floor = resolve_floor(oracle, options);
  Probe probe(oracle, signal, options, floor);
  if (probe.sigma() < floor) {
    throw Error(ErrorKind::DegenerateInput,
                "original confidence " + std::to_string(probe.sigma()) +
                    " is below the confidence floor " + std::to_string(floor));
  }
  return probe;
}

using AcceptFn = std::function<std::vector<bool>(const std::vector<FrequencyMask>&)>;

struct Minimized {
  FrequencyMask mask;
  bool one_minimal = false;
};

struct Band {
  std::size_t begin;
  std::size_t end;
  std::size_t width() const { return end - begin; }
};

FrequencyMask union_of(const FrequencyMask& shape, const std::vector<Band>& bands, std::uint32_t pick) {
  std::vector<bool> units(shape.unit_count(), false);
  for (std::size_t i = 0; i < bands.size(); ++i) {
    if (!((pick >> i) & 1u)) continue;
    for (std::size_t u = bands[i].begin; u < bands[i].end; ++u) units[u] = true;
  }
  return FrequencyMask::from_units(shape.size(), shape.granularity(), units);
}

std::size_t units_in(const std::vector<Band>& bands, std::uint32_t pick) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < bands.size(); ++i) {
    if ((pick >> i) & 1u) n += bands[i].width();
  }
  return n;
}

// Hierarchical bisection over unit bands starting from the full mask.
// `current` always holds the last accepted mask, also when the budget runs
// out mid-level.
void bisect(FrequencyMask& current, const AcceptFn& accept, std::size_t max_depth) {
  std::vector<Band> active{{0, current.unit_count()}};
  for (std::size_t depth = 0; depth < max_depth; ++depth) {
    const bool splittable = std::any_of(active.begin(), active.end(),
                                        [](const Band& b) { return b.width() > 1; });
    if (!splittable || active.empty()) break;
    std::vector<Band> halves;
    for (const Band& b : active) {
      if (b.width() > 1) {
        const std::size_t mid = b.begin + b.width() / 2;
        halves.push_back({b.begin, mid});
        halves.push_back({mid, b.end});
      } else {
        halves.push_back(b);
      }
    }
    const std::size_t k = halves.size();
    std::vector<Band> kept;
    if (k <= 4) {
      // Every strict sub-union of the halves; the smallest sufficient one
      // wins, ties by lowest subset index.
      const std::uint32_t all = (1u << k) - 1;
      std::vector<FrequencyMask> candidates;
      for (std::uint32_t pick = 0; pick < all; ++pick) candidates.push_back(union_of(current, halves, pick));
      const auto ok = accept(candidates);
      std::optional<std::uint32_t> best;
      for (std::uint32_t pick = 0; pick < all; ++pick) {
        if (!ok[pick]) continue;
        if (!best || units_in(halves, pick) < units_in(halves, *best)) best = pick;
      }
      const std::uint32_t chosen = best.value_or(all);
      for (std::size_t i = 0; i < k; ++i) {
        if ((chosen >> i) & 1u) kept.push_back(halves[i]);
      }
      current = union_of(current, halves, chosen);
    } else {
      // Greedy half-dropping in ascending frequency order.
      std::vector<bool> keep(k, true);
      for (std::size_t i = 0; i < k; ++i) {
        keep[i] = false;
        std::vector<bool> units(current.unit_count(), false);
        for (std::size_t j = 0; j < k; ++j) {
          if (!keep[j]) continue;
          for (std::size_t u = halves[j].begin; u < halves[j].end; ++u) units[u] = true;
        }
        const FrequencyMask candidate =
            FrequencyMask::from_units(current.size(), current.granularity(), units);
        if (accept({candidate}).front()) {
          current = candidate;
        } else {
          keep[i] = true;
        }
      }
      for (std::size_t i = 0; i < k; ++i) {
        if (keep[i]) kept.push_back(halves[i]);
      }
    }
    active = std::move(kept);
  }
}

// Single-unit elimination in ascending order, repeated to a fixpoint.
void sweep(FrequencyMask& current, const AcceptFn& accept) {
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t u = 0; u < current.unit_count(); ++u) {
      if (!current.keeps_unit(u)) continue;
      FrequencyMask candidate = current.with_unit(u, false);
      if (accept({candidate}).front()) {
        current = std::move(candidate);
        changed = true;
      }
    }
  }
}

Minimized minimize(const Probe& probe, const SearchOptions& options, const AcceptFn& accept) {
  const std::size_t n_bins = probe.n_bins();
  const bool auto_granularity = options.granularity == 0;
  const std::size_t g = auto_granularity ? granularity_for_units(n_bins, 256) : options.granularity;
  FrequencyMask current = FrequencyMask::full(n_bins, g);
  try {
    bisect(current, accept, options.budget.max_refine_depth);
    sweep(current, accept);
    if (auto_granularity && g > 1) {
      current = current.regrouped(1);
      sweep(current, accept);
    }
  } catch (const BudgetExhausted&) {
    return {current, false};
  }
  return {current, true};
}

}  // namespace

// ---- public search API ----------------------------------------------------

SufficiencyCheck verify_sufficient(const Classifier& oracle, const Signal& signal,
                                   const FrequencyMask& mask, double delta,
                                   const AnalysisConfig& analysis, double floor) {
  SearchOptions options;
  options.delta = delta;
  options.analysis = analysis;
  Probe probe(oracle, signal, options, floor);
  auto dist = probe.classify_masks({mask}, false).front();
  const bool ok = probe.accepts(dist);
  return SufficiencyCheck{ok, probe.target(), probe.sigma(), std::move(dist)};
}

SufficiencyResult find_sufficient(const Classifier& oracle, const Signal& signal,
                                  const SearchOptions& options) {
  Probe probe = open_probe(oracle, signal, options);
  AcceptFn accept = [&](const std::vector<FrequencyMask>& masks) {
    const auto dists = probe.classify_masks(masks);
    std::vector<bool> ok(masks.size());
    for (std::size_t i = 0; i < masks.size(); ++i) ok[i] = probe.accepts(dists[i]);
    return ok;
  };
  Minimized found = minimize(probe, options, accept);
  const auto final_dist = probe.classify_masks({found.mask}, false).front();

  SufficiencyResult result{found.mask};
  result.target_class = probe.target();
  result.achieved_confidence = final_dist[probe.target()];
  result.original_confidence = probe.sigma();
  result.delta = options.delta;
  result.oracle_queries = probe.queries();
  result.one_minimal = found.one_minimal;
  result.analysis = options.analysis;
  return result;
}

CompletenessResult find_complete(const Classifier& oracle, const Signal& signal,
                                 const SearchOptions& options) {
  Probe probe = open_probe(oracle, signal, options);
  AcceptFn accept = [&](const std::vector<FrequencyMask>& masks) {
    std::vector<FrequencyMask> batch;
    for (const auto& m : masks) {
      batch.push_back(m);
      if (!m.is_full()) batch.push_back(m.complement());
    }
    const auto dists = probe.classify_masks(batch);
    std::vector<bool> ok(masks.size());
    std::size_t j = 0;
    for (std::size_t i = 0; i < masks.size(); ++i) {
      const bool sufficient = probe.accepts(dists[j++]);
      if (masks[i].is_full()) {
        ok[i] = sufficient && options.allow_full_complete;
      } else {
        const std::size_t flipped = top1(dists[j++]);
        ok[i] = sufficient && flipped != probe.target();
      }
    }
    return ok;
  };
  Minimized found = minimize(probe, options, accept);
  if (found.mask.is_full() && !options.allow_full_complete) {
    throw Error(ErrorKind::NotFound, "no complete mask with a non-empty complement was found");
  }

  CompletenessResult result{found.mask};
  const auto final_dist = probe.classify_masks({found.mask}, false).front();
  result.inverse_defined = !found.mask.is_full();
  if (result.inverse_defined) {
    result.inverse_class = top1(probe.classify_masks({found.mask.complement()}, false).front());
  }
  result.target_class = probe.target();
  result.achieved_confidence = final_dist[probe.target()];
  result.original_confidence = probe.sigma();
  result.delta = options.delta;
  result.oracle_queries = probe.queries();
  result.one_minimal = found.one_minimal;
  result.analysis = options.analysis;
  return result;
}

Signal inverse_signal(const Signal& signal, const CompletenessResult& complete) {
  if (!complete.inverse_defined) {
    throw Error(ErrorKind::UndefinedInverse, "complete mask covers the whole spectrum");
  }
  AnalysisConfig analysis = complete.analysis;
  analysis.fill = FillPolicy::zero();
  return reconstruct(signal, complete.mask.complement(), analysis);
}

// ---- exhaustive enumeration -----------------------------------------------

FrequencyMask ExhaustiveResult::mask(std::uint32_t bits) const {
  return FrequencyMask::from_unit_bits(n_bins, granularity, bits);
}

std::uint32_t ExhaustiveResult::bits_of(const FrequencyMask& m) const {
  const FrequencyMask regrouped = m.regrouped(granularity);
  std::uint32_t bits = 0;
  for (std::size_t u = 0; u < unit_count; ++u) {
    if (regrouped.keeps_unit(u)) bits |= 1u << u;
  }
  return bits;
}

bool ExhaustiveResult::has_sufficient_strict_subset(std::uint32_t bits) const {
  if (bits == 0) return false;
  // Walk all strict submasks of bits.
  for (std::uint32_t sub = (bits - 1) & bits;; sub = (sub - 1) & bits) {
    if (sufficient[sub]) return true;
    if (sub == 0) break;
  }
  return false;
}

ExhaustiveResult exhaustive_minimal(const Classifier& oracle, const Signal& signal,
                                    const SearchOptions& options) {
  if (options.granularity == 0) {
    throw Error(ErrorKind::InvalidParameter, "exhaustive enumeration needs an explicit granularity");
  }
  const std::size_t n_bins = options.analysis.n_bins(signal);
  const std::size_t units = (n_bins + options.granularity - 1) / options.granularity;
  if (units > kMaxExhaustiveUnits) {
    throw Error(ErrorKind::InvalidParameter, std::to_string(units) + " units exceed the exhaustive limit of " +
                                                 std::to_string(kMaxExhaustiveUnits));
  }
  SearchOptions unlimited = options;
  unlimited.budget.max_queries = std::max<std::size_t>(options.budget.max_queries, (1u << units) + 1);
  Probe probe = open_probe(oracle, signal, unlimited);

  ExhaustiveResult result;
  result.unit_count = units;
  result.granularity = options.granularity;
  result.n_bins = n_bins;
  result.target_class = probe.target();
  const std::uint32_t total = 1u << units;
  result.sufficient.assign(total, false);

  constexpr std::uint32_t kChunk = 1024;
  for (std::uint32_t start = 0; start < total; start += kChunk) {
    std::vector<FrequencyMask> masks;
    for (std::uint32_t bits = start; bits < std::min(total, start + kChunk); ++bits) {
      masks.push_back(result.mask(bits));
    }
    const auto dists = probe.classify_masks(masks, false);
    for (std::size_t i = 0; i < dists.size(); ++i) result.sufficient[start + i] = probe.accepts(dists[i]);
  }

  // below[b]: some subset of b (b included) is sufficient.
  std::vector<bool> below(total, false);
  std::vector<std::uint32_t> order(total);
  for (std::uint32_t b = 0; b < total; ++b) order[b] = b;
  std::stable_sort(order.begin(), order.end(), [](std::uint32_t a, std::uint32_t b) {
    return std::popcount(a) < std::popcount(b);
  });
  for (std::uint32_t b : order) {
    bool strict = false;
    for (std::size_t u = 0; u < units && !strict; ++u) {
      if ((b >> u) & 1u) strict = below[b & ~(1u << u)];
    }
    below[b] = strict || result.sufficient[b];
    if (result.sufficient[b] && !strict) result.minimal.push_back(b);
  }
  std::sort(result.minimal.begin(), result.minimal.end());
  result.oracle_queries = probe.queries();
  return result;
}

// ---- serialization --------------------------------------------------------

nlohmann::json mask_to_json(const FrequencyMask& mask) {
  std::vector<std::size_t> runs;
  bool state = false;
  std::size_t run = 0;
  for (bool bit : mask.bits()) {
    if (bit != state) {
      runs.push_back(run);
      state = bit;
      run = 0;
    }
    ++run;
  }
  runs.push_back(run);
  return {{"n_bins", mask.size()}, {"granularity", mask.granularity()}, {"rle", runs}};
}

FrequencyMask mask_from_json(const nlohmann::json& j) {
  try {
    const auto n_bins = j.at("n_bins").get<std::size_t>();
    const auto runs = j.at("rle").get<std::vector<std::size_t>>();
    std::vector<bool> bits;
    bits.reserve(n_bins);
    bool state = false;
    for (std::size_t r : runs) {
      if (bits.size() + r > n_bins) throw Error(ErrorKind::InvalidInput, "mask runs exceed n_bins");
      bits.insert(bits.end(), r, state);
      state = !state;
    }
    if (bits.size() != n_bins) throw Error(ErrorKind::InvalidInput, "mask runs do not cover n_bins");
    return FrequencyMask(std::move(bits), j.value("granularity", std::size_t{1}));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::InvalidInput, std::string("bad mask JSON: ") + e.what());
  }
}

namespace {

nlohmann::json analysis_json(const AnalysisConfig& a) {
  nlohmann::json j;
  j["mode"] = a.mode == AnalysisMode::Whole ? "whole" : "stft";
  j["n_fft"] = a.n_fft;
  if (a.mode == AnalysisMode::Stft) {
    j["win_len"] = a.stft.win_len;
    j["hop"] = a.stft.hop;
    j["window"] = a.stft.window == Window::Hann ? "hann" : "rect";
  }
  switch (a.fill.kind) {
    case FillPolicy::Kind::Zero: j["fill"] = "zero"; break;
    case FillPolicy::Kind::Constant: j["fill"] = "constant"; j["fill_value"] = a.fill.value; break;
    case FillPolicy::Kind::Noise:
      j["fill"] = "noise";
      j["fill_value"] = a.fill.value;
      j["fill_seed"] = a.fill.seed;
      break;
  }
  return j;
}

}  // namespace

nlohmann::json to_json(const SufficiencyResult& r, const Classifier& oracle) {
  return {{"kind", "sufficient"},
          {"oracle", oracle.id()},
          {"target_class", r.target_class},
          {"target_label", oracle.labels().at(r.target_class)},
          {"delta", r.delta},
          {"original_confidence", r.original_confidence},
          {"achieved_confidence", r.achieved_confidence},
          {"oracle_queries", r.oracle_queries},
          {"one_minimal", r.one_minimal},
          {"kept_bins", r.mask.popcount()},
          {"analysis", analysis_json(r.analysis)},
          {"mask", mask_to_json(r.mask)}};
}

nlohmann::json to_json(const CompletenessResult& r, const Classifier& oracle) {
  nlohmann::json j{{"kind", "complete"},
                   {"oracle", oracle.id()},
                   {"target_class", r.target_class},
                   {"target_label", oracle.labels().at(r.target_class)},
                   {"delta", r.delta},
                   {"original_confidence", r.original_confidence},
                   {"achieved_confidence", r.achieved_confidence},
                   {"inverse_defined", r.inverse_defined},
                   {"oracle_queries", r.oracle_queries},
                   {"one_minimal", r.one_minimal},
                   {"kept_bins", r.mask.popcount()},
                   {"analysis", analysis_json(r.analysis)},
                   {"mask", mask_to_json(r.mask)}};
  j["inverse_class"] = r.inverse_class ? nlohmann::json(*r.inverse_class) : nlohmann::json(nullptr);
  return j;
}

}  // namespace freqsift
