#include "freqsift/transfer.hpp"

#include <fmt/format.h>

#include <atomic>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <limits>
#include <optional>
#include <thread>
#include <variant>

#include "freqsift/error.hpp"

namespace freqsift {
namespace {

void check_epsilon(double epsilon) {
  if (!(epsilon > 0.0 && epsilon <= 1.0)) {
    throw Error(ErrorKind::InvalidParameter, "epsilon must be in (0, 1]");
  }
}

std::string kind_name(SubsetKind kind) {
  return kind == SubsetKind::Sufficient ? "sufficient" : "complete";
}

std::string format_value(double v) {
  return std::isnan(v) ? std::string() : fmt::format("{:.6f}", v);
}

}  // namespace

TransferVerdict make_verdict(std::string model_id, const ClassDistribution& dist,
                             std::size_t target_class, double epsilon) {
  check_epsilon(epsilon);
  TransferVerdict v;
  v.model_id = std::move(model_id);
  v.predicted_class = top1(dist);
  v.class_match = v.predicted_class == target_class;
  v.entropy_bits = shannon_entropy(dist);
  v.entropy_ok = v.entropy_bits <= epsilon * std::log2(static_cast<double>(dist.size())) + 1e-12;
  return v;
}

TransferReport summarize_transfer(std::string source_id, std::string signal_id,
                                  std::size_t target_class, double epsilon,
                                  std::span<const std::pair<std::string, ClassDistribution>> outputs) {
  check_epsilon(epsilon);
  if (outputs.empty()) throw Error(ErrorKind::InvalidParameter, "transfer needs at least one target model");
  TransferReport r;
  r.source_model = std::move(source_id);
  r.signal_id = std::move(signal_id);
  r.target_class = target_class;
  r.epsilon = epsilon;
  std::size_t matches = 0, confident = 0;
  for (const auto& [id, dist] : outputs) {
    r.verdicts.push_back(make_verdict(id, dist, target_class, epsilon));
    matches += r.verdicts.back().class_match ? 1 : 0;
    confident += r.verdicts.back().entropy_ok ? 1 : 0;
  }
  const auto m = static_cast<double>(outputs.size());
  r.alpha = static_cast<double>(matches) / m;
  r.beta = static_cast<double>(confident) / m;
  r.transferable = matches == outputs.size() && confident == outputs.size();
  return r;
}

TransferReport assess_transfer(const Signal& signal, std::size_t target_class,
                               const Classifier& source, std::span<const ClassifierPtr> targets,
                               double epsilon, std::string signal_id) {
  check_epsilon(epsilon);
  if (target_class >= source.n_classes()) {
    throw Error(ErrorKind::InvalidParameter, "target class out of range");
  }
  for (const auto& t : targets) {
    if (t->labels() != source.labels()) {
      throw Error(ErrorKind::IncompatibleModels,
                  "model '" + t->id() + "' does not share the label set of '" + source.id() + "'");
    }
  }
  std::vector<std::pair<std::string, ClassDistribution>> outputs;
  for (const auto& t : targets) outputs.emplace_back(t->id(), classify(*t, signal));
  return summarize_transfer(source.id(), std::move(signal_id), target_class, epsilon, outputs);
}

// ---- matrix ---------------------------------------------------------------

double TransferCell::value() const {
  if (samples == 0) return std::numeric_limits<double>::quiet_NaN();
  return static_cast<double>(matches) / static_cast<double>(samples);
}

double TransferMatrix::cell(std::size_t source, std::size_t target) const {
  if (source == target) return std::numeric_limits<double>::quiet_NaN();
  return cells.at(source).at(target).value();
}

double TransferMatrix::row_average(std::size_t source) const {
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t t = 0; t < size(); ++t) {
    const double v = cell(source, t);
    if (std::isnan(v)) continue;
    sum += v;
    ++n;
  }
  return n == 0 ? std::numeric_limits<double>::quiet_NaN() : sum / static_cast<double>(n);
}

double TransferMatrix::column_average(std::size_t target) const {
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t s = 0; s < size(); ++s) {
    const double v = cell(s, target);
    if (std::isnan(v)) continue;
    sum += v;
    ++n;
  }
  return n == 0 ? std::numeric_limits<double>::quiet_NaN() : sum / static_cast<double>(n);
}

namespace {

// Outcome of one (source, signal) task.
struct TaskResult {
  std::optional<TransferReport> report;
  std::string failure;
};

TaskResult run_task(const Classifier& source, std::span<const ClassifierPtr> models,
                    const NamedSignal& item, const MatrixOptions& options) {
  TaskResult out;
  try {
    std::size_t target_class = 0;
    FrequencyMask mask = FrequencyMask::full(1);
    if (options.kind == SubsetKind::Sufficient) {
      auto r = find_sufficient(source, item.signal, options.search);
      target_class = r.target_class;
      mask = std::move(r.mask);
    } else {
      auto r = find_complete(source, item.signal, options.search);
      target_class = r.target_class;
      mask = std::move(r.mask);
    }
    const Signal subset = reconstruct(item.signal, mask, options.search.analysis);
    std::vector<ClassifierPtr> targets;
    for (const auto& m : models) {
      if (m->id() != source.id()) targets.push_back(m);
    }
    out.report = assess_transfer(subset, target_class, source, targets, options.epsilon, item.id);
  } catch (const Error& e) {
    out.failure = e.what();
  }
  return out;
}

}  // namespace

TransferMatrix transfer_matrix(std::span<const ClassifierPtr> models,
                               std::span<const NamedSignal> corpus, const MatrixOptions& options) {
  check_epsilon(options.epsilon);
  if (models.size() < 2) throw Error(ErrorKind::InvalidParameter, "transfer matrix needs at least two models");
  if (corpus.empty()) throw Error(ErrorKind::InvalidParameter, "corpus is empty");
  for (const auto& m : models) {
    if (m->labels() != models.front()->labels()) {
      throw Error(ErrorKind::IncompatibleModels, "model '" + m->id() + "' has a different label set");
    }
  }

  const std::size_t n = models.size();
  const std::size_t n_classes = models.front()->n_classes();
  std::vector<TaskResult> results(n * corpus.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t task = next++; task < results.size(); task = next++) {
      const std::size_t s = task / corpus.size();
      results[task] = run_task(*models[s], models, corpus[task % corpus.size()], options);
    }
  };
  const std::size_t workers = std::max<std::size_t>(1, std::min(options.workers, results.size()));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }

  TransferMatrix m;
  for (const auto& model : models) m.model_ids.push_back(model->id());
  m.labels = models.front()->labels();
  m.kind = options.kind;
  m.delta = options.search.delta;
  m.epsilon = options.epsilon;
  m.cells.assign(n, std::vector<TransferCell>(n));
  m.by_class.assign(n, std::vector<std::vector<TransferCell>>(n, std::vector<TransferCell>(n_classes)));
  m.extracted.assign(n, 0);
  m.excluded.assign(n, 0);

  for (std::size_t task = 0; task < results.size(); ++task) {
    const std::size_t s = task / corpus.size();
    const auto& res = results[task];
    if (!res.report) {
      ++m.excluded[s];
      continue;
    }
    ++m.extracted[s];
    for (const auto& v : res.report->verdicts) {
      std::size_t t = 0;
      while (m.model_ids[t] != v.model_id) ++t;
      auto& cell = m.cells[s][t];
      auto& cls = m.by_class[s][t][res.report->target_class];
      ++cell.samples;
      ++cls.samples;
      if (v.class_match) {
        ++cell.matches;
        ++cls.matches;
      }
    }
    m.reports.push_back(*res.report);
  }
  return m;
}

std::string matrix_csv(const TransferMatrix& m) {
  std::string out = "source";
  for (const auto& id : m.model_ids) out += "," + id;
  out += ",avg\n";
  for (std::size_t s = 0; s < m.size(); ++s) {
    out += m.model_ids[s];
    for (std::size_t t = 0; t < m.size(); ++t) out += "," + format_value(m.cell(s, t));
    out += "," + format_value(m.row_average(s)) + "\n";
  }
  return out;
}

nlohmann::json matrix_json(const TransferMatrix& m) {
  using nlohmann::json;
  json rows = json::array();
  for (std::size_t s = 0; s < m.size(); ++s) {
    json cells = json::array();
    for (std::size_t t = 0; t < m.size(); ++t) {
      if (s == t) {
        cells.push_back(nullptr);
        continue;
      }
      const auto& c = m.cells[s][t];
      json per_class = json::object();
      for (std::size_t k = 0; k < m.labels.size(); ++k) {
        const auto& pc = m.by_class[s][t][k];
        if (pc.samples == 0) continue;
        per_class[m.labels[k]] = {{"alpha", pc.value()}, {"matches", pc.matches}, {"samples", pc.samples}};
      }
      cells.push_back({{"target", m.model_ids[t]},
                       {"alpha", c.samples ? json(c.value()) : json(nullptr)},
                       {"matches", c.matches},
                       {"samples", c.samples},
                       {"by_class", per_class}});
    }
    const double avg = m.row_average(s);
    const double col = m.column_average(s);
    rows.push_back({{"source", m.model_ids[s]},
                    {"cells", cells},
                    {"row_avg", std::isnan(avg) ? json(nullptr) : json(avg)},
                    {"column_avg", std::isnan(col) ? json(nullptr) : json(col)},
                    {"extracted", m.extracted[s]},
                    {"excluded", m.excluded[s]}});
  }
  return {{"kind", kind_name(m.kind)}, {"delta", m.delta}, {"epsilon", m.epsilon},
          {"models", m.model_ids},    {"labels", m.labels}, {"rows", rows}};
}

nlohmann::json to_json(const TransferReport& r) {
  nlohmann::json verdicts = nlohmann::json::array();
  for (const auto& v : r.verdicts) {
    verdicts.push_back({{"model", v.model_id},
                        {"predicted_class", v.predicted_class},
                        {"class_match", v.class_match},
                        {"entropy_bits", v.entropy_bits},
                        {"entropy_ok", v.entropy_ok}});
  }
  return {{"source", r.source_model}, {"signal", r.signal_id}, {"target_class", r.target_class},
          {"epsilon", r.epsilon},     {"alpha", r.alpha},      {"beta", r.beta},
          {"transferable", r.transferable}, {"verdicts", verdicts}};
}

std::string verdicts_jsonl(const TransferMatrix& m) {
  std::string out;
  for (const auto& r : m.reports) {
    auto j = to_json(r);
    j["kind"] = kind_name(m.kind);
    out += j.dump() + "\n";
  }
  return out;
}

// ---- paired t-test --------------------------------------------------------

TTestResult paired_t_test(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(ErrorKind::InvalidParameter, "paired samples differ in length");
  if (x.size() < 2) throw Error(ErrorKind::InvalidParameter, "paired t-test needs at least two pairs");
  const auto n = static_cast<double>(x.size());
  double mean = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) mean += x[i] - y[i];
  mean /= n;
  double ss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - y[i] - mean;
    ss += d * d;
  }
  const double sd = std::sqrt(ss / (n - 1.0));
  if (!(sd > 0.0)) throw Error(ErrorKind::DegenerateInput, "differences have zero variance");
  TTestResult r;
  r.dof = x.size() - 1;
  r.t = mean / (sd / std::sqrt(n));
  const boost::math::students_t dist(static_cast<double>(r.dof));
  r.p_value = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(r.t))));
  return r;
}

}  // namespace freqsift
