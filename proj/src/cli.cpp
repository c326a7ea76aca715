#include "freqsift/cli.hpp"

#include <fmt/format.h>

#include <CLI11.hpp>
#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <nlohmann/json.hpp>
#include <optional>
#include <sstream>

#include "freqsift/composition.hpp"
#include "freqsift/metrics.hpp"
#include "freqsift/registry.hpp"
#include "freqsift/search.hpp"
#include "freqsift/transfer.hpp"
#include "freqsift/wav.hpp"

#ifndef FREQSIFT_VERSION
#define FREQSIFT_VERSION "0.0.0"
#endif

namespace freqsift::cli {

namespace fs = std::filesystem;
using nlohmann::json;

int exit_code(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::NotFound:
    case ErrorKind::DegenerateInput:
    case ErrorKind::UndefinedInverse:
      return kExitNotFound;
    case ErrorKind::BackendError:
      return kExitBackend;
    default:
      return kExitInput;
  }
}

std::uint64_t fnv1a(std::string_view bytes) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string_view tool_version() noexcept { return FREQSIFT_VERSION; }

namespace {

// Flag values; unset optionals leave the config file's value alone.
struct Flags {
  std::string config_path;
  std::optional<double> delta, epsilon, floor;
  std::optional<std::size_t> nfft, granularity, budget, workers;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> oracles;
  std::string out_dir;
  bool strict_complete = false;
  std::optional<std::string> kind;
  std::vector<std::string> inputs;
};

json default_config() {
  return {{"delta", 0.5},
          {"epsilon", kDefaultEpsilon},
          {"n_fft", 0},
          {"granularity", 0},
          {"budget", 1'000'000},
          {"max_refine_depth", 64},
          {"seed", 0},
          {"confidence_floor", nullptr},
          {"workers", 1},
          {"kind", "sufficient"},
          {"strict_complete", false},
          {"analysis", {{"mode", "whole"}, {"win_len", 512}, {"hop", 256}, {"window", "hann"}}},
          {"fill", {{"kind", "zero"}, {"value", 0.0}}},
          {"models", json::array()},
          {"corpus", json::array()},
          {"out", "freqsift-out"}};
}

void merge(json& base, const json& over) {
  for (auto it = over.begin(); it != over.end(); ++it) {
    if (it->is_object() && base.contains(it.key()) && base[it.key()].is_object()) {
      merge(base[it.key()], *it);
    } else {
      base[it.key()] = *it;
    }
  }
}

json load_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::InvalidInput, "'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

json resolve_config(const Flags& f) {
  json cfg = default_config();
  if (!f.config_path.empty()) {
    const json file = load_json(f.config_path);
    if (!file.is_object()) throw Error(ErrorKind::InvalidInput, "config must be a JSON object");
    merge(cfg, file);
  }
  if (f.delta) cfg["delta"] = *f.delta;
  if (f.epsilon) cfg["epsilon"] = *f.epsilon;
  if (f.floor) cfg["confidence_floor"] = *f.floor;
  if (f.nfft) cfg["n_fft"] = *f.nfft;
  if (f.granularity) cfg["granularity"] = *f.granularity;
  if (f.budget) cfg["budget"] = *f.budget;
  if (f.workers) cfg["workers"] = *f.workers;
  if (f.seed) cfg["seed"] = *f.seed;
  if (f.kind) cfg["kind"] = *f.kind;
  if (f.strict_complete) cfg["strict_complete"] = true;
  if (!f.out_dir.empty()) cfg["out"] = f.out_dir;
  if (!f.oracles.empty()) cfg["oracles"] = f.oracles;

  const double delta = cfg.at("delta").get<double>();
  if (!(delta > 0.0 && delta <= 1.0)) throw Error(ErrorKind::InvalidParameter, "delta must be in (0, 1]");
  const double eps = cfg.at("epsilon").get<double>();
  if (!(eps > 0.0 && eps <= 1.0)) throw Error(ErrorKind::InvalidParameter, "epsilon must be in (0, 1]");
  const std::string kind = cfg.at("kind").get<std::string>();
  if (kind != "sufficient" && kind != "complete") {
    throw Error(ErrorKind::InvalidParameter, "kind must be 'sufficient' or 'complete'");
  }
  return cfg;
}

SearchOptions search_options(const json& cfg) {
  SearchOptions o;
  o.delta = cfg.at("delta").get<double>();
  if (!cfg.at("confidence_floor").is_null()) o.confidence_floor = cfg.at("confidence_floor").get<double>();
  o.granularity = cfg.at("granularity").get<std::size_t>();
  o.allow_full_complete = !cfg.at("strict_complete").get<bool>();
  o.budget.max_queries = cfg.at("budget").get<std::size_t>();
  o.budget.max_refine_depth = cfg.at("max_refine_depth").get<std::size_t>();
  o.budget.seed = cfg.at("seed").get<std::uint64_t>();

  const json& a = cfg.at("analysis");
  const std::string mode = a.at("mode").get<std::string>();
  if (mode == "whole") {
    o.analysis.mode = AnalysisMode::Whole;
  } else if (mode == "stft") {
    o.analysis.mode = AnalysisMode::Stft;
  } else {
    throw Error(ErrorKind::InvalidParameter, "analysis.mode must be 'whole' or 'stft'");
  }
  o.analysis.n_fft = cfg.at("n_fft").get<std::size_t>();
  o.analysis.stft.win_len = a.at("win_len").get<std::size_t>();
  o.analysis.stft.hop = a.at("hop").get<std::size_t>();
  const std::string window = a.at("window").get<std::string>();
  if (window != "hann" && window != "rect") throw Error(ErrorKind::InvalidParameter, "window must be 'hann' or 'rect'");
  o.analysis.stft.window = window == "hann" ? Window::Hann : Window::Rect;

  const json& fill = cfg.at("fill");
  const std::string fk = fill.at("kind").get<std::string>();
  const double value = fill.value("value", 0.0);
  if (fk == "zero") {
    o.analysis.fill = FillPolicy::zero();
  } else if (fk == "constant") {
    o.analysis.fill = FillPolicy::constant(value);
  } else if (fk == "noise") {
    o.analysis.fill = FillPolicy::noise(value, o.budget.seed);
  } else {
    throw Error(ErrorKind::InvalidParameter, "fill.kind must be zero, constant or noise");
  }
  return o;
}

// Corpus entries are files or directories (their *.wav, sorted by name).
std::vector<fs::path> corpus_paths(const json& cfg, const std::vector<std::string>& extra) {
  std::vector<std::string> entries;
  const json& c = cfg.at("corpus");
  if (c.is_string()) {
    entries.push_back(c.get<std::string>());
  } else {
    for (const auto& e : c) entries.push_back(e.get<std::string>());
  }
  entries.insert(entries.end(), extra.begin(), extra.end());
  std::vector<fs::path> out;
  for (const auto& e : entries) {
    const fs::path p(e);
    if (fs::is_directory(p)) {
      std::vector<fs::path> found;
      for (const auto& d : fs::directory_iterator(p)) {
        if (d.is_regular_file() && d.path().extension() == ".wav") found.push_back(d.path());
      }
      std::sort(found.begin(), found.end());
      out.insert(out.end(), found.begin(), found.end());
    } else {
      out.push_back(p);
    }
  }
  return out;
}

std::vector<NamedSignal> load_corpus(const std::vector<fs::path>& paths) {
  std::vector<NamedSignal> out;
  std::map<std::string, int> seen;
  for (const auto& p : paths) {
    std::string id = p.stem().string();
    if (const int n = seen[id]++; n > 0) id += fmt::format("#{}", n);
    out.push_back({id, wav::read(p)});
  }
  return out;
}

// Models from the config file first, then --oracle specs in order.
ModelRegistry build_registry(const json& cfg, int default_rate) {
  const int rate = cfg.contains("sample_rate") ? cfg.at("sample_rate").get<int>() : default_rate;
  ModelRegistry reg = ModelRegistry::from_json(cfg.at("models"), rate);
  if (cfg.contains("oracles")) {
    for (const auto& spec : cfg.at("oracles")) reg.resolve(spec.get<std::string>(), rate);
  }
  return reg;
}

ClassifierPtr single_oracle(const json& cfg, ModelRegistry& reg) {
  if (cfg.contains("oracles") && !cfg.at("oracles").empty()) {
    return reg.get(reg.models().back()->id());
  }
  if (cfg.contains("oracle")) return reg.resolve(cfg.at("oracle").get<std::string>(), 0);
  if (reg.size() == 1) return reg.models().front();
  throw Error(ErrorKind::InvalidParameter, "choose one model with --oracle");
}

// Output directory plus a record of every file written, for the manifest.
class OutputDir {
 public:
  explicit OutputDir(fs::path root) : root_(std::move(root)) {
    std::error_code ec;
    fs::create_directories(root_, ec);
    if (ec) throw Error(ErrorKind::Io, "cannot create '" + root_.string() + "': " + ec.message());
  }

  void text(const std::string& name, const std::string& body) {
    std::ofstream out(root_ / name, std::ios::binary);
    if (!out) throw Error(ErrorKind::Io, "cannot write '" + (root_ / name).string() + "'");
    out << body;
    files_[name] = fnv1a(body);
  }

  void json_file(const std::string& name, const json& j) { text(name, j.dump(2) + "\n"); }

  void wav_file(const std::string& name, const Signal& s) {
    std::ostringstream buf(std::ios::binary);
    wav::write(buf, s, wav::SampleFormat::Float32);
    text(name, buf.str());
  }

  void manifest(const std::string& command, const json& cfg, const json& inputs) {
    json config = cfg;
    config.erase("out");
    json outputs = json::object();
    for (const auto& [name, hash] : files_) outputs[name] = fmt::format("{:016x}", hash);
    const std::string canon = config.dump();
    json m{{"tool", "freqsift"},
           {"version", tool_version()},
           {"command", command},
           {"config", config},
           {"config_hash", fmt::format("{:016x}", fnv1a(canon))},
           {"inputs", inputs},
           {"outputs", outputs}};
    std::ofstream out(root_ / "manifest.json", std::ios::binary);
    out << m.dump(2) << "\n";
  }

  const fs::path& root() const noexcept { return root_; }

 private:
  fs::path root_;
  std::map<std::string, std::uint64_t> files_;
};

json path_list(const std::vector<fs::path>& paths) {
  json j = json::array();
  for (const auto& p : paths) j.push_back(p.generic_string());
  return j;
}

// ---- verbs --------------------------------------------------------------------

int cmd_extract(const Flags& f, std::ostream& out) {
  if (f.inputs.size() != 1) throw Error(ErrorKind::InvalidParameter, "extract takes exactly one input WAV");
  const json cfg = resolve_config(f);
  const Signal signal = wav::read(f.inputs.front());
  ModelRegistry reg = build_registry(cfg, signal.sample_rate());
  const ClassifierPtr oracle = single_oracle(cfg, reg);
  const SearchOptions opts = search_options(cfg);

  OutputDir dir(cfg.at("out").get<std::string>());
  std::string log;

  const auto suff = find_sufficient(*oracle, signal, opts);
  log += json{{"step", "sufficient"}, {"queries", suff.oracle_queries}, {"one_minimal", suff.one_minimal},
              {"kept_bins", suff.mask.popcount()}}.dump() + "\n";
  const auto comp = find_complete(*oracle, signal, opts);
  log += json{{"step", "complete"}, {"queries", comp.oracle_queries}, {"one_minimal", comp.one_minimal},
              {"kept_bins", comp.mask.popcount()}, {"inverse_defined", comp.inverse_defined}}.dump() + "\n";

  dir.json_file("sufficient.json", to_json(suff, *oracle));
  dir.json_file("complete.json", to_json(comp, *oracle));
  dir.wav_file("sufficient.wav", reconstruct(signal, suff.mask, opts.analysis));
  dir.wav_file("complete.wav", reconstruct(signal, comp.mask, opts.analysis));
  if (comp.inverse_defined) dir.wav_file("inverse.wav", inverse_signal(signal, comp));
  dir.text("provenance.jsonl", log);
  dir.manifest("extract", cfg, path_list({fs::path(f.inputs.front())}));

  out << fmt::format("class={} sufficient_bins={} complete_bins={} inverse={}\n",
                     oracle->labels()[suff.target_class], suff.mask.popcount(), comp.mask.popcount(),
                     comp.inverse_defined ? oracle->labels()[*comp.inverse_class] : "undefined");
  return kExitOk;
}

int cmd_verify(const Flags& f, const std::string& mask_path, std::ostream& out) {
  if (f.inputs.size() != 1) throw Error(ErrorKind::InvalidParameter, "verify takes exactly one input WAV");
  const json cfg = resolve_config(f);
  const Signal signal = wav::read(f.inputs.front());
  ModelRegistry reg = build_registry(cfg, signal.sample_rate());
  const ClassifierPtr oracle = single_oracle(cfg, reg);
  const SearchOptions opts = search_options(cfg);

  json mj = load_json(mask_path);
  if (mj.contains("mask")) mj = mj.at("mask");
  const FrequencyMask mask = mask_from_json(mj);
  const double floor = opts.confidence_floor.value_or(0.0);
  const auto check = verify_sufficient(*oracle, signal, mask, opts.delta, opts.analysis, floor);
  json r{{"sufficient", check.sufficient},
         {"target_class", oracle->labels()[check.target_class]},
         {"original_confidence", check.original_confidence},
         {"masked_confidence", check.distribution[check.target_class]},
         {"masked_class", oracle->labels()[top1(check.distribution)]},
         {"delta", opts.delta},
         {"floor", floor}};
  out << r.dump() << "\n";
  return check.sufficient ? kExitOk : kExitNotFound;
}

int cmd_matrix(const Flags& f, std::ostream& out) {
  const json cfg = resolve_config(f);
  const auto paths = corpus_paths(cfg, f.inputs);
  if (paths.empty()) throw Error(ErrorKind::InvalidInput, "corpus is empty");
  const auto corpus = load_corpus(paths);
  ModelRegistry reg = build_registry(cfg, corpus.front().signal.sample_rate());

  MatrixOptions mo;
  mo.kind = cfg.at("kind") == "complete" ? SubsetKind::Complete : SubsetKind::Sufficient;
  mo.epsilon = cfg.at("epsilon").get<double>();
  mo.search = search_options(cfg);
  mo.workers = cfg.at("workers").get<std::size_t>();
  const auto m = transfer_matrix(reg.models(), corpus, mo);

  json mj = matrix_json(m);
  for (auto& row : mj["rows"]) {
    const auto& meta = reg.meta(row["source"].get<std::string>());
    if (!meta.empty()) row["meta"] = meta;
  }
  OutputDir dir(cfg.at("out").get<std::string>());
  dir.text("matrix.csv", matrix_csv(m));
  dir.json_file("matrix.json", mj);
  dir.text("verdicts.jsonl", verdicts_jsonl(m));
  // Workers never change results, so they stay out of the config hash.
  json hashed = cfg;
  hashed.erase("workers");
  dir.manifest("matrix", hashed, path_list(paths));
  out << matrix_csv(m);
  return kExitOk;
}

int cmd_compose(const Flags& f, const std::string& class_label, std::ostream& out) {
  const json cfg = resolve_config(f);
  const auto paths = corpus_paths(cfg, f.inputs);
  if (paths.empty()) throw Error(ErrorKind::InvalidInput, "no signals to compose");
  const auto corpus = load_corpus(paths);
  ModelRegistry reg = build_registry(cfg, corpus.front().signal.sample_rate());
  const ClassifierPtr oracle = single_oracle(cfg, reg);

  // Group by predicted class, keeping corpus order within each group.
  std::vector<std::vector<NamedSignal>> groups(oracle->n_classes());
  for (const auto& item : corpus) groups[top1(classify(*oracle, item.signal))].push_back(item);

  OutputDir dir(cfg.at("out").get<std::string>());
  std::string table = "class,members,candidates,degree\n";
  bool any = false;
  for (std::size_t c = 0; c < groups.size(); ++c) {
    const auto& label = oracle->labels()[c];
    if (!class_label.empty() && label != class_label) continue;
    if (groups[c].empty()) continue;
    const auto sig = compose_global(*oracle, groups[c]);
    dir.wav_file("composite_" + label + ".wav", sig.signal);
    dir.json_file("composite_" + label + ".json", to_json(sig));
    table += fmt::format("{},{},{},{:.6f}\n", label, sig.member_ids.size(), sig.candidates_considered, sig.degree);
    any = true;
  }
  if (!any) throw Error(ErrorKind::NotFound, "no input classifies to the requested class");
  dir.text("degree.csv", table);
  dir.manifest("compose", cfg, path_list(paths));
  out << table;
  return kExitOk;
}

int cmd_transplant(const Flags& f, const std::string& composite_path, const std::string& mode_name,
                   bool write_wavs, std::ostream& out) {
  const json cfg = resolve_config(f);
  if (mode_name != "add" && mode_name != "replace") throw Error(ErrorKind::InvalidParameter, "mode must be add or replace");
  const TransplantMode mode = mode_name == "add" ? TransplantMode::Add : TransplantMode::Replace;
  const auto paths = corpus_paths(cfg, f.inputs);
  if (paths.empty()) throw Error(ErrorKind::InvalidInput, "no transplant targets");
  const auto targets = load_corpus(paths);
  const Signal comp_signal = wav::read(composite_path);
  ModelRegistry reg = build_registry(cfg, comp_signal.sample_rate());
  const ClassifierPtr oracle = single_oracle(cfg, reg);

  CompositeSignature comp{comp_signal};
  comp.class_index = top1(classify(*oracle, comp_signal));
  comp.class_label = oracle->labels()[comp.class_index];
  comp.oracle_id = oracle->id();

  OutputDir dir(cfg.at("out").get<std::string>());
  std::string csv = "target,original_class,result_class,flipped\n";
  std::size_t tried = 0, flipped = 0, skipped = 0;
  for (const auto& t : targets) {
    if (t.signal.sample_rate() != comp_signal.sample_rate()) {
      throw Error(ErrorKind::InvalidInput, "target '" + t.id + "' differs in sample rate from the composite");
    }
    if (top1(classify(*oracle, t.signal)) == comp.class_index) {
      ++skipped;
      continue;
    }
    const auto r = cross_label_transplant(*oracle, comp, t.signal, mode);
    ++tried;
    flipped += r.flipped ? 1 : 0;
    csv += fmt::format("{},{},{},{}\n", t.id, oracle->labels()[r.original_class],
                       oracle->labels()[top1(r.distribution)], r.flipped ? 1 : 0);
    if (write_wavs) dir.wav_file("transplant_" + t.id + ".wav", r.signal);
  }
  const json report{{"composite_class", comp.class_label},
                    {"mode", mode_name},
                    {"targets", tried},
                    {"skipped_same_class", skipped},
                    {"flipped", flipped},
                    {"flip_rate", tried ? json(static_cast<double>(flipped) / static_cast<double>(tried)) : json(nullptr)}};
  dir.text("transplant.csv", csv);
  dir.json_file("transplant.json", report);
  json inputs = path_list(paths);
  inputs.push_back(fs::path(composite_path).generic_string());
  dir.manifest("transplant", cfg, inputs);
  out << report.dump() << "\n";
  return kExitOk;
}

struct MetricsFlags {
  std::string pairs, transcripts, level = "char";
  std::size_t welch_nperseg = 0, welch_overlap = 0;
};

// CSV rows of two fields; a header line is optional.
std::vector<std::pair<std::string, std::string>> read_pairs(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path.string() + "'");
  std::vector<std::pair<std::string, std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw Error(ErrorKind::InvalidInput, "expected two comma-separated fields: " + line);
    rows.emplace_back(line.substr(0, comma), line.substr(comma + 1));
  }
  return rows;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path.string() + "'");
  std::ostringstream s;
  s << in.rdbuf();
  std::string text = s.str();
  while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) text.pop_back();
  return text;
}

int cmd_metrics(const Flags& f, const MetricsFlags& mf, std::ostream& out) {
  const json cfg = resolve_config(f);
  if (mf.level != "char" && mf.level != "word") throw Error(ErrorKind::InvalidParameter, "level must be char or word");
  PsdConfig pc;
  if (mf.welch_nperseg > 0) pc = PsdConfig::welch(mf.welch_nperseg, mf.welch_overlap);

  OutputDir dir(cfg.at("out").get<std::string>());
  json report{{"ratio_definition", "1 - d / max(|a|, |b|)"},
              {"levenshtein_level", mf.level},
              {"psd", mf.welch_nperseg > 0 ? "welch" : "periodogram"}};
  json inputs = json::array();

  const auto signal_paths = corpus_paths(cfg, f.inputs);
  json entropy = json::array();
  std::string entropy_csv = "signal,spectral_entropy\n";
  const auto signals = load_corpus(signal_paths);
  for (const auto& s : signals) {
    const double h = spectral_entropy(s.signal, true, pc);
    entropy.push_back({{"signal", s.id}, {"spectral_entropy", h}});
    entropy_csv += fmt::format("{},{:.6f}\n", s.id, h);
    dir.text("psd_" + s.id + ".csv", psd_csv(psd(s.signal, pc)));
  }
  for (const auto& p : signal_paths) inputs.push_back(p.generic_string());
  if (!signals.empty()) {
    report["entropy"] = entropy;
    dir.text("entropy.csv", entropy_csv);
  }

  if (!mf.pairs.empty()) {
    json rows = json::array();
    std::string csv = "clean,degraded,stoi\n";
    for (const auto& [clean, degraded] : read_pairs(mf.pairs)) {
      const double v = stoi(wav::read(clean), wav::read(degraded));
      rows.push_back({{"clean", clean}, {"degraded", degraded}, {"stoi", v}});
      csv += fmt::format("{},{},{:.6f}\n", clean, degraded, v);
    }
    report["stoi"] = rows;
    dir.text("stoi.csv", csv);
    inputs.push_back(fs::path(mf.pairs).generic_string());
  }

  if (!mf.transcripts.empty()) {
    const TokenLevel level = mf.level == "word" ? TokenLevel::Word : TokenLevel::Character;
    json rows = json::array();
    std::string csv = "reference,hypothesis,distance,ratio\n";
    for (const auto& [ref_path, hyp_path] : read_pairs(mf.transcripts)) {
      const std::string a = slurp(ref_path), b = slurp(hyp_path);
      const std::size_t d = level == TokenLevel::Word ? levenshtein_words(a, b) : levenshtein(a, b);
      const double ratio = levenshtein_ratio(a, b, level);
      rows.push_back({{"reference", ref_path}, {"hypothesis", hyp_path}, {"distance", d}, {"ratio", ratio}});
      csv += fmt::format("{},{},{},{:.6f}\n", ref_path, hyp_path, d, ratio);
    }
    report["levenshtein"] = rows;
    dir.text("levenshtein.csv", csv);
    inputs.push_back(fs::path(mf.transcripts).generic_string());
  }

  if (signals.empty() && mf.pairs.empty() && mf.transcripts.empty()) {
    throw Error(ErrorKind::InvalidParameter, "metrics needs signals, --pairs or --transcripts");
  }
  dir.json_file("metrics.json", report);
  dir.manifest("metrics", cfg, inputs);
  out << report.dump(2) << "\n";
  return kExitOk;
}

void add_common(CLI::App* sub, Flags& f, bool search_flags) {
  sub->add_option("inputs", f.inputs, "Input WAV files or directories");
  sub->add_option("--config", f.config_path, "JSON config file; flags override it");
  sub->add_option("--oracle", f.oracles, "Oracle spec or endpoint (band:..., template:..., stdio:..., tcp:...)");
  sub->add_option("--out", f.out_dir, "Output directory");
  sub->add_option("--seed", f.seed, "Seed for noise fill");
  if (!search_flags) return;
  sub->add_option("--delta", f.delta, "Confidence retention in (0, 1]");
  sub->add_option("--epsilon", f.epsilon, "Entropy threshold fraction in (0, 1]");
  sub->add_option("--floor", f.floor, "Minimum target probability for an accepted mask");
  sub->add_option("--nfft", f.nfft, "Analysis FFT size (0 = signal length)");
  sub->add_option("--granularity", f.granularity, "Bins per search unit (0 = auto)");
  sub->add_option("--budget", f.budget, "Maximum oracle queries per search");
  sub->add_option("--workers", f.workers, "Worker threads for matrix runs");
  sub->add_option("--kind", f.kind, "Matrix subset kind: sufficient or complete");
  sub->add_flag("--strict-complete", f.strict_complete, "Refuse a complete mask equal to the whole spectrum");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sufficient and complete frequency subsets of audio classifiers", "freqsift"};
  app.set_version_flag("--version", std::string(tool_version()));
  app.require_subcommand(1);

  Flags f;
  std::string mask_path, class_label, composite_path, mode = "add";
  bool write_wavs = false;
  MetricsFlags mf;

  auto* extract = app.add_subcommand("extract", "Find sufficient and complete subsets of one WAV");
  add_common(extract, f, true);
  auto* verify = app.add_subcommand("verify", "Check whether a mask is sufficient");
  add_common(verify, f, true);
  verify->add_option("--mask", mask_path, "Mask JSON (or a result JSON holding one)")->required();
  auto* matrix = app.add_subcommand("matrix", "Transferability matrix over a corpus and models");
  add_common(matrix, f, true);
  auto* compose = app.add_subcommand("compose", "Global composite signatures per class");
  add_common(compose, f, false);
  compose->add_option("--class", class_label, "Only compose this class");
  auto* transplant = app.add_subcommand("transplant", "Add a composite to other-class signals");
  add_common(transplant, f, false);
  transplant->add_option("--composite", composite_path, "Composite WAV")->required();
  transplant->add_option("--mode", mode, "add or replace");
  transplant->add_flag("--write-wavs", write_wavs, "Also write each transplanted signal");
  auto* metrics = app.add_subcommand("metrics", "Spectral entropy, PSD, STOI and Levenshtein reports");
  add_common(metrics, f, false);
  metrics->add_option("--pairs", mf.pairs, "CSV of clean,degraded WAV paths for STOI");
  metrics->add_option("--transcripts", mf.transcripts, "CSV of reference,hypothesis text file paths");
  metrics->add_option("--level", mf.level, "Levenshtein level: char or word");
  metrics->add_option("--welch-nperseg", mf.welch_nperseg, "Use Welch PSD with this segment length");
  metrics->add_option("--welch-overlap", mf.welch_overlap, "Welch segment overlap in samples");

  std::vector<std::string> argv(args.rbegin(), args.rend());
  try {
    app.parse(argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (extract->parsed()) return cmd_extract(f, out);
    if (verify->parsed()) return cmd_verify(f, mask_path, out);
    if (matrix->parsed()) return cmd_matrix(f, out);
    if (compose->parsed()) return cmd_compose(f, class_label, out);
    if (transplant->parsed()) return cmd_transplant(f, composite_path, mode, write_wavs, out);
    if (metrics->parsed()) return cmd_metrics(f, mf, out);
  } catch (const Error& e) {
    err << "freqsift: " << e.what() << "\n";
    if (!e.payload().empty()) err << "payload: " << e.payload() << "\n";
    return exit_code(e.kind());
  } catch (const json::exception& e) {
    err << "freqsift: invalid config: " << e.what() << "\n";
    return kExitInput;
  } catch (const fs::filesystem_error& e) {
    err << "freqsift: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitInput;
}

int main(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, std::cout, std::cerr);
}

}  // namespace freqsift::cli
