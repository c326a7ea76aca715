#include "freqsift/registry.hpp"

#include <fstream>
#include <sstream>

#include "freqsift/builtin.hpp"

namespace freqsift {
namespace {

using nlohmann::json;

std::vector<std::string> split(std::string_view text, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in{std::string(text)};
  while (std::getline(in, cur, sep)) out.push_back(cur);
  return out;
}

std::vector<std::string> default_labels(std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back("class" + std::to_string(i));
  return out;
}

double to_double(const std::string& s, std::string_view what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorKind::InvalidParameter, "bad " + std::string(what) + " '" + s + "'");
  }
}

}  // namespace

ClassifierPtr make_classifier(const json& entry, int default_sample_rate) {
  try {
    const std::string id = entry.at("id").get<std::string>();
    const std::string type = entry.at("type").get<std::string>();
    const int rate = entry.value("sample_rate", default_sample_rate);
    if (type == "band_energy") {
      auto edges = entry.at("band_edges").get<std::vector<double>>();
      auto labels = entry.contains("labels") ? entry.at("labels").get<std::vector<std::string>>()
                                             : default_labels(edges.empty() ? 0 : edges.size() - 1);
      return std::make_shared<BandEnergyClassifier>(id, std::move(labels), rate, std::move(edges),
                                                    entry.value("temperature", 1.0));
    }
    if (type == "template") {
      auto templates = entry.at("templates").get<std::vector<std::vector<double>>>();
      auto labels = entry.contains("labels") ? entry.at("labels").get<std::vector<std::string>>()
                                             : default_labels(templates.size());
      return std::make_shared<TemplateClassifier>(id, std::move(labels), rate, std::move(templates),
                                                  entry.value("temperature", 0.1));
    }
    if (type == "external") {
      ExternalOptions opts;
      opts.timeout = std::chrono::milliseconds(
          static_cast<long>(entry.value("timeout_s", 30.0) * 1000.0));
      opts.max_in_flight = entry.value("max_in_flight", std::size_t{16});
      return ExternalClassifier::connect(id, entry.at("endpoint").get<std::string>(), opts);
    }
    throw Error(ErrorKind::InvalidParameter, "unknown model type '" + type + "'");
  } catch (const json::exception& e) {
    throw Error(ErrorKind::InvalidParameter, std::string("bad model entry: ") + e.what());
  }
}

ClassifierPtr parse_oracle_spec(std::string_view spec, int default_sample_rate) {
  const std::string id(spec);
  if (spec.starts_with("stdio:") || spec.starts_with("tcp:")) {
    return ExternalClassifier::connect(id, spec);
  }
  if (spec.starts_with("template:")) {
    const std::string path(spec.substr(9));
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot open template model " + path);
    json entry = json::parse(in, nullptr, false);
    if (entry.is_discarded()) throw Error(ErrorKind::InvalidInput, "template model is not JSON: " + path);
    entry["id"] = id;
    entry["type"] = "template";
    return make_classifier(entry, default_sample_rate);
  }
  if (spec.starts_with("band:")) {
    auto parts = split(spec.substr(5), ';');
    if (parts.empty()) throw Error(ErrorKind::InvalidParameter, "band spec needs edges");
    json entry{{"id", id}, {"type", "band_energy"}};
    std::vector<double> edges;
    for (const auto& e : split(parts[0], ',')) edges.push_back(to_double(e, "band edge"));
    entry["band_edges"] = edges;
    for (std::size_t i = 1; i < parts.size(); ++i) {
      const auto eq = parts[i].find('=');
      if (eq == std::string::npos) throw Error(ErrorKind::InvalidParameter, "bad option '" + parts[i] + "'");
      const std::string key = parts[i].substr(0, eq);
      const std::string val = parts[i].substr(eq + 1);
      if (key == "T") {
        entry["temperature"] = to_double(val, "temperature");
      } else if (key == "rate") {
        entry["sample_rate"] = static_cast<int>(to_double(val, "rate"));
      } else if (key == "labels") {
        entry["labels"] = split(val, ',');
      } else {
        throw Error(ErrorKind::InvalidParameter, "unknown band option '" + key + "'");
      }
    }
    return make_classifier(entry, default_sample_rate);
  }
  throw Error(ErrorKind::InvalidParameter, "unrecognized oracle spec '" + id + "'");
}

void ModelRegistry::add(ClassifierPtr classifier, json meta) {
  if (contains(classifier->id())) {
    throw Error(ErrorKind::InvalidParameter, "duplicate model id '" + classifier->id() + "'");
  }
  meta_.emplace(classifier->id(), std::move(meta));
  models_.push_back(std::move(classifier));
}

bool ModelRegistry::contains(std::string_view id) const { return meta_.find(id) != meta_.end(); }

ClassifierPtr ModelRegistry::get(std::string_view id) const {
  for (const auto& m : models_) {
    if (m->id() == id) return m;
  }
  throw Error(ErrorKind::InvalidParameter, "no model with id '" + std::string(id) + "'");
}

ClassifierPtr ModelRegistry::resolve(std::string_view id_or_spec, int default_sample_rate) {
  if (contains(id_or_spec)) return get(id_or_spec);
  auto model = parse_oracle_spec(id_or_spec, default_sample_rate);
  add(model);
  return model;
}

const json& ModelRegistry::meta(std::string_view id) const {
  auto it = meta_.find(id);
  if (it == meta_.end()) throw Error(ErrorKind::InvalidParameter, "no model with id '" + std::string(id) + "'");
  return it->second;
}

ModelRegistry ModelRegistry::from_json(const json& entries, int default_sample_rate) {
  if (!entries.is_array()) throw Error(ErrorKind::InvalidParameter, "models must be an array");
  ModelRegistry reg;
  for (const auto& entry : entries) {
    json meta = json::object();
    for (const char* key : {"size_m", "accuracy", "backbone"}) {
      if (entry.contains(key)) meta[key] = entry.at(key);
    }
    reg.add(make_classifier(entry, default_sample_rate), std::move(meta));
  }
  return reg;
}

}  // namespace freqsift
