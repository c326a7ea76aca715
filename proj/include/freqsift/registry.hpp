#pragma once

#include <map>
#include <nlohmann/json.hpp>
#include <string>
#include <string_view>
#include <vector>

#include "freqsift/external.hpp"
#include "freqsift/oracle.hpp"

namespace freqsift {

// Builds one classifier from a JSON model entry:
//   {"id":"A","type":"band_energy","sample_rate":16000,
//    "band_edges":[0,2000,4000,8000],"labels":["low","mid","high"],"temperature":1.0}
//   {"id":"T","type":"template","sample_rate":16000,"templates":[[...],[...]],
//    "labels":[...],"temperature":0.1}
//   {"id":"X","type":"external","endpoint":"tcp:127.0.0.1:9000","timeout_s":30,"max_in_flight":16}
ClassifierPtr make_classifier(const nlohmann::json& entry, int default_sample_rate);

// Inline form used by --oracle:
//   band:0,2000,4000,8000[;T=1][;rate=16000][;labels=a,b,c]
//   template:path/to/model.json
//   stdio:<command>   tcp:<host>:<port>
ClassifierPtr parse_oracle_spec(std::string_view spec, int default_sample_rate);

// Ordered set of classifiers with unique ids.
class ModelRegistry {
 public:
  void add(ClassifierPtr classifier, nlohmann::json meta = nlohmann::json::object());
  ClassifierPtr get(std::string_view id) const;
  bool contains(std::string_view id) const;
  // A registry id, or else an inline spec (registered under the spec text).
  ClassifierPtr resolve(std::string_view id_or_spec, int default_sample_rate);

  const std::vector<ClassifierPtr>& models() const noexcept { return models_; }
  const nlohmann::json& meta(std::string_view id) const;
  std::size_t size() const noexcept { return models_.size(); }

  static ModelRegistry from_json(const nlohmann::json& entries, int default_sample_rate);

 private:
  std::vector<ClassifierPtr> models_;
  std::map<std::string, nlohmann::json, std::less<>> meta_;
};

}  // namespace freqsift
