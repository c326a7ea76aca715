#pragma once

#include <nlohmann/json.hpp>
#include <span>
#include <string>
#include <vector>

#include "freqsift/oracle.hpp"
#include "freqsift/transfer.hpp"

namespace freqsift {

// Mean of the largest greedily-built set of same-class signals whose
// running mean still classifies to that class.
struct CompositeSignature {
  Signal signal;
  std::size_t class_index = 0;
  std::string class_label;
  std::string oracle_id;
  // Accepted members in acceptance order.
  std::vector<std::string> member_ids;
  // Every candidate in the order it was tried (descending confidence).
  std::vector<std::string> construction_order;
  std::size_t candidates_considered = 0;
  // |members| / candidates_considered
  double degree = 0.0;
};

// Inputs must all classify to the same class; shorter inputs are zero-padded
// to the longest. Candidates are tried by descending individual confidence,
// ties in input order.
CompositeSignature compose_global(const Classifier& oracle, std::span<const NamedSignal> signals);

enum class TransplantMode { Add, Replace };

struct TransplantResult {
  bool flipped = false;
  std::size_t original_class = 0;
  Signal signal;
  ClassDistribution distribution;
};

// Add: sample-wise sum, peak-normalized when it exceeds 1. Replace: the
// target's spectrum with the composite's nonzero bins written over it.
// Refuses targets that already classify to the composite's class.
TransplantResult cross_label_transplant(const Classifier& oracle, const CompositeSignature& composite,
                                        const Signal& target, TransplantMode mode = TransplantMode::Add);

nlohmann::json to_json(const CompositeSignature& composite);

}  // namespace freqsift
