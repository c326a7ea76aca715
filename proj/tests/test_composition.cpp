#include <gtest/gtest.h>

#include <random>

#include "freqsift/builtin.hpp"
#include "freqsift/composition.hpp"
#include "test_util.hpp"

using namespace freqsift;
using freqsift::testing::tone;
using freqsift::testing::tones;

namespace {

BandEnergyClassifier band3() {
  return BandEnergyClassifier("b", {"low", "mid", "high"}, 8000, {0, 1000, 2000, 4000}, 0.2);
}

// Same-class (low) signals of varying length with out-of-band clutter.
std::vector<NamedSignal> low_class(std::size_t n, std::uint64_t seed) {
  const auto clf = band3();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> lowf(60.0, 950.0), otherf(1000.0, 3900.0), amp(0.05, 0.3);
  std::uniform_int_distribution<std::size_t> len(800, 1400);
  std::vector<NamedSignal> out;
  while (out.size() < n) {
    auto s = tones({{lowf(rng), 0.3 + amp(rng)}, {otherf(rng), amp(rng)}, {otherf(rng), amp(rng)}}, len(rng), 8000);
    if (top1(classify(clf, s)) != 0) continue;
    out.push_back({"s" + std::to_string(out.size()), std::move(s)});
  }
  return out;
}

std::vector<double> prefix_mean(std::span<const NamedSignal> signals, const std::vector<std::string>& ids,
                                std::size_t k, std::size_t length) {
  std::vector<double> sum(length, 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    for (const auto& s : signals) {
      if (s.id != ids[i]) continue;
      for (std::size_t t = 0; t < s.signal.size(); ++t) sum[t] += s.signal.samples()[t];
    }
  }
  for (double& v : sum) v /= static_cast<double>(k);
  return sum;
}

}  // namespace

TEST(Compose, SingleAndDuplicateInputsHaveDegreeOne) {
  const auto clf = band3();
  const auto set = low_class(1, 1);
  const auto one = compose_global(clf, set);
  EXPECT_EQ(one.degree, 1.0);
  EXPECT_EQ(one.member_ids, std::vector<std::string>{"s0"});
  EXPECT_EQ(one.signal.samples()[10], set[0].signal.samples()[10]);

  const std::vector<NamedSignal> dup{set[0], {"copy", set[0].signal}, {"copy2", set[0].signal}};
  const auto d = compose_global(clf, dup);
  EXPECT_EQ(d.degree, 1.0);
  EXPECT_EQ(d.member_ids.size(), 3u);
  for (std::size_t t = 0; t < set[0].signal.size(); ++t) {
    EXPECT_NEAR(d.signal.samples()[t], set[0].signal.samples()[t], 1e-15);
  }
}

TEST(Compose, EveryAcceptedPrefixReclassifies) {
  const auto clf = band3();
  for (std::uint64_t seed : {2u, 3u, 4u}) {
    const auto set = low_class(20, seed);
    const auto c = compose_global(clf, set);
    EXPECT_EQ(top1(classify(clf, c.signal)), c.class_index);
    EXPECT_EQ(c.class_label, "low");
    EXPECT_EQ(c.construction_order.size(), set.size());
    EXPECT_DOUBLE_EQ(c.degree, static_cast<double>(c.member_ids.size()) / set.size());
    std::size_t length = 0;
    for (const auto& s : set) length = std::max(length, s.signal.size());
    EXPECT_EQ(c.signal.size(), length);
    for (std::size_t k = 1; k <= c.member_ids.size(); ++k) {
      const Signal mean(prefix_mean(set, c.member_ids, k, length), 8000);
      EXPECT_EQ(top1(classify(clf, mean)), c.class_index) << "prefix " << k;
    }
    // The final composite is the mean of all members.
    const auto full = prefix_mean(set, c.member_ids, c.member_ids.size(), length);
    for (std::size_t t = 0; t < length; t += 97) EXPECT_NEAR(c.signal.samples()[t], full[t], 1e-12);
  }
}

TEST(Compose, OrderIsDescendingConfidence) {
  const auto clf = band3();
  const auto set = low_class(8, 5);
  const auto c = compose_global(clf, set);
  double last = 2.0;
  for (const auto& id : c.construction_order) {
    for (const auto& s : set) {
      if (s.id != id) continue;
      const double conf = classify(clf, s.signal.resized(c.signal.size()))[0];
      EXPECT_LE(conf, last);
      last = conf;
    }
  }
}

TEST(Compose, RejectsMixedClassesAndRates) {
  const auto clf = band3();
  const std::vector<NamedSignal> mixed{{"a", tone(500, 0.5, 1024, 8000)}, {"b", tone(3000, 0.5, 1024, 8000)}};
  EXPECT_THROW(compose_global(clf, mixed), Error);
  const std::vector<NamedSignal> rates{{"a", tone(500, 0.5, 1024, 8000)}, {"b", tone(500, 0.5, 1024, 16000)}};
  EXPECT_THROW(compose_global(clf, rates), Error);
  EXPECT_THROW(compose_global(clf, std::vector<NamedSignal>{}), Error);
}

TEST(Compose, JsonManifest) {
  const auto clf = band3();
  const auto c = compose_global(clf, low_class(4, 6));
  const auto j = to_json(c);
  EXPECT_EQ(j["oracle"], "b");
  EXPECT_EQ(j["class_label"], "low");
  EXPECT_EQ(j["members"].size(), c.member_ids.size());
  EXPECT_EQ(j["construction_order"].size(), 4u);
}

TEST(Transplant, ZeroCompositeLeavesTargetUnchanged) {
  const auto clf = band3();
  CompositeSignature zero{Signal::zeros(1024, 8000)};
  zero.class_index = 0;
  zero.class_label = "low";
  const auto target = tone(3000, 0.5, 1024, 8000);
  for (auto mode : {TransplantMode::Add, TransplantMode::Replace}) {
    const auto r = cross_label_transplant(clf, zero, target, mode);
    EXPECT_FALSE(r.flipped);
    EXPECT_EQ(r.original_class, 2u);
    for (std::size_t t = 0; t < target.size(); ++t) EXPECT_NEAR(r.signal.samples()[t], target.samples()[t], 1e-12);
  }
}

TEST(Transplant, StrongCompositeFlipsLabel) {
  const auto clf = band3();
  const auto c = compose_global(clf, std::vector<NamedSignal>{{"a", tone(400, 0.9, 1024, 8000)}});
  const auto target = tone(3000, 0.3, 1024, 8000);
  const auto add = cross_label_transplant(clf, c, target, TransplantMode::Add);
  EXPECT_TRUE(add.flipped);
  EXPECT_EQ(top1(add.distribution), 0u);
  // Sum exceeds 1 and is peak-normalized.
  double peak = 0.0;
  for (double v : add.signal.samples()) peak = std::max(peak, std::abs(v));
  EXPECT_NEAR(peak, 1.0, 1e-12);
  EXPECT_TRUE(cross_label_transplant(clf, c, target, TransplantMode::Replace).flipped);
}

TEST(Transplant, WeakCompositeDoesNotFlip) {
  const auto clf = band3();
  const auto c = compose_global(clf, std::vector<NamedSignal>{{"a", tone(400, 0.01, 1024, 8000)}});
  EXPECT_FALSE(cross_label_transplant(clf, c, tone(3000, 0.5, 1024, 8000)).flipped);
}

TEST(Transplant, RefusesSameClassTargetAndRateMismatch) {
  const auto clf = band3();
  const auto c = compose_global(clf, std::vector<NamedSignal>{{"a", tone(400, 0.5, 1024, 8000)}});
  EXPECT_THROW(cross_label_transplant(clf, c, tone(600, 0.5, 1024, 8000)), Error);
  EXPECT_THROW(cross_label_transplant(clf, c, tone(3000, 0.5, 1024, 16000)), Error);
}

TEST(Transplant, LengthsArePadded) {
  const auto clf = band3();
  const auto c = compose_global(clf, std::vector<NamedSignal>{{"a", tone(400, 0.5, 512, 8000)}});
  const auto r = cross_label_transplant(clf, c, tone(3000, 0.2, 1500, 8000));
  EXPECT_EQ(r.signal.size(), 1500u);
}
