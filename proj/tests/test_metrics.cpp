#include <gtest/gtest.h>

#include <numeric>
#include <random>

#include "freqsift/error.hpp"
#include "freqsift/metrics.hpp"
#include "test_util.hpp"

using namespace freqsift;
using freqsift::testing::tone;
using freqsift::testing::voiced;
using freqsift::testing::white_noise;

namespace {

// Full-matrix edit distance, kept separate from the library's two-row version.
std::size_t dp_oracle(const std::u32string& a, const std::u32string& b) {
  std::vector<std::vector<std::size_t>> d(a.size() + 1, std::vector<std::size_t>(b.size() + 1));
  for (std::size_t i = 0; i <= a.size(); ++i) d[i][0] = i;
  for (std::size_t j = 0; j <= b.size(); ++j) d[0][j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      std::size_t best = d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      best = std::min(best, d[i - 1][j] + 1);
      best = std::min(best, d[i][j - 1] + 1);
      d[i][j] = best;
    }
  }
  return d[a.size()][b.size()];
}

std::string random_text(std::mt19937_64& rng) {
  static const std::vector<std::string> alphabet{"a", "b", "c", "d", " ", "é", "ß", "中"};
  std::uniform_int_distribution<std::size_t> len(0, 14), pick(0, alphabet.size() - 1);
  std::string s;
  for (std::size_t i = len(rng); i > 0; --i) s += alphabet[pick(rng)];
  return s;
}

// Deterministic voiced test signal shared with the reference values below:
// ten harmonics of 140 Hz with a 3 Hz envelope and a 0.25 s silent lead-in.
std::pair<Signal, Signal> stoi_pair() {
  const int fs = 16000;
  const std::size_t n = 24000;
  std::vector<double> clean(n, 0.0), degraded(n);
  for (std::size_t t = 0; t < n; ++t) {
    const double time = static_cast<double>(t);
    double v = 0.0;
    for (int h = 1; h <= 10; ++h) v += (1.0 / h) * std::sin(2.0 * std::numbers::pi * h * 140.0 * time / fs + h);
    v *= 0.55 + 0.45 * std::sin(2.0 * std::numbers::pi * 3.0 * time / fs);
    clean[t] = t < 4000 ? 0.0 : v;
    const double interference = 0.6 * std::sin(2.0 * std::numbers::pi * 1234.5 * time / fs) *
                                std::sin(2.0 * std::numbers::pi * 0.7 * time / fs);
    degraded[t] = clean[t] + interference;
  }
  return {Signal(clean, fs), Signal(degraded, fs)};
}

}  // namespace

// ---- PSD --------------------------------------------------------------------

TEST(Psd, PeriodogramMatchesReference) {
  std::vector<double> z(1000);
  for (std::size_t t = 0; t < z.size(); ++t) {
    const double time = static_cast<double>(t);
    z[t] = std::cos(2.0 * std::numbers::pi * 440.5 * time / 8000.0) +
           0.3 * std::sin(2.0 * std::numbers::pi * 3001.0 * time / 8000.0) + 0.001 * time;
  }
  const Signal s(z, 8000);
  // Reference: scipy.signal.periodogram(detrend=False) and welch(nperseg=200, noverlap=100, detrend=False).
  const auto p = psd(s);
  ASSERT_EQ(p.power.size(), 501u);
  const std::vector<std::pair<std::size_t, double>> expected{{0, 3.131819229856395e-02},
                                                             {55, 6.176901420185125e-02},
                                                             {56, 2.719214863132596e-04},
                                                             {375, 5.314934077512390e-03},
                                                             {500, 6.259127338451584e-08}};
  for (const auto& [k, v] : expected) EXPECT_NEAR(p.power[k], v, 1e-9 * v) << k;
  EXPECT_DOUBLE_EQ(p.freqs[1], 8.0);

  const auto w = psd(s, PsdConfig::welch(200, 100));
  ASSERT_EQ(w.power.size(), 101u);
  const std::vector<std::pair<std::size_t, double>> welch_expected{
      {0, 5.277761423531601e-03}, {11, 8.331619003255096e-03}, {75, 7.493954741749155e-04}};
  for (const auto& [k, v] : welch_expected) EXPECT_NEAR(w.power[k], v, 1e-9 * v) << k;
  EXPECT_NEAR(w.power[100], 7.257706838846728e-16, 1e-20);
}

TEST(Psd, ParsevalAndZeroSignal) {
  const auto noise = white_noise(4096, 16000, 3, 0.3);
  double mean_square = 0.0;
  for (double v : noise.samples()) mean_square += v * v;
  mean_square /= static_cast<double>(noise.size());
  EXPECT_NEAR(psd(noise).total_power(), mean_square, 1e-9 * mean_square);
  EXPECT_NEAR(psd(noise, PsdConfig::welch(256, 128)).total_power(), mean_square, 0.05 * mean_square);

  const auto zero = psd(Signal::zeros(512, 8000));
  for (double p : zero.power) EXPECT_EQ(p, 0.0);
  EXPECT_EQ(zero.total_power(), 0.0);
}

TEST(Psd, WelchOfWhiteNoiseIsFlat) {
  const auto noise = white_noise(1 << 16, 16000, 11);
  const auto w = psd(noise, PsdConfig::welch(256, 128));
  // DC and Nyquist carry half weight in a one-sided density; compare the interior.
  const auto [lo, hi] = std::minmax_element(w.power.begin() + 1, w.power.end() - 1);
  EXPECT_LT(10.0 * std::log10(*hi / *lo), 3.0);
  // Level is sigma^2 / (fs / 2).
  const double mean = std::accumulate(w.power.begin() + 1, w.power.end() - 1, 0.0) / (w.power.size() - 2);
  EXPECT_NEAR(mean, 1.0 / 8000.0, 0.03 / 8000.0);
}

TEST(Psd, Validation) {
  const auto s = tone(100, 0.5, 300, 8000);
  EXPECT_THROW(psd(s, PsdConfig::welch(512, 0)), Error);
  EXPECT_THROW(psd(s, PsdConfig::welch(128, 128)), Error);
  EXPECT_THROW(psd(s, PsdConfig::welch(1, 0)), Error);
  EXPECT_THROW(psd(Signal({1.0}, 8000)), Error);
  EXPECT_EQ(psd_csv(psd(Signal({1.0, 1.0}, 8000))).substr(0, 14), "freq_hz,power\n");
}

// ---- spectral entropy -----------------------------------------------------------

TEST(SpectralEntropy, PureToneLowWhiteNoiseHigh) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> freq(100.0, 7000.0), phase(0.0, 6.283), amp(0.05, 0.9);
  const PsdConfig hann{PsdMethod::Periodogram, Window::Hann};
  int tone_pass = 0, noise_pass = 0;
  for (int trial = 0; trial < 50; ++trial) {
    if (spectral_entropy(tone(freq(rng), amp(rng), 32000, 16000, phase(rng)), true, hann) < 0.1) ++tone_pass;
    if (spectral_entropy(white_noise(32000, 16000, rng()), true, hann) > 0.9) ++noise_pass;
  }
  EXPECT_GE(tone_pass, 48);
  EXPECT_GE(noise_pass, 48);
}

TEST(SpectralEntropy, KnownValues) {
  // One on-bin tone with a rectangular window puts all power in one bin.
  EXPECT_NEAR(spectral_entropy(tone(1000, 0.5, 1024, 16000), false), 0.0, 1e-6);
  // Two equal on-bin tones: one bit.
  const auto two = freqsift::testing::tones({{1000, 0.5}, {3000, 0.5}}, 1024, 16000);
  EXPECT_NEAR(spectral_entropy(two, false), 1.0, 1e-6);
  EXPECT_NEAR(spectral_entropy(two, true), 1.0 / std::log2(513.0), 1e-6);
  try {
    spectral_entropy(Signal::zeros(256, 8000));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::UndefinedEntropy);
  }
}

// ---- resampling and STOI ----------------------------------------------------

TEST(Resample, MatchesReferencePolyphase) {
  std::vector<double> x(37);
  for (std::size_t t = 0; t < x.size(); ++t) {
    x[t] = std::sin(2.0 * std::numbers::pi * static_cast<double>(t) * 5.0 / 37.0 + 0.3) + 0.01 * t;
  }
  // Reference: scipy.signal.resample_poly defaults.
  const auto a = resample_poly(x, 5, 8);
  ASSERT_EQ(a.size(), 24u);
  EXPECT_NEAR(a[0], 3.367709715010040e-01, 1e-12);
  EXPECT_NEAR(a[3], -8.939334251595451e-01, 1e-12);
  EXPECT_NEAR(a[11], 6.239193121493896e-01, 1e-12);
  EXPECT_NEAR(a[22], -5.287035494454830e-01, 1e-12);
  const auto b = resample_poly(x, 3, 2);
  ASSERT_EQ(b.size(), 56u);
  EXPECT_NEAR(b[0], 2.956993431952245e-01, 1e-12);
  EXPECT_NEAR(b[7], -8.580559793422511e-01, 1e-12);
  EXPECT_NEAR(b[30], -8.004809536960774e-01, 1e-12);
  EXPECT_NEAR(b[55], -4.118771203326307e-03, 1e-12);
  EXPECT_EQ(resample_poly(x, 4, 4), x);
  EXPECT_THROW(resample_poly(x, 0, 1), Error);
}

TEST(Resample, KeepsInBandTone) {
  const auto s = resample(tone(440, 0.5, 16000, 16000), 10000);
  EXPECT_EQ(s.sample_rate(), 10000);
  EXPECT_EQ(s.size(), 10000u);
  const auto ref = tone(440, 0.5, 10000, 10000);
  double err = 0.0;
  for (std::size_t t = 500; t < 9500; ++t) err = std::max(err, std::abs(s.samples()[t] - ref.samples()[t]));
  EXPECT_LT(err, 1e-3);
}

TEST(Stoi, MatchesReferenceImplementation) {
  const auto [clean, degraded] = stoi_pair();
  // Reference values from an independent numpy implementation of the
  // published algorithm.
  EXPECT_NEAR(stoi(clean, clean), 0.999999999999982, 1e-9);
  EXPECT_NEAR(stoi(clean, degraded), 0.877536998895564, 1e-9);
  std::vector<double> c10(clean.samples().begin(), clean.samples().begin() + 20000);
  std::vector<double> d10(degraded.samples().begin(), degraded.samples().begin() + 20000);
  EXPECT_NEAR(stoi(Signal(c10, 10000), Signal(d10, 10000)), 0.818861552048316, 1e-9);
}

TEST(Stoi, SelfHighNoiseLow) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto s = voiced(32000, 16000, 120.0 + 10.0 * seed, seed);
    EXPECT_GE(stoi(s, s), 0.99);
    EXPECT_LT(stoi(s, white_noise(32000, 16000, seed + 100, 0.2)), 0.2);
  }
}

TEST(Stoi, TooShortAndPadding) {
  const auto s = voiced(16000, 16000, 130.0, 4);
  try {
    stoi(tone(200, 0.5, 2000, 16000), tone(200, 0.5, 2000, 16000));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::TooShort);
  }
  EXPECT_THROW(stoi(Signal({0.1, 0.2}, 16000), Signal({0.1, 0.2}, 16000)), Error);
  // A shorter degraded signal is zero-padded rather than rejected.
  std::vector<double> half(s.samples().begin(), s.samples().begin() + 12000);
  const double v = stoi(s, Signal(half, 16000));
  EXPECT_LT(v, stoi(s, s));
}

// ---- Levenshtein ------------------------------------------------------------------

TEST(Levenshtein, ClassicExamples) {
  EXPECT_EQ(levenshtein("kitten", "sitting"), 3u);
  EXPECT_EQ(levenshtein("", "abc"), 3u);
  EXPECT_EQ(levenshtein("flaw", "lawn"), 2u);
  EXPECT_EQ(levenshtein("中文", "中"), 1u);
  EXPECT_EQ(levenshtein_words("the cat sat", "the dog sat down"), 2u);
  EXPECT_DOUBLE_EQ(levenshtein_ratio("", ""), 1.0);
  EXPECT_DOUBLE_EQ(levenshtein_ratio("abc", "abc"), 1.0);
  EXPECT_DOUBLE_EQ(levenshtein_ratio("abc", "xyz"), 0.0);
  EXPECT_DOUBLE_EQ(levenshtein_ratio("kitten", "sitting"), 1.0 - 3.0 / 7.0);
  EXPECT_DOUBLE_EQ(levenshtein_ratio("a b c", "a x c", TokenLevel::Word), 1.0 - 1.0 / 3.0);
}

TEST(Levenshtein, MatchesDpOracleOnRandomPairs) {
  std::mt19937_64 rng(99);
  for (int i = 0; i < 1000; ++i) {
    const auto a = random_text(rng), b = random_text(rng);
    const auto expected = dp_oracle(decode_utf8(a), decode_utf8(b));
    ASSERT_EQ(levenshtein(a, b), expected) << a << " | " << b;
    EXPECT_EQ(levenshtein(b, a), expected);
  }
}

TEST(Levenshtein, Utf8Decoding) {
  EXPECT_EQ(decode_utf8("aé中"), (std::u32string{U'a', U'é', U'中'}));
  const std::string bad{'a', static_cast<char>(0xff), 'b'};
  EXPECT_EQ(decode_utf8(bad).size(), 3u);
  EXPECT_EQ(levenshtein(bad, "ab"), 1u);
  EXPECT_EQ(split_words("  two\twords \n"), (std::vector<std::string>{"two", "words"}));
}

// ---- Mann-Whitney U ---------------------------------------------------------------

TEST(MannWhitney, MatchesReference) {
  // Reference: scipy.stats.mannwhitneyu(two-sided, asymptotic, continuity).
  const std::vector<double> x{1, 2, 3, 4, 5, 6, 7, 8, 9}, y{3, 5, 7, 9, 11, 13, 15, 17};
  const auto r = mann_whitney_u(x, y);
  EXPECT_DOUBLE_EQ(r.u, 14.0);
  EXPECT_NEAR(r.p_value, 0.03808601063312688, 1e-12);
  EXPECT_TRUE(r.reliable);

  const std::vector<double> a{1.5, 2.0, 2.0, 3.1, 4.0, 4.0, 4.0, 5.5, 7.0, 9.0},
      b{2.0, 3.1, 3.3, 4.0, 6.0, 6.5, 8.0, 9.0, 10.0};
  const auto t = mann_whitney_u(a, b);
  EXPECT_DOUBLE_EQ(t.u, 30.5);
  EXPECT_NEAR(t.p_value, 0.249648989141810, 1e-12);
}

TEST(MannWhitney, SymmetryIdentity) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> value(0, 12), size(1, 20);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> x(size(rng)), y(size(rng));
    for (auto& v : x) v = value(rng);
    for (auto& v : y) v = value(rng);
    MannWhitneyResult a, b;
    try {
      a = mann_whitney_u(x, y);
      b = mann_whitney_u(y, x);
    } catch (const Error&) {
      continue;  // all values tied
    }
    EXPECT_EQ(a.u + b.u, static_cast<double>(x.size() * y.size()));
    EXPECT_EQ(a.p_value, b.p_value);
    EXPECT_EQ(a.z, -b.z);
  }
}

TEST(MannWhitney, NullRejectionRate) {
  std::mt19937_64 rng(77);
  std::normal_distribution<double> g;
  int rejected = 0;
  for (int i = 0; i < 2000; ++i) {
    std::vector<double> x(20), y(25);
    for (auto& v : x) v = g(rng);
    for (auto& v : y) v = g(rng);
    if (mann_whitney_u(x, y).p_value < 0.05) ++rejected;
  }
  EXPECT_NEAR(rejected, 100, 40);
}

TEST(MannWhitney, EdgeCases) {
  const std::vector<double> same{2, 2, 2}, small{1, 2};
  try {
    mann_whitney_u(same, same);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DegenerateInput);
  }
  EXPECT_FALSE(mann_whitney_u(small, same).reliable);
  EXPECT_THROW(mann_whitney_u(std::vector<double>{}, small), Error);
}
