#include "freqsift/metrics.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <numeric>

#include "fft_backend.hpp"
#include "freqsift/error.hpp"

namespace freqsift {
namespace {

// Windowed one-sided periodogram of x (already windowed), scaled by fs * sum(w^2).
void accumulate_periodogram(std::span<const double> x, double scale, std::vector<double>& power) {
  const std::size_t n = x.size();
  std::vector<std::complex<double>> bins(n / 2 + 1);
  detail::real_fft(x, bins);
  for (std::size_t k = 0; k < bins.size(); ++k) {
    const bool edge = k == 0 || (n % 2 == 0 && k == n / 2);
    power[k] += (edge ? 1.0 : 2.0) * std::norm(bins[k]) / scale;
  }
}

}  // namespace

double PsdEstimate::total_power() const {
  return std::accumulate(power.begin(), power.end(), 0.0) * bin_width();
}

PsdEstimate psd(const Signal& signal, const PsdConfig& config) {
  const auto x = signal.samples();
  const double fs = signal.sample_rate();
  PsdEstimate out;
  out.config = config;

  std::size_t seg = x.size();
  std::size_t step = seg;
  if (config.method == PsdMethod::Welch) {
    seg = config.nperseg;
    if (seg < 2) throw Error(ErrorKind::InvalidParameter, "nperseg must be at least 2");
    if (seg > x.size()) throw Error(ErrorKind::InvalidParameter, "nperseg exceeds the signal length");
    if (config.overlap >= seg) throw Error(ErrorKind::InvalidParameter, "overlap must be below nperseg");
    step = seg - config.overlap;
  } else if (seg < 2) {
    throw Error(ErrorKind::InvalidParameter, "periodogram needs at least two samples");
  }

  const auto w = make_window(config.window, seg);
  double w2 = 0.0;
  for (double v : w) w2 += v * v;
  const double scale = fs * w2;

  out.power.assign(seg / 2 + 1, 0.0);
  std::vector<double> frame(seg);
  std::size_t count = 0;
  for (std::size_t start = 0; start + seg <= x.size(); start += step) {
    for (std::size_t i = 0; i < seg; ++i) frame[i] = x[start + i] * w[i];
    accumulate_periodogram(frame, scale, out.power);
    ++count;
  }
  for (double& p : out.power) p /= static_cast<double>(count);
  out.freqs.resize(out.power.size());
  for (std::size_t k = 0; k < out.freqs.size(); ++k) {
    out.freqs[k] = static_cast<double>(k) * fs / static_cast<double>(seg);
  }
  return out;
}

double spectral_entropy(const Signal& signal, bool normalized, const PsdConfig& config) {
  const auto est = psd(signal, config);
  const double total = std::accumulate(est.power.begin(), est.power.end(), 0.0);
  if (!(total > 0.0)) throw Error(ErrorKind::UndefinedEntropy, "signal has zero spectral energy");
  double h = 0.0;
  for (double p : est.power) {
    const double q = p / total;
    if (q > 0.0) h -= q * std::log2(q);
  }
  if (!normalized) return h;
  return h / std::log2(static_cast<double>(est.power.size()));
}

std::string psd_csv(const PsdEstimate& estimate) {
  std::string out = "freq_hz,power\n";
  for (std::size_t k = 0; k < estimate.power.size(); ++k) {
    out += fmt::format("{:.6f},{:.9e}\n", estimate.freqs[k], estimate.power[k]);
  }
  return out;
}

// ---- resampling -------------------------------------------------------------

std::vector<double> resample_poly(std::span<const double> x, std::size_t up, std::size_t down) {
  if (up == 0 || down == 0) throw Error(ErrorKind::InvalidParameter, "resampling factors must be positive");
  const std::size_t g = std::gcd(up, down);
  up /= g;
  down /= g;
  if (up == 1 && down == 1) return {x.begin(), x.end()};

  // Low-pass at the narrower of the two Nyquist limits, in the upsampled domain.
  const std::size_t max_rate = std::max(up, down);
  const std::size_t half = 10 * max_rate;
  const std::size_t taps = 2 * half + 1;
  const double cutoff = 1.0 / static_cast<double>(max_rate);  // fraction of Nyquist
  constexpr double kBeta = 5.0;
  const double i0_beta = std::cyl_bessel_i(0.0, kBeta);
  std::vector<double> h(taps);
  double sum = 0.0;
  for (std::size_t i = 0; i < taps; ++i) {
    const double m = static_cast<double>(i) - static_cast<double>(half);
    const double arg = std::numbers::pi * cutoff * m;
    const double sinc = m == 0.0 ? 1.0 : std::sin(arg) / arg;
    const double r = m / static_cast<double>(half);
    const double kaiser = std::cyl_bessel_i(0.0, kBeta * std::sqrt(std::max(0.0, 1.0 - r * r))) / i0_beta;
    h[i] = cutoff * sinc * kaiser;
    sum += h[i];
  }
  for (double& v : h) v *= static_cast<double>(up) / sum;

  const std::size_t out_len = (x.size() * up + down - 1) / down;
  std::vector<double> y(out_len, 0.0);
  const auto n = static_cast<long long>(x.size());
  const auto U = static_cast<long long>(up);
  for (std::size_t j = 0; j < out_len; ++j) {
    // Upsampled index of output j, shifted by the filter delay.
    const long long m0 = static_cast<long long>(j * down + half);
    long long i = m0 % U;  // first tap landing on a nonzero upsampled sample
    double acc = 0.0;
    for (; i < static_cast<long long>(taps); i += U) {
      const long long src = (m0 - i) / U;
      if (src < 0) break;
      if (src < n) acc += h[static_cast<std::size_t>(i)] * x[static_cast<std::size_t>(src)];
    }
    y[j] = acc;
  }
  return y;
}

Signal resample(const Signal& signal, int target_rate) {
  if (target_rate <= 0) throw Error(ErrorKind::InvalidParameter, "target rate must be positive");
  if (target_rate == signal.sample_rate()) return signal;
  auto y = resample_poly(signal.samples(), static_cast<std::size_t>(target_rate),
                         static_cast<std::size_t>(signal.sample_rate()));
  if (y.empty()) y.push_back(0.0);
  return Signal(std::move(y), target_rate);
}

// ---- STOI -------------------------------------------------------------------

namespace {

constexpr int kStoiRate = 10000;
constexpr std::size_t kFrame = 256;
constexpr std::size_t kHop = kFrame / 2;
constexpr std::size_t kStoiFft = 512;
constexpr std::size_t kBands = 15;
constexpr double kMinFreq = 150.0;
constexpr std::size_t kSegment = 30;
constexpr double kBetaDb = -15.0;
constexpr double kDynRange = 40.0;
constexpr double kEps = std::numeric_limits<double>::epsilon();

// Symmetric Hann of length n+2 with both zero endpoints dropped.
std::vector<double> inner_hann(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i + 1) /
                                static_cast<double>(n + 1));
  }
  return w;
}

std::size_t frame_count(std::size_t len) {
  return len > kFrame ? (len - kFrame + kHop - 1) / kHop : 0;
}

// Drops frames more than kDynRange dB below the loudest clean frame and
// overlap-adds the rest, for both signals alike.
void remove_silent_frames(std::vector<double>& x, std::vector<double>& y) {
  const auto w = inner_hann(kFrame);
  const std::size_t frames = frame_count(x.size());
  if (frames == 0) throw Error(ErrorKind::TooShort, "clean signal is shorter than one analysis frame");
  std::vector<double> energy(frames);
  for (std::size_t f = 0; f < frames; ++f) {
    double ss = 0.0;
    for (std::size_t i = 0; i < kFrame; ++i) {
      const double v = w[i] * x[f * kHop + i];
      ss += v * v;
    }
    energy[f] = 20.0 * std::log10(std::sqrt(ss) + kEps);
  }
  const double loudest = *std::max_element(energy.begin(), energy.end());
  std::vector<std::size_t> kept;
  for (std::size_t f = 0; f < frames; ++f) {
    if (loudest - kDynRange - energy[f] < 0.0) kept.push_back(f);
  }
  const std::size_t out_len = (kept.size() + (kFrame + kHop - 1) / kHop - 1) * kHop;
  std::vector<double> xo(out_len, 0.0), yo(out_len, 0.0);
  for (std::size_t j = 0; j < kept.size(); ++j) {
    for (std::size_t i = 0; i < kFrame; ++i) {
      xo[j * kHop + i] += w[i] * x[kept[j] * kHop + i];
      yo[j * kHop + i] += w[i] * y[kept[j] * kHop + i];
    }
  }
  x = std::move(xo);
  y = std::move(yo);
}

// Third-octave band magnitudes: [band][frame].
std::vector<std::vector<double>> third_octave(const std::vector<double>& x) {
  const std::size_t n_bins = kStoiFft / 2 + 1;
  std::vector<std::pair<std::size_t, std::size_t>> bands(kBands);
  auto nearest = [&](double f) {
    std::size_t best = 0;
    double dist = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < n_bins; ++k) {
      const double d = std::abs(static_cast<double>(k) * kStoiRate / static_cast<double>(kStoiFft) - f);
      if (d < dist) {
        dist = d;
        best = k;
      }
    }
    return best;
  };
  for (std::size_t b = 0; b < kBands; ++b) {
    const double k = static_cast<double>(b);
    bands[b] = {nearest(kMinFreq * std::pow(2.0, (2.0 * k - 1.0) / 6.0)),
                nearest(kMinFreq * std::pow(2.0, (2.0 * k + 1.0) / 6.0))};
  }

  const auto w = inner_hann(kFrame);
  const std::size_t frames = frame_count(x.size());
  std::vector<std::vector<double>> out(kBands, std::vector<double>(frames));
  std::vector<double> buf(kStoiFft);
  std::vector<std::complex<double>> spec(n_bins);
  for (std::size_t f = 0; f < frames; ++f) {
    std::fill(buf.begin(), buf.end(), 0.0);
    for (std::size_t i = 0; i < kFrame; ++i) buf[i] = w[i] * x[f * kHop + i];
    detail::real_fft(buf, spec);
    for (std::size_t b = 0; b < kBands; ++b) {
      double p = 0.0;
      for (std::size_t k = bands[b].first; k < bands[b].second; ++k) p += std::norm(spec[k]);
      out[b][f] = std::sqrt(p);
    }
  }
  return out;
}

double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

double stoi(const Signal& clean, const Signal& degraded) {
  const auto x_sig = resample(clean, kStoiRate);
  const auto y_sig = resample(degraded, kStoiRate);
  std::vector<double> xs(x_sig.samples().begin(), x_sig.samples().end());
  std::vector<double> ys(y_sig.samples().begin(), y_sig.samples().end());
  ys.resize(xs.size(), 0.0);

  remove_silent_frames(xs, ys);
  const auto X = third_octave(xs);
  const auto Y = third_octave(ys);
  const std::size_t frames = X.front().size();
  if (frames < kSegment) {
    throw Error(ErrorKind::TooShort, "fewer than one 384 ms segment of non-silent speech");
  }

  const double clip = std::pow(10.0, -kBetaDb / 20.0);
  double total = 0.0;
  std::size_t count = 0;
  std::vector<double> xseg(kSegment), yseg(kSegment);
  for (std::size_t m = kSegment; m <= frames; ++m) {
    for (std::size_t b = 0; b < kBands; ++b) {
      for (std::size_t i = 0; i < kSegment; ++i) {
        xseg[i] = X[b][m - kSegment + i];
        yseg[i] = Y[b][m - kSegment + i];
      }
      const double alpha = norm2(xseg) / (norm2(yseg) + kEps);
      for (std::size_t i = 0; i < kSegment; ++i) {
        yseg[i] = std::min(yseg[i] * alpha, xseg[i] * (1.0 + clip));
      }
      const double xm = std::accumulate(xseg.begin(), xseg.end(), 0.0) / kSegment;
      const double ym = std::accumulate(yseg.begin(), yseg.end(), 0.0) / kSegment;
      for (std::size_t i = 0; i < kSegment; ++i) {
        xseg[i] -= xm;
        yseg[i] -= ym;
      }
      const double xn = norm2(xseg) + kEps;
      const double yn = norm2(yseg) + kEps;
      double corr = 0.0;
      for (std::size_t i = 0; i < kSegment; ++i) corr += (xseg[i] / xn) * (yseg[i] / yn);
      total += corr;
      ++count;
    }
  }
  return total / static_cast<double>(count);
}

// ---- strings ----------------------------------------------------------------

std::u32string decode_utf8(std::string_view text) {
  std::u32string out;
  std::size_t i = 0;
  while (i < text.size()) {
    const auto c = static_cast<unsigned char>(text[i]);
    std::size_t len = 1;
    char32_t cp = c;
    if (c >= 0xF0 && c < 0xF8) {
      len = 4;
      cp = c & 0x07;
    } else if (c >= 0xE0) {
      len = 3;
      cp = c & 0x0F;
    } else if (c >= 0xC0) {
      len = 2;
      cp = c & 0x1F;
    }
    bool valid = c < 0x80 || (c >= 0xC0 && c < 0xF8 && i + len <= text.size());
    for (std::size_t k = 1; valid && k < len; ++k) {
      const auto cc = static_cast<unsigned char>(text[i + k]);
      if ((cc & 0xC0) != 0x80) valid = false;
      cp = (cp << 6) | (cc & 0x3F);
    }
    if (!valid) {
      // Malformed bytes count as one symbol each.
      out.push_back(0xDC00 + c);
      ++i;
      continue;
    }
    out.push_back(cp);
    i += len;
  }
  return out;
}

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> words;
  std::size_t i = 0;
  auto space = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; };
  while (i < text.size()) {
    while (i < text.size() && space(text[i])) ++i;
    const std::size_t start = i;
    while (i < text.size() && !space(text[i])) ++i;
    if (i > start) words.emplace_back(text.substr(start, i - start));
  }
  return words;
}

std::size_t levenshtein(std::string_view a, std::string_view b) {
  const auto ua = decode_utf8(a);
  const auto ub = decode_utf8(b);
  return edit_distance<char32_t>(ua, ub);
}

std::size_t levenshtein_words(std::string_view a, std::string_view b) {
  const auto wa = split_words(a);
  const auto wb = split_words(b);
  return edit_distance<std::string>(wa, wb);
}

double levenshtein_ratio(std::string_view a, std::string_view b, TokenLevel level) {
  std::size_t d = 0, longest = 0;
  if (level == TokenLevel::Character) {
    const auto ua = decode_utf8(a);
    const auto ub = decode_utf8(b);
    d = edit_distance<char32_t>(ua, ub);
    longest = std::max(ua.size(), ub.size());
  } else {
    const auto wa = split_words(a);
    const auto wb = split_words(b);
    d = edit_distance<std::string>(wa, wb);
    longest = std::max(wa.size(), wb.size());
  }
  if (longest == 0) return 1.0;
  return 1.0 - static_cast<double>(d) / static_cast<double>(longest);
}

// ---- Mann-Whitney U -----------------------------------------------------------

MannWhitneyResult mann_whitney_u(std::span<const double> x, std::span<const double> y) {
  if (x.empty() || y.empty()) throw Error(ErrorKind::InvalidParameter, "both samples must be non-empty");
  struct Item {
    double v;
    bool first;
  };
  std::vector<Item> all;
  for (double v : x) all.push_back({v, true});
  for (double v : y) all.push_back({v, false});
  for (const auto& it : all) {
    if (!std::isfinite(it.v)) throw Error(ErrorKind::InvalidInput, "samples must be finite");
  }
  std::sort(all.begin(), all.end(), [](const Item& a, const Item& b) { return a.v < b.v; });

  const auto n1 = static_cast<double>(x.size());
  const auto n2 = static_cast<double>(y.size());
  const double n = n1 + n2;
  double r1 = 0.0, tie_term = 0.0;
  for (std::size_t i = 0; i < all.size();) {
    std::size_t j = i;
    while (j < all.size() && all[j].v == all[i].v) ++j;
    const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) {
      if (all[k].first) r1 += avg_rank;
    }
    const auto t = static_cast<double>(j - i);
    tie_term += t * t * t - t;
    i = j;
  }

  MannWhitneyResult r;
  r.u = r1 - n1 * (n1 + 1.0) / 2.0;
  r.reliable = x.size() >= 8 && y.size() >= 8;
  const double mu = n1 * n2 / 2.0;
  const double var = n1 * n2 / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
  if (!(var > 0.0)) throw Error(ErrorKind::DegenerateInput, "all values are tied");
  const double z = std::max(0.0, std::abs(r.u - mu) - 0.5) / std::sqrt(var);
  r.z = r.u >= mu ? z : -z;
  r.p_value = std::min(1.0, std::erfc(z / std::numbers::sqrt2));
  return r;
}

}  // namespace freqsift
