#include "freqsift/wav.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <vector>

#include "freqsift/error.hpp"

namespace freqsift::wav {
namespace {

static_assert(std::endian::native == std::endian::little, "WAV codec assumes little-endian host");

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

template <typename T>
T load(const std::uint8_t* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  return v;
}

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

std::vector<std::uint8_t> slurp(std::istream& in) {
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

Signal read(std::istream& in) {
  const auto data = slurp(in);
  if (data.size() < 12 || std::memcmp(data.data(), "RIFF", 4) != 0 ||
      std::memcmp(data.data() + 8, "WAVE", 4) != 0) {
    throw Error(ErrorKind::InvalidInput, "not a RIFF/WAVE stream");
  }
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  const std::uint8_t* samples = nullptr;
  std::size_t sample_bytes = 0;

  std::size_t pos = 12;
  while (pos + 8 <= data.size()) {
    const std::uint8_t* chunk = data.data() + pos;
    const auto size = load<std::uint32_t>(chunk + 4);
    const std::size_t body = pos + 8;
    const std::size_t avail = std::min<std::size_t>(size, data.size() - body);
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (avail < 16) throw Error(ErrorKind::InvalidInput, "truncated fmt chunk");
      format = load<std::uint16_t>(data.data() + body);
      channels = load<std::uint16_t>(data.data() + body + 2);
      rate = load<std::uint32_t>(data.data() + body + 4);
      bits = load<std::uint16_t>(data.data() + body + 14);
      if (format == kFormatExtensible) {
        if (avail < 26) throw Error(ErrorKind::InvalidInput, "truncated extensible fmt chunk");
        format = load<std::uint16_t>(data.data() + body + 24);
      }
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      samples = data.data() + body;
      sample_bytes = avail;
    }
    pos = body + size + (size & 1u);
  }
  if (!have_fmt) throw Error(ErrorKind::InvalidInput, "missing fmt chunk");
  if (samples == nullptr) throw Error(ErrorKind::InvalidInput, "missing data chunk");
  if (channels != 1) {
    throw Error(ErrorKind::InvalidInput,
                "expected mono audio, got " + std::to_string(channels) + " channels");
  }

  std::vector<double> out;
  if (format == kFormatPcm && bits == 16) {
    out.resize(sample_bytes / 2);
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i] = load<std::int16_t>(samples + 2 * i) / 32768.0;
    }
  } else if (format == kFormatFloat && bits == 32) {
    out.resize(sample_bytes / 4);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = load<float>(samples + 4 * i);
  } else {
    throw Error(ErrorKind::InvalidInput, "unsupported sample format (format " +
                                             std::to_string(format) + ", " +
                                             std::to_string(bits) + " bits)");
  }
  if (out.empty()) throw Error(ErrorKind::InvalidInput, "WAV has no samples");
  return Signal(std::move(out), static_cast<int>(rate));
}

Signal read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  return read(in);
}

void write(std::ostream& out, const Signal& signal, SampleFormat format) {
  const std::uint16_t bits = format == SampleFormat::Pcm16 ? 16 : 32;
  const std::uint16_t block = bits / 8;
  const auto data_bytes = static_cast<std::uint32_t>(signal.size() * block);
  const auto rate = static_cast<std::uint32_t>(signal.sample_rate());

  out.write("RIFF", 4);
  put<std::uint32_t>(out, 36 + data_bytes);
  out.write("WAVEfmt ", 8);
  put<std::uint32_t>(out, 16);
  put<std::uint16_t>(out, format == SampleFormat::Pcm16 ? kFormatPcm : kFormatFloat);
  put<std::uint16_t>(out, 1);
  put<std::uint32_t>(out, rate);
  put<std::uint32_t>(out, rate * block);
  put<std::uint16_t>(out, block);
  put<std::uint16_t>(out, bits);
  out.write("data", 4);
  put<std::uint32_t>(out, data_bytes);
  for (double s : signal.samples()) {
    if (format == SampleFormat::Pcm16) {
      const double clipped = std::clamp(s, -1.0, 1.0);
      put<std::int16_t>(out, static_cast<std::int16_t>(
                                 std::clamp(std::lround(clipped * 32768.0), -32768L, 32767L)));
    } else {
      put<float>(out, static_cast<float>(s));
    }
  }
}

void write(const std::filesystem::path& path, const Signal& signal, SampleFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  write(out, signal, format);
  if (!out) throw Error(ErrorKind::Io, "failed writing " + path.string());
}

}  // namespace freqsift::wav
