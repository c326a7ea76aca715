#pragma once

#include <filesystem>
#include <iosfwd>

#include "freqsift/signal.hpp"

namespace freqsift::wav {

enum class SampleFormat { Pcm16, Float32 };

// Reads mono PCM16 or IEEE float32 WAV. Multi-channel files are rejected.
Signal read(const std::filesystem::path& path);
Signal read(std::istream& in);

// PCM16 output clips to [-1, 1] and rounds to nearest.
void write(const std::filesystem::path& path, const Signal& signal,
           SampleFormat format = SampleFormat::Float32);
void write(std::ostream& out, const Signal& signal, SampleFormat format = SampleFormat::Float32);

}  // namespace freqsift::wav
