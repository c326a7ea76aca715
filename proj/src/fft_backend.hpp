#pragma once

#include <complex>
#include <cstddef>
#include <span>

namespace freqsift::detail {

// Unnormalized real-to-complex transform: out has n/2+1 entries.
void real_fft(std::span<const double> in, std::span<std::complex<double>> out);

// Unnormalized complex-to-real inverse: in has n/2+1 entries, out has n.
void real_ifft(std::span<const std::complex<double>> in, std::span<double> out);

}  // namespace freqsift::detail
