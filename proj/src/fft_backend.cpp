#include "fft_backend.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <utility>
#include <vector>

#include "freqsift/error.hpp"

namespace freqsift::detail {
namespace {

// FFTW planning is not thread-safe, execution with the new-array interface
// is. Plans are created once per size and live for the process.
class PlanCache {
 public:
  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  std::pair<fftw_plan, fftw_plan> plans(std::size_t n) {
    std::lock_guard lock(mutex_);
    if (auto it = plans_.find(n); it != plans_.end()) return it->second;
    std::vector<double> real(n);
    std::vector<std::complex<double>> cplx(n / 2 + 1);
    const int size = static_cast<int>(n);
    constexpr unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    fftw_plan fwd = fftw_plan_dft_r2c_1d(
        size, real.data(), reinterpret_cast<fftw_complex*>(cplx.data()), flags);
    fftw_plan inv = fftw_plan_dft_c2r_1d(
        size, reinterpret_cast<fftw_complex*>(cplx.data()), real.data(), flags);
    if (fwd == nullptr || inv == nullptr) {
      throw Error(ErrorKind::InvalidParameter, "FFTW could not plan size " + std::to_string(n));
    }
    return plans_.emplace(n, std::make_pair(fwd, inv)).first->second;
  }

  ~PlanCache() {
    for (auto& [n, p] : plans_) {
      fftw_destroy_plan(p.first);
      fftw_destroy_plan(p.second);
    }
  }

 private:
  std::mutex mutex_;
  std::map<std::size_t, std::pair<fftw_plan, fftw_plan>> plans_;
};

}  // namespace

void real_fft(std::span<const double> in, std::span<std::complex<double>> out) {
  const std::size_t n = in.size();
  if (out.size() != n / 2 + 1) throw Error(ErrorKind::InvalidParameter, "real_fft output size");
  auto [fwd, inv] = PlanCache::instance().plans(n);
  // r2c does not modify its input, but the API takes a non-const pointer.
  fftw_execute_dft_r2c(fwd, const_cast<double*>(in.data()),
                       reinterpret_cast<fftw_complex*>(out.data()));
}

void real_ifft(std::span<const std::complex<double>> in, std::span<double> out) {
  const std::size_t n = out.size();
  if (in.size() != n / 2 + 1) throw Error(ErrorKind::InvalidParameter, "real_ifft input size");
  auto [fwd, inv] = PlanCache::instance().plans(n);
  // c2r destroys its input.
  std::vector<std::complex<double>> scratch(in.begin(), in.end());
  fftw_execute_dft_c2r(inv, reinterpret_cast<fftw_complex*>(scratch.data()), out.data());
}

}  // namespace freqsift::detail
