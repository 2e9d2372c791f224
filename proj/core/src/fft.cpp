#include "fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <vector>

#include "ppm/error.hpp"

namespace ppm::detail {

namespace {

struct PlanPair {
  fftw_plan r2c;
  fftw_plan c2r;
};

// FFTW's planner is not thread-safe, so plan creation is serialized here.
// Plans live for the life of the process.
std::mutex& planner_mutex() {
  static std::mutex mu;
  return mu;
}

PlanPair plans_for(int m) {
  static std::map<int, PlanPair> cache;
  std::lock_guard lock(planner_mutex());
  auto it = cache.find(m);
  if (it != cache.end()) {
    return it->second;
  }

  std::vector<double> real(static_cast<std::size_t>(m));
  std::vector<std::complex<double>> spectrum(static_cast<std::size_t>(m / 2 + 1));
  auto* cplx = reinterpret_cast<fftw_complex*>(spectrum.data());
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  PlanPair p{fftw_plan_dft_r2c_1d(m, real.data(), cplx, flags),
             fftw_plan_dft_c2r_1d(m, cplx, real.data(), flags | FFTW_DESTROY_INPUT)};
  if (!(p.r2c != nullptr && p.c2r != nullptr)) {
    throw Error(ErrorKind::InvalidInput,
                "FFTW failed to plan a length-" + std::to_string(m) + " transform");
  }
  cache.emplace(m, p);
  return p;
}

}  // namespace

RealFft::RealFft(int m) : m_(m) {
  if (!(m >= 1)) {
    throw Error(ErrorKind::InvalidInput, "FFT length must be >= 1");
  }
  const PlanPair p = plans_for(m);
  r2c_ = p.r2c;
  c2r_ = p.c2r;
}

void RealFft::forward(std::span<const double> in, std::span<std::complex<double>> out) const {
  fftw_execute_dft_r2c(static_cast<fftw_plan>(r2c_), const_cast<double*>(in.data()),
                       reinterpret_cast<fftw_complex*>(out.data()));
}

void RealFft::inverse(std::span<const std::complex<double>> in, std::span<double> out) const {
  // c2r overwrites its input.
  thread_local std::vector<std::complex<double>> scratch;
  scratch.assign(in.begin(), in.end());
  fftw_execute_dft_c2r(static_cast<fftw_plan>(c2r_),
                       reinterpret_cast<fftw_complex*>(scratch.data()), out.data());
}

}  // namespace ppm::detail
