#pragma once

#include <complex>
#include <span>

namespace ppm::detail {

/// Real-to-complex FFT of fixed length m backed by cached FFTW plans.
/// Plans are created once per length; execution is thread-safe.
class RealFft {
 public:
  explicit RealFft(int m);

  int size() const noexcept { return m_; }
  int spectrum_size() const noexcept { return m_ / 2 + 1; }

  void forward(std::span<const double> in, std::span<std::complex<double>> out) const;
  /// Unnormalized inverse; the caller divides by m. `in` is left untouched.
  void inverse(std::span<const std::complex<double>> in, std::span<double> out) const;

 private:
  int m_;
  void* r2c_;
  void* c2r_;
};

}  // namespace ppm::detail
