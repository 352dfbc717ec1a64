#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace quietclock {

constexpr bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

// Forward DFT of a real sequence of power-of-two length M >= 2, via a half-size
// complex radix-2 transform. Twiddles are tabulated from exact integer angles.
class RealFft {
 public:
  explicit RealFft(std::size_t size);

  [[nodiscard]] std::size_t size() const { return size_; }

  // |X_j|^2 for j = 0..M/2, X_j = sum_k x_k exp(-2 pi i j k / M).
  void power_spectrum(std::span<const double> input, std::span<double> power);

 private:
  void transform(std::vector<std::complex<double>>& data) const;

  std::size_t size_;
  std::vector<std::complex<double>> twiddle_;  // exp(-2 pi i t / M), t = 0..M/2
  std::vector<std::size_t> bit_reverse_;
  std::vector<std::complex<double>> work_;
};

}  // namespace quietclock
