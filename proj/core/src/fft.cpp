#include "quietclock/fft.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <utility>

namespace quietclock {

namespace {

// exp(-2 pi i t / m) with the angle reduced to the first octant, so that
// symmetric entries agree to the last bit.
std::complex<double> unit_root(std::size_t t, std::size_t m) {
  const std::size_t t8 = 8 * (t % m);
  const std::size_t octant = t8 / m;
  const std::size_t r = t8 % m;
  const double angle = std::numbers::pi / 4.0 * static_cast<double>(r) / static_cast<double>(m);
  double c = std::cos(angle);
  double s = std::sin(angle);
  // (c, s) = (cos, sin) of the residual angle; rotate by octant * 45 degrees.
  const double h = std::numbers::sqrt2 / 2.0;
  double x = 0.0;
  double y = 0.0;
  switch (octant) {
    case 0: x = c; y = s; break;
    case 1: x = h * (c - s); y = h * (c + s); break;
    case 2: x = -s; y = c; break;
    case 3: x = -h * (c + s); y = h * (c - s); break;
    case 4: x = -c; y = -s; break;
    case 5: x = -h * (c - s); y = -h * (c + s); break;
    case 6: x = s; y = -c; break;
    default: x = h * (c + s); y = -h * (c - s); break;
  }
  return {x, -y};
}

// Plain complex product; operator* goes through the NaN-recovering library
// routine (Annex G semantics), which dominates the butterfly cost.
inline std::complex<double> mul(std::complex<double> a, std::complex<double> b) {
  return {a.real() * b.real() - a.imag() * b.imag(), a.real() * b.imag() + a.imag() * b.real()};
}

}  // namespace

RealFft::RealFft(std::size_t size) : size_(size) {
  if (size < 2 || !is_power_of_two(size)) {
    throw std::invalid_argument("FFT size must be a power of two >= 2");
  }
  const std::size_t half = size / 2;
  twiddle_.resize(half + 1);
  for (std::size_t t = 0; t <= half; ++t) twiddle_[t] = unit_root(t, size);

  bit_reverse_.resize(half);
  std::size_t bits = 0;
  while ((std::size_t{1} << bits) < half) ++bits;
  for (std::size_t i = 0; i < half; ++i) {
    std::size_t r = 0;
    for (std::size_t b = 0; b < bits; ++b) r |= ((i >> b) & 1U) << (bits - 1 - b);
    bit_reverse_[i] = r;
  }
  work_.resize(half);
}

void RealFft::transform(std::vector<std::complex<double>>& data) const {
  const std::size_t n = data.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (i < bit_reverse_[i]) std::swap(data[i], data[bit_reverse_[i]]);
  }
  // Roots of order n are every other entry of the order-M table.
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t stride = 2 * (n / len);
    const std::size_t half = len / 2;
    for (std::size_t start = 0; start < n; start += len) {
      for (std::size_t j = 0; j < half; ++j) {
        const std::complex<double> t = mul(twiddle_[j * stride], data[start + j + half]);
        const std::complex<double> u = data[start + j];
        data[start + j] = u + t;
        data[start + j + half] = u - t;
      }
    }
  }
}

void RealFft::power_spectrum(std::span<const double> input, std::span<double> power) {
  if (input.size() != size_ || power.size() != size_ / 2 + 1) {
    throw std::invalid_argument("RealFft: buffer sizes do not match the transform size");
  }
  const std::size_t half = size_ / 2;
  for (std::size_t k = 0; k < half; ++k) work_[k] = {input[2 * k], input[2 * k + 1]};
  transform(work_);

  // Split the packed transform into the spectra of even and odd samples.
  for (std::size_t j = 0; j <= half; ++j) {
    const std::complex<double> z = work_[j % half];
    const std::complex<double> zc = std::conj(work_[(half - j) % half]);
    const std::complex<double> even = 0.5 * (z + zc);
    const std::complex<double> odd = std::complex<double>(0.0, -0.5) * (z - zc);
    power[j] = std::norm(even + mul(twiddle_[j], odd));
  }
}

}  // namespace quietclock
