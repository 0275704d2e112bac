#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include "srs/errors.hpp"

// Minimal iterative radix-2 FFT, enough for colored-noise synthesis and
// Welch periodograms. Lengths must be powers of two.
namespace srs::fft {

inline bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

inline std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

inline void transform(std::vector<std::complex<double>>& a, bool inverse) {
  const std::size_t n = a.size();
  srs::detail::require(is_pow2(n), "fft: length must be a power of two");
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = (inverse ? 2.0 : -2.0) * M_PI / static_cast<double>(len);
    const std::complex<double> wl(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const std::complex<double> u = a[i + k];
        const std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wl;
      }
    }
  }
  if (inverse) {
    for (auto& x : a) x /= static_cast<double>(n);
  }
}

inline void forward(std::vector<std::complex<double>>& a) { transform(a, false); }
inline void inverse(std::vector<std::complex<double>>& a) { transform(a, true); }

}  // namespace srs::fft
