#pragma once

// Test-only Fourier oracle: radix-2 FFT and the discrete Hilbert transform
// through the multiplier -i sgn(xi). Independent of the library's kernel
// evaluation path.

#include <complex>
#include <vector>

namespace heis_test {

inline void fft_inplace(std::vector<std::complex<double>>& a, bool inverse) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    double ang = 2.0 * M_PI / static_cast<double>(len) * (inverse ? 1.0 : -1.0);
    std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        auto u = a[i + k];
        auto v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
  if (inverse)
    for (auto& v : a) v /= static_cast<double>(n);
}

/// Periodic discrete Hilbert transform (multiplier -i sgn(frequency)).
inline std::vector<double> dft_hilbert(const std::vector<double>& f) {
  const std::size_t N = f.size();
  std::vector<std::complex<double>> F(N);
  for (std::size_t i = 0; i < N; ++i) F[i] = f[i];
  fft_inplace(F, false);
  for (std::size_t k = 0; k < N; ++k) {
    double freq = k < N / 2 ? static_cast<double>(k)
                            : (k == N / 2 ? 0.0 : static_cast<double>(k) - static_cast<double>(N));
    F[k] *= std::complex<double>(0, -1.0) * (freq > 0 ? 1.0 : (freq < 0 ? -1.0 : 0.0));
  }
  fft_inplace(F, true);
  std::vector<double> out(N);
  for (std::size_t i = 0; i < N; ++i) out[i] = F[i].real();
  return out;
}

}  // namespace heis_test
