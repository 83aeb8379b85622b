#include "fstk/transforms.hpp"

#include <cmath>

#include "fstk/error.hpp"

namespace fstk {

namespace {

bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

void check_pow2(std::size_t n) {
  require(is_pow2(n), ErrorKind::Parameter,
          "transform length must be a power of two");
}

}  // namespace

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

void fft_pow2(std::complex<double>* x, std::size_t n, bool inverse) {
  check_pow2(n);
  // Bit-reversal permutation.
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(x[i], x[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = (inverse ? 2.0 : -2.0) * M_PI / static_cast<double>(len);
    const std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const std::complex<double> u = x[i + k];
        const std::complex<double> v = x[i + k + len / 2] * w;
        x[i + k] = u + v;
        x[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
  if (inverse) {
    const double inv = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) x[i] *= inv;
  }
}

void unitary_fft(std::complex<double>* x, std::size_t n, bool inverse) {
  check_pow2(n);
  if (inverse) {
    // fft_pow2 already applies 1/n; rescale to 1/sqrt(n).
    fft_pow2(x, n, true);
    const double s = std::sqrt(static_cast<double>(n));
    for (std::size_t i = 0; i < n; ++i) x[i] *= s;
  } else {
    fft_pow2(x, n, false);
    const double s = 1.0 / std::sqrt(static_cast<double>(n));
    for (std::size_t i = 0; i < n; ++i) x[i] *= s;
  }
}

void wht_orthonormal(double* x, std::size_t n) {
  check_pow2(n);
  for (std::size_t len = 1; len < n; len <<= 1) {
    for (std::size_t i = 0; i < n; i += len << 1) {
      for (std::size_t k = 0; k < len; ++k) {
        const double a = x[i + k];
        const double b = x[i + k + len];
        x[i + k] = a + b;
        x[i + k + len] = a - b;
      }
    }
  }
  const double s = 1.0 / std::sqrt(static_cast<double>(n));
  for (std::size_t i = 0; i < n; ++i) x[i] *= s;
}

void dct2_orthonormal(double* x, std::size_t n) {
  check_pow2(n);
  if (n == 1) return;  // c_0 * cos(0) = 1
  // Makhoul's even-odd reordering: v[m] = x[2m], v[n-1-m] = x[2m+1].
  std::vector<std::complex<double>> v(n);
  for (std::size_t m = 0; m < n / 2; ++m) {
    v[m] = x[2 * m];
    v[n - 1 - m] = x[2 * m + 1];
  }
  fft_pow2(v.data(), n, false);
  // Unnormalized DCT-II: sum_m x_m cos(pi k (2m+1)/(2n)) = Re(e^{-i pi k/(2n)} V_k).
  const double c0 = std::sqrt(1.0 / static_cast<double>(n));
  const double ck = std::sqrt(2.0 / static_cast<double>(n));
  for (std::size_t k = 0; k < n; ++k) {
    const double ang = -M_PI * static_cast<double>(k) / (2.0 * static_cast<double>(n));
    const std::complex<double> rot(std::cos(ang), std::sin(ang));
    const double val = (rot * v[k]).real();
    x[k] = (k == 0 ? c0 : ck) * val;
  }
}

}  // namespace fstk
