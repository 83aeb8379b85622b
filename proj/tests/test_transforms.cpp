#include "doctest.h"

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

#include "fstk/transforms.hpp"

namespace {

using cd = std::complex<double>;

std::vector<double> random_real(std::size_t n, unsigned seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd;
  std::vector<double> x(n);
  for (auto& v : x) v = nd(gen);
  return x;
}

// Direct O(n^2) DFT with the e^{-2 pi i nk / N} kernel, no scaling.
std::vector<cd> dft_oracle(const std::vector<cd>& x) {
  const std::size_t n = x.size();
  std::vector<cd> out(n, cd(0, 0));
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t m = 0; m < n; ++m) {
      const double ang = -2.0 * std::numbers::pi * double(k) * double(m) /
                         double(n);
      out[k] += x[m] * cd(std::cos(ang), std::sin(ang));
    }
  return out;
}

// Direct orthonormal DCT-II.
std::vector<double> dct2_oracle(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<double> out(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    double acc = 0.0;
    for (std::size_t m = 0; m < n; ++m)
      acc += x[m] * std::cos(std::numbers::pi * double(k) *
                             (2.0 * double(m) + 1.0) / (2.0 * double(n)));
    const double c = k == 0 ? std::sqrt(1.0 / double(n))
                            : std::sqrt(2.0 / double(n));
    out[k] = c * acc;
  }
  return out;
}

// Direct orthonormal WHT (natural/Hadamard ordering): H_{ij} =
// (-1)^{popcount(i&j)} / sqrt(n).
std::vector<double> wht_oracle(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const int sgn = __builtin_popcountll(i & j) & 1 ? -1 : 1;
      out[i] += sgn * x[j];
    }
  for (auto& v : out) v /= std::sqrt(double(n));
  return out;
}

double l2(const std::vector<double>& x) {
  double s = 0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

double l2(const std::vector<cd>& x) {
  double s = 0;
  for (const auto& v : x) s += std::norm(v);
  return std::sqrt(s);
}

}  // namespace

TEST_CASE("next_pow2 on boundary values") {
  CHECK(fstk::next_pow2(0) == 1);
  CHECK(fstk::next_pow2(1) == 1);
  CHECK(fstk::next_pow2(2) == 2);
  CHECK(fstk::next_pow2(3) == 4);
  CHECK(fstk::next_pow2(4) == 4);
  CHECK(fstk::next_pow2(5) == 8);
  CHECK(fstk::next_pow2(1023) == 1024);
  CHECK(fstk::next_pow2(1024) == 1024);
  CHECK(fstk::next_pow2(1025) == 2048);
}

TEST_CASE("fft matches the direct DFT oracle") {
  for (std::size_t n : {1u, 2u, 8u, 64u}) {
    std::mt19937_64 gen(n);
    std::normal_distribution<double> nd;
    std::vector<cd> x(n);
    for (auto& v : x) v = cd(nd(gen), nd(gen));
    std::vector<cd> got = x;
    fstk::fft_pow2(got.data(), n, false);
    std::vector<cd> want = dft_oracle(x);
    double err = 0;
    for (std::size_t i = 0; i < n; ++i)
      err = std::max(err, std::abs(got[i] - want[i]));
    CHECK(err <= 1e-10 * std::max(1.0, l2(want)));
  }
}

TEST_CASE("fft inverse undoes forward") {
  std::vector<cd> x(128);
  std::mt19937_64 gen(5);
  std::normal_distribution<double> nd;
  for (auto& v : x) v = cd(nd(gen), nd(gen));
  std::vector<cd> y = x;
  fstk::fft_pow2(y.data(), y.size(), false);
  fstk::fft_pow2(y.data(), y.size(), true);
  double err = 0;
  for (std::size_t i = 0; i < x.size(); ++i)
    err = std::max(err, std::abs(y[i] - x[i]));
  CHECK(err <= 1e-12 * l2(x));
}

TEST_CASE("unitary fft is an isometry") {
  std::vector<cd> x(256);
  std::mt19937_64 gen(9);
  std::normal_distribution<double> nd;
  for (auto& v : x) v = cd(nd(gen), nd(gen));
  const double before = l2(x);
  fstk::unitary_fft(x.data(), x.size(), false);
  CHECK(l2(x) == doctest::Approx(before).epsilon(1e-10));
}

TEST_CASE("orthonormal DCT-II matches the direct oracle and is an isometry") {
  for (std::size_t n : {1u, 2u, 16u, 128u}) {
    std::vector<double> x = random_real(n, unsigned(n) + 1);
    std::vector<double> got = x;
    fstk::dct2_orthonormal(got.data(), n);
    std::vector<double> want = dct2_oracle(x);
    double err = 0;
    for (std::size_t i = 0; i < n; ++i)
      err = std::max(err, std::abs(got[i] - want[i]));
    CHECK(err <= 1e-10 * std::max(1.0, l2(want)));
    CHECK(l2(got) == doctest::Approx(l2(x)).epsilon(1e-10));
  }
}

TEST_CASE("orthonormal WHT matches the direct oracle and is an isometry") {
  for (std::size_t n : {1u, 2u, 8u, 64u}) {
    std::vector<double> x = random_real(n, unsigned(n) + 7);
    std::vector<double> got = x;
    fstk::wht_orthonormal(got.data(), n);
    std::vector<double> want = wht_oracle(x);
    double err = 0;
    for (std::size_t i = 0; i < n; ++i)
      err = std::max(err, std::abs(got[i] - want[i]));
    CHECK(err <= 1e-10 * std::max(1.0, l2(want)));
    CHECK(l2(got) == doctest::Approx(l2(x)).epsilon(1e-10));
  }
}

TEST_CASE("WHT is an involution up to ordering-free symmetry") {
  // H is symmetric orthonormal in natural ordering, so applying it twice
  // returns the input.
  std::vector<double> x = random_real(32, 21);
  std::vector<double> y = x;
  fstk::wht_orthonormal(y.data(), y.size());
  fstk::wht_orthonormal(y.data(), y.size());
  double err = 0;
  for (std::size_t i = 0; i < x.size(); ++i)
    err = std::max(err, std::abs(y[i] - x[i]));
  CHECK(err <= 1e-12 * l2(x));
}
