#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace fstk {

std::size_t next_pow2(std::size_t n);

// Radix-2 FFT, length must be a power of two. Forward uses the e^{-2*pi*i*nk/N}
// kernel with no scaling; inverse applies 1/N. unitary_fft scales both
// directions by 1/sqrt(N) so the map is an isometry.
void fft_pow2(std::complex<double>* x, std::size_t n, bool inverse);
void unitary_fft(std::complex<double>* x, std::size_t n, bool inverse);

// Orthonormal Walsh-Hadamard transform (natural ordering), power-of-two length.
void wht_orthonormal(double* x, std::size_t n);

// Orthonormal DCT-II, power-of-two length:
//   X_k = c_k * sum_m x_m cos(pi k (2m+1) / (2n)),  c_0 = sqrt(1/n),
//   c_k = sqrt(2/n) otherwise.
void dct2_orthonormal(double* x, std::size_t n);

}  // namespace fstk
