#pragma once

#include <cstdint>
#include <vector>

#include "fstk/tensor.hpp"

namespace fstk {

enum class BasisFamily : std::uint8_t { Legendre = 0, Wavelet = 1 };

// A univariate approximation space on [lo, hi], mapped affinely onto the
// reference interval [-1, 1]. All bases are orthonormal with respect to the
// uniform *probability* measure on the domain.
//
//   Legendre: normalized Legendre polynomials of degree <= p, n = p+1.
//   Wavelet:  multiresolution piecewise polynomials, n = (p+1) * 2^s.
//             Index layout: block 0 = the p+1 Legendre polynomials (level 0);
//             level l in [1, s] holds 2^(l-1) dyadic intervals x (p+1)
//             Alpert-style multiwavelets with vanishing moments through
//             degree p, ordered by interval then by wavelet index.
struct BasisSpec {
  BasisFamily family = BasisFamily::Legendre;
  int degree = 0;      // p
  int resolution = 0;  // s (wavelet only)
  double lo = -1.0;
  double hi = 1.0;

  int dimension() const {
    return family == BasisFamily::Legendre ? degree + 1
                                           : (degree + 1) << resolution;
  }
  bool operator==(const BasisSpec&) const = default;

  static BasisSpec legendre(int p, double lo = -1.0, double hi = 1.0);
  static BasisSpec wavelet(int s, int p, double lo = -1.0, double hi = 1.0);
  BasisSpec with_domain(double lo, double hi) const;
};

void validate(const BasisSpec& spec);

// Values of all n basis functions at x. Points outside [lo, hi] by at most a
// 1e-12 relative slack are clamped; beyond that a Domain error is thrown.
void eval_basis(const BasisSpec& spec, double x, double* out);
Vector eval_basis(const BasisSpec& spec, double x);

// Q x n matrix with row q = eval_basis(spec, points[q]).
Matrix design_matrix(const BasisSpec& spec, const std::vector<double>& points);

// Reference coordinate of grid node i (0-based) on an I-point grid:
// x = -1 + 2 i / (I - 1). Requires I >= 2.
double grid_to_reference(Index i, Index grid_size);

// Gauss-Legendre nodes and weights on [-1, 1] (weights sum to 2).
void gauss_legendre(int n, std::vector<double>& nodes,
                    std::vector<double>& weights);

// Normalized Legendre values [L0(t), ..., Lp(t)] at reference t, by the
// three-term recurrence; L_n(1) = sqrt(2n+1).
void legendre_values(int p, double t, double* out);

}  // namespace fstk
