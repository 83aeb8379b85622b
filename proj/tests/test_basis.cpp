#include "doctest.h"

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <vector>

#include "fstk/basis.hpp"
#include "fstk/error.hpp"

using fstk::BasisFamily;
using fstk::BasisSpec;
using fstk::Index;
using fstk::Matrix;
using fstk::Vector;

namespace {

// Monomial-basis normalized Legendre values through degree 5, from the
// classical closed forms times sqrt(2n+1).
double legendre_monomial(int n, double t) {
  double p;
  switch (n) {
    case 0: p = 1.0; break;
    case 1: p = t; break;
    case 2: p = 0.5 * (3 * t * t - 1); break;
    case 3: p = 0.5 * (5 * t * t * t - 3 * t); break;
    case 4: p = 0.125 * (35 * std::pow(t, 4) - 30 * t * t + 3); break;
    case 5: p = 0.125 * (63 * std::pow(t, 5) - 70 * t * t * t + 15 * t); break;
    default: return 0.0;
  }
  return std::sqrt(2.0 * n + 1.0) * p;
}

}  // namespace

TEST_CASE("degree-1 Legendre at the midpoint") {
  Vector v = eval_basis(BasisSpec::legendre(1), 0.0);
  REQUIRE(v.size() == 2);
  CHECK(v[0] == 1.0);
  CHECK(v[1] == 0.0);
}

TEST_CASE("degree-2 Legendre at the right endpoint hits sqrt(2n+1)") {
  Vector v = eval_basis(BasisSpec::legendre(2), 1.0);
  REQUIRE(v.size() == 3);
  CHECK(v[0] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(v[1] == doctest::Approx(std::sqrt(3.0)).epsilon(1e-15));
  CHECK(v[2] == doctest::Approx(std::sqrt(5.0)).epsilon(1e-15));
}

TEST_CASE("recurrence matches closed-form polynomials through degree 5") {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> ud(-1.0, 1.0);
  std::vector<double> out(6);
  for (int trial = 0; trial < 200; ++trial) {
    const double t = ud(gen);
    fstk::legendre_values(5, t, out.data());
    for (int n = 0; n <= 5; ++n)
      CHECK(out[size_t(n)] ==
            doctest::Approx(legendre_monomial(n, t)).epsilon(1e-12));
  }
}

TEST_CASE("piecewise constant wavelet block at one level") {
  // s=1, p=0: [constant 1, Haar step]. At x=-0.5 the step is on its negative
  // half.
  Vector v = eval_basis(BasisSpec::wavelet(1, 0), -0.5);
  REQUIRE(v.size() == 2);
  CHECK(v[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(v[1] == doctest::Approx(-1.0).epsilon(1e-14));
}

TEST_CASE("deeper wavelet levels are supported on dyadic subintervals") {
  // s=2, p=0, n=4: [constant, level-1 step, two level-2 steps]. At any point
  // exactly one of the level-2 functions is nonzero, so each row of the
  // design matrix has exactly 3 nonzero entries.
  BasisSpec spec = BasisSpec::wavelet(2, 0);
  REQUIRE(spec.dimension() == 4);
  std::vector<double> pts;
  for (int i = 0; i < 8; ++i) pts.push_back(-1.0 + (2.0 * i + 1.0) / 8.0);
  Matrix d = design_matrix(spec, pts);
  for (Index q = 0; q < d.rows(); ++q) {
    int nnz = 0;
    for (Index j = 0; j < d.cols(); ++j)
      if (std::abs(d(q, j)) > 1e-12) ++nnz;
    CHECK(nnz == 3);
  }
}

TEST_CASE("orthonormality under the uniform probability measure") {
  // Exact quadrature: the products are piecewise polynomials of degree <= 2p,
  // so integrate each dyadic cell at the finest level with enough nodes.
  for (const BasisSpec spec :
       {BasisSpec::legendre(6), BasisSpec::legendre(20),
        BasisSpec::wavelet(1, 1), BasisSpec::wavelet(3, 2),
        BasisSpec::wavelet(4, 1)}) {
    const int n = spec.dimension();
    const int cells = spec.family == BasisFamily::Wavelet
                          ? 1 << spec.resolution
                          : 1;
    std::vector<double> nodes, weights;
    fstk::gauss_legendre(spec.degree + 2, nodes, weights);
    Matrix gram = Matrix::Zero(n, n);
    std::vector<double> vals(static_cast<std::size_t>(n));
    for (int c = 0; c < cells; ++c) {
      const double a = -1.0 + 2.0 * c / cells;
      const double b = -1.0 + 2.0 * (c + 1) / cells;
      for (std::size_t q = 0; q < nodes.size(); ++q) {
        const double x = 0.5 * (a + b) + 0.5 * (b - a) * nodes[q];
        const double w = 0.5 * weights[q] * (b - a) / 2.0;
        fstk::eval_basis(spec, x, vals.data());
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j)
            gram(i, j) += w * vals[size_t(i)] * vals[size_t(j)];
      }
    }
    CHECK((gram - Matrix::Identity(n, n)).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("empirical Gram over many uniform samples approaches identity") {
  BasisSpec spec = BasisSpec::wavelet(2, 1);
  const int n = spec.dimension();
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> ud(-1.0, 1.0);
  const int qn = 10000;
  Matrix gram = Matrix::Zero(n, n);
  Vector v(n);
  for (int q = 0; q < qn; ++q) {
    fstk::eval_basis(spec, ud(gen), v.data());
    gram += v * v.transpose();
  }
  gram /= double(qn);
  CHECK((gram - Matrix::Identity(n, n)).cwiseAbs().maxCoeff() <= 5e-2);
}

TEST_CASE("coarser wavelet spaces nest in finer ones") {
  // Every function representable at resolution s-1 must be exactly
  // representable at resolution s: fit the coarse design in the fine basis by
  // least squares and check zero residual.
  const int p = 1;
  for (int s = 1; s <= 3; ++s) {
    BasisSpec coarse = BasisSpec::wavelet(s - 1, p);
    BasisSpec fine = BasisSpec::wavelet(s, p);
    std::vector<double> pts;
    const int q = 4 * fine.dimension();
    for (int i = 0; i < q; ++i)
      pts.push_back(-1.0 + 2.0 * (i + 0.5) / q);
    Matrix dc = design_matrix(coarse, pts);
    Matrix df = design_matrix(fine, pts);
    Matrix sol = df.colPivHouseholderQr().solve(dc);
    CHECK((df * sol - dc).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("grid nodes map to reference coordinates") {
  CHECK(fstk::grid_to_reference(0, 5) == -1.0);
  CHECK(fstk::grid_to_reference(4, 5) == 1.0);
  CHECK(fstk::grid_to_reference(1, 3) == 0.0);
  CHECK(fstk::grid_to_reference(1, 5) == doctest::Approx(-0.5).epsilon(1e-15));
  CHECK_THROWS_AS(fstk::grid_to_reference(0, 1), fstk::Error);
}

TEST_CASE("domain mapping: values on [lo,hi] equal reference values") {
  BasisSpec ref = BasisSpec::legendre(4);
  BasisSpec mapped = BasisSpec::legendre(4, 2.0, 6.0);
  for (double t : {-1.0, -0.3, 0.0, 0.7, 1.0}) {
    const double x = 2.0 + (t + 1.0) * 2.0;  // affine image of t
    Vector a = eval_basis(ref, t);
    Vector b = eval_basis(mapped, x);
    CHECK((a - b).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("points just past the boundary are clamped, far points rejected") {
  BasisSpec spec = BasisSpec::legendre(3, 0.0, 1.0);
  Vector edge = eval_basis(spec, 1.0);
  Vector close = eval_basis(spec, 1.0 + 1e-13);
  CHECK((edge - close).cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(eval_basis(spec, 1.5), fstk::Error);
  CHECK_THROWS_AS(eval_basis(spec, -0.5), fstk::Error);
}

TEST_CASE("invalid specs are rejected") {
  CHECK_THROWS_AS(validate(BasisSpec::legendre(-1)), fstk::Error);
  CHECK_THROWS_AS(validate(BasisSpec::wavelet(-1, 0)), fstk::Error);
  CHECK_THROWS_AS(validate(BasisSpec::legendre(2, 1.0, 1.0)), fstk::Error);
  CHECK_THROWS_AS(validate(BasisSpec::legendre(2, 2.0, 1.0)), fstk::Error);
}

TEST_CASE("design matrix rows equal pointwise evaluations") {
  BasisSpec spec = BasisSpec::wavelet(2, 1, -2.0, 3.0);
  std::vector<double> pts = {-2.0, -0.5, 0.1, 2.9, 3.0};
  Matrix d = design_matrix(spec, pts);
  REQUIRE(d.rows() == Index(pts.size()));
  REQUIRE(d.cols() == spec.dimension());
  for (std::size_t q = 0; q < pts.size(); ++q) {
    Vector v = eval_basis(spec, pts[q]);
    CHECK((d.row(Index(q)).transpose() - v).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("gauss_legendre weights sum to two and integrate polynomials") {
  for (int n : {1, 2, 5, 16}) {
    std::vector<double> nodes, weights;
    fstk::gauss_legendre(n, nodes, weights);
    REQUIRE(nodes.size() == std::size_t(n));
    double wsum = 0;
    for (double w : weights) wsum += w;
    CHECK(wsum == doctest::Approx(2.0).epsilon(1e-13));
    // Exactness through degree 2n-1: integral of t^k over [-1,1].
    for (int k = 0; k < 2 * n; ++k) {
      double acc = 0;
      for (std::size_t q = 0; q < nodes.size(); ++q)
        acc += weights[q] * std::pow(nodes[q], k);
      const double want = (k % 2 == 0) ? 2.0 / (k + 1) : 0.0;
      CHECK(acc == doctest::Approx(want).epsilon(1e-12));
    }
  }
}
