#include "fstk/sthosvd.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>

namespace fstk {

namespace {

// Deterministic sign convention: the entry of largest magnitude in each
// column is made positive (first such entry on exact ties).
void fix_column_signs(Matrix& w) {
  for (Index c = 0; c < w.cols(); ++c) {
    Index imax = 0;
    double best = -1.0;
    for (Index i = 0; i < w.rows(); ++i) {
      const double a = std::abs(w(i, c));
      if (a > best) {
        best = a;
        imax = i;
      }
    }
    if (w(imax, c) < 0.0) w.col(c) = -w.col(c);
  }
}

}  // namespace

TuckerDecomposition sthosvd(const DenseTensor& u, double epsilon,
                            const SthosvdOptions& options) {
  require(epsilon > 0.0 && epsilon < 1.0, ErrorKind::Parameter,
          "epsilon must be in (0, 1)");
  for (Index i = 0; i < u.size(); ++i)
    require(std::isfinite(u.data()[i]), ErrorKind::Data,
            "tensor contains non-finite entries");
  const double norm2 = u.vec().squaredNorm();
  require(norm2 > 0.0, ErrorKind::Data, "tensor has zero norm");

  const int d = u.order();
  const double budget = epsilon * epsilon * norm2 / d;

  std::vector<int> order(d);
  std::iota(order.begin(), order.end(), 0);
  if (options.mode_order == SthosvdOptions::ModeOrder::DecreasingSize) {
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return u.dim(a) > u.dim(b); });
  }

  TuckerDecomposition dec;
  dec.factors.resize(d);
  DenseTensor y = u;
  double discarded_total = 0.0;

  for (int k : order) {
    const Matrix m = unfold(y, k);
    const Matrix gram = m * m.transpose();
    Eigen::SelfAdjointEigenSolver<Matrix> es(gram);
    require(es.info() == Eigen::Success, ErrorKind::Compute,
            "eigendecomposition failed");
    const Index n = gram.rows();
    // Eigenvalues come out ascending; clamp round-off negatives.
    Vector ev = es.eigenvalues().cwiseMax(0.0);

    // Discard from the smallest up while the cumulative sum fits the budget.
    Index t = 0;
    double cum = 0.0;
    while (t < n - 1 && cum + ev[t] <= budget) {
      cum += ev[t];
      ++t;
    }
    Index r = n - t;
    // Never split a group of (numerically) equal eigenvalues: extend the kept
    // set downward through ties.
    while (r < n && t > 0 &&
           ev[t - 1] >= ev[t] * (1.0 - 1e-12) && ev[t] > 0.0) {
      --t;
      cum -= ev[t];
      ++r;
    }
    discarded_total += cum;

    Matrix w(n, r);
    for (Index j = 0; j < r; ++j) w.col(j) = es.eigenvectors().col(n - 1 - j);
    fix_column_signs(w);
    dec.factors[k] = w;
    y = mode_product(y, w.transpose(), k);
  }

  dec.core = std::move(y);
  dec.achieved_error = std::sqrt(std::max(0.0, discarded_total) / norm2);
  return dec;
}

DenseTensor reconstruct(const TuckerDecomposition& dec) {
  require(!dec.factors.empty() &&
              dec.core.order() == static_cast<int>(dec.factors.size()),
          ErrorKind::Shape, "decomposition is incomplete");
  DenseTensor y = dec.core;
  for (int k = 0; k < y.order(); ++k)
    y = mode_product(y, dec.factors[k], k);
  return y;
}

std::vector<double> singular_value_decay(const TuckerDecomposition& dec) {
  std::vector<double> v(static_cast<std::size_t>(dec.core.size()));
  for (Index i = 0; i < dec.core.size(); ++i) v[i] = std::abs(dec.core.data()[i]);
  std::sort(v.begin(), v.end(), std::greater<double>());
  return v;
}

}  // namespace fstk
