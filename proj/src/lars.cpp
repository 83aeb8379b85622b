#include "fstk/lars.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

namespace fstk {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Solves (phiA^T phiA) w = rhs through a column-pivoted QR of phiA itself;
// returns false when phiA is rank deficient.
bool solve_active_gram(const Matrix& phi_a, const Vector& rhs, Vector& out) {
  Eigen::ColPivHouseholderQR<Matrix> qr(phi_a);
  if (qr.rank() < phi_a.cols()) return false;
  const Index n = phi_a.cols();
  const Matrix r = qr.matrixR().topLeftCorner(n, n);
  Vector t = qr.colsPermutation().transpose() * rhs;
  t = r.triangularView<Eigen::Upper>().transpose().solve(t);
  t = r.triangularView<Eigen::Upper>().solve(t);
  out = qr.colsPermutation() * t;
  return true;
}

Matrix gather_columns(const Matrix& phi, const std::vector<int>& idx) {
  Matrix out(phi.rows(), static_cast<Index>(idx.size()));
  for (std::size_t j = 0; j < idx.size(); ++j) out.col(j) = phi.col(idx[j]);
  return out;
}

}  // namespace

LassoPath lars_lasso_path(const Matrix& phi_in, const Vector& z,
                          const LarsOptions& options) {
  const Index q = phi_in.rows();
  const Index p = phi_in.cols();
  require(q >= 1 && p >= 1, ErrorKind::Parameter, "empty design matrix");
  require(z.size() == q, ErrorKind::Shape, "rhs length mismatch");
  for (Index j = 0; j < p; ++j)
    require(phi_in.col(j).norm() > 0.0, ErrorKind::Parameter,
            "design column is identically zero");
  for (Index i = 0; i < q; ++i)
    require(std::isfinite(z[i]), ErrorKind::Data, "rhs has non-finite entries");

  Matrix phi = phi_in;
  Vector col_scale = Vector::Ones(p);
  if (options.standardize) {
    for (Index j = 0; j < p; ++j) {
      col_scale[j] = phi.col(j).norm();
      phi.col(j) /= col_scale[j];
    }
  }

  const int cap = static_cast<int>(std::min<Index>(q - 1, p));
  const int max_steps =
      options.max_steps > 0 ? options.max_steps
                            : 4 * static_cast<int>(std::min(q, p));

  LassoPath path;
  Vector v = Vector::Zero(p);
  Vector c = phi.transpose() * z;
  double big_c = c.cwiseAbs().maxCoeff();
  const double scale0 = std::max(1.0, big_c);
  const double lambda_floor = 1e-13 * scale0;
  const double gamma_eps = 1e-13 * scale0;

  path.steps.push_back({2.0 * big_c, v, {}, kInf});
  if (big_c <= lambda_floor || cap == 0) return path;

  std::vector<int> active;
  std::vector<char> is_active(static_cast<std::size_t>(p), 0);
  {
    Index j0 = 0;
    c.cwiseAbs().maxCoeff(&j0);
    active.push_back(static_cast<int>(j0));
    is_active[static_cast<std::size_t>(j0)] = 1;
  }

  // A variable whose coefficient just crossed zero sits exactly on the
  // correlation boundary; its zero-travel "re-entry" candidate is the
  // trailing edge of the drop event, not a new event, and taking it walks
  // off the solution path (the direction then moves it against its sign).
  // Ban exactly that candidate until the path has moved.
  int banned = -1;

  int iterations = 0;
  while (iterations++ < max_steps) {
    // Equiangular direction over the active set.
    Matrix phi_a = gather_columns(phi, active);
    Vector s_a(static_cast<Index>(active.size()));
    for (std::size_t i = 0; i < active.size(); ++i)
      s_a[static_cast<Index>(i)] = c[active[i]] >= 0.0 ? 1.0 : -1.0;
    Vector w_a;
    if (!solve_active_gram(phi_a, s_a, w_a)) {
      path.truncated = true;
      break;
    }
    const Vector u = phi_a * w_a;
    const Vector a = phi.transpose() * u;

    // Distance to the next event along the direction.
    double gamma = big_c;  // reaching zero correlation (lambda = 0)
    int entering = -1, leaving = -1;
    for (Index j = 0; j < p; ++j) {
      if (is_active[static_cast<std::size_t>(j)]) continue;
      for (const double g :
           {(big_c - c[j]) / (1.0 - a[j]), (big_c + c[j]) / (1.0 + a[j])}) {
        if (!std::isfinite(g) || g < -gamma_eps) continue;
        const double gc = std::max(g, 0.0);
        if (static_cast<int>(j) == banned && gc <= gamma_eps) continue;
        if (gc < gamma - gamma_eps) {
          gamma = gc;
          entering = static_cast<int>(j);
          leaving = -1;
        }
      }
    }
    for (std::size_t i = 0; i < active.size(); ++i) {
      const double wi = w_a[static_cast<Index>(i)];
      if (wi == 0.0) continue;
      const double g = -v[active[i]] / wi;
      if (g > gamma_eps && g < gamma - gamma_eps) {
        gamma = g;
        leaving = static_cast<int>(i);
        entering = -1;
      }
    }

    for (std::size_t i = 0; i < active.size(); ++i)
      v[active[i]] += gamma * w_a[static_cast<Index>(i)];

    bool record = gamma > gamma_eps;
    if (leaving >= 0) {
      const int j = active[static_cast<std::size_t>(leaving)];
      v[j] = 0.0;
      is_active[static_cast<std::size_t>(j)] = 0;
      active.erase(active.begin() + leaving);
      banned = j;
    } else if (gamma > gamma_eps) {
      banned = -1;  // the path moved; boundary correlations are now interior
    }

    // Fresh residual and correlations; drift-free lambda bookkeeping.
    c = phi.transpose() * (z - phi * v);
    big_c = c.cwiseAbs().maxCoeff();

    // Coalesce events whose lambda collapses onto the previous breakpoint so
    // lambda stays strictly decreasing along the recorded path.
    if (record &&
        2.0 * big_c < path.steps.back().lambda * (1.0 - 1e-12)) {
      std::vector<int> sorted = active;
      std::sort(sorted.begin(), sorted.end());
      path.steps.push_back({2.0 * big_c, v, std::move(sorted), kInf});
    }

    if (entering >= 0) {
      if (static_cast<int>(active.size()) >= cap) break;  // path ends at cap
      is_active[static_cast<std::size_t>(entering)] = 1;
      active.push_back(entering);
    }
    if (big_c <= lambda_floor || active.empty()) break;
  }

  if (options.standardize)
    for (auto& step : path.steps)
      step.coeffs.array() /= col_scale.array();
  return path;
}

Vector coefficients_at(const LassoPath& path, double lambda) {
  require(!path.steps.empty(), ErrorKind::Parameter, "empty path");
  require(lambda >= 0.0, ErrorKind::Parameter, "lambda must be nonnegative");
  const auto& steps = path.steps;
  if (lambda >= steps.front().lambda) return steps.front().coeffs;
  for (std::size_t i = 0; i + 1 < steps.size(); ++i) {
    if (lambda <= steps[i].lambda && lambda >= steps[i + 1].lambda) {
      const double span = steps[i].lambda - steps[i + 1].lambda;
      if (span <= 0.0) return steps[i + 1].coeffs;
      const double t = (steps[i].lambda - lambda) / span;
      return (1.0 - t) * steps[i].coeffs + t * steps[i + 1].coeffs;
    }
  }
  return steps.back().coeffs;
}

double SparseFit::l1_norm() const {
  double s = 0.0;
  for (const auto& [i, x] : coeffs) s += std::abs(x);
  return s;
}

Vector SparseFit::dense(Index p) const {
  Vector v = Vector::Zero(p);
  for (const auto& [i, x] : coeffs) {
    require(static_cast<Index>(i) < p, ErrorKind::Shape,
            "coefficient index out of range");
    v[static_cast<Index>(i)] = x;
  }
  return v;
}

SparseFit loo_select(LassoPath& path, const Matrix& phi, const Vector& z) {
  require(!path.steps.empty(), ErrorKind::Parameter, "empty path");
  const Index q = phi.rows();
  require(z.size() == q, ErrorKind::Shape, "rhs length mismatch");
  const double z_norm = z.norm();

  int best = -1;
  double best_loo = kInf;
  Vector best_beta;

  for (std::size_t si = 0; si < path.steps.size(); ++si) {
    PathStep& step = path.steps[si];
    double loo;
    Vector beta;
    if (step.active.empty()) {
      loo = z.squaredNorm() / static_cast<double>(q);
    } else {
      const Matrix phi_a = gather_columns(phi, step.active);
      Eigen::BDCSVD<Matrix> svd(phi_a,
                                Eigen::ComputeThinU | Eigen::ComputeThinV);
      const Index rank = svd.rank();
      const Matrix u1 = svd.matrixU().leftCols(rank);
      const Vector h = u1.rowwise().squaredNorm();
      if (rank < phi_a.cols() || h.maxCoeff() >= 1.0 - 1e-10) {
        step.loo_error = kInf;  // interpolating / degenerate refit: skipped
        continue;
      }
      beta = svd.solve(z);
      const Vector zhat = u1 * (u1.transpose() * z);
      loo = ((z - zhat).array() / (1.0 - h.array())).square().mean();
    }
    step.loo_error = loo;
    if (loo < best_loo) {
      best_loo = loo;
      best = static_cast<int>(si);
      best_beta = beta;
    }
  }
  require(best >= 0, ErrorKind::Compute, "no admissible step on the path");

  const PathStep& win = path.steps[static_cast<std::size_t>(best)];
  SparseFit fit;
  fit.chosen_lambda = win.lambda;
  fit.loo_error = best_loo;
  Vector resid = z;
  for (std::size_t i = 0; i < win.active.size(); ++i) {
    fit.coeffs.emplace_back(static_cast<std::uint32_t>(win.active[i]),
                            best_beta[static_cast<Index>(i)]);
    resid -= best_beta[static_cast<Index>(i)] * phi.col(win.active[i]);
  }
  std::sort(fit.coeffs.begin(), fit.coeffs.end());
  fit.residual_rel = z_norm > 0.0 ? resid.norm() / z_norm : 0.0;
  return fit;
}

namespace {

// Smaller LOO wins; ties (relative 1e-9) go to the sparser fit, then to
// Legendre, then to listing order.
bool fit_improves(const SparseFit& challenger, const SparseFit& incumbent) {
  const double a = challenger.loo_error, b = incumbent.loo_error;
  const double tol = 1e-9 * std::max({a, b, 1e-300});
  if (a < b - tol) return true;
  if (b < a - tol) return false;
  if (challenger.coeffs.size() != incumbent.coeffs.size())
    return challenger.coeffs.size() < incumbent.coeffs.size();
  return challenger.basis.family == BasisFamily::Legendre &&
         incumbent.basis.family == BasisFamily::Wavelet;
}

}  // namespace

SparseFit fit_singular_vector(const std::vector<double>& xs,
                              const Vector& values,
                              const std::vector<BasisSpec>& candidates,
                              std::vector<FitCandidateReport>* report) {
  require(!xs.empty(), ErrorKind::Parameter, "no samples");
  require(static_cast<Index>(xs.size()) == values.size(), ErrorKind::Shape,
          "sample length mismatch");
  require(!candidates.empty(), ErrorKind::Parameter, "no candidate bases");

  if (report) report->clear();
  bool have_best = false;
  SparseFit best;
  int best_idx = -1;

  for (std::size_t ci = 0; ci < candidates.size(); ++ci) {
    const BasisSpec& spec = candidates[ci];
    const Matrix phi = design_matrix(spec, xs);
    LassoPath path = lars_lasso_path(phi, values);
    SparseFit fit = loo_select(path, phi, values);
    fit.basis = spec;
    if (report) {
      FitCandidateReport rep;
      rep.spec = spec;
      rep.truncated = path.truncated;
      for (const auto& s : path.steps)
        rep.steps.push_back({s.lambda, static_cast<int>(s.active.size()),
                             s.loo_error, s.coeffs.lpNorm<1>()});
      report->push_back(std::move(rep));
    }
    if (!have_best || fit_improves(fit, best)) {
      best = std::move(fit);
      have_best = true;
      best_idx = static_cast<int>(ci);
    }
  }
  if (report) (*report)[static_cast<std::size_t>(best_idx)].selected = true;
  return best;
}

}  // namespace fstk
