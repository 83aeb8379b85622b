#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "fstk/basis.hpp"
#include "fstk/tensor.hpp"

namespace fstk {

// One breakpoint of the piecewise-linear regularization path for
//   min_v ||z - Phi v||_2^2 + lambda ||v||_1
// (note: no 1/2 on the quadratic term, so lambda = 2 max|Phi^T r| at v = 0).
struct PathStep {
  double lambda = 0.0;
  Vector coeffs;            // dense length P; support == active
  std::vector<int> active;  // ascending indices of nonzero coefficients
  double loo_error = std::numeric_limits<double>::quiet_NaN();
};

struct LassoPath {
  std::vector<PathStep> steps;
  bool truncated = false;  // active Gram went rank deficient; path cut short
};

struct LarsOptions {
  int max_steps = 0;          // 0 -> 4 * min(Q, P)
  bool standardize = false;   // rescale columns to unit norm internally
};

// Lasso-modified least-angle regression. The first step is the null model at
// lambda_max; variables may enter and leave; the path ends at lambda = 0, when
// the active set reaches min(Q-1, P), or at the step cap.
LassoPath lars_lasso_path(const Matrix& phi, const Vector& z,
                          const LarsOptions& options = {});

// Piecewise-linear interpolation of the path at an arbitrary lambda.
Vector coefficients_at(const LassoPath& path, double lambda);

struct SparseFit {
  BasisSpec basis;  // meaningful when produced by fit_singular_vector
  std::vector<std::pair<std::uint32_t, double>> coeffs;  // sorted by index
  double chosen_lambda = 0.0;
  double loo_error = 0.0;
  double residual_rel = 0.0;

  double l1_norm() const;
  Vector dense(Index p) const;
};

// Scores every path step by the leave-one-out shortcut
//   e_loo = (1/Q) sum_q ((z_q - zhat_q) / (1 - H_qq))^2,
// H the hat matrix of the least-squares refit on that step's support, writes
// the scores back into the path, and returns the winning support with its
// refit coefficients. Steps with any H_qq ~ 1 are skipped as overfit.
SparseFit loo_select(LassoPath& path, const Matrix& phi, const Vector& z);

// Per-candidate diagnostics recorded while fitting one singular vector.
struct FitCandidateReport {
  BasisSpec spec;
  bool selected = false;
  bool truncated = false;
  // One row per path step: (lambda, active size, loo error, l1 norm).
  struct Step {
    double lambda;
    int active_size;
    double loo_error;
    double l1;
  };
  std::vector<Step> steps;
};

// Fits one singular vector sampled at xs: builds the design for every
// candidate spec, runs the lasso path + LOO selection, and keeps the
// candidate with the smallest LOO error (ties: fewer nonzeros, then
// Legendre, then listed order).
SparseFit fit_singular_vector(const std::vector<double>& xs,
                              const Vector& values,
                              const std::vector<BasisSpec>& candidates,
                              std::vector<FitCandidateReport>* report = nullptr);

}  // namespace fstk
