#pragma once

#include <vector>

#include "fstk/tensor.hpp"

namespace fstk {

struct SthosvdOptions {
  enum class ModeOrder {
    Increasing,      // 0, 1, ..., d-1 (default)
    DecreasingSize,  // largest dim first, ties by mode index
  };
  ModeOrder mode_order = ModeOrder::Increasing;
};

struct TuckerDecomposition {
  DenseTensor core;             // shape = ranks
  std::vector<Matrix> factors;  // factors[k] is I_k x r_k, orthonormal columns
  // Relative Frobenius error of the implied reconstruction; exact for
  // sequential truncation (square root of the summed discarded eigenvalues
  // over ||u||^2).
  double achieved_error = 0.0;

  std::vector<Index> ranks() const {
    std::vector<Index> r(factors.size());
    for (std::size_t k = 0; k < factors.size(); ++k) r[k] = factors[k].cols();
    return r;
  }
};

// Sequentially truncated HOSVD with relative Frobenius target epsilon in
// (0, 1). The error budget epsilon^2 ||u||^2 is split equally across modes;
// per mode, the Gram matrix of the current unfolding is eigendecomposed and
// the smallest rank whose discarded eigenvalue sum fits the budget is kept
// (ties extended so equal eigenvalues are never split). Guarantees
// relative_error(u, reconstruct(...)) <= epsilon.
TuckerDecomposition sthosvd(const DenseTensor& u, double epsilon,
                            const SthosvdOptions& options = {});

DenseTensor reconstruct(const TuckerDecomposition& dec);

// All |core| entries sorted descending: the energy decay profile used by the
// diagnostics output.
std::vector<double> singular_value_decay(const TuckerDecomposition& dec);

}  // namespace fstk
