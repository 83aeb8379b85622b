#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "fstk/ingest.hpp"
#include "fstk/model.hpp"
#include "fstk/tensor.hpp"

namespace fstk {

enum class MixingTransform : std::uint8_t { Dct = 0, Wht = 1, Fft = 2 };

struct SketchConfig {
  std::uint64_t seed = 0;
  // Seeded uniform pre-subsample feeding the sketch; 0 means "all points".
  std::uint64_t working_subset = std::uint64_t(1) << 20;
  // Sketch rows S; 0 means the default ceil(2.5 * R).
  std::uint64_t sample_rows = 0;
  MixingTransform transform = MixingTransform::Dct;
  // Held-out fraction used for before/after residual reporting.
  double validation_fraction = 0.05;
};

// Row q = [ prod_k w^{(k)}_{j_k}(y^q_k) ] over all core multi-indices j in
// the core linearization order (mode-0 index fastest), so
// rows * vec(core) == evaluate_batch. Materializes Q x R; use reestimate_core
// for large Q, which streams columns instead.
Matrix build_design_rows(const FunctionalSparseTuckerModel& model,
                         const Matrix& points);

struct SketchedSystem {
  Matrix a;  // S x R (2S x R for the complex-FFT mixer: Re block, Im block)
  Vector b;
  std::uint64_t padded_rows = 0;
};

// Sign-flip + fast orthonormal mixing + uniform without-replacement row
// sampling rescaled by sqrt(Q_pad/S). Deterministic for a fixed seed. Columns
// are zero-padded to the next power of two before mixing.
SketchedSystem sketch(const Matrix& w, const Vector& u,
                      const SketchConfig& cfg);

// The mixed (sign-flipped + transformed) matrix itself, without sampling —
// diagnostics only, materializes Q_pad x R (2 Q_pad x R for FFT).
Matrix mixed_matrix(const Matrix& w, const SketchConfig& cfg);

// Squared row norms of the thin-SVD left factor; they sum to rank(w).
Vector leverage_scores(const Matrix& w);

struct ReestimateResult {
  FunctionalSparseTuckerModel model;
  double residual_before = 0.0;  // relative, on the validation subset
  double residual_after = 0.0;
  std::uint64_t sample_rows = 0;
  std::uint64_t working_rows = 0;
  bool rank_deficient = false;
  bool held_out = true;  // false when the dataset was too small to hold out
};

// Re-estimates the core against scattered data by solving the sketched
// least-squares system min_alpha ||M W alpha - M u||_2 with a QR solve
// (minimum-norm fallback with a warning flag when rank deficient).
ReestimateResult reestimate_core(const FunctionalSparseTuckerModel& model,
                                 const PointCloud& dataset,
                                 const SketchConfig& cfg);

// Relative change of the estimated core between consecutive sample counts:
// entries (S_i, ||a_{i+1} - a_i|| / ||a_{i+1}||). Sample subsets are nested
// across S for a fixed seed, isolating the effect of S itself.
// cfg.sample_rows is ignored; the listed counts are used instead.
std::vector<std::pair<std::uint64_t, double>> self_convergence(
    const FunctionalSparseTuckerModel& model, const PointCloud& dataset,
    const std::vector<std::uint64_t>& s_values, const SketchConfig& cfg);

}  // namespace fstk
