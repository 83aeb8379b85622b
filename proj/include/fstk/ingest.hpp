#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "fstk/tensor.hpp"

namespace fstk {

// Scattered samples of a scalar field: Q points in d dimensions.
struct PointCloud {
  Matrix points;  // Q x d
  Vector values;  // Q
  Vector box_lo;  // d
  Vector box_hi;  // d

  int dim() const { return static_cast<int>(points.cols()); }
  Index count() const { return points.rows(); }

  // Builds the bounding box from the data and validates.
  static PointCloud from_data(Matrix points, Vector values);
  void validate() const;
};

// Equispaced nodes over per-mode intervals.
struct StructuredGrid {
  std::vector<Index> sizes;                        // I_k >= 2
  std::vector<std::pair<double, double>> intervals;

  int dim() const { return static_cast<int>(sizes.size()); }
  Index total_size() const;
  double node(int mode, Index i) const;
  std::vector<double> coords(int mode) const;
  void validate() const;

  static StructuredGrid unit(std::vector<Index> sizes);
};

// Seeded uniform sample without replacement keeping the original point order.
PointCloud subsample(const PointCloud& pc, double fraction, std::uint64_t seed);

struct InterpolationOptions {
  int neighbors = 0;    // 0 -> 2d + 2
  double power = 2.0;   // inverse-distance exponent
};

struct InterpolationReport {
  bool box_covered = true;          // grid box covers the cloud box
  double max_nearest_distance = 0;  // over grid nodes, to the closest sample
  double extrapolated_fraction = 0; // nodes whose nearest sample is farther
                                    // than one spatial-index bin diagonal
};

// Scattered-to-grid transfer by k-nearest-neighbor inverse-distance weighting
// over a uniform-binning spatial index. A sample within 1e-12 of a node (in
// bin-diagonal units) supplies its value exactly.
DenseTensor interpolate_to_grid(const PointCloud& pc,
                                const StructuredGrid& grid,
                                const InterpolationOptions& options = {},
                                InterpolationReport* report = nullptr);

// Reads a tensor that is already structured (FTEN), skipping interpolation.
DenseTensor structured_passthrough(const std::string& path);

enum class SynthKind { Smooth, FlameFront, Multiscale };

struct SynthParams {
  int terms = 3;             // separable smooth terms
  double amplitude = 1.0;
  double thickness = 0.05;   // flame-front tanh width
  int harmonics = 3;         // front perturbation harmonics
  double perturbation = 0.08;
};

// A deterministic analytic field on [0,1]^d; the reference the synthetic
// datasets (and their tests) evaluate against.
//   Smooth:     1 + sum of `terms` separable smooth products (exact low rank).
//   FlameFront: 0.5 (1 + tanh((front(y_rest) - y_0)/thickness)) with a seeded
//               low-frequency perturbation of the front location.
//   Multiscale: smooth part plus a separable term with a step factor at a
//               dyadic location along mode 0.
class SynthField {
 public:
  SynthField(SynthKind kind, int d, const SynthParams& params,
             std::uint64_t seed);

  double operator()(const double* y) const;
  double value_at(const std::vector<double>& y) const;

  // Flame-front location along mode 0 at transverse coordinates y_rest
  // (d-1 entries). Parameter error for other kinds.
  double front_position(const std::vector<double>& y_rest) const;

  SynthKind kind() const { return kind_; }
  int dim() const { return d_; }

 private:
  SynthKind kind_;
  int d_ = 0;
  SynthParams params_;
  // smooth / multiscale machinery
  struct Factor {
    double freq, phase, bump_w, bump_c, bump_amp;
    double operator()(double x) const;
  };
  std::vector<double> term_amp_;
  std::vector<std::vector<Factor>> term_factors_;  // [term][mode]
  // flame front perturbation
  std::vector<double> harm_coeff_;
  std::vector<std::vector<double>> harm_phase_;    // [harmonic][mode-1]
  // multiscale step term
  double step_amp_ = 0.0;
  double step_pos_ = 0.5;
  std::vector<Factor> step_factors_;               // modes 1..d-1
};

DenseTensor synth_field_grid(SynthKind kind, const StructuredGrid& grid,
                             const SynthParams& params, std::uint64_t seed);
PointCloud synth_field_cloud(SynthKind kind, int d, Index count,
                             const SynthParams& params, std::uint64_t seed);

// Point-cloud formats; see docs/format.md.
void write_cloud_csv(const PointCloud& pc, const std::string& path);
PointCloud read_cloud_csv(const std::string& path);
void write_cloud_binary(const PointCloud& pc, const std::string& path);
PointCloud read_cloud_binary(const std::string& path);
PointCloud read_cloud(const std::string& path);  // dispatch on magic/extension

// Coordinate-only CSV (same header layout, `value` column optional and
// ignored); Q may be zero.
Matrix read_points_csv(const std::string& path, int expected_dim);

}  // namespace fstk
