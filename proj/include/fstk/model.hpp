#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "fstk/lars.hpp"
#include "fstk/sthosvd.hpp"
#include "fstk/tensor.hpp"

namespace fstk {

// One functional singular vector: a sparse expansion on its basis.
struct ModeFunction {
  SparseFit fit;
  bool flagged = false;  // residual above the assembly ceiling

  double eval(double x) const;
};

struct ModelMetadata {
  std::vector<Index> grid_sizes;  // source grid sizes I_k (0 = unstructured)
  double epsilon = 0.0;           // requested decomposition precision
  double achieved_error = 0.0;    // decomposition-reported relative error
  int flagged_fits = 0;
  std::string provenance;         // configuration echo; never timestamps
};

// The compressed artifact: core tensor alpha plus, per mode, r_k sparse
// functional singular vectors. Evaluating at y costs
// O(sum_k n_k r_k + prod_k r_k).
class FunctionalSparseTuckerModel {
 public:
  FunctionalSparseTuckerModel() = default;
  FunctionalSparseTuckerModel(DenseTensor core,
                              std::vector<std::vector<ModeFunction>> modes,
                              ModelMetadata metadata);

  int order() const { return core_.order(); }
  std::vector<Index> ranks() const { return core_.shape(); }
  const DenseTensor& core() const { return core_; }
  const std::vector<std::vector<ModeFunction>>& modes() const { return modes_; }
  const ModelMetadata& metadata() const { return metadata_; }
  std::pair<double, double> domain(int mode) const;

  // Replaces the core with a same-shape tensor (randomized re-estimation).
  FunctionalSparseTuckerModel with_core(DenseTensor core) const;

  // Per-mode function values at a single coordinate: v[j] = w_j(x).
  Vector mode_values(int mode, double x) const;

 private:
  void validate_structure() const;

  DenseTensor core_;
  std::vector<std::vector<ModeFunction>> modes_;
  ModelMetadata metadata_;
};

struct AssembleOptions {
  double residual_ceiling = 0.5;  // fits above this get flagged (not fatal)
  double epsilon = 0.0;           // echoed into metadata
  std::string provenance;
};

// Per-(mode, function) fitting diagnostics from assembly.
struct AssembleReport {
  struct Entry {
    int mode;
    int index;
    std::vector<FitCandidateReport> candidates;
  };
  std::vector<Entry> fits;
};

// Fits every factor column of the decomposition over its grid coordinates
// against the candidate bases (domains are adjusted to the grid interval)
// and packages the winning sparse expansions with the core.
FunctionalSparseTuckerModel assemble(
    const TuckerDecomposition& dec,
    const std::vector<std::vector<double>>& grids,
    const std::vector<std::vector<BasisSpec>>& candidates,
    const AssembleOptions& options = {}, AssembleReport* report = nullptr);

double evaluate(const FunctionalSparseTuckerModel& model,
                const std::vector<double>& y);
// points is Q x d; parallel over rows, thread-count invariant.
Vector evaluate_batch(const FunctionalSparseTuckerModel& model,
                      const Matrix& points);

struct StorageCost {
  std::uint64_t coeff_count = 0;  // prod r_k + total nonzeros
  std::uint64_t value_bytes = 0;  // 8 * coeff_count
  std::uint64_t index_bytes = 0;  // 4 * total nonzeros
  std::uint64_t total_bytes() const { return value_bytes + index_bytes; }
};
StorageCost storage_cost(const FunctionalSparseTuckerModel& model);

// original_point_count * 8 bytes over the model's total byte cost. With
// include_indices = false, only coefficient values are counted (the
// convention used for headline ratios).
double compression_ratio(const FunctionalSparseTuckerModel& model,
                         std::uint64_t original_point_count,
                         bool include_indices = true);

// FSTK container (magic + version + JSON metadata + binary payload); the
// round trip is bit-exact. See docs/format.md.
void save_model(const FunctionalSparseTuckerModel& model,
                const std::string& path);
FunctionalSparseTuckerModel load_model(const std::string& path);

}  // namespace fstk
