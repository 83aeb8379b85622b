#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "fstk/error.hpp"

namespace fstk {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

inline constexpr int kMaxOrder = 8;

// Dense d-way array, d <= 8. Entries are linearized with the first mode
// fastest: element (i_0, ..., i_{d-1}) lives at flat offset
//   i_0 + I_0 * (i_1 + I_1 * (i_2 + ...)).
// Equivalently, vec() stacks mode-0 fibers; the mode-0 unfolding is a
// zero-copy column-major view of the buffer.
class DenseTensor {
 public:
  DenseTensor() = default;
  explicit DenseTensor(std::vector<Index> shape);
  DenseTensor(std::vector<Index> shape, std::vector<double> data);

  int order() const { return static_cast<int>(shape_.size()); }
  const std::vector<Index>& shape() const { return shape_; }
  Index dim(int mode) const;
  Index size() const { return static_cast<Index>(data_.size()); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& storage() { return data_; }
  const std::vector<double>& storage() const { return data_; }

  // Product of dims below `mode`: the flat distance between neighbors along
  // `mode`.
  Index stride(int mode) const;

  Index offset_of(const std::vector<Index>& index) const;
  double at(const std::vector<Index>& index) const {
    return data_[offset_of(index)];
  }
  double& at(const std::vector<Index>& index) {
    return data_[offset_of(index)];
  }

  Eigen::Map<Vector> vec() { return Eigen::Map<Vector>(data_.data(), size()); }
  Eigen::Map<const Vector> vec() const {
    return Eigen::Map<const Vector>(data_.data(), size());
  }

 private:
  std::vector<Index> shape_;
  std::vector<double> data_;
};

// Mode-k unfolding, I_k x (prod of the other dims). Columns enumerate the
// remaining modes in increasing order with the lower ones fastest.
Matrix unfold(const DenseTensor& t, int mode);

// Inverse of unfold for the given shape.
DenseTensor fold(const Matrix& m, int mode, const std::vector<Index>& shape);

// Tensor-times-matrix along `mode`: requires m.cols() == t.dim(mode); the
// result has dim(mode) == m.rows().
DenseTensor mode_product(const DenseTensor& t, const Matrix& m, int mode);

double fro_norm(const DenseTensor& t);

// ||u - v||_F / ||u||_F; throws if u has zero norm.
double relative_error(const DenseTensor& u, const DenseTensor& v);

// Dense tensor container format (FTEN), little-endian; see docs/format.md.
void write_ften(const DenseTensor& t, const std::string& path);
DenseTensor read_ften(const std::string& path);

}  // namespace fstk
