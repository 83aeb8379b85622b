#include "fstk/tensor.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "fstk/parallel.hpp"

static_assert(std::endian::native == std::endian::little,
              "file formats assume a little-endian host");

namespace fstk {

namespace {

Index checked_size(const std::vector<Index>& shape) {
  require(!shape.empty() && shape.size() <= kMaxOrder, ErrorKind::Shape,
          "tensor order must be in [1, 8]");
  Index n = 1;
  for (Index s : shape) {
    require(s >= 1, ErrorKind::Shape, "tensor dims must be positive");
    require(n <= std::numeric_limits<Index>::max() / s, ErrorKind::Shape,
            "tensor size overflow");
    n *= s;
  }
  return n;
}

}  // namespace

DenseTensor::DenseTensor(std::vector<Index> shape) : shape_(std::move(shape)) {
  data_.assign(static_cast<std::size_t>(checked_size(shape_)), 0.0);
}

DenseTensor::DenseTensor(std::vector<Index> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  require(checked_size(shape_) == static_cast<Index>(data_.size()),
          ErrorKind::Shape, "tensor data length does not match shape");
}

Index DenseTensor::dim(int mode) const {
  require(mode >= 0 && mode < order(), ErrorKind::Parameter,
          "mode out of range");
  return shape_[mode];
}

Index DenseTensor::stride(int mode) const {
  require(mode >= 0 && mode < order(), ErrorKind::Parameter,
          "mode out of range");
  Index s = 1;
  for (int k = 0; k < mode; ++k) s *= shape_[k];
  return s;
}

Index DenseTensor::offset_of(const std::vector<Index>& index) const {
  require(static_cast<int>(index.size()) == order(), ErrorKind::Parameter,
          "index order mismatch");
  Index off = 0;
  Index stride = 1;
  for (int k = 0; k < order(); ++k) {
    require(index[k] >= 0 && index[k] < shape_[k], ErrorKind::Parameter,
            "index out of range");
    off += index[k] * stride;
    stride *= shape_[k];
  }
  return off;
}

Matrix unfold(const DenseTensor& t, int mode) {
  const Index rows = t.dim(mode);
  const Index cols = t.size() / rows;
  const Index stride = t.stride(mode);
  const Index n_outer = t.size() / (stride * rows);
  Matrix m(rows, cols);
  const double* src = t.data();
  // Column c of the unfolding pairs (inner, outer) = (c % stride, c / stride);
  // the source block for a fixed outer is a stride x rows column-major matrix.
  for (Index outer = 0; outer < n_outer; ++outer) {
    Eigen::Map<const Matrix> block(src + outer * stride * rows, stride, rows);
    m.middleCols(outer * stride, stride) = block.transpose();
  }
  return m;
}

DenseTensor fold(const Matrix& m, int mode, const std::vector<Index>& shape) {
  DenseTensor t(shape);
  require(mode >= 0 && mode < t.order(), ErrorKind::Parameter,
          "mode out of range");
  require(m.rows() == t.dim(mode) && m.cols() == t.size() / t.dim(mode),
          ErrorKind::Shape, "fold: matrix shape does not match tensor shape");
  const Index rows = m.rows();
  const Index stride = t.stride(mode);
  const Index n_outer = t.size() / (stride * rows);
  double* dst = t.data();
  for (Index outer = 0; outer < n_outer; ++outer) {
    Eigen::Map<Matrix> block(dst + outer * stride * rows, stride, rows);
    block = m.middleCols(outer * stride, stride).transpose();
  }
  return t;
}

DenseTensor mode_product(const DenseTensor& t, const Matrix& m, int mode) {
  require(mode >= 0 && mode < t.order(), ErrorKind::Parameter,
          "mode out of range");
  require(m.cols() == t.dim(mode), ErrorKind::Shape,
          "mode_product: matrix cols must equal tensor dim");
  std::vector<Index> out_shape = t.shape();
  out_shape[mode] = m.rows();
  DenseTensor out(out_shape);

  const Index stride = t.stride(mode);
  const Index in_dim = t.dim(mode);
  const Index out_dim = m.rows();
  const Index n_outer = t.size() / (stride * in_dim);

  if (mode == 0) {
    // Contiguous case: one GEMM over the whole buffer.
    Eigen::Map<const Matrix> a(t.data(), in_dim, t.size() / in_dim);
    Eigen::Map<Matrix> r(out.data(), out_dim, out.size() / out_dim);
    r.noalias() = m * a;
    return out;
  }
  parallel_for(static_cast<std::size_t>(n_outer),
               [&](std::size_t begin, std::size_t end) {
                 for (std::size_t outer = begin; outer < end; ++outer) {
                   Eigen::Map<const Matrix> block(
                       t.data() + outer * stride * in_dim, stride, in_dim);
                   Eigen::Map<Matrix> rblock(
                       out.data() + outer * stride * out_dim, stride, out_dim);
                   rblock.noalias() = block * m.transpose();
                 }
               });
  return out;
}

double fro_norm(const DenseTensor& t) { return t.vec().norm(); }

double relative_error(const DenseTensor& u, const DenseTensor& v) {
  require(u.shape() == v.shape(), ErrorKind::Shape,
          "relative_error: shape mismatch");
  const double nrm = fro_norm(u);
  require(nrm > 0.0, ErrorKind::Data,
          "relative_error: reference tensor has zero norm");
  return (u.vec() - v.vec()).norm() / nrm;
}

namespace {

constexpr char kFtenMagic[4] = {'F', 'T', 'E', 'N'};
constexpr std::uint32_t kFtenVersion = 1;

template <typename T>
void write_pod(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
bool read_pod(std::istream& is, T& v) {
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  return static_cast<bool>(is);
}

}  // namespace

void write_ften(const DenseTensor& t, const std::string& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(os), ErrorKind::Io, "cannot open for write: " + path);
  os.write(kFtenMagic, 4);
  write_pod(os, kFtenVersion);
  write_pod(os, static_cast<std::uint32_t>(t.order()));
  for (Index s : t.shape()) write_pod(os, static_cast<std::uint64_t>(s));
  write_pod(os, static_cast<std::uint8_t>(0));  // dtype 0 = float64
  os.write(reinterpret_cast<const char*>(t.data()),
           static_cast<std::streamsize>(t.size() * sizeof(double)));
  require(static_cast<bool>(os), ErrorKind::Io, "write failed: " + path);
}

DenseTensor read_ften(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  require(static_cast<bool>(is), ErrorKind::Io, "cannot open: " + path);
  char magic[4];
  is.read(magic, 4);
  require(static_cast<bool>(is) && std::memcmp(magic, kFtenMagic, 4) == 0,
          ErrorKind::Decode, "not a FTEN file: " + path);
  std::uint32_t version = 0, order = 0;
  require(read_pod(is, version) && version == kFtenVersion, ErrorKind::Decode,
          "unsupported FTEN version");
  require(read_pod(is, order) && order >= 1 && order <= kMaxOrder,
          ErrorKind::Decode, "bad FTEN order");
  std::vector<Index> shape(order);
  Index total = 1;
  for (std::uint32_t k = 0; k < order; ++k) {
    std::uint64_t s = 0;
    require(read_pod(is, s) && s >= 1, ErrorKind::Decode, "bad FTEN dim");
    shape[k] = static_cast<Index>(s);
    require(total <= std::numeric_limits<Index>::max() / shape[k],
            ErrorKind::Decode, "FTEN size overflow");
    total *= shape[k];
  }
  std::uint8_t dtype = 0;
  require(read_pod(is, dtype) && (dtype == 0 || dtype == 1), ErrorKind::Decode,
          "bad FTEN dtype");
  std::vector<double> data(static_cast<std::size_t>(total));
  if (dtype == 0) {
    is.read(reinterpret_cast<char*>(data.data()),
            static_cast<std::streamsize>(total * sizeof(double)));
  } else {
    // 32-bit payloads are accepted at the ingestion boundary and widened.
    std::vector<float> raw(static_cast<std::size_t>(total));
    is.read(reinterpret_cast<char*>(raw.data()),
            static_cast<std::streamsize>(total * sizeof(float)));
    for (Index i = 0; i < total; ++i) data[i] = raw[i];
  }
  require(static_cast<bool>(is), ErrorKind::Decode,
          "FTEN payload truncated: " + path);
  is.peek();
  require(is.eof(), ErrorKind::Decode, "FTEN trailing bytes: " + path);
  return DenseTensor(std::move(shape), std::move(data));
}

}  // namespace fstk
