#include "fstk/ingest.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <mutex>

#include "fstk/parallel.hpp"
#include "fstk/rng.hpp"

namespace fstk {


PointCloud PointCloud::from_data(Matrix points, Vector values) {
  PointCloud pc;
  pc.points = std::move(points);
  pc.values = std::move(values);
  const int d = pc.dim();
  require(d >= 1 && d <= kMaxOrder, ErrorKind::Shape,
          "point cloud dimension must be in [1, 8]");
  require(pc.points.rows() >= 1, ErrorKind::Data, "point cloud is empty");
  pc.box_lo = pc.points.colwise().minCoeff();
  pc.box_hi = pc.points.colwise().maxCoeff();
  pc.validate();
  return pc;
}

void PointCloud::validate() const {
  require(points.rows() == values.size(), ErrorKind::Shape,
          "point/value count mismatch");
  require(points.rows() >= 1, ErrorKind::Data, "point cloud is empty");
  require(points.cols() >= 1 && points.cols() <= kMaxOrder, ErrorKind::Shape,
          "point cloud dimension must be in [1, 8]");
  require(box_lo.size() == points.cols() && box_hi.size() == points.cols(),
          ErrorKind::Shape, "bounding box dimension mismatch");
  require(points.allFinite(), ErrorKind::Data,
          "point coordinates must be finite");
  require(values.allFinite(), ErrorKind::Data,
          "sample values must be finite");
  for (int k = 0; k < dim(); ++k)
    require(points.col(k).minCoeff() >= box_lo[k] &&
                points.col(k).maxCoeff() <= box_hi[k],
            ErrorKind::Data, "bounding box does not cover the points");
}

Index StructuredGrid::total_size() const {
  Index n = 1;
  for (Index s : sizes) n *= s;
  return n;
}

double StructuredGrid::node(int mode, Index i) const {
  const auto& [lo, hi] = intervals[static_cast<std::size_t>(mode)];
  return lo + (hi - lo) * static_cast<double>(i) /
                  static_cast<double>(sizes[static_cast<std::size_t>(mode)] - 1);
}

std::vector<double> StructuredGrid::coords(int mode) const {
  std::vector<double> c(static_cast<std::size_t>(sizes[mode]));
  for (Index i = 0; i < sizes[static_cast<std::size_t>(mode)]; ++i)
    c[static_cast<std::size_t>(i)] = node(mode, i);
  return c;
}

void StructuredGrid::validate() const {
  require(!sizes.empty() && sizes.size() <= kMaxOrder, ErrorKind::Parameter,
          "grid dimension must be in [1, 8]");
  require(sizes.size() == intervals.size(), ErrorKind::Parameter,
          "grid sizes/intervals mismatch");
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    require(sizes[k] >= 2, ErrorKind::Parameter, "grid sizes must be >= 2");
    require(intervals[k].first < intervals[k].second, ErrorKind::Parameter,
            "grid intervals must be nondegenerate");
  }
}

StructuredGrid StructuredGrid::unit(std::vector<Index> sizes) {
  StructuredGrid g;
  g.sizes = std::move(sizes);
  g.intervals.assign(g.sizes.size(), {0.0, 1.0});
  g.validate();
  return g;
}

PointCloud subsample(const PointCloud& pc, double fraction,
                     std::uint64_t seed) {
  pc.validate();
  require(fraction > 0.0 && fraction <= 1.0, ErrorKind::Parameter,
          "subsample fraction must be in (0, 1]");
  const double target = fraction * static_cast<double>(pc.count());
  require(target >= 1.0, ErrorKind::Parameter,
          "subsample fraction keeps no points");
  const auto k = static_cast<std::uint64_t>(std::llround(target));
  Rng rng(seed);
  const auto idx = rng.sample_without_replacement(
      static_cast<std::uint64_t>(pc.count()), std::max<std::uint64_t>(1, k));
  PointCloud out;
  out.points.resize(static_cast<Index>(idx.size()), pc.dim());
  out.values.resize(static_cast<Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) {
    out.points.row(static_cast<Index>(i)) =
        pc.points.row(static_cast<Index>(idx[i]));
    out.values[static_cast<Index>(i)] = pc.values[static_cast<Index>(idx[i])];
  }
  out.box_lo = pc.box_lo;
  out.box_hi = pc.box_hi;
  return out;
}

namespace {

// Uniform-binning spatial index over the grid box. Bin resolution targets a
// handful of points per bin, capped by the grid cell count, so lookups stay
// O(1) on average while the stop rule below remains valid.
struct SpatialIndex {
  int d;
  std::vector<Index> nbins;       // per mode
  std::vector<double> lo, width;  // per mode (bin width)
  std::vector<std::uint32_t> offsets;  // size prod(nbins)+1
  std::vector<std::uint32_t> items;    // point ids grouped by bin
  double min_width = 0.0;
  double bin_diag = 0.0;

  Index bin_of(int k, double x) const {
    const auto b = static_cast<Index>(std::floor((x - lo[k]) / width[k]));
    return std::min(nbins[k] - 1, std::max<Index>(0, b));
  }
  Index flat(const std::vector<Index>& c) const {
    Index f = 0;
    for (int k = d - 1; k >= 0; --k) f = f * nbins[k] + c[k];
    return f;
  }
};

SpatialIndex build_index(const PointCloud& pc, const StructuredGrid& grid) {
  SpatialIndex ix;
  ix.d = grid.dim();
  ix.nbins.resize(ix.d);
  ix.lo.resize(ix.d);
  ix.width.resize(ix.d);
  // ~4 points per bin, never finer than the grid cells.
  const double per_mode = std::pow(
      std::max(1.0, static_cast<double>(pc.count()) / 4.0), 1.0 / ix.d);
  Index total = 1;
  for (int k = 0; k < ix.d; ++k) {
    const Index cells = grid.sizes[static_cast<std::size_t>(k)] - 1;
    ix.nbins[k] = std::max<Index>(
        1, std::min<Index>(cells, static_cast<Index>(std::llround(per_mode))));
    total *= ix.nbins[k];
  }
  // Keep the bin table bounded; shrink uniformly if it explodes.
  while (total > (Index(1) << 22)) {
    total = 1;
    for (int k = 0; k < ix.d; ++k) {
      ix.nbins[k] = std::max<Index>(1, ix.nbins[k] / 2);
      total *= ix.nbins[k];
    }
  }
  double min_w = std::numeric_limits<double>::infinity();
  double diag2 = 0.0;
  for (int k = 0; k < ix.d; ++k) {
    const auto& [glo, ghi] = grid.intervals[static_cast<std::size_t>(k)];
    // Pad the box so cloud points at (or slightly past) the edge still bin.
    ix.lo[k] = std::min(glo, pc.box_lo[k]);
    const double hi = std::max(ghi, pc.box_hi[k]);
    ix.width[k] = (hi - ix.lo[k]) / static_cast<double>(ix.nbins[k]);
    if (ix.width[k] <= 0.0) ix.width[k] = 1.0;
    min_w = std::min(min_w, ix.width[k]);
    diag2 += ix.width[k] * ix.width[k];
  }
  ix.min_width = min_w;
  ix.bin_diag = std::sqrt(diag2);

  const auto q = static_cast<std::uint32_t>(pc.count());
  std::vector<std::uint32_t> bin_id(q);
  std::vector<std::uint32_t> counts(static_cast<std::size_t>(total) + 1, 0);
  std::vector<Index> c(static_cast<std::size_t>(ix.d));
  for (std::uint32_t i = 0; i < q; ++i) {
    for (int k = 0; k < ix.d; ++k)
      c[static_cast<std::size_t>(k)] = ix.bin_of(k, pc.points(i, k));
    bin_id[i] = static_cast<std::uint32_t>(ix.flat(c));
    ++counts[bin_id[i] + 1];
  }
  for (std::size_t b = 1; b < counts.size(); ++b) counts[b] += counts[b - 1];
  ix.items.resize(q);
  std::vector<std::uint32_t> cursor(counts.begin(), counts.end() - 1);
  for (std::uint32_t i = 0; i < q; ++i) ix.items[cursor[bin_id[i]]++] = i;
  ix.offsets = std::move(counts);
  return ix;
}

// Fixed-size max-heap of (distance^2, id) pairs under lexicographic order, so
// the retained set is the k smallest pairs regardless of insertion order.
struct NeighborHeap {
  std::vector<std::pair<double, std::uint32_t>> heap;
  std::size_t cap;

  explicit NeighborHeap(std::size_t k) : cap(k) { heap.reserve(k); }
  bool full() const { return heap.size() >= cap; }
  double worst() const { return heap.front().first; }
  void push(double d2, std::uint32_t id) {
    const std::pair<double, std::uint32_t> p{d2, id};
    if (heap.size() < cap) {
      heap.push_back(p);
      std::push_heap(heap.begin(), heap.end());
    } else if (p < heap.front()) {
      std::pop_heap(heap.begin(), heap.end());
      heap.back() = p;
      std::push_heap(heap.begin(), heap.end());
    }
  }
};

// Enumerates bins at Chebyshev distance exactly rho from center (clipped to
// the table) without duplicates: one face pair per axis, with lower axes
// restricted to the strict interior.
template <typename Fn>
void for_ring(const SpatialIndex& ix, const std::vector<Index>& center,
              Index rho, Fn&& fn) {
  const int d = ix.d;
  std::vector<Index> c(static_cast<std::size_t>(d));
  if (rho == 0) {
    for (int k = 0; k < d; ++k) c[k] = center[k];
    fn(c);
    return;
  }
  std::vector<Index> lo(static_cast<std::size_t>(d)),
      hi(static_cast<std::size_t>(d));
  for (int axis = 0; axis < d; ++axis) {
    for (int side = 0; side < 2; ++side) {
      const Index fixed = center[axis] + (side == 0 ? -rho : rho);
      if (fixed < 0 || fixed >= ix.nbins[axis]) continue;
      bool empty = false;
      for (int k = 0; k < d; ++k) {
        if (k == axis) {
          lo[k] = hi[k] = fixed;
          continue;
        }
        const Index r = k < axis ? rho - 1 : rho;
        lo[k] = std::max<Index>(0, center[k] - r);
        hi[k] = std::min(ix.nbins[k] - 1, center[k] + r);
        if (lo[k] > hi[k]) empty = true;
      }
      if (empty) continue;
      for (int k = 0; k < d; ++k) c[k] = lo[k];
      for (;;) {
        fn(c);
        int k = 0;
        while (k < d && (k == axis || ++c[k] > hi[k])) {
          if (k != axis) c[k] = lo[k];
          ++k;
        }
        if (k == d) break;
      }
    }
  }
}

}  // namespace

DenseTensor interpolate_to_grid(const PointCloud& pc,
                                const StructuredGrid& grid,
                                const InterpolationOptions& options,
                                InterpolationReport* report) {
  pc.validate();
  grid.validate();
  require(pc.dim() == grid.dim(), ErrorKind::Shape,
          "cloud/grid dimension mismatch");
  require(pc.values.allFinite(), ErrorKind::Data,
          "point cloud values must be finite");
  const int d = grid.dim();
  const int k_neighbors =
      options.neighbors > 0 ? options.neighbors : 2 * d + 2;
  require(options.power > 0.0, ErrorKind::Parameter,
          "IDW power must be positive");

  const SpatialIndex ix = build_index(pc, grid);

  // Exact-hit tolerance is tied to the grid cell diagonal.
  double cell_diag2 = 0.0;
  for (int k = 0; k < d; ++k) {
    const auto& [lo, hi] = grid.intervals[static_cast<std::size_t>(k)];
    const double h = (hi - lo) / static_cast<double>(
                                     grid.sizes[static_cast<std::size_t>(k)] - 1);
    cell_diag2 += h * h;
  }
  const double hit_tol2 = 1e-24 * cell_diag2;

  bool covered = true;
  for (int k = 0; k < d; ++k) {
    const auto& [lo, hi] = grid.intervals[static_cast<std::size_t>(k)];
    if (pc.box_lo[k] < lo || pc.box_hi[k] > hi) covered = false;
  }

  DenseTensor out(grid.sizes);
  const Index n_nodes = out.size();
  std::mutex stats_mutex;
  double max_nearest = 0.0;
  Index n_extrapolated = 0;

  parallel_for(static_cast<std::size_t>(n_nodes), [&](std::size_t begin,
                                                      std::size_t end) {
    std::vector<Index> midx(static_cast<std::size_t>(d));
    std::vector<Index> center(static_cast<std::size_t>(d));
    std::vector<double> y(static_cast<std::size_t>(d));
    double local_max_nearest = 0.0;
    Index local_extrapolated = 0;

    for (std::size_t node = begin; node < end; ++node) {
      Index rem = static_cast<Index>(node);
      for (int k = 0; k < d; ++k) {
        midx[k] = rem % grid.sizes[static_cast<std::size_t>(k)];
        rem /= grid.sizes[static_cast<std::size_t>(k)];
        y[k] = grid.node(k, midx[k]);
        center[k] = ix.bin_of(k, y[k]);
      }

      NeighborHeap heap(static_cast<std::size_t>(k_neighbors));
      Index max_rho = 0;
      for (int k = 0; k < d; ++k)
        max_rho = std::max({max_rho, center[k], ix.nbins[k] - 1 - center[k]});
      for (Index rho = 0;; ++rho) {
        for_ring(ix, center, rho, [&](const std::vector<Index>& c) {
          const Index b = ix.flat(c);
          for (std::uint32_t ii = ix.offsets[static_cast<std::size_t>(b)];
               ii < ix.offsets[static_cast<std::size_t>(b) + 1]; ++ii) {
            const std::uint32_t id = ix.items[ii];
            double d2 = 0.0;
            for (int k = 0; k < d; ++k) {
              const double diff = pc.points(id, k) - y[k];
              d2 += diff * diff;
            }
            heap.push(d2, id);
          }
        });
        // Everything unscanned after ring rho is at least rho*min_width away.
        const double safe = static_cast<double>(rho) * ix.min_width;
        if (heap.full() && heap.worst() <= safe * safe) break;
        if (rho >= max_rho) break;
      }

      // Total order on (distance, id) makes the winner insertion-invariant.
      auto best = heap.heap.front();
      for (const auto& cand : heap.heap) best = std::min(best, cand);
      double value;
      if (best.first < hit_tol2) {
        value = pc.values[best.second];
      } else {
        double wsum = 0.0, vsum = 0.0;
        for (const auto& [d2, id] : heap.heap) {
          const double w = options.power == 2.0
                               ? 1.0 / d2
                               : std::pow(d2, -0.5 * options.power);
          wsum += w;
          vsum += w * pc.values[id];
        }
        value = vsum / wsum;
      }
      out.data()[node] = value;

      const double nearest = std::sqrt(best.first);
      local_max_nearest = std::max(local_max_nearest, nearest);
      if (nearest > ix.bin_diag) ++local_extrapolated;
    }

    std::lock_guard<std::mutex> lock(stats_mutex);
    max_nearest = std::max(max_nearest, local_max_nearest);
    n_extrapolated += local_extrapolated;
  });

  if (report) {
    report->box_covered = covered;
    report->max_nearest_distance = max_nearest;
    report->extrapolated_fraction =
        static_cast<double>(n_extrapolated) / static_cast<double>(n_nodes);
  }
  return out;
}

DenseTensor structured_passthrough(const std::string& path) {
  return read_ften(path);
}

double SynthField::Factor::operator()(double x) const {
  double v = std::cos(M_PI * freq * x + phase);
  if (bump_amp != 0.0) {
    const double t = (x - bump_c) / bump_w;
    v += bump_amp * std::exp(-t * t);
  }
  return v;
}

SynthField::SynthField(SynthKind kind, int d, const SynthParams& params,
                       std::uint64_t seed)
    : kind_(kind), d_(d), params_(params) {
  require(d >= 1 && d <= kMaxOrder, ErrorKind::Parameter,
          "field dimension must be in [1, 8]");
  require(params.terms >= 0 && params.terms <= 16, ErrorKind::Parameter,
          "terms must be in [0, 16]");
  require(params.harmonics >= 0 && params.harmonics <= 16,
          ErrorKind::Parameter, "harmonics must be in [0, 16]");
  require(params.thickness > 0.0, ErrorKind::Parameter,
          "front thickness must be positive");
  Rng rng(seed);
  if (kind == SynthKind::Smooth || kind == SynthKind::Multiscale) {
    for (int t = 0; t < params.terms; ++t) {
      term_amp_.push_back(params.amplitude * (0.5 + 0.5 * rng.uniform_double()) /
                          (1.0 + t));
      std::vector<Factor> fs;
      for (int k = 0; k < d; ++k) {
        Factor f;
        f.freq = 1.0 + 2.0 * rng.uniform_double();
        f.phase = 2.0 * M_PI * rng.uniform_double();
        f.bump_w = 0.15 + 0.2 * rng.uniform_double();
        f.bump_c = rng.uniform_double();
        f.bump_amp = 0.3 * rng.uniform_double();
        fs.push_back(f);
      }
      term_factors_.push_back(std::move(fs));
    }
    if (kind == SynthKind::Multiscale) {
      step_amp_ = params.amplitude * (0.75 + 0.5 * rng.uniform_double());
      step_pos_ =
          static_cast<double>(1 + rng.uniform_index(31)) / 32.0;  // dyadic
      for (int k = 1; k < d; ++k) {
        Factor f{};
        f.freq = 1.0 + rng.uniform_double();
        f.phase = 2.0 * M_PI * rng.uniform_double();
        f.bump_amp = 0.0;
        step_factors_.push_back(f);
      }
    }
  } else {
    for (int h = 0; h < params.harmonics; ++h) {
      harm_coeff_.push_back((2.0 * rng.uniform_double() - 1.0) / (1.0 + h));
      std::vector<double> phases;
      for (int k = 1; k < d; ++k)
        phases.push_back(2.0 * M_PI * rng.uniform_double());
      harm_phase_.push_back(std::move(phases));
    }
  }
}

double SynthField::operator()(const double* y) const {
  if (kind_ == SynthKind::FlameFront) {
    double front = 0.5;
    for (std::size_t h = 0; h < harm_coeff_.size(); ++h) {
      double prod = 1.0;
      for (int k = 1; k < d_; ++k)
        prod *= std::sin(2.0 * M_PI * static_cast<double>(h + 1) * y[k] +
                         harm_phase_[h][static_cast<std::size_t>(k - 1)]);
      front += params_.perturbation * harm_coeff_[h] * prod;
    }
    return 0.5 * (1.0 + std::tanh((front - y[0]) / params_.thickness));
  }
  double v = 1.0;
  for (std::size_t t = 0; t < term_amp_.size(); ++t) {
    double prod = term_amp_[t];
    for (int k = 0; k < d_; ++k)
      prod *= term_factors_[t][static_cast<std::size_t>(k)](y[k]);
    v += prod;
  }
  if (kind_ == SynthKind::Multiscale && y[0] >= step_pos_) {
    double prod = step_amp_;
    for (int k = 1; k < d_; ++k) {
      const Factor& f = step_factors_[static_cast<std::size_t>(k - 1)];
      prod *= 1.0 + 0.5 * std::cos(M_PI * f.freq * y[k] + f.phase);
    }
    v += prod;
  }
  return v;
}

double SynthField::value_at(const std::vector<double>& y) const {
  require(static_cast<int>(y.size()) == d_, ErrorKind::Parameter,
          "point dimension mismatch");
  return (*this)(y.data());
}

double SynthField::front_position(const std::vector<double>& y_rest) const {
  require(kind_ == SynthKind::FlameFront, ErrorKind::Parameter,
          "front position defined only for the flame-front field");
  require(static_cast<int>(y_rest.size()) == d_ - 1, ErrorKind::Parameter,
          "need d-1 transverse coordinates");
  double front = 0.5;
  for (std::size_t h = 0; h < harm_coeff_.size(); ++h) {
    double prod = 1.0;
    for (int k = 1; k < d_; ++k)
      prod *= std::sin(2.0 * M_PI * static_cast<double>(h + 1) *
                           y_rest[static_cast<std::size_t>(k - 1)] +
                       harm_phase_[h][static_cast<std::size_t>(k - 1)]);
    front += params_.perturbation * harm_coeff_[h] * prod;
  }
  return front;
}

DenseTensor synth_field_grid(SynthKind kind, const StructuredGrid& grid,
                             const SynthParams& params, std::uint64_t seed) {
  grid.validate();
  const SynthField field(kind, grid.dim(), params, seed);
  DenseTensor out(grid.sizes);
  const int d = grid.dim();
  parallel_for(static_cast<std::size_t>(out.size()),
               [&](std::size_t begin, std::size_t end) {
                 std::vector<double> y(static_cast<std::size_t>(d));
                 for (std::size_t node = begin; node < end; ++node) {
                   Index rem = static_cast<Index>(node);
                   for (int k = 0; k < d; ++k) {
                     const Index i =
                         rem % grid.sizes[static_cast<std::size_t>(k)];
                     rem /= grid.sizes[static_cast<std::size_t>(k)];
                     y[static_cast<std::size_t>(k)] = grid.node(k, i);
                   }
                   out.data()[node] = field(y.data());
                 }
               });
  return out;
}

PointCloud synth_field_cloud(SynthKind kind, int d, Index count,
                             const SynthParams& params, std::uint64_t seed) {
  require(count >= 1, ErrorKind::Parameter, "point count must be positive");
  const SynthField field(kind, d, params, seed);
  Rng rng(mix_seed(seed, 0x706f696e74ull));  // separate point stream
  Matrix pts(count, d);
  Vector vals(count);
  std::vector<double> y(static_cast<std::size_t>(d));
  for (Index q = 0; q < count; ++q) {
    for (int k = 0; k < d; ++k) {
      y[static_cast<std::size_t>(k)] = rng.uniform_double();
      pts(q, k) = y[static_cast<std::size_t>(k)];
    }
    vals[q] = field(y.data());
  }
  PointCloud pc = PointCloud::from_data(std::move(pts), std::move(vals));
  // Synthetic clouds live on the unit box by construction.
  pc.box_lo = Vector::Zero(d);
  pc.box_hi = Vector::Ones(d);
  return pc;
}

namespace {

void append_double(std::string& s, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  s += buf;
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= line.size()) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

double parse_double(const std::string& s, const std::string& context) {
  const char* b = s.data();
  const char* e = s.data() + s.size();
  while (b < e && (*b == ' ' || *b == '\t')) ++b;
  const char* tail = e;
  while (tail > b && (tail[-1] == ' ' || tail[-1] == '\t' || tail[-1] == '\r'))
    --tail;
  double v = 0.0;
  const auto [p, ec] = std::from_chars(b, tail, v);
  require(ec == std::errc() && p == tail, ErrorKind::Decode,
          "bad numeric field in " + context + ": '" + s + "'");
  return v;
}

constexpr char kFptcMagic[4] = {'F', 'P', 'T', 'C'};
constexpr std::uint32_t kFptcVersion = 1;

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

void write_cloud_csv(const PointCloud& pc, const std::string& path) {
  pc.validate();
  std::ofstream os(path, std::ios::trunc);
  require(static_cast<bool>(os), ErrorKind::Io, "cannot open for write: " + path);
  std::string line;
  for (int k = 0; k < pc.dim(); ++k) line += "y" + std::to_string(k) + ",";
  line += "value\n";
  os << line;
  for (Index q = 0; q < pc.count(); ++q) {
    line.clear();
    for (int k = 0; k < pc.dim(); ++k) {
      append_double(line, pc.points(q, k));
      line += ',';
    }
    append_double(line, pc.values[q]);
    line += '\n';
    os << line;
  }
  require(static_cast<bool>(os), ErrorKind::Io, "write failed: " + path);
}

PointCloud read_cloud_csv(const std::string& path) {
  std::ifstream is(path);
  require(static_cast<bool>(is), ErrorKind::Io, "cannot open: " + path);
  std::string line;
  require(static_cast<bool>(std::getline(is, line)), ErrorKind::Decode,
          "empty CSV: " + path);
  auto header = split_line(line);
  require(header.size() >= 2, ErrorKind::Decode, "bad CSV header: " + path);
  const int d = static_cast<int>(header.size()) - 1;
  require(d <= kMaxOrder, ErrorKind::Decode, "too many CSV columns: " + path);

  std::vector<double> coords, values;
  while (std::getline(is, line)) {
    if (line.empty() || line == "\r") continue;
    const auto fields = split_line(line);
    require(static_cast<int>(fields.size()) == d + 1, ErrorKind::Decode,
            "CSV row width mismatch in " + path);
    for (int k = 0; k < d; ++k)
      coords.push_back(parse_double(fields[static_cast<std::size_t>(k)], path));
    values.push_back(parse_double(fields[static_cast<std::size_t>(d)], path));
  }
  const auto q = static_cast<Index>(values.size());
  require(q >= 1, ErrorKind::Decode, "CSV has no data rows: " + path);
  Matrix pts(q, d);
  Vector vals(q);
  for (Index i = 0; i < q; ++i) {
    for (int k = 0; k < d; ++k)
      pts(i, k) = coords[static_cast<std::size_t>(i * d + k)];
    vals[i] = values[static_cast<std::size_t>(i)];
  }
  return PointCloud::from_data(std::move(pts), std::move(vals));
}

Matrix read_points_csv(const std::string& path, int expected_dim) {
  std::ifstream is(path);
  require(static_cast<bool>(is), ErrorKind::Io, "cannot open: " + path);
  std::string line;
  require(static_cast<bool>(std::getline(is, line)), ErrorKind::Decode,
          "empty CSV: " + path);
  auto header = split_line(line);
  // Trailing `value` column, if present, is ignored.
  int d = static_cast<int>(header.size());
  std::string last = header.back();
  while (!last.empty() && (last.back() == '\r' || last.back() == ' '))
    last.pop_back();
  const bool has_value = last == "value";
  if (has_value) --d;
  require(d == expected_dim, ErrorKind::Parameter,
          "points file has dimension " + std::to_string(d) + ", expected " +
              std::to_string(expected_dim));
  std::vector<double> coords;
  Index q = 0;
  while (std::getline(is, line)) {
    if (line.empty() || line == "\r") continue;
    const auto fields = split_line(line);
    require(static_cast<int>(fields.size()) == d + (has_value ? 1 : 0),
            ErrorKind::Decode, "CSV row width mismatch in " + path);
    for (int k = 0; k < d; ++k)
      coords.push_back(parse_double(fields[static_cast<std::size_t>(k)], path));
    ++q;
  }
  Matrix pts(q, d);
  for (Index i = 0; i < q; ++i)
    for (int k = 0; k < d; ++k)
      pts(i, k) = coords[static_cast<std::size_t>(i * d + k)];
  return pts;
}

void write_cloud_binary(const PointCloud& pc, const std::string& path) {
  pc.validate();
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(os), ErrorKind::Io, "cannot open for write: " + path);
  os.write(kFptcMagic, 4);
  write_pod(os, kFptcVersion);
  write_pod(os, static_cast<std::uint32_t>(pc.dim()));
  write_pod(os, static_cast<std::uint64_t>(pc.count()));
  for (int k = 0; k < pc.dim(); ++k) write_pod(os, pc.box_lo[k]);
  for (int k = 0; k < pc.dim(); ++k) write_pod(os, pc.box_hi[k]);
  // Point-major coordinates.
  for (Index q = 0; q < pc.count(); ++q)
    for (int k = 0; k < pc.dim(); ++k) write_pod(os, pc.points(q, k));
  os.write(reinterpret_cast<const char*>(pc.values.data()),
           static_cast<std::streamsize>(pc.count() * sizeof(double)));
  require(static_cast<bool>(os), ErrorKind::Io, "write failed: " + path);
}

PointCloud read_cloud_binary(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  require(static_cast<bool>(is), ErrorKind::Io, "cannot open: " + path);
  char magic[4];
  is.read(magic, 4);
  require(static_cast<bool>(is) && std::memcmp(magic, kFptcMagic, 4) == 0,
          ErrorKind::Decode, "not a FPTC file: " + path);
  std::uint32_t version = 0, d = 0;
  std::uint64_t q = 0;
  require(read_pod(is, version) && version == kFptcVersion, ErrorKind::Decode,
          "unsupported FPTC version");
  require(read_pod(is, d) && d >= 1 && d <= kMaxOrder, ErrorKind::Decode,
          "bad FPTC dimension");
  require(read_pod(is, q) && q >= 1 && q < (1ull << 40), ErrorKind::Decode,
          "bad FPTC point count");
  PointCloud pc;
  pc.box_lo.resize(d);
  pc.box_hi.resize(d);
  for (std::uint32_t k = 0; k < d; ++k)
    require(read_pod(is, pc.box_lo[k]), ErrorKind::Decode, "FPTC truncated");
  for (std::uint32_t k = 0; k < d; ++k)
    require(read_pod(is, pc.box_hi[k]), ErrorKind::Decode, "FPTC truncated");
  pc.points.resize(static_cast<Index>(q), d);
  for (std::uint64_t i = 0; i < q; ++i)
    for (std::uint32_t k = 0; k < d; ++k)
      require(read_pod(is, pc.points(static_cast<Index>(i), k)),
              ErrorKind::Decode, "FPTC truncated");
  pc.values.resize(static_cast<Index>(q));
  is.read(reinterpret_cast<char*>(pc.values.data()),
          static_cast<std::streamsize>(q * sizeof(double)));
  require(static_cast<bool>(is), ErrorKind::Decode, "FPTC truncated");
  is.peek();
  require(is.eof(), ErrorKind::Decode, "FPTC trailing bytes: " + path);
  pc.validate();
  return pc;
}

PointCloud read_cloud(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  require(static_cast<bool>(is), ErrorKind::Io, "cannot open: " + path);
  char magic[4] = {0, 0, 0, 0};
  is.read(magic, 4);
  is.close();
  if (std::memcmp(magic, kFptcMagic, 4) == 0) return read_cloud_binary(path);
  return read_cloud_csv(path);
}

}  // namespace fstk
