#include "fstk/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "fstk/basis.hpp"
#include "fstk/error.hpp"
#include "fstk/model.hpp"
#include "fstk/parallel.hpp"
#include "fstk/rng.hpp"
#include "fstk/sthosvd.hpp"

namespace fstk {

namespace {

using nlohmann::json;

constexpr std::uint64_t kHoldoutTag = 0x686f6c64ull;    // validation holdout
constexpr std::uint64_t kSubsampleTag = 0x66726163ull;  // training subsample
constexpr std::uint64_t kGridValTag = 0x67726964ull;    // grid-node validation
constexpr std::uint64_t kLeverageTag = 0x6c657673ull;   // leverage row subset

std::string fmt(double v, const char* spec = "%.6g") {
  char buf[40];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::string fmt17(double v) { return fmt(v, "%.17g"); }

std::string read_magic(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorKind::Io, "cannot open " + path);
  char m[4] = {0, 0, 0, 0};
  in.read(m, 4);
  return std::string(m, m + in.gcount());
}

struct Dataset {
  std::optional<DenseTensor> tensor;
  std::optional<PointCloud> cloud;
};

Dataset read_dataset(const std::string& path) {
  Dataset d;
  if (read_magic(path) == "FTEN")
    d.tensor = structured_passthrough(path);
  else
    d.cloud = read_cloud(path);
  return d;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorKind::Io, "cannot write " + path);
  return out;
}

void finish_out(std::ofstream& out, const std::string& path) {
  out.flush();
  require(out.good(), ErrorKind::Io, "write failed: " + path);
}

std::string shape_text(const std::vector<Index>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += " x ";
    s += std::to_string(v[i]);
  }
  return s;
}

json index_array(const std::vector<Index>& v) {
  json a = json::array();
  for (const auto x : v) a.push_back(static_cast<std::int64_t>(x));
  return a;
}

// A scattered view of a structured tensor: one sample per node, on the
// model's domain. Lets grid datasets feed the scattered-data paths.
PointCloud cloud_from_grid_tensor(const DenseTensor& tensor,
                                  const FunctionalSparseTuckerModel& model) {
  const int d = tensor.order();
  require(d == model.order(), ErrorKind::Shape,
          "dataset order does not match the model");
  StructuredGrid g;
  g.sizes = tensor.shape();
  for (int k = 0; k < d; ++k) g.intervals.push_back(model.domain(k));
  g.validate();

  PointCloud pc;
  const Index n = tensor.size();
  pc.points.resize(n, d);
  pc.values = tensor.vec();
  std::vector<Index> idx(static_cast<std::size_t>(d), 0);
  for (Index f = 0; f < n; ++f) {
    for (int k = 0; k < d; ++k)
      pc.points(f, k) = g.node(k, idx[static_cast<std::size_t>(k)]);
    for (int k = 0; k < d; ++k) {  // mode-0 index moves fastest
      auto& i = idx[static_cast<std::size_t>(k)];
      if (++i < g.sizes[static_cast<std::size_t>(k)]) break;
      i = 0;
    }
  }
  pc.box_lo.resize(d);
  pc.box_hi.resize(d);
  for (int k = 0; k < d; ++k) {
    pc.box_lo[k] = g.intervals[static_cast<std::size_t>(k)].first;
    pc.box_hi[k] = g.intervals[static_cast<std::size_t>(k)].second;
  }
  pc.validate();
  return pc;
}

PointCloud load_cloud_for_model(const std::string& path,
                                const FunctionalSparseTuckerModel& model) {
  Dataset ds = read_dataset(path);
  if (ds.tensor) return cloud_from_grid_tensor(*ds.tensor, model);
  ds.cloud->validate();
  require(ds.cloud->dim() == model.order(), ErrorKind::Shape,
          "dataset dimension does not match the model");
  return std::move(*ds.cloud);
}

// Fails with a per-point report when coordinates leave the model's domain
// (beyond the evaluation slack).
void check_points_in_domain(const FunctionalSparseTuckerModel& model,
                            const Matrix& pts) {
  const int d = model.order();
  std::size_t bad = 0;
  std::string first;
  for (int k = 0; k < d; ++k) {
    const auto [lo, hi] = model.domain(k);
    const double slack = 1e-12 * (hi - lo);
    for (Index q = 0; q < pts.rows(); ++q) {
      const double x = pts(q, k);
      if (std::isfinite(x) && x >= lo - slack && x <= hi + slack) continue;
      if (bad == 0)
        first = "point " + std::to_string(q) + ", mode " + std::to_string(k) +
                ", value " + fmt(x) + ", domain [" + fmt(lo) + ", " + fmt(hi) +
                "]";
      ++bad;
    }
  }
  if (bad > 0)
    fail(ErrorKind::Domain, std::to_string(bad) +
                                " point(s) outside the model domain (first: " +
                                first + ")");
}

void write_values_csv(const std::string& path, const Matrix& pts,
                      const Vector& vals) {
  auto out = open_out(path);
  const int d = static_cast<int>(pts.cols());
  for (int k = 0; k < d; ++k) out << "y" << k << ",";
  out << "value\n";
  for (Index q = 0; q < pts.rows(); ++q) {
    for (int k = 0; k < d; ++k) out << fmt17(pts(q, k)) << ",";
    out << fmt17(vals[q]) << "\n";
  }
  finish_out(out, path);
}

// 50 uniform bins on [0, max]; every score lands in a bin, so the counts sum
// to the score count.
void write_histogram(const std::string& path, const Vector& scores) {
  constexpr int kBins = 50;
  const double top = scores.size() > 0 ? scores.maxCoeff() : 0.0;
  const double width = top > 0.0 ? top / kBins : 1.0;
  std::vector<std::uint64_t> counts(kBins, 0);
  for (Index i = 0; i < scores.size(); ++i) {
    const auto b = static_cast<std::int64_t>(std::floor(scores[i] / width));
    ++counts[static_cast<std::size_t>(
        std::clamp<std::int64_t>(b, 0, kBins - 1))];
  }
  auto out = open_out(path);
  out << "bin_lo,bin_hi,count\n";
  for (int b = 0; b < kBins; ++b)
    out << fmt17(b * width) << "," << fmt17((b + 1) * width) << ","
        << counts[static_cast<std::size_t>(b)] << "\n";
  finish_out(out, path);
}

double relative_gap(const Vector& approx, const Vector& exact) {
  const double denom = exact.norm();
  const double diff = (approx - exact).norm();
  return denom > 0.0 ? diff / denom : diff;
}

std::string compress_provenance(const RunConfig& cfg,
                                const std::vector<Index>& grid_sizes) {
  json j;
  j["command"] = "compress";
  j["epsilon"] = cfg.tucker_eps;
  j["grid"] = index_array(grid_sizes);
  j["input"] = cfg.input;
  j["legendre_degree"] = cfg.legendre_p;
  j["residual_ceiling"] = cfg.residual_ceiling;
  j["seed"] = cfg.seed;
  j["subsample_fraction"] = cfg.subsample_frac;
  j["validation_fraction"] = cfg.validation_frac;
  j["wavelet_degree"] = cfg.wavelet_p;
  j["wavelet_resolution"] = cfg.wavelet_s;
  return j.dump();
}

struct PreparedInput {
  DenseTensor tensor;
  StructuredGrid grid;
  Matrix val_points;  // cloud inputs: held-out validation samples
  Vector val_values;
  bool has_holdout = false;
  std::uint64_t original_count = 0;
  json info;
};

PreparedInput prepare_compress_input(const RunConfig& cfg, std::ostream& log) {
  PreparedInput out;
  Dataset ds = read_dataset(cfg.input);

  if (ds.tensor) {
    out.tensor = std::move(*ds.tensor);
    require(out.tensor.order() >= 1, ErrorKind::Data, "empty tensor input");
    if (!cfg.grid.empty())
      require(cfg.grid == out.tensor.shape(), ErrorKind::Parameter,
              "--grid must match the structured input shape");
    out.grid = StructuredGrid::unit(out.tensor.shape());
    out.original_count = static_cast<std::uint64_t>(out.tensor.size());
    out.info["kind"] = "structured";
    log << "input: structured tensor " << shape_text(out.tensor.shape())
        << " from " << cfg.input << "\n";
    return out;
  }

  PointCloud cloud = std::move(*ds.cloud);
  cloud.validate();
  const int d = cloud.dim();
  require(!cfg.grid.empty(), ErrorKind::Parameter,
          "scattered input needs --grid with one size per mode");
  require(static_cast<int>(cfg.grid.size()) == d, ErrorKind::Parameter,
          "--grid has " + std::to_string(cfg.grid.size()) +
              " sizes for a " + std::to_string(d) + "-dimensional dataset");
  out.grid.sizes = cfg.grid;
  for (int k = 0; k < d; ++k)
    out.grid.intervals.emplace_back(cloud.box_lo[k], cloud.box_hi[k]);
  out.grid.validate();
  out.original_count = static_cast<std::uint64_t>(cloud.count());
  log << "input: " << cloud.count() << " scattered samples in " << d
      << " dimensions from " << cfg.input << "\n";

  // Hold out validation points before any subsampling so the reported
  // residual is measured on data the fit never saw.
  const auto q = static_cast<std::uint64_t>(cloud.count());
  std::vector<char> is_val(q, 0);
  std::uint64_t n_val = 0;
  if (cfg.validation_frac > 0.0 && q >= 2) {
    n_val = static_cast<std::uint64_t>(
        std::llround(cfg.validation_frac * static_cast<double>(q)));
    n_val = std::clamp<std::uint64_t>(n_val, 1, std::min<std::uint64_t>(
                                                    q - 1, 100000));
    Rng rng(mix_seed(cfg.seed, kHoldoutTag));
    for (const auto i : rng.sample_without_replacement(q, n_val))
      is_val[i] = 1;
  }
  PointCloud train;
  train.points.resize(static_cast<Index>(q - n_val), d);
  train.values.resize(static_cast<Index>(q - n_val));
  train.box_lo = cloud.box_lo;  // keep the full-data box
  train.box_hi = cloud.box_hi;
  out.val_points.resize(static_cast<Index>(n_val), d);
  out.val_values.resize(static_cast<Index>(n_val));
  Index ti = 0, vi = 0;
  for (std::uint64_t i = 0; i < q; ++i) {
    const auto r = static_cast<Index>(i);
    if (is_val[i]) {
      out.val_points.row(vi) = cloud.points.row(r);
      out.val_values[vi++] = cloud.values[r];
    } else {
      train.points.row(ti) = cloud.points.row(r);
      train.values[ti++] = cloud.values[r];
    }
  }
  out.has_holdout = n_val > 0;

  if (cfg.subsample_frac < 1.0) {
    train = subsample(train, cfg.subsample_frac,
                      mix_seed(cfg.seed, kSubsampleTag));
    log << "subsampled to " << train.count() << " points (fraction "
        << fmt(cfg.subsample_frac) << ")\n";
  }

  InterpolationReport irep;
  out.tensor = interpolate_to_grid(train, out.grid, {}, &irep);
  log << "interpolated onto a " << shape_text(out.grid.sizes)
      << " grid (max nearest-sample distance " << fmt(irep.max_nearest_distance)
      << ", extrapolated fraction " << fmt(irep.extrapolated_fraction)
      << ")\n";

  out.info["kind"] = "scattered";
  out.info["points"] = q;
  out.info["held_out"] = n_val;
  out.info["training_points"] = static_cast<std::uint64_t>(train.count());
  out.info["interpolation"] = {{"box_covered", irep.box_covered},
                               {"max_nearest_distance",
                                irep.max_nearest_distance},
                               {"extrapolated_fraction",
                                irep.extrapolated_fraction}};
  return out;
}

}  // namespace

json run_compress(const RunConfig& cfg, std::ostream& log) {
  set_max_threads(cfg.threads);
  require(!cfg.input.empty(), ErrorKind::Parameter, "missing input path");
  require(!cfg.output.empty(), ErrorKind::Parameter,
          "missing output path (-o)");

  PreparedInput in = prepare_compress_input(cfg, log);
  const int d = in.tensor.order();

  TuckerDecomposition dec = sthosvd(in.tensor, cfg.tucker_eps);
  log << "decomposition ranks " << shape_text(dec.ranks())
      << ", relative truncation error " << fmt(dec.achieved_error) << "\n";

  std::vector<std::vector<double>> grids(static_cast<std::size_t>(d));
  std::vector<std::vector<BasisSpec>> candidates(static_cast<std::size_t>(d));
  for (int k = 0; k < d; ++k) {
    grids[static_cast<std::size_t>(k)] = in.grid.coords(k);
    candidates[static_cast<std::size_t>(k)] = {
        BasisSpec::legendre(cfg.legendre_p),
        BasisSpec::wavelet(cfg.wavelet_s, cfg.wavelet_p)};
  }
  AssembleOptions opts;
  opts.residual_ceiling = cfg.residual_ceiling;
  opts.epsilon = cfg.tucker_eps;
  opts.provenance = compress_provenance(cfg, in.grid.sizes);
  FunctionalSparseTuckerModel model = assemble(dec, grids, candidates, opts);
  save_model(model, cfg.output);

  json modes = json::array();
  int flagged = 0;
  for (int k = 0; k < d; ++k) {
    const auto& fns = model.modes()[static_cast<std::size_t>(k)];
    std::uint64_t nnz = 0;
    int legendre = 0, mode_flagged = 0;
    double worst = 0.0;
    for (const auto& f : fns) {
      nnz += f.fit.coeffs.size();
      legendre += f.fit.basis.family == BasisFamily::Legendre ? 1 : 0;
      mode_flagged += f.flagged ? 1 : 0;
      worst = std::max(worst, f.fit.residual_rel);
    }
    flagged += mode_flagged;
    modes.push_back({{"rank", fns.size()},
                     {"nnz", nnz},
                     {"legendre_fits", legendre},
                     {"wavelet_fits", fns.size() - legendre},
                     {"max_fit_residual", worst},
                     {"flagged", mode_flagged}});
    log << "mode " << k << ": rank " << fns.size() << ", " << nnz
        << " coefficients (" << legendre << " smooth fits, "
        << fns.size() - static_cast<std::size_t>(legendre)
        << " multiresolution), worst fit residual " << fmt(worst) << "\n";
  }
  if (flagged > 0)
    log << "warning: " << flagged
        << " fit(s) above the residual ceiling; kept and flagged\n";

  // Validation: held-out samples when the input was scattered, a seeded
  // subset of grid nodes otherwise.
  double val_residual;
  std::uint64_t val_count;
  std::string val_kind;
  if (in.has_holdout) {
    val_residual = relative_gap(evaluate_batch(model, in.val_points),
                                in.val_values);
    val_count = static_cast<std::uint64_t>(in.val_points.rows());
    val_kind = "held_out_points";
  } else {
    const auto total = static_cast<std::uint64_t>(in.tensor.size());
    const std::uint64_t n = std::min<std::uint64_t>(total, 100000);
    std::vector<std::uint64_t> pick;
    if (n == total) {
      pick.resize(total);
      for (std::uint64_t i = 0; i < total; ++i) pick[i] = i;
    } else {
      Rng rng(mix_seed(cfg.seed, kGridValTag));
      pick = rng.sample_without_replacement(total, n);
    }
    Matrix pts(static_cast<Index>(n), d);
    Vector ref(static_cast<Index>(n));
    for (std::uint64_t r = 0; r < n; ++r) {
      std::uint64_t rem = pick[r];
      for (int k = 0; k < d; ++k) {
        const auto sz =
            static_cast<std::uint64_t>(in.grid.sizes[static_cast<std::size_t>(k)]);
        pts(static_cast<Index>(r), k) =
            in.grid.node(k, static_cast<Index>(rem % sz));
        rem /= sz;
      }
      ref[static_cast<Index>(r)] = in.tensor.vec()[static_cast<Index>(pick[r])];
    }
    val_residual = relative_gap(evaluate_batch(model, pts), ref);
    val_count = n;
    val_kind = "grid_nodes";
  }
  log << "validation residual " << fmt(val_residual) << " on " << val_count
      << " " << (val_kind == "held_out_points" ? "held-out points"
                                               : "grid nodes")
      << "\n";

  const StorageCost cost = storage_cost(model);
  const double ratio = compression_ratio(model, in.original_count, true);
  const double ratio_values =
      compression_ratio(model, in.original_count, false);
  log << "storage: " << cost.coeff_count << " coefficients, "
      << cost.total_bytes() << " bytes; compression ratio " << fmt(ratio)
      << " (values only: " << fmt(ratio_values) << ")\n";
  log << "wrote " << cfg.output << "\n";

  json summary;
  summary["command"] = "compress";
  summary["input"] = cfg.input;
  summary["input_info"] = in.info;
  summary["output"] = cfg.output;
  summary["grid"] = index_array(in.grid.sizes);
  summary["epsilon"] = cfg.tucker_eps;
  summary["ranks"] = index_array(dec.ranks());
  summary["tucker_residual"] = dec.achieved_error;
  summary["modes"] = modes;
  summary["flagged_fits"] = flagged;
  summary["storage"] = {{"coefficients", cost.coeff_count},
                        {"value_bytes", cost.value_bytes},
                        {"index_bytes", cost.index_bytes},
                        {"total_bytes", cost.total_bytes()}};
  summary["original_points"] = in.original_count;
  summary["compression_ratio"] = ratio;
  summary["compression_ratio_values_only"] = ratio_values;
  summary["validation"] = {{"kind", val_kind},
                           {"points", val_count},
                           {"residual", val_residual}};
  summary["seed"] = cfg.seed;
  return summary;
}

json run_reestimate(const RunConfig& cfg, std::ostream& log) {
  set_max_threads(cfg.threads);
  require(!cfg.input.empty(), ErrorKind::Parameter, "missing model path");
  require(!cfg.data_file.empty(), ErrorKind::Parameter,
          "missing dataset (--data)");
  require(!cfg.output.empty(), ErrorKind::Parameter,
          "missing output path (-o)");

  const FunctionalSparseTuckerModel model = load_model(cfg.input);
  const PointCloud data = load_cloud_for_model(cfg.data_file, model);
  log << "model " << cfg.input << ": core " << shape_text(model.ranks())
      << "; dataset " << data.count() << " points\n";

  SketchConfig sk = cfg.sketch;
  sk.seed = cfg.seed;
  const ReestimateResult res = reestimate_core(model, data, sk);
  save_model(res.model, cfg.output);

  log << "sketched " << res.working_rows << " working rows down to "
      << res.sample_rows << " sampled rows\n";
  if (res.rank_deficient)
    log << "warning: sketched system rank deficient; minimum-norm core\n";
  log << "validation residual " << fmt(res.residual_before) << " -> "
      << fmt(res.residual_after)
      << (res.held_out ? " (held-out points)" : " (in-sample)") << "\n";
  log << "wrote " << cfg.output << "\n";

  json summary;
  summary["command"] = "reestimate";
  summary["model"] = cfg.input;
  summary["data"] = cfg.data_file;
  summary["output"] = cfg.output;
  summary["core_size"] = static_cast<std::int64_t>(model.core().size());
  summary["ranks"] = index_array(model.ranks());
  summary["sample_rows"] = res.sample_rows;
  summary["working_rows"] = res.working_rows;
  summary["residual_before"] = res.residual_before;
  summary["residual_after"] = res.residual_after;
  summary["rank_deficient"] = res.rank_deficient;
  summary["held_out"] = res.held_out;
  summary["seed"] = cfg.seed;
  return summary;
}

json run_reconstruct(const RunConfig& cfg, std::ostream& log) {
  set_max_threads(cfg.threads);
  require(!cfg.input.empty(), ErrorKind::Parameter, "missing model path");
  require(!cfg.output.empty(), ErrorKind::Parameter,
          "missing output path (-o)");
  const FunctionalSparseTuckerModel model = load_model(cfg.input);
  const int d = model.order();

  json summary;
  summary["command"] = "reconstruct";
  summary["model"] = cfg.input;
  summary["output"] = cfg.output;

  if (!cfg.points_file.empty()) {
    const Matrix pts = read_points_csv(cfg.points_file, d);
    check_points_in_domain(model, pts);
    Vector vals(pts.rows());
    if (pts.rows() > 0) vals = evaluate_batch(model, pts);
    write_values_csv(cfg.output, pts, vals);
    log << "evaluated " << pts.rows() << " point(s) -> " << cfg.output
        << "\n";
    summary["points"] = static_cast<std::int64_t>(pts.rows());
    if (vals.size() > 0) {
      summary["value_min"] = vals.minCoeff();
      summary["value_max"] = vals.maxCoeff();
    }
    return summary;
  }

  std::vector<Index> sizes = cfg.grid;
  if (sizes.empty()) {
    sizes = model.metadata().grid_sizes;
    bool known = !sizes.empty();
    for (const auto s : sizes) known = known && s >= 2;
    require(known, ErrorKind::Parameter,
            "model records no source grid; give --grid or --points");
  }
  require(static_cast<int>(sizes.size()) == d, ErrorKind::Parameter,
          "--grid needs one size per mode");
  StructuredGrid g;
  g.sizes = sizes;
  for (int k = 0; k < d; ++k) g.intervals.push_back(model.domain(k));
  g.validate();

  const Index n = g.total_size();
  Matrix pts(n, d);
  std::vector<Index> idx(static_cast<std::size_t>(d), 0);
  for (Index f = 0; f < n; ++f) {
    for (int k = 0; k < d; ++k)
      pts(f, k) = g.node(k, idx[static_cast<std::size_t>(k)]);
    for (int k = 0; k < d; ++k) {
      auto& i = idx[static_cast<std::size_t>(k)];
      if (++i < g.sizes[static_cast<std::size_t>(k)]) break;
      i = 0;
    }
  }
  const Vector vals = evaluate_batch(model, pts);
  write_ften(DenseTensor(sizes, std::vector<double>(
                                    vals.data(), vals.data() + vals.size())),
             cfg.output);
  log << "evaluated the " << shape_text(sizes) << " grid -> " << cfg.output
      << "\n";
  summary["grid"] = index_array(sizes);
  summary["points"] = static_cast<std::int64_t>(n);
  summary["value_min"] = vals.minCoeff();
  summary["value_max"] = vals.maxCoeff();
  return summary;
}

json run_slice(const RunConfig& cfg, std::ostream& log) {
  set_max_threads(cfg.threads);
  require(!cfg.input.empty(), ErrorKind::Parameter, "missing model path");
  require(!cfg.output.empty(), ErrorKind::Parameter,
          "missing output path (-o)");
  const FunctionalSparseTuckerModel model = load_model(cfg.input);
  const int d = model.order();
  const int mx = cfg.slice_mode_x;
  const int my = cfg.slice_mode_y;
  require(mx >= 0 && mx < d && my >= 0 && my < d, ErrorKind::Parameter,
          "slice modes must name existing modes");
  require(mx != my, ErrorKind::Parameter, "slice modes must differ");

  std::vector<double> fixed(static_cast<std::size_t>(d), 0.0);
  std::vector<char> have(static_cast<std::size_t>(d), 0);
  have[static_cast<std::size_t>(mx)] = have[static_cast<std::size_t>(my)] = 1;
  for (const auto& [m, v] : cfg.slice_fixed) {
    require(m >= 0 && m < d, ErrorKind::Parameter,
            "fixed mode " + std::to_string(m) + " does not exist");
    require(m != mx && m != my, ErrorKind::Parameter,
            "mode " + std::to_string(m) + " is a free slice mode");
    require(!have[static_cast<std::size_t>(m)], ErrorKind::Parameter,
            "mode " + std::to_string(m) + " fixed twice");
    const auto [lo, hi] = model.domain(m);
    require(v >= lo - 1e-12 * (hi - lo) && v <= hi + 1e-12 * (hi - lo),
            ErrorKind::Domain,
            "fixed value for mode " + std::to_string(m) +
                " outside the model domain [" + fmt(lo) + ", " + fmt(hi) +
                "]");
    have[static_cast<std::size_t>(m)] = 1;
    fixed[static_cast<std::size_t>(m)] = v;
  }
  for (int k = 0; k < d; ++k)
    require(have[static_cast<std::size_t>(k)], ErrorKind::Parameter,
            "missing fixed value for mode " + std::to_string(k));

  const auto& gsz = model.metadata().grid_sizes;
  const auto default_size = [&](int mode) -> Index {
    const auto m = static_cast<std::size_t>(mode);
    return m < gsz.size() && gsz[m] >= 2 ? gsz[m] : 128;
  };
  const Index w = cfg.slice_width > 0 ? cfg.slice_width : default_size(mx);
  const Index h = cfg.slice_height > 0 ? cfg.slice_height : default_size(my);
  require(w >= 2 && h >= 2, ErrorKind::Parameter,
          "slice resolution must be at least 2 per axis");

  const auto [xlo, xhi] = model.domain(mx);
  const auto [ylo, yhi] = model.domain(my);
  Matrix pts(w * h, d);
  for (Index i = 0; i < h; ++i) {
    const double y =
        ylo + (yhi - ylo) * static_cast<double>(i) / static_cast<double>(h - 1);
    for (Index j = 0; j < w; ++j) {
      const double x = xlo + (xhi - xlo) * static_cast<double>(j) /
                                 static_cast<double>(w - 1);
      const Index row = i * w + j;
      for (int k = 0; k < d; ++k)
        pts(row, k) = fixed[static_cast<std::size_t>(k)];
      pts(row, mx) = x;
      pts(row, my) = y;
    }
  }
  const Vector vals = evaluate_batch(model, pts);
  const double vmin = vals.minCoeff();
  const double vmax = vals.maxCoeff();

  std::string pgm_path = cfg.output;
  std::string csv_path;
  if (pgm_path.size() >= 4 && pgm_path.ends_with(".pgm")) {
    csv_path = pgm_path.substr(0, pgm_path.size() - 4) + ".csv";
  } else {
    csv_path = pgm_path + ".csv";
    pgm_path += ".pgm";
  }

  // 8-bit grayscale, min-max normalized; a constant slice maps to mid-gray.
  {
    auto out = open_out(pgm_path);
    out << "P5\n" << w << " " << h << "\n255\n";
    std::string row(static_cast<std::size_t>(w), '\0');
    for (Index i = 0; i < h; ++i) {
      for (Index j = 0; j < w; ++j) {
        long g = 128;
        if (vmax > vmin)
          g = std::lround((vals[i * w + j] - vmin) / (vmax - vmin) * 255.0);
        row[static_cast<std::size_t>(j)] =
            static_cast<char>(std::clamp(g, 0l, 255l));
      }
      out.write(row.data(), static_cast<std::streamsize>(row.size()));
    }
    finish_out(out, pgm_path);
  }
  {
    auto out = open_out(csv_path);
    out << "xi,yi,x,y,value\n";
    for (Index i = 0; i < h; ++i) {
      const double y = ylo + (yhi - ylo) * static_cast<double>(i) /
                                 static_cast<double>(h - 1);
      for (Index j = 0; j < w; ++j) {
        const double x = xlo + (xhi - xlo) * static_cast<double>(j) /
                                   static_cast<double>(w - 1);
        out << j << "," << i << "," << fmt17(x) << "," << fmt17(y) << ","
            << fmt17(vals[i * w + j]) << "\n";
      }
    }
    finish_out(out, csv_path);
  }
  log << "sliced modes (" << mx << ", " << my << ") at " << w << " x " << h
      << "; values in [" << fmt(vmin) << ", " << fmt(vmax) << "]\n";
  log << "wrote " << pgm_path << " and " << csv_path << "\n";

  json fixed_json = json::array();
  for (const auto& [m, v] : cfg.slice_fixed) fixed_json.push_back({m, v});
  json summary;
  summary["command"] = "slice";
  summary["model"] = cfg.input;
  summary["modes"] = {mx, my};
  summary["fixed"] = fixed_json;
  summary["width"] = static_cast<std::int64_t>(w);
  summary["height"] = static_cast<std::int64_t>(h);
  summary["value_min"] = vmin;
  summary["value_max"] = vmax;
  summary["pgm"] = pgm_path;
  summary["csv"] = csv_path;
  return summary;
}

json run_diagnostics(const RunConfig& cfg, std::ostream& log) {
  set_max_threads(cfg.threads);
  require(!cfg.input.empty(), ErrorKind::Parameter, "missing model path");
  require(!cfg.output.empty(), ErrorKind::Parameter,
          "missing output directory (-o)");
  const FunctionalSparseTuckerModel model = load_model(cfg.input);
  const int d = model.order();
  std::error_code ec;
  std::filesystem::create_directories(cfg.output, ec);
  require(!ec, ErrorKind::Io, "cannot create " + cfg.output);
  const auto path_in_dir = [&](const char* name) {
    return (std::filesystem::path(cfg.output) / name).string();
  };

  json summary;
  summary["command"] = "diagnostics";
  summary["model"] = cfg.input;
  summary["output"] = cfg.output;

  {
    std::vector<double> decay(
        model.core().vec().data(),
        model.core().vec().data() + model.core().size());
    for (auto& v : decay) v = std::abs(v);
    std::sort(decay.begin(), decay.end(), std::greater<>());
    auto out = open_out(path_in_dir("decay.csv"));
    out << "index,value\n";
    for (std::size_t i = 0; i < decay.size(); ++i)
      out << i << "," << fmt17(decay[i]) << "\n";
    finish_out(out, path_in_dir("decay.csv"));
    summary["decay_csv"] = path_in_dir("decay.csv");
    log << "wrote " << path_in_dir("decay.csv") << " (" << decay.size()
        << " entries)\n";
  }
  {
    auto out = open_out(path_in_dir("fits.csv"));
    out << "mode,index,family,degree,resolution,nnz,lambda,loo,residual,l1,"
           "flagged\n";
    for (int k = 0; k < d; ++k) {
      const auto& fns = model.modes()[static_cast<std::size_t>(k)];
      for (std::size_t j = 0; j < fns.size(); ++j) {
        const auto& f = fns[j].fit;
        out << k << "," << j << ","
            << (f.basis.family == BasisFamily::Legendre ? "legendre"
                                                        : "wavelet")
            << "," << f.basis.degree << "," << f.basis.resolution << ","
            << f.coeffs.size() << "," << fmt17(f.chosen_lambda) << ","
            << fmt17(f.loo_error) << "," << fmt17(f.residual_rel) << ","
            << fmt17(f.l1_norm()) << "," << (fns[j].flagged ? 1 : 0) << "\n";
      }
    }
    finish_out(out, path_in_dir("fits.csv"));
    summary["fits_csv"] = path_in_dir("fits.csv");
    log << "wrote " << path_in_dir("fits.csv") << "\n";
  }

  if (cfg.data_file.empty()) {
    log << "no dataset (--data); leverage and self-convergence skipped\n";
    return summary;
  }

  const PointCloud data = load_cloud_for_model(cfg.data_file, model);
  const Index r_total = model.core().size();
  const auto q = static_cast<std::uint64_t>(data.count());
  SketchConfig sk = cfg.sketch;
  sk.seed = cfg.seed;

  {
    const std::uint64_t rows = std::min<std::uint64_t>(
        cfg.leverage_rows > 0 ? cfg.leverage_rows : q, q);
    require(rows >= static_cast<std::uint64_t>(r_total), ErrorKind::Parameter,
            "dataset too small for leverage scores (need at least " +
                std::to_string(r_total) + " rows)");
    Matrix pts(static_cast<Index>(rows), d);
    if (rows == q) {
      pts = data.points;
    } else {
      Rng rng(mix_seed(cfg.seed, kLeverageTag));
      const auto pick = rng.sample_without_replacement(q, rows);
      for (std::size_t i = 0; i < pick.size(); ++i)
        pts.row(static_cast<Index>(i)) =
            data.points.row(static_cast<Index>(pick[i]));
    }
    const Matrix w = build_design_rows(model, pts);
    const Vector pre = leverage_scores(w);
    const Matrix mixed = mixed_matrix(w, sk);
    const Vector post = leverage_scores(mixed);
    write_histogram(path_in_dir("leverage_pre.csv"), pre);
    write_histogram(path_in_dir("leverage_post.csv"), post);
    const double pre_mean = pre.mean();
    const double post_mean = post.mean();
    const double pre_ratio = pre_mean > 0 ? pre.maxCoeff() / pre_mean : 0.0;
    const double post_ratio =
        post_mean > 0 ? post.maxCoeff() / post_mean : 0.0;
    summary["leverage"] = {
        {"rows", rows},
        {"mixed_rows", static_cast<std::int64_t>(mixed.rows())},
        {"pre_max", pre.maxCoeff()},
        {"pre_mean", pre_mean},
        {"pre_max_over_mean", pre_ratio},
        {"post_max", post.maxCoeff()},
        {"post_mean", post_mean},
        {"post_max_over_mean", post_ratio},
        {"pre_csv", path_in_dir("leverage_pre.csv")},
        {"post_csv", path_in_dir("leverage_post.csv")}};
    log << "leverage max/mean: " << fmt(pre_ratio) << " before mixing, "
        << fmt(post_ratio) << " after (" << rows << " rows)\n";
  }

  {
    std::vector<std::uint64_t> ladder = cfg.conv_samples;
    if (ladder.empty()) {
      const auto r = static_cast<std::uint64_t>(r_total);
      for (const double m : {1.5, 2.0, 3.0, 4.0, 6.0, 8.0}) {
        const auto s = static_cast<std::uint64_t>(
            std::ceil(m * static_cast<double>(r)));
        if (s > r && s <= q) ladder.push_back(s);
      }
    }
    std::sort(ladder.begin(), ladder.end());
    ladder.erase(std::unique(ladder.begin(), ladder.end()), ladder.end());
    require(ladder.size() >= 2, ErrorKind::Parameter,
            "dataset too small for a self-convergence ladder");
    const auto deltas = self_convergence(model, data, ladder, sk);
    auto out = open_out(path_in_dir("convergence.csv"));
    out << "samples,delta\n";
    json conv = json::array();
    for (const auto& [s, delta] : deltas) {
      out << s << "," << fmt17(delta) << "\n";
      conv.push_back({s, delta});
    }
    finish_out(out, path_in_dir("convergence.csv"));
    summary["self_convergence"] = conv;
    summary["convergence_csv"] = path_in_dir("convergence.csv");
    log << "wrote " << path_in_dir("convergence.csv") << " ("
        << deltas.size() << " deltas)\n";
  }
  return summary;
}

json run_synth(const RunConfig& cfg, std::ostream& log) {
  set_max_threads(cfg.threads);
  SynthKind kind;
  if (cfg.synth_kind == "smooth")
    kind = SynthKind::Smooth;
  else if (cfg.synth_kind == "flame-front" || cfg.synth_kind == "flame")
    kind = SynthKind::FlameFront;
  else if (cfg.synth_kind == "multiscale")
    kind = SynthKind::Multiscale;
  else
    fail(ErrorKind::Parameter,
         "unknown synthetic field kind: " + cfg.synth_kind +
             " (expected smooth, flame-front, or multiscale)");
  require(!cfg.grid.empty() || cfg.synth_points > 0, ErrorKind::Parameter,
          "nothing to generate: give --grid and/or --points");
  const int d =
      !cfg.grid.empty() ? static_cast<int>(cfg.grid.size()) : cfg.synth_dim;

  json summary;
  summary["command"] = "synth";
  summary["kind"] = cfg.synth_kind;
  summary["dim"] = d;
  summary["seed"] = cfg.seed;

  if (!cfg.grid.empty()) {
    require(!cfg.output.empty(), ErrorKind::Parameter,
            "missing -o for the gridded output");
    const StructuredGrid g = StructuredGrid::unit(cfg.grid);
    const DenseTensor t = synth_field_grid(kind, g, cfg.synth, cfg.seed);
    write_ften(t, cfg.output);
    summary["grid"] = index_array(cfg.grid);
    summary["tensor_output"] = cfg.output;
    log << "wrote " << cfg.output << " (" << shape_text(cfg.grid)
        << " tensor)\n";
  }
  if (cfg.synth_points > 0) {
    require(!cfg.cloud_output.empty(), ErrorKind::Parameter,
            "missing --cloud-out for the scattered output");
    const PointCloud pc =
        synth_field_cloud(kind, d, cfg.synth_points, cfg.synth, cfg.seed);
    if (cfg.cloud_output.ends_with(".csv"))
      write_cloud_csv(pc, cfg.cloud_output);
    else
      write_cloud_binary(pc, cfg.cloud_output);
    summary["points"] = static_cast<std::int64_t>(cfg.synth_points);
    summary["cloud_output"] = cfg.cloud_output;
    log << "wrote " << cfg.cloud_output << " (" << cfg.synth_points
        << " samples)\n";
  }
  return summary;
}

json run_info(const RunConfig& cfg, std::ostream& log) {
  require(!cfg.input.empty(), ErrorKind::Parameter, "missing input path");
  const std::string magic = read_magic(cfg.input);
  std::error_code ec;
  const auto fsize = std::filesystem::file_size(cfg.input, ec);

  json summary;
  summary["command"] = "info";
  summary["input"] = cfg.input;
  if (!ec) summary["file_bytes"] = static_cast<std::uint64_t>(fsize);

  if (magic == "FSTK") {
    const FunctionalSparseTuckerModel model = load_model(cfg.input);
    const auto& md = model.metadata();
    const StorageCost cost = storage_cost(model);
    json domains = json::array();
    json nnz = json::array();
    for (int k = 0; k < model.order(); ++k) {
      const auto [lo, hi] = model.domain(k);
      domains.push_back({lo, hi});
      std::uint64_t n = 0;
      for (const auto& f : model.modes()[static_cast<std::size_t>(k)])
        n += f.fit.coeffs.size();
      nnz.push_back(n);
    }
    summary["format"] = "FSTK";
    summary["order"] = model.order();
    summary["ranks"] = index_array(model.ranks());
    summary["grid_sizes"] = index_array(md.grid_sizes);
    summary["domains"] = domains;
    summary["epsilon"] = md.epsilon;
    summary["tucker_residual"] = md.achieved_error;
    summary["flagged_fits"] = md.flagged_fits;
    summary["nnz_per_mode"] = nnz;
    summary["storage"] = {{"coefficients", cost.coeff_count},
                          {"value_bytes", cost.value_bytes},
                          {"index_bytes", cost.index_bytes},
                          {"total_bytes", cost.total_bytes()}};
    std::uint64_t grid_total = 1;
    bool grid_known = !md.grid_sizes.empty();
    for (const auto s : md.grid_sizes) {
      grid_known = grid_known && s >= 1;
      if (s >= 1) grid_total *= static_cast<std::uint64_t>(s);
    }
    if (grid_known) {
      summary["compression_ratio"] =
          compression_ratio(model, grid_total, true);
      summary["compression_ratio_values_only"] =
          compression_ratio(model, grid_total, false);
    }
    json prov = json::parse(md.provenance, nullptr, false);
    summary["provenance"] = prov.is_discarded() ? json(md.provenance) : prov;
    log << "model: core " << shape_text(model.ranks()) << ", "
        << cost.coeff_count << " stored coefficients, truncation residual "
        << fmt(md.achieved_error) << "\n";
  } else if (magic == "FTEN") {
    const DenseTensor t = read_ften(cfg.input);
    summary["format"] = "FTEN";
    summary["shape"] = index_array(t.shape());
    summary["size"] = static_cast<std::int64_t>(t.size());
    if (t.size() > 0) {
      summary["value_min"] = t.vec().minCoeff();
      summary["value_max"] = t.vec().maxCoeff();
      summary["fro_norm"] = fro_norm(t);
    }
    log << "tensor: " << shape_text(t.shape()) << ", " << t.size()
        << " values\n";
  } else {
    const PointCloud pc = read_cloud(cfg.input);
    summary["format"] = magic == "FPTC" ? "FPTC" : "CSV";
    summary["dim"] = pc.dim();
    summary["points"] = static_cast<std::int64_t>(pc.count());
    json lo = json::array(), hi = json::array();
    for (int k = 0; k < pc.dim(); ++k) {
      lo.push_back(pc.box_lo[k]);
      hi.push_back(pc.box_hi[k]);
    }
    summary["box_lo"] = lo;
    summary["box_hi"] = hi;
    log << "point cloud: " << pc.count() << " samples in " << pc.dim()
        << " dimensions\n";
  }
  return summary;
}

}  // namespace fstk
