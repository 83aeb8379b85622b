#include "fstk/randls.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>

#include "fstk/parallel.hpp"
#include "fstk/rng.hpp"
#include "fstk/transforms.hpp"

namespace fstk {

namespace {

constexpr std::uint64_t kValidationTag = 0x76616c69ull;
constexpr std::uint64_t kSubsetTag = 0x73756273ull;
constexpr std::uint64_t kSketchTag = 0x736b6574ull;

// Per-mode function values for every point: V[k] is Q x r_k.
std::vector<Matrix> mode_value_tables(const FunctionalSparseTuckerModel& model,
                                      const Matrix& points) {
  const int d = model.order();
  require(points.cols() == d, ErrorKind::Parameter,
          "points must have one column per mode");
  std::vector<Matrix> v(static_cast<std::size_t>(d));
  for (int k = 0; k < d; ++k)
    v[static_cast<std::size_t>(k)].resize(points.rows(), model.core().dim(k));
  parallel_for(static_cast<std::size_t>(points.rows()),
               [&](std::size_t begin, std::size_t end) {
                 for (std::size_t q = begin; q < end; ++q) {
                   for (int k = 0; k < d; ++k)
                     v[static_cast<std::size_t>(k)].row(
                         static_cast<Index>(q)) =
                         model
                             .mode_values(k, points(static_cast<Index>(q), k))
                             .transpose();
                 }
               });
  return v;
}

// Column ell of the design matrix (core linearization, mode-0 fastest).
void design_column(const std::vector<Matrix>& tables, Index ell, Vector& out) {
  Index rem = ell;
  out = tables[0].col(rem % tables[0].cols());
  rem /= tables[0].cols();
  for (std::size_t k = 1; k < tables.size(); ++k) {
    out.array() *= tables[k].col(rem % tables[k].cols()).array();
    rem /= tables[k].cols();
  }
}

struct SketchPlan {
  std::vector<double> signs;          // Q_pad
  std::vector<std::uint64_t> rows;    // S sampled padded-row indices, sorted
  std::uint64_t q_pad = 0;
  double scale = 1.0;
};

SketchPlan make_plan(std::uint64_t q_w, std::uint64_t s, std::uint64_t seed) {
  SketchPlan plan;
  plan.q_pad = next_pow2(q_w);
  require(s >= 1, ErrorKind::Parameter, "sample rows must be positive");
  require(s <= plan.q_pad, ErrorKind::Parameter,
          "sample rows exceed the padded row count");
  Rng rng(seed);
  plan.signs.resize(plan.q_pad);
  for (auto& x : plan.signs) x = rng.sign();
  // Partial Fisher-Yates: the first S selections are nested across S.
  plan.rows = rng.sample_without_replacement(plan.q_pad, s);
  plan.scale = std::sqrt(static_cast<double>(plan.q_pad) /
                         static_cast<double>(s));
  return plan;
}

// Applies sign flips + mixing to one column and gathers the sampled rows.
// `getter(i)` supplies the unpadded input entries.
template <typename Getter>
void sketch_column(const SketchPlan& plan, MixingTransform transform,
                   std::uint64_t q_w, Getter&& getter,
                   std::vector<double>& scratch,
                   std::vector<std::complex<double>>& cscratch, double* out_re,
                   double* out_im) {
  const std::size_t n = plan.q_pad;
  if (transform == MixingTransform::Fft) {
    cscratch.assign(n, {0.0, 0.0});
    for (std::uint64_t i = 0; i < q_w; ++i)
      cscratch[i] = plan.signs[i] * getter(i);
    unitary_fft(cscratch.data(), n, false);
    for (std::size_t s = 0; s < plan.rows.size(); ++s) {
      out_re[s] = plan.scale * cscratch[plan.rows[s]].real();
      out_im[s] = plan.scale * cscratch[plan.rows[s]].imag();
    }
    return;
  }
  scratch.assign(n, 0.0);
  for (std::uint64_t i = 0; i < q_w; ++i) scratch[i] = plan.signs[i] * getter(i);
  if (transform == MixingTransform::Dct)
    dct2_orthonormal(scratch.data(), n);
  else
    wht_orthonormal(scratch.data(), n);
  for (std::size_t s = 0; s < plan.rows.size(); ++s)
    out_re[s] = plan.scale * scratch[plan.rows[s]];
}

struct CoreSolve {
  Vector alpha;
  bool rank_deficient = false;
};

CoreSolve solve_system(const Matrix& a, const Vector& b) {
  CoreSolve out;
  Eigen::ColPivHouseholderQR<Matrix> qr(a);
  if (qr.rank() == a.cols()) {
    out.alpha = qr.solve(b);
  } else {
    out.rank_deficient = true;
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(a);
    out.alpha = cod.solve(b);  // minimum-norm fallback
  }
  return out;
}

std::uint64_t resolve_sample_rows(const SketchConfig& cfg, Index r) {
  return cfg.sample_rows > 0
             ? cfg.sample_rows
             : static_cast<std::uint64_t>(
                   std::ceil(2.5 * static_cast<double>(r)));
}

}  // namespace

Matrix build_design_rows(const FunctionalSparseTuckerModel& model,
                         const Matrix& points) {
  const auto tables = mode_value_tables(model, points);
  const Index r_total = model.core().size();
  Matrix w(points.rows(), r_total);
  Vector col;
  for (Index ell = 0; ell < r_total; ++ell) {
    design_column(tables, ell, col);
    w.col(ell) = col;
  }
  return w;
}

SketchedSystem sketch(const Matrix& w, const Vector& u,
                      const SketchConfig& cfg) {
  const auto q_w = static_cast<std::uint64_t>(w.rows());
  require(q_w >= 1, ErrorKind::Parameter, "empty system");
  require(u.size() == w.rows(), ErrorKind::Shape, "rhs length mismatch");
  const std::uint64_t s = resolve_sample_rows(cfg, w.cols());
  const SketchPlan plan = make_plan(q_w, s, cfg.seed);
  const bool fft = cfg.transform == MixingTransform::Fft;
  const auto s_rows = static_cast<Index>(plan.rows.size());

  SketchedSystem out;
  out.padded_rows = plan.q_pad;
  out.a.resize(fft ? 2 * s_rows : s_rows, w.cols());
  out.b.resize(fft ? 2 * s_rows : s_rows);

  // Columns (and the rhs) mix independently; parallel over columns.
  parallel_for(static_cast<std::size_t>(w.cols()) + 1, [&](std::size_t begin,
                                                           std::size_t end) {
    std::vector<double> scratch;
    std::vector<std::complex<double>> cscratch;
    for (std::size_t c = begin; c < end; ++c) {
      if (c < static_cast<std::size_t>(w.cols())) {
        const Index col = static_cast<Index>(c);
        sketch_column(
            plan, cfg.transform, q_w,
            [&](std::uint64_t i) { return w(static_cast<Index>(i), col); },
            scratch, cscratch, out.a.col(col).data(),
            fft ? out.a.col(col).data() + s_rows : nullptr);
      } else {
        sketch_column(
            plan, cfg.transform, q_w,
            [&](std::uint64_t i) { return u[static_cast<Index>(i)]; }, scratch,
            cscratch, out.b.data(), fft ? out.b.data() + s_rows : nullptr);
      }
    }
  });
  return out;
}

Matrix mixed_matrix(const Matrix& w, const SketchConfig& cfg) {
  const auto q_w = static_cast<std::uint64_t>(w.rows());
  require(q_w >= 1, ErrorKind::Parameter, "empty matrix");
  const auto q_pad = next_pow2(q_w);
  Rng rng(cfg.seed);
  std::vector<double> signs(q_pad);
  for (auto& x : signs) x = rng.sign();
  const bool fft = cfg.transform == MixingTransform::Fft;
  Matrix out(fft ? 2 * static_cast<Index>(q_pad) : static_cast<Index>(q_pad),
             w.cols());
  parallel_for(static_cast<std::size_t>(w.cols()), [&](std::size_t begin,
                                                       std::size_t end) {
    std::vector<double> scratch;
    std::vector<std::complex<double>> cscratch;
    for (std::size_t c = begin; c < end; ++c) {
      const Index col = static_cast<Index>(c);
      if (fft) {
        cscratch.assign(q_pad, {0.0, 0.0});
        for (std::uint64_t i = 0; i < q_w; ++i)
          cscratch[i] = signs[i] * w(static_cast<Index>(i), col);
        unitary_fft(cscratch.data(), q_pad, false);
        for (std::uint64_t i = 0; i < q_pad; ++i) {
          out(static_cast<Index>(i), col) = cscratch[i].real();
          out(static_cast<Index>(q_pad + i), col) = cscratch[i].imag();
        }
      } else {
        scratch.assign(q_pad, 0.0);
        for (std::uint64_t i = 0; i < q_w; ++i)
          scratch[i] = signs[i] * w(static_cast<Index>(i), col);
        if (cfg.transform == MixingTransform::Dct)
          dct2_orthonormal(scratch.data(), q_pad);
        else
          wht_orthonormal(scratch.data(), q_pad);
        for (std::uint64_t i = 0; i < q_pad; ++i)
          out(static_cast<Index>(i), col) = scratch[i];
      }
    }
  });
  return out;
}

Vector leverage_scores(const Matrix& w) {
  require(w.rows() >= w.cols(), ErrorKind::Parameter,
          "leverage scores need at least as many rows as columns");
  Eigen::BDCSVD<Matrix> svd(w, Eigen::ComputeThinU);
  const Index rank = svd.rank();
  return svd.matrixU().leftCols(rank).rowwise().squaredNorm();
}

namespace {

struct ReestimateWorkspace {
  Matrix train_points;
  Vector train_values;
  Matrix val_points;
  Vector val_values;
  bool held_out = true;
  std::vector<Matrix> tables;  // per-mode values over the working subset
};

ReestimateWorkspace prepare(const FunctionalSparseTuckerModel& model,
                            const PointCloud& dataset,
                            const SketchConfig& cfg) {
  dataset.validate();
  require(dataset.dim() == model.order(), ErrorKind::Shape,
          "dataset/model dimension mismatch");
  const auto q = static_cast<std::uint64_t>(dataset.count());

  // Validation holdout.
  std::uint64_t n_val = 0;
  if (cfg.validation_fraction > 0.0) {
    n_val = static_cast<std::uint64_t>(
        std::llround(cfg.validation_fraction * static_cast<double>(q)));
    n_val = std::min<std::uint64_t>(std::min(n_val, q - 1), 100000);
  }
  ReestimateWorkspace ws;
  std::vector<char> in_val(q, 0);
  if (n_val >= 1) {
    Rng rng(mix_seed(cfg.seed, kValidationTag));
    for (const auto i : rng.sample_without_replacement(q, n_val))
      in_val[i] = 1;
  } else {
    ws.held_out = false;
  }

  std::vector<std::uint64_t> train;
  std::vector<std::uint64_t> val;
  for (std::uint64_t i = 0; i < q; ++i)
    (in_val[i] ? val : train).push_back(i);
  if (!ws.held_out) val = train;  // report residuals on the data itself

  // Working subset of the training pool.
  const std::uint64_t q_w =
      cfg.working_subset == 0
          ? train.size()
          : std::min<std::uint64_t>(cfg.working_subset, train.size());
  require(q_w >= 1, ErrorKind::Parameter, "no training points left");
  std::vector<std::uint64_t> subset;
  if (q_w == train.size()) {
    subset = train;
  } else {
    Rng rng(mix_seed(cfg.seed, kSubsetTag));
    for (const auto i : rng.sample_without_replacement(train.size(), q_w))
      subset.push_back(train[i]);
  }

  const int d = dataset.dim();
  ws.train_points.resize(static_cast<Index>(subset.size()), d);
  ws.train_values.resize(static_cast<Index>(subset.size()));
  for (std::size_t i = 0; i < subset.size(); ++i) {
    ws.train_points.row(static_cast<Index>(i)) =
        dataset.points.row(static_cast<Index>(subset[i]));
    ws.train_values[static_cast<Index>(i)] =
        dataset.values[static_cast<Index>(subset[i])];
  }
  ws.val_points.resize(static_cast<Index>(val.size()), d);
  ws.val_values.resize(static_cast<Index>(val.size()));
  for (std::size_t i = 0; i < val.size(); ++i) {
    ws.val_points.row(static_cast<Index>(i)) =
        dataset.points.row(static_cast<Index>(val[i]));
    ws.val_values[static_cast<Index>(i)] =
        dataset.values[static_cast<Index>(val[i])];
  }
  ws.tables = mode_value_tables(model, ws.train_points);
  return ws;
}

// Sketches the implicit design matrix column by column (never materializing
// Q_w x R) and solves.
CoreSolve solve_sketched(const ReestimateWorkspace& ws, Index r_total,
                         const SketchConfig& cfg, std::uint64_t s) {
  const auto q_w = static_cast<std::uint64_t>(ws.train_points.rows());
  const SketchPlan plan = make_plan(q_w, s, mix_seed(cfg.seed, kSketchTag));
  const bool fft = cfg.transform == MixingTransform::Fft;
  const auto s_rows = static_cast<Index>(plan.rows.size());
  Matrix a(fft ? 2 * s_rows : s_rows, r_total);
  Vector b(fft ? 2 * s_rows : s_rows);

  parallel_for(static_cast<std::size_t>(r_total) + 1, [&](std::size_t begin,
                                                          std::size_t end) {
    std::vector<double> scratch;
    std::vector<std::complex<double>> cscratch;
    Vector col;
    for (std::size_t c = begin; c < end; ++c) {
      if (c < static_cast<std::size_t>(r_total)) {
        design_column(ws.tables, static_cast<Index>(c), col);
        sketch_column(
            plan, cfg.transform, q_w,
            [&](std::uint64_t i) { return col[static_cast<Index>(i)]; },
            scratch, cscratch, a.col(static_cast<Index>(c)).data(),
            fft ? a.col(static_cast<Index>(c)).data() + s_rows : nullptr);
      } else {
        sketch_column(
            plan, cfg.transform, q_w,
            [&](std::uint64_t i) {
              return ws.train_values[static_cast<Index>(i)];
            },
            scratch, cscratch, b.data(), fft ? b.data() + s_rows : nullptr);
      }
    }
  });
  return solve_system(a, b);
}

double relative_residual(const FunctionalSparseTuckerModel& model,
                         const Matrix& points, const Vector& values) {
  const Vector pred = evaluate_batch(model, points);
  const double denom = values.norm();
  const double diff = (pred - values).norm();
  return denom > 0.0 ? diff / denom : diff;
}

}  // namespace

ReestimateResult reestimate_core(const FunctionalSparseTuckerModel& model,
                                 const PointCloud& dataset,
                                 const SketchConfig& cfg) {
  const Index r_total = model.core().size();
  const std::uint64_t s = resolve_sample_rows(cfg, r_total);
  require(s > static_cast<std::uint64_t>(r_total), ErrorKind::Parameter,
          "sample rows must exceed the core size");
  require(static_cast<std::uint64_t>(dataset.count()) >= s,
          ErrorKind::Parameter, "dataset smaller than the requested sketch");

  const ReestimateWorkspace ws = prepare(model, dataset, cfg);
  const CoreSolve sol = solve_sketched(ws, r_total, cfg, s);

  DenseTensor new_core(model.core().shape(),
                       std::vector<double>(sol.alpha.data(),
                                           sol.alpha.data() + sol.alpha.size()));
  ReestimateResult out{model.with_core(std::move(new_core)), 0.0, 0.0, s,
                       static_cast<std::uint64_t>(ws.train_points.rows()),
                       sol.rank_deficient, ws.held_out};
  out.residual_before = relative_residual(model, ws.val_points, ws.val_values);
  out.residual_after =
      relative_residual(out.model, ws.val_points, ws.val_values);
  return out;
}

std::vector<std::pair<std::uint64_t, double>> self_convergence(
    const FunctionalSparseTuckerModel& model, const PointCloud& dataset,
    const std::vector<std::uint64_t>& s_values, const SketchConfig& cfg) {
  require(s_values.size() >= 2, ErrorKind::Parameter,
          "need at least two sample counts");
  const Index r_total = model.core().size();
  for (std::size_t i = 0; i < s_values.size(); ++i) {
    require(s_values[i] > static_cast<std::uint64_t>(r_total),
            ErrorKind::Parameter, "sample rows must exceed the core size");
    require(i == 0 || s_values[i] >= s_values[i - 1], ErrorKind::Parameter,
            "sample counts must be nondecreasing");
  }
  require(static_cast<std::uint64_t>(dataset.count()) >= s_values.back(),
          ErrorKind::Parameter, "dataset smaller than the requested sketch");

  const ReestimateWorkspace ws = prepare(model, dataset, cfg);

  std::vector<Vector> alphas;
  for (const auto s : s_values)
    alphas.push_back(solve_sketched(ws, r_total, cfg, s).alpha);

  std::vector<std::pair<std::uint64_t, double>> out;
  for (std::size_t i = 0; i + 1 < alphas.size(); ++i) {
    const double denom = alphas[i + 1].norm();
    const double delta = (alphas[i + 1] - alphas[i]).norm();
    out.emplace_back(s_values[i], denom > 0.0 ? delta / denom : delta);
  }
  return out;
}

}  // namespace fstk
