#include "doctest.h"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "fstk/basis.hpp"
#include "fstk/error.hpp"
#include "fstk/ingest.hpp"
#include "fstk/model.hpp"
#include "fstk/randls.hpp"

using fstk::BasisSpec;
using fstk::build_design_rows;
using fstk::DenseTensor;
using fstk::evaluate_batch;
using fstk::FunctionalSparseTuckerModel;
using fstk::Index;
using fstk::leverage_scores;
using fstk::Matrix;
using fstk::MixingTransform;
using fstk::ModeFunction;
using fstk::ModelMetadata;
using fstk::PointCloud;
using fstk::reestimate_core;
using fstk::self_convergence;
using fstk::sketch;
using fstk::SketchConfig;
using fstk::Vector;

namespace {

ModeFunction one_sparse(const BasisSpec& spec, std::uint32_t index,
                        double value) {
  ModeFunction mf;
  mf.fit.basis = spec;
  mf.fit.coeffs = {{index, value}};
  return mf;
}

// Model whose mode-k functions are the first r_k Legendre polynomials; the
// Kronecker structure of its design rows is then known in closed form.
FunctionalSparseTuckerModel legendre_model(const std::vector<Index>& ranks,
                                           unsigned seed) {
  DenseTensor core(ranks);
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd;
  for (Index i = 0; i < core.size(); ++i) core.vec()[i] = nd(gen);
  std::vector<std::vector<ModeFunction>> modes(ranks.size());
  for (std::size_t k = 0; k < ranks.size(); ++k) {
    const BasisSpec spec = BasisSpec::legendre(int(ranks[k]) - 1);
    for (Index j = 0; j < ranks[k]; ++j)
      modes[k].push_back(one_sparse(spec, std::uint32_t(j), 1.0));
  }
  return FunctionalSparseTuckerModel(core, modes, ModelMetadata{});
}

Matrix random_points(Index q, int d, unsigned seed, double lo = -1.0,
                     double hi = 1.0) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> ud(lo, hi);
  Matrix p(q, d);
  for (Index i = 0; i < p.size(); ++i) p.data()[i] = ud(gen);
  return p;
}

PointCloud cloud_from(const Matrix& points, const Vector& values) {
  return PointCloud::from_data(points, values);
}

}  // namespace

TEST_CASE("design rows: all mode functions one gives a column of ones") {
  DenseTensor core({1, 1});
  core.vec()[0] = 2.5;
  std::vector<std::vector<ModeFunction>> modes(2);
  for (auto& m : modes) m.push_back(one_sparse(BasisSpec::legendre(0), 0, 1.0));
  FunctionalSparseTuckerModel model(core, modes, ModelMetadata{});
  Matrix pts = random_points(12, 2, 3);
  Matrix w = build_design_rows(model, pts);
  REQUIRE(w.rows() == 12);
  REQUIRE(w.cols() == 1);
  CHECK((w.array() - 1.0).abs().maxCoeff() <= 1e-15);
}

TEST_CASE("design rows equal the Kronecker product of per-mode values") {
  FunctionalSparseTuckerModel model = legendre_model({3, 2, 4}, 7);
  Matrix pts = random_points(20, 3, 11);
  Matrix w = build_design_rows(model, pts);
  REQUIRE(w.rows() == 20);
  REQUIRE(w.cols() == 3 * 2 * 4);
  for (Index q = 0; q < pts.rows(); ++q) {
    Vector v0 = model.mode_values(0, pts(q, 0));
    Vector v1 = model.mode_values(1, pts(q, 1));
    Vector v2 = model.mode_values(2, pts(q, 2));
    // Mode-0 index fastest in the linearization.
    Index col = 0;
    for (Index j2 = 0; j2 < 4; ++j2)
      for (Index j1 = 0; j1 < 2; ++j1)
        for (Index j0 = 0; j0 < 3; ++j0, ++col)
          CHECK(w(q, col) ==
                doctest::Approx(v0[j0] * v1[j1] * v2[j2]).epsilon(1e-12));
  }
}

TEST_CASE("design rows times vec(core) reproduces batch evaluation") {
  FunctionalSparseTuckerModel model = legendre_model({4, 3, 2}, 13);
  Matrix pts = random_points(64, 3, 17);
  Matrix w = build_design_rows(model, pts);
  Vector via_rows = w * model.core().vec();
  Vector direct = evaluate_batch(model, pts);
  CHECK((via_rows - direct).cwiseAbs().maxCoeff() <=
        1e-10 * std::max(1.0, direct.cwiseAbs().maxCoeff()));
}

TEST_CASE("sampling every padded row preserves the normal equations") {
  // With S = Q_pad the 'sample' is a permutation of all rows of an orthogonal
  // mix, so the sketched Gram equals the original Gram.
  const Index q = 24;  // pads to 32
  Matrix w = random_points(q, 6, 19);
  Vector u = random_points(q, 1, 23).col(0);
  for (const MixingTransform t :
       {MixingTransform::Dct, MixingTransform::Wht, MixingTransform::Fft}) {
    SketchConfig cfg;
    cfg.seed = 5;
    cfg.transform = t;
    cfg.sample_rows = 32;
    auto sys = sketch(w, u, cfg);
    CHECK(sys.padded_rows == 32);
    Matrix g1 = sys.a.transpose() * sys.a;
    Matrix g2 = w.transpose() * w;
    Vector r1 = sys.a.transpose() * sys.b;
    Vector r2 = w.transpose() * u;
    CHECK((g1 - g2).cwiseAbs().maxCoeff() <=
          1e-10 * std::max(1.0, g2.cwiseAbs().maxCoeff()));
    CHECK((r1 - r2).cwiseAbs().maxCoeff() <=
          1e-10 * std::max(1.0, r2.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("full sampling reproduces the exact least-squares solution") {
  const Index q = 32, r = 5;
  Matrix w = random_points(q, int(r), 29);
  Vector truth = random_points(r, 1, 31).col(0);
  Vector u = w * truth;
  u[0] += 0.01;  // make it a genuine least-squares problem
  SketchConfig cfg;
  cfg.sample_rows = 32;  // = Q_pad
  auto sys = sketch(w, u, cfg);
  Vector exact = w.colPivHouseholderQr().solve(u);
  Vector sketched = sys.a.colPivHouseholderQr().solve(sys.b);
  CHECK((exact - sketched).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("scalar problem is preserved up to sign") {
  Matrix w(1, 1);
  w(0, 0) = 3.0;
  Vector u(1);
  u[0] = 6.0;
  SketchConfig cfg;
  cfg.sample_rows = 1;
  auto sys = sketch(w, u, cfg);
  REQUIRE(sys.a.rows() == 1);
  CHECK(std::abs(sys.a(0, 0)) == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(sys.b[0] / sys.a(0, 0) == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("mixing isometry: column norms survive sign-flip and transform") {
  const Index q = 100;
  Matrix w = random_points(q, 4, 37);
  for (const MixingTransform t :
       {MixingTransform::Dct, MixingTransform::Wht, MixingTransform::Fft}) {
    SketchConfig cfg;
    cfg.seed = 11;
    cfg.transform = t;
    Matrix mixed = fstk::mixed_matrix(w, cfg);
    for (Index j = 0; j < w.cols(); ++j)
      CHECK(mixed.col(j).norm() ==
            doctest::Approx(w.col(j).norm()).epsilon(1e-10));
  }
}

TEST_CASE("oversampling the padded length is rejected") {
  Matrix w = random_points(8, 2, 41);
  Vector u = random_points(8, 1, 43).col(0);
  SketchConfig cfg;
  cfg.sample_rows = 9;  // Q_pad = 8
  CHECK_THROWS_AS(sketch(w, u, cfg), fstk::Error);
}

TEST_CASE("identical seeds give bit-identical sketched systems") {
  Matrix w = random_points(200, 8, 47);
  Vector u = random_points(200, 1, 53).col(0);
  SketchConfig cfg;
  cfg.seed = 99;
  cfg.sample_rows = 64;
  auto s1 = sketch(w, u, cfg);
  auto s2 = sketch(w, u, cfg);
  CHECK((s1.a - s2.a).cwiseAbs().maxCoeff() == 0.0);
  CHECK((s1.b - s2.b).cwiseAbs().maxCoeff() == 0.0);
  cfg.seed = 100;
  auto s3 = sketch(w, u, cfg);
  CHECK((s1.a - s3.a).cwiseAbs().maxCoeff() != 0.0);
}

TEST_CASE("leverage scores of an orthonormal square matrix are all one") {
  const Index n = 12;
  Matrix raw = random_points(n, int(n), 59);
  Matrix q = Eigen::HouseholderQR<Matrix>(raw).householderQ();
  Vector scores = leverage_scores(q);
  REQUIRE(scores.size() == n);
  CHECK((scores.array() - 1.0).abs().maxCoeff() <= 1e-10);
}

TEST_CASE("leverage scores sum to the rank") {
  Matrix w = random_points(200, 10, 61);
  Vector scores = leverage_scores(w);
  CHECK(scores.sum() == doctest::Approx(10.0).epsilon(1e-8));
  CHECK(scores.minCoeff() >= 0.0);
}

TEST_CASE("a dominant row captures its full leverage") {
  const Index q = 50, r = 3;
  Matrix w = random_points(q, int(r), 67) * 1e-6;
  w.row(7) << 1e6, 0, 0;
  Vector scores = leverage_scores(w);
  CHECK(scores[7] == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("mixing concentrates leverage on a spiky matrix") {
  // A few enormous rows give a raw max/mean ratio >= 50; after sign-flip and
  // orthogonal mixing the scores spread out to within 5x of the mean.
  const Index q = 4096, r = 64;
  Matrix w = random_points(q, int(r), 71) * 1e-3;
  std::mt19937_64 gen(73);
  std::normal_distribution<double> nd;
  for (Index s = 0; s < 10; ++s) {
    const Index row = Index(gen() % std::uint64_t(q));
    for (Index j = 0; j < r; ++j) w(row, j) = 100.0 * nd(gen);
  }
  Vector pre = leverage_scores(w);
  const double pre_ratio = pre.maxCoeff() / pre.mean();
  REQUIRE(pre_ratio >= 50.0);

  SketchConfig cfg;
  cfg.seed = 7;
  Matrix mixed = fstk::mixed_matrix(w, cfg);
  Vector post = leverage_scores(mixed);
  const double post_ratio = post.maxCoeff() / post.mean();
  CHECK(post_ratio <= 5.0);
}

TEST_CASE("re-estimating on exact model data recovers the core") {
  FunctionalSparseTuckerModel model = legendre_model({3, 2, 2}, 79);
  const Index q = 2000;
  Matrix pts = random_points(q, 3, 83);
  Vector vals = evaluate_batch(model, pts);
  SketchConfig cfg;
  cfg.seed = 17;
  auto res = reestimate_core(model, cloud_from(pts, vals), cfg);
  const double rel = (res.model.core().vec() - model.core().vec()).norm() /
                     model.core().vec().norm();
  CHECK(rel <= 1e-8);
  CHECK(res.residual_after <= 1e-8);
  CHECK(!res.rank_deficient);
}

TEST_CASE("re-estimation recovers a planted core, not the model's own") {
  FunctionalSparseTuckerModel model = legendre_model({2, 3, 2}, 89);
  DenseTensor planted = model.core();
  std::mt19937_64 gen(97);
  std::normal_distribution<double> nd;
  for (Index i = 0; i < planted.size(); ++i) planted.vec()[i] += 0.5 * nd(gen);
  FunctionalSparseTuckerModel ground = model.with_core(planted);

  const Index q = 4000;
  Matrix pts = random_points(q, 3, 101);
  Vector vals = evaluate_batch(ground, pts);  // noise-free planted data
  SketchConfig cfg;
  cfg.seed = 23;
  cfg.sample_rows = 4 * 12;  // S = 4R
  auto res = reestimate_core(model, cloud_from(pts, vals), cfg);
  const double rel = (res.model.core().vec() - planted.vec()).norm() /
                     planted.vec().norm();
  CHECK(rel <= 1e-6);
}

TEST_CASE("validation residual does not get worse on biased data") {
  // The model's core is deliberately perturbed away from the data-generating
  // core (mimicking interpolation bias); re-estimation must reduce the
  // held-out residual.
  FunctionalSparseTuckerModel ground = legendre_model({3, 3}, 103);
  DenseTensor biased = ground.core();
  std::mt19937_64 gen(107);
  std::normal_distribution<double> nd;
  for (Index i = 0; i < biased.size(); ++i)
    biased.vec()[i] += 0.2 * nd(gen) * biased.vec().norm() / 3.0;
  FunctionalSparseTuckerModel model = ground.with_core(biased);

  const Index q = 3000;
  Matrix pts = random_points(q, 2, 109);
  Vector vals = evaluate_batch(ground, pts);
  SketchConfig cfg;
  cfg.seed = 29;
  auto res = reestimate_core(model, cloud_from(pts, vals), cfg);
  CHECK(res.residual_after <= res.residual_before);
  CHECK(res.residual_after <= 1e-6);
  CHECK(res.held_out);
}

TEST_CASE("sketch size at or below the unknown count is rejected") {
  FunctionalSparseTuckerModel model = legendre_model({2, 2}, 113);
  const Index q = 500;
  Matrix pts = random_points(q, 2, 127);
  Vector vals = evaluate_batch(model, pts);
  SketchConfig cfg;
  cfg.sample_rows = 4;  // R = 4, S must exceed R
  CHECK_THROWS_AS(reestimate_core(model, cloud_from(pts, vals), cfg),
                  fstk::Error);
}

TEST_CASE("self-convergence deltas vanish for repeated sample counts") {
  FunctionalSparseTuckerModel model = legendre_model({2, 2}, 131);
  const Index q = 1000;
  Matrix pts = random_points(q, 2, 137);
  Vector vals = evaluate_batch(model, pts);
  std::mt19937_64 gen(139);
  std::normal_distribution<double> nd;
  for (Index i = 0; i < q; ++i) vals[i] += 0.01 * nd(gen);
  SketchConfig cfg;
  cfg.seed = 31;
  auto curve =
      self_convergence(model, cloud_from(pts, vals), {64, 64, 64}, cfg);
  REQUIRE(curve.size() == 2);
  CHECK(curve[0].second == 0.0);
  CHECK(curve[1].second == 0.0);
}

TEST_CASE("self-convergence deltas are tiny on a consistent system") {
  FunctionalSparseTuckerModel model = legendre_model({2, 2, 2}, 149);
  const Index q = 3000;
  Matrix pts = random_points(q, 3, 151);
  Vector vals = evaluate_batch(model, pts);
  SketchConfig cfg;
  cfg.seed = 37;
  auto curve =
      self_convergence(model, cloud_from(pts, vals), {16, 32, 64, 128}, cfg);
  REQUIRE(curve.size() == 3);
  for (const auto& [s, delta] : curve) {
    CHECK(std::isfinite(delta));
    CHECK(delta <= 1e-8);
  }
}

TEST_CASE("noisy self-convergence collapses past the sampling knee") {
  // Deltas at S = 4R should sit well below deltas at S = 1.2R.
  FunctionalSparseTuckerModel model = legendre_model({4, 4, 4}, 157);
  const Index q = 20000;
  Matrix pts = random_points(q, 3, 163);
  Vector vals = evaluate_batch(model, pts);
  const double rms = std::sqrt(vals.squaredNorm() / double(q));
  std::mt19937_64 gen(167);
  std::normal_distribution<double> nd;
  for (Index i = 0; i < q; ++i) vals[i] += 0.01 * rms * nd(gen);

  const std::uint64_t r = 64;
  std::vector<double> low, high;
  for (unsigned seed = 0; seed < 5; ++seed) {
    SketchConfig cfg;
    cfg.seed = 1000 + seed;
    auto curve = self_convergence(
        model, cloud_from(pts, vals),
        {std::uint64_t(1.2 * r), std::uint64_t(1.2 * r) + 8,
         4 * r, 4 * r + 8},
        cfg);
    REQUIRE(curve.size() == 3);
    low.push_back(curve[0].second);   // around 1.2R
    high.push_back(curve[2].second);  // around 4R
  }
  std::sort(low.begin(), low.end());
  std::sort(high.begin(), high.end());
  CHECK(high[2] * 10.0 <= low[2]);  // medians differ by >= 10x
}

TEST_CASE("sketched residual stays close to the exact residual") {
  // Property over seeds: S = 4R sketches give at most 1.5x the exact residual
  // in at least 90% of trials.
  const Index q = 8192, r = 64;
  Matrix w = random_points(q, int(r), 173);
  Vector truth = random_points(r, 1, 179).col(0);
  Vector u = w * truth;
  std::mt19937_64 gen(181);
  std::normal_distribution<double> nd;
  for (Index i = 0; i < q; ++i) u[i] += 0.05 * nd(gen);
  Vector exact = w.colPivHouseholderQr().solve(u);
  const double exact_res = (w * exact - u).norm();

  int good = 0;
  const int trials = 50;
  for (int t = 0; t < trials; ++t) {
    SketchConfig cfg;
    cfg.seed = 5000 + std::uint64_t(t);
    cfg.sample_rows = 4 * std::uint64_t(r);
    auto sys = sketch(w, u, cfg);
    Vector alpha = sys.a.colPivHouseholderQr().solve(sys.b);
    const double res = (w * alpha - u).norm();
    if (res <= 1.5 * exact_res) ++good;
  }
  CHECK(good >= 45);
}
