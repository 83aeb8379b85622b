#include "fstk/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <nlohmann/json.hpp>

#include "fstk/parallel.hpp"

namespace fstk {

using nlohmann::json;

double ModeFunction::eval(double x) const {
  const Vector phi = eval_basis(fit.basis, x);
  double v = 0.0;
  for (const auto& [i, c] : fit.coeffs) v += c * phi[static_cast<Index>(i)];
  return v;
}

FunctionalSparseTuckerModel::FunctionalSparseTuckerModel(
    DenseTensor core, std::vector<std::vector<ModeFunction>> modes,
    ModelMetadata metadata)
    : core_(std::move(core)),
      modes_(std::move(modes)),
      metadata_(std::move(metadata)) {
  validate_structure();
}

void FunctionalSparseTuckerModel::validate_structure() const {
  require(core_.order() == static_cast<int>(modes_.size()), ErrorKind::Shape,
          "model: mode count does not match core order");
  for (int k = 0; k < core_.order(); ++k) {
    const auto& fns = modes_[static_cast<std::size_t>(k)];
    require(static_cast<Index>(fns.size()) == core_.dim(k), ErrorKind::Shape,
            "model: function count does not match rank");
    require(!fns.empty(), ErrorKind::Shape, "model: empty mode");
    const double lo = fns.front().fit.basis.lo;
    const double hi = fns.front().fit.basis.hi;
    for (const auto& fn : fns) {
      validate(fn.fit.basis);
      require(fn.fit.basis.lo == lo && fn.fit.basis.hi == hi,
              ErrorKind::Shape, "model: inconsistent domains within a mode");
      const Index n = fn.fit.basis.dimension();
      for (const auto& [i, c] : fn.fit.coeffs) {
        (void)c;
        require(static_cast<Index>(i) < n, ErrorKind::Shape,
                "model: coefficient index outside basis dimension");
      }
    }
  }
}

std::pair<double, double> FunctionalSparseTuckerModel::domain(int mode) const {
  require(mode >= 0 && mode < order(), ErrorKind::Parameter,
          "mode out of range");
  const auto& b = modes_[static_cast<std::size_t>(mode)].front().fit.basis;
  return {b.lo, b.hi};
}

FunctionalSparseTuckerModel FunctionalSparseTuckerModel::with_core(
    DenseTensor core) const {
  require(core.shape() == core_.shape(), ErrorKind::Shape,
          "replacement core has wrong shape");
  FunctionalSparseTuckerModel m = *this;
  m.core_ = std::move(core);
  return m;
}

Vector FunctionalSparseTuckerModel::mode_values(int mode, double x) const {
  require(mode >= 0 && mode < order(), ErrorKind::Parameter,
          "mode out of range");
  const auto& fns = modes_[static_cast<std::size_t>(mode)];
  Vector out(static_cast<Index>(fns.size()));
  // Functions within a mode usually share few distinct bases; evaluate each
  // distinct one once.
  std::vector<int> done(fns.size(), 0);
  Vector phi;
  for (std::size_t j = 0; j < fns.size(); ++j) {
    if (done[j]) continue;
    phi.resize(fns[j].fit.basis.dimension());
    eval_basis(fns[j].fit.basis, x, phi.data());
    for (std::size_t l = j; l < fns.size(); ++l) {
      if (done[l] || !(fns[l].fit.basis == fns[j].fit.basis)) continue;
      double v = 0.0;
      for (const auto& [i, c] : fns[l].fit.coeffs)
        v += c * phi[static_cast<Index>(i)];
      out[static_cast<Index>(l)] = v;
      done[l] = 1;
    }
  }
  return out;
}

FunctionalSparseTuckerModel assemble(
    const TuckerDecomposition& dec,
    const std::vector<std::vector<double>>& grids,
    const std::vector<std::vector<BasisSpec>>& candidates,
    const AssembleOptions& options, AssembleReport* report) {
  const int d = dec.core.order();
  require(static_cast<int>(dec.factors.size()) == d, ErrorKind::Shape,
          "decomposition is incomplete");
  require(static_cast<int>(grids.size()) == d, ErrorKind::Parameter,
          "one coordinate vector per mode required");
  require(static_cast<int>(candidates.size()) == d, ErrorKind::Parameter,
          "one candidate list per mode required");

  std::vector<std::vector<BasisSpec>> cands(candidates.size());
  for (int k = 0; k < d; ++k) {
    const auto& g = grids[static_cast<std::size_t>(k)];
    require(static_cast<Index>(g.size()) == dec.factors[k].rows(),
            ErrorKind::Parameter, "grid length does not match factor rows");
    require(g.size() >= 2, ErrorKind::Parameter, "grids need >= 2 nodes");
    const auto [lo_it, hi_it] = std::minmax_element(g.begin(), g.end());
    require(*lo_it < *hi_it, ErrorKind::Parameter, "degenerate grid interval");
    require(!candidates[static_cast<std::size_t>(k)].empty(),
            ErrorKind::Parameter, "empty candidate list");
    for (const auto& c : candidates[static_cast<std::size_t>(k)])
      cands[static_cast<std::size_t>(k)].push_back(
          c.with_domain(*lo_it, *hi_it));
  }

  // Flatten the (mode, column) fit jobs; they are independent.
  std::vector<std::pair<int, int>> jobs;
  for (int k = 0; k < d; ++k)
    for (Index j = 0; j < dec.factors[k].cols(); ++j)
      jobs.emplace_back(k, static_cast<int>(j));

  std::vector<ModeFunction> results(jobs.size());
  std::vector<std::vector<FitCandidateReport>> reports(
      report ? jobs.size() : 0);
  parallel_for(jobs.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const auto [k, j] = jobs[i];
      const Vector col = dec.factors[k].col(j);
      ModeFunction fn;
      fn.fit = fit_singular_vector(grids[static_cast<std::size_t>(k)], col,
                                   cands[static_cast<std::size_t>(k)],
                                   report ? &reports[i] : nullptr);
      fn.flagged = fn.fit.residual_rel > options.residual_ceiling;
      results[i] = std::move(fn);
    }
  });

  std::vector<std::vector<ModeFunction>> modes(d);
  int flagged = 0;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    flagged += results[i].flagged ? 1 : 0;
    modes[static_cast<std::size_t>(jobs[i].first)].push_back(
        std::move(results[i]));
  }
  if (report) {
    report->fits.clear();
    for (std::size_t i = 0; i < jobs.size(); ++i)
      report->fits.push_back(
          {jobs[i].first, jobs[i].second, std::move(reports[i])});
  }

  ModelMetadata meta;
  meta.grid_sizes.resize(d);
  for (int k = 0; k < d; ++k)
    meta.grid_sizes[k] = static_cast<Index>(grids[k].size());
  meta.epsilon = options.epsilon;
  meta.achieved_error = dec.achieved_error;
  meta.flagged_fits = flagged;
  meta.provenance = options.provenance;
  return FunctionalSparseTuckerModel(dec.core, std::move(modes),
                                     std::move(meta));
}

namespace {

// Contracts the core against per-mode value vectors, highest mode first so
// each stage is a plain column-major GEMV.
double contract_core(const DenseTensor& core, const std::vector<Vector>& v,
                     Vector& scratch_a, Vector& scratch_b) {
  const int d = core.order();
  Index rows = core.size() / core.dim(d - 1);
  Eigen::Map<const Matrix> m0(core.data(), rows, core.dim(d - 1));
  scratch_a.resize(rows);
  scratch_a.noalias() = m0 * v[static_cast<std::size_t>(d - 1)];
  for (int k = d - 2; k >= 0; --k) {
    rows /= core.dim(k);
    Eigen::Map<const Matrix> mk(scratch_a.data(), rows, core.dim(k));
    scratch_b.resize(rows);
    scratch_b.noalias() = mk * v[static_cast<std::size_t>(k)];
    std::swap(scratch_a, scratch_b);
  }
  return scratch_a[0];
}

}  // namespace

double evaluate(const FunctionalSparseTuckerModel& model,
                const std::vector<double>& y) {
  const int d = model.order();
  require(static_cast<int>(y.size()) == d, ErrorKind::Parameter,
          "evaluation point has wrong dimension");
  std::vector<Vector> v(static_cast<std::size_t>(d));
  for (int k = 0; k < d; ++k)
    v[static_cast<std::size_t>(k)] =
        model.mode_values(k, y[static_cast<std::size_t>(k)]);
  Vector a, b;
  return contract_core(model.core(), v, a, b);
}

Vector evaluate_batch(const FunctionalSparseTuckerModel& model,
                      const Matrix& points) {
  const int d = model.order();
  require(points.cols() == d, ErrorKind::Parameter,
          "points must have one column per mode");
  Vector out(points.rows());
  parallel_for(static_cast<std::size_t>(points.rows()),
               [&](std::size_t begin, std::size_t end) {
                 std::vector<Vector> v(static_cast<std::size_t>(d));
                 Vector a, b;
                 for (std::size_t q = begin; q < end; ++q) {
                   for (int k = 0; k < d; ++k)
                     v[static_cast<std::size_t>(k)] = model.mode_values(
                         k, points(static_cast<Index>(q), k));
                   out[static_cast<Index>(q)] =
                       contract_core(model.core(), v, a, b);
                 }
               });
  return out;
}

StorageCost storage_cost(const FunctionalSparseTuckerModel& model) {
  StorageCost s;
  std::uint64_t nnz = 0;
  for (const auto& mode : model.modes())
    for (const auto& fn : mode) nnz += fn.fit.coeffs.size();
  s.coeff_count = static_cast<std::uint64_t>(model.core().size()) + nnz;
  s.value_bytes = 8 * s.coeff_count;
  s.index_bytes = 4 * nnz;
  return s;
}

double compression_ratio(const FunctionalSparseTuckerModel& model,
                         std::uint64_t original_point_count,
                         bool include_indices) {
  require(original_point_count > 0, ErrorKind::Parameter,
          "original point count must be positive");
  const StorageCost s = storage_cost(model);
  const std::uint64_t bytes =
      include_indices ? s.total_bytes() : s.value_bytes;
  return static_cast<double>(original_point_count) * 8.0 /
         static_cast<double>(bytes);
}

namespace {

constexpr char kFstkMagic[4] = {'F', 'S', 'T', 'K'};
constexpr std::uint32_t kFstkVersion = 1;

template <typename T>
void write_pod(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
bool read_pod(std::istream& is, T& v) {
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  return static_cast<bool>(is);
}

const char* family_name(BasisFamily f) {
  return f == BasisFamily::Legendre ? "legendre" : "wavelet";
}

BasisFamily family_from(const std::string& s) {
  if (s == "legendre") return BasisFamily::Legendre;
  if (s == "wavelet") return BasisFamily::Wavelet;
  fail(ErrorKind::Decode, "unknown basis family: " + s);
}

}  // namespace

void save_model(const FunctionalSparseTuckerModel& model,
                const std::string& path) {
  json meta;
  meta["d"] = model.order();
  meta["ranks"] = model.ranks();
  meta["grid_sizes"] = model.metadata().grid_sizes;
  meta["epsilon"] = model.metadata().epsilon;
  meta["achieved_error"] = model.metadata().achieved_error;
  meta["flagged_fits"] = model.metadata().flagged_fits;
  meta["provenance"] = model.metadata().provenance;
  json jmodes = json::array();
  for (const auto& mode : model.modes()) {
    json jm = json::array();
    for (const auto& fn : mode) {
      const auto& b = fn.fit.basis;
      jm.push_back({{"family", family_name(b.family)},
                    {"degree", b.degree},
                    {"resolution", b.resolution},
                    {"lo", b.lo},
                    {"hi", b.hi},
                    {"nnz", fn.fit.coeffs.size()},
                    {"lambda", fn.fit.chosen_lambda},
                    {"loo", fn.fit.loo_error},
                    {"residual", fn.fit.residual_rel},
                    {"flagged", fn.flagged}});
    }
    jmodes.push_back(std::move(jm));
  }
  meta["modes"] = std::move(jmodes);
  const std::string header = meta.dump();

  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(os), ErrorKind::Io, "cannot open for write: " + path);
  os.write(kFstkMagic, 4);
  write_pod(os, kFstkVersion);
  write_pod(os, static_cast<std::uint64_t>(header.size()));
  os.write(header.data(), static_cast<std::streamsize>(header.size()));
  os.write(reinterpret_cast<const char*>(model.core().data()),
           static_cast<std::streamsize>(model.core().size() * sizeof(double)));
  for (const auto& mode : model.modes()) {
    for (const auto& fn : mode) {
      write_pod(os, static_cast<std::uint32_t>(fn.fit.coeffs.size()));
      for (const auto& [i, c] : fn.fit.coeffs) {
        (void)c;
        write_pod(os, i);
      }
      for (const auto& [i, c] : fn.fit.coeffs) {
        (void)i;
        write_pod(os, c);
      }
    }
  }
  require(static_cast<bool>(os), ErrorKind::Io, "write failed: " + path);
}

FunctionalSparseTuckerModel load_model(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  require(static_cast<bool>(is), ErrorKind::Io, "cannot open: " + path);
  char magic[4];
  is.read(magic, 4);
  require(static_cast<bool>(is) && std::memcmp(magic, kFstkMagic, 4) == 0,
          ErrorKind::Decode, "not a FSTK model file: " + path);
  std::uint32_t version = 0;
  require(read_pod(is, version) && version == kFstkVersion, ErrorKind::Decode,
          "unsupported FSTK version");
  std::uint64_t header_len = 0;
  require(read_pod(is, header_len) && header_len > 0 && header_len < (1u << 30),
          ErrorKind::Decode, "bad FSTK header length");
  std::string header(header_len, '\0');
  is.read(header.data(), static_cast<std::streamsize>(header_len));
  require(static_cast<bool>(is), ErrorKind::Decode, "FSTK header truncated");

  json meta;
  try {
    meta = json::parse(header);
  } catch (const json::exception& e) {
    fail(ErrorKind::Decode, std::string("FSTK metadata is not valid JSON: ") +
                                e.what());
  }

  try {
    const int d = meta.at("d").get<int>();
    require(d >= 1 && d <= kMaxOrder, ErrorKind::Decode, "bad model order");
    std::vector<Index> ranks = meta.at("ranks").get<std::vector<Index>>();
    require(static_cast<int>(ranks.size()) == d, ErrorKind::Decode,
            "rank list does not match order");

    ModelMetadata mm;
    mm.grid_sizes = meta.at("grid_sizes").get<std::vector<Index>>();
    mm.epsilon = meta.at("epsilon").get<double>();
    mm.achieved_error = meta.at("achieved_error").get<double>();
    mm.flagged_fits = meta.at("flagged_fits").get<int>();
    mm.provenance = meta.at("provenance").get<std::string>();

    DenseTensor core(ranks);
    is.read(reinterpret_cast<char*>(core.data()),
            static_cast<std::streamsize>(core.size() * sizeof(double)));
    require(static_cast<bool>(is), ErrorKind::Decode, "FSTK core truncated");

    const json& jmodes = meta.at("modes");
    require(static_cast<int>(jmodes.size()) == d, ErrorKind::Decode,
            "mode list does not match order");
    std::vector<std::vector<ModeFunction>> modes(static_cast<std::size_t>(d));
    for (int k = 0; k < d; ++k) {
      const json& jm = jmodes.at(static_cast<std::size_t>(k));
      require(static_cast<Index>(jm.size()) == ranks[static_cast<std::size_t>(k)],
              ErrorKind::Decode, "function count does not match rank");
      for (const json& jf : jm) {
        ModeFunction fn;
        BasisSpec b;
        b.family = family_from(jf.at("family").get<std::string>());
        b.degree = jf.at("degree").get<int>();
        b.resolution = jf.at("resolution").get<int>();
        b.lo = jf.at("lo").get<double>();
        b.hi = jf.at("hi").get<double>();
        validate(b);
        fn.fit.basis = b;
        fn.fit.chosen_lambda = jf.at("lambda").get<double>();
        fn.fit.loo_error = jf.at("loo").get<double>();
        fn.fit.residual_rel = jf.at("residual").get<double>();
        fn.flagged = jf.at("flagged").get<bool>();
        const std::uint32_t nnz_meta = jf.at("nnz").get<std::uint32_t>();
        std::uint32_t nnz = 0;
        require(read_pod(is, nnz) && nnz == nnz_meta, ErrorKind::Decode,
                "FSTK coefficient count mismatch");
        std::vector<std::uint32_t> idx(nnz);
        is.read(reinterpret_cast<char*>(idx.data()),
                static_cast<std::streamsize>(nnz * sizeof(std::uint32_t)));
        std::vector<double> val(nnz);
        is.read(reinterpret_cast<char*>(val.data()),
                static_cast<std::streamsize>(nnz * sizeof(double)));
        require(static_cast<bool>(is), ErrorKind::Decode,
                "FSTK coefficients truncated");
        for (std::uint32_t i = 0; i < nnz; ++i)
          fn.fit.coeffs.emplace_back(idx[i], val[i]);
        modes[static_cast<std::size_t>(k)].push_back(std::move(fn));
      }
    }
    is.peek();
    require(is.eof(), ErrorKind::Decode, "FSTK trailing bytes");
    return FunctionalSparseTuckerModel(std::move(core), std::move(modes),
                                       std::move(mm));
  } catch (const json::exception& e) {
    fail(ErrorKind::Decode,
         std::string("FSTK metadata missing fields: ") + e.what());
  }
}

}  // namespace fstk
