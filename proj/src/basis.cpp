#include "fstk/basis.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <map>
#include <mutex>

namespace fstk {

BasisSpec BasisSpec::legendre(int p, double lo, double hi) {
  BasisSpec s{BasisFamily::Legendre, p, 0, lo, hi};
  validate(s);
  return s;
}

BasisSpec BasisSpec::wavelet(int s, int p, double lo, double hi) {
  BasisSpec b{BasisFamily::Wavelet, p, s, lo, hi};
  validate(b);
  return b;
}

BasisSpec BasisSpec::with_domain(double lo, double hi) const {
  BasisSpec b = *this;
  b.lo = lo;
  b.hi = hi;
  validate(b);
  return b;
}

void validate(const BasisSpec& spec) {
  require(spec.degree >= 0 && spec.degree <= 64, ErrorKind::Parameter,
          "basis degree must be in [0, 64]");
  if (spec.family == BasisFamily::Legendre) {
    require(spec.resolution == 0, ErrorKind::Parameter,
            "Legendre basis has no resolution parameter");
  } else {
    require(spec.resolution >= 0 && spec.resolution <= 20,
            ErrorKind::Parameter, "wavelet resolution must be in [0, 20]");
    require(static_cast<long long>(spec.degree + 1) << spec.resolution <=
                (1 << 24),
            ErrorKind::Parameter, "basis dimension too large");
  }
  require(spec.lo < spec.hi, ErrorKind::Parameter,
          "basis domain must satisfy lo < hi");
  require(std::isfinite(spec.lo) && std::isfinite(spec.hi),
          ErrorKind::Parameter, "basis domain must be finite");
}

void legendre_values(int p, double t, double* out) {
  // P_0 = 1, P_1 = t, (n+1) P_{n+1} = (2n+1) t P_n - n P_{n-1};
  // normalized against the uniform probability measure: L_n = sqrt(2n+1) P_n.
  double pm1 = 1.0, pm0 = t;
  out[0] = 1.0;
  if (p >= 1) out[1] = std::sqrt(3.0) * t;
  for (int n = 1; n < p; ++n) {
    const double pn1 = ((2 * n + 1) * t * pm0 - n * pm1) / (n + 1);
    pm1 = pm0;
    pm0 = pn1;
    out[n + 1] = std::sqrt(2.0 * (n + 1) + 1.0) * pn1;
  }
}

void gauss_legendre(int n, std::vector<double>& nodes,
                    std::vector<double>& weights) {
  require(n >= 1, ErrorKind::Parameter, "quadrature order must be positive");
  nodes.assign(n, 0.0);
  weights.assign(n, 0.0);
  const int m = (n + 1) / 2;
  for (int j = 0; j < m; ++j) {
    // Tricomi initial guess, then Newton on P_n.
    double x = std::cos(M_PI * (j + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 1; k < n; ++k) {
        const double p2 = ((2 * k + 1) * x * p1 - k * p0) / (k + 1);
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    // One clean evaluation of the derivative at the converged node.
    {
      double p0 = 1.0, p1 = x;
      for (int k = 1; k < n; ++k) {
        const double p2 = ((2 * k + 1) * x * p1 - k * p0) / (k + 1);
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
    }
    nodes[j] = -x;
    nodes[n - 1 - j] = x;
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    weights[j] = w;
    weights[n - 1 - j] = w;
  }
  if (n % 2 == 1) nodes[n / 2] = 0.0;
}

namespace {

// Mother multiwavelets for degree p on the reference interval, expressed in
// the orthonormal split basis
//   chi_{L,i}(x) = sqrt(2) L_i(2x+1) on [-1, 0),   i = 0..p
//   chi_{R,i}(x) = sqrt(2) L_i(2x-1) on [0, 1],
// (orthonormal w.r.t. dx/2). coords is 2(p+1) x (p+1); column m holds the
// chi-coordinates of mother wavelet psi_m.
struct MotherWavelet {
  Matrix coords;
};

MotherWavelet build_mother(int p) {
  const int n = p + 1;
  // Quadrature exact for polynomials through degree 3p + 2 (moment rows go up
  // to x^{2p+1} against degree-p pieces).
  std::vector<double> qx, qw;
  gauss_legendre(2 * p + 4, qx, qw);
  const int nq = static_cast<int>(qx.size());

  // Coordinates of the global Legendre polynomials in the chi basis:
  // Q(side*n + i, j) = <L_j, chi_{side,i}>_mu.
  Matrix q = Matrix::Zero(2 * n, n);
  std::vector<double> lg(n), lh(n);
  for (int side = 0; side < 2; ++side) {
    for (int a = 0; a < nq; ++a) {
      // x on the half interval; t local reference coordinate on the half.
      const double t = qx[a];
      const double x = side == 0 ? 0.5 * (t - 1.0) : 0.5 * (t + 1.0);
      legendre_values(p, x, lg.data());
      legendre_values(p, t, lh.data());
      // d(mu) over the half = (dx)/2 = dt/8 ... folded constants: each half
      // contributes integral over t in [-1,1] with weight qw/2 * (1/2)*sqrt(2)
      // via chi = sqrt(2) L_i(t); overall <L_j, chi_i> over this half:
      //   int L_j(x(t)) sqrt(2) L_i(t) dt/4
      const double w = qw[a] * std::sqrt(2.0) / 4.0;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          q(side * n + i, j) += w * lh[i] * lg[j];
    }
  }

  // Orthonormal complement of span(q) = the wavelet space.
  Eigen::HouseholderQR<Matrix> qr(q);
  Matrix full = qr.householderQ() * Matrix::Identity(2 * n, 2 * n);
  Matrix comp = full.rightCols(n);

  // Canonical rotation: order the complement so wavelet m kills the extra
  // moments x^{p+1}, ..., x^{p+m-1} (Alpert-style hierarchy). The moment
  // matrix M_{t,c} = <x^{p+t+1}, comp_c> rotated by the orthonormal factor of
  // QR(M^T) becomes lower triangular, which is exactly that nesting.
  Matrix moments = Matrix::Zero(n, n);
  for (int side = 0; side < 2; ++side) {
    for (int a = 0; a < nq; ++a) {
      const double t = qx[a];
      const double x = side == 0 ? 0.5 * (t - 1.0) : 0.5 * (t + 1.0);
      legendre_values(p, t, lh.data());
      const double w = qw[a] * std::sqrt(2.0) / 4.0;
      double xpow = std::pow(x, p + 1);
      for (int trow = 0; trow < n; ++trow) {
        for (int i = 0; i < n; ++i) {
          const double chi_val = w * lh[i];
          for (int c = 0; c < n; ++c)
            moments(trow, c) += xpow * chi_val * comp(side * n + i, c);
        }
        xpow *= x;
      }
    }
  }
  Eigen::HouseholderQR<Matrix> mqr(moments.transpose());
  Matrix rot = mqr.householderQ() * Matrix::Identity(n, n);
  Matrix coords = comp * rot;

  // Deterministic signs: the highest-index significant chi coordinate of each
  // wavelet is made positive (for Haar this yields psi = -1 on the left half,
  // +1 on the right).
  for (int m = 0; m < n; ++m) {
    for (int i = 2 * n - 1; i >= 0; --i) {
      if (std::abs(coords(i, m)) > 1e-10) {
        if (coords(i, m) < 0.0) coords.col(m) = -coords.col(m);
        break;
      }
    }
  }
  return MotherWavelet{std::move(coords)};
}

const MotherWavelet& mother_wavelet(int p) {
  static std::mutex mu;
  static std::map<int, MotherWavelet> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(p);
  if (it == cache.end()) it = cache.emplace(p, build_mother(p)).first;
  return it->second;
}

// psi_m values at local reference coordinate t in [-1, 1], all m at once.
void mother_values(const MotherWavelet& mw, int p, double t, double* out) {
  const int n = p + 1;
  std::vector<double> leg(n);
  const int side = t < 0.0 ? 0 : 1;  // halves are [-1, 0) and [0, 1]
  const double local = side == 0 ? 2.0 * t + 1.0 : 2.0 * t - 1.0;
  legendre_values(p, local, leg.data());
  const double s2 = std::sqrt(2.0);
  for (int m = 0; m < n; ++m) {
    double v = 0.0;
    for (int i = 0; i < n; ++i) v += mw.coords(side * n + i, m) * s2 * leg[i];
    out[m] = v;
  }
}

double to_reference(const BasisSpec& spec, double x) {
  const double span = spec.hi - spec.lo;
  const double slack = 1e-12 * span;
  require(x >= spec.lo - slack && x <= spec.hi + slack, ErrorKind::Domain,
          "point outside basis domain");
  const double clamped = std::min(spec.hi, std::max(spec.lo, x));
  return -1.0 + 2.0 * (clamped - spec.lo) / span;
}

}  // namespace

void eval_basis(const BasisSpec& spec, double x, double* out) {
  validate(spec);
  const double t = to_reference(spec, x);
  const int p = spec.degree;
  const int n1 = p + 1;
  if (spec.family == BasisFamily::Legendre) {
    legendre_values(p, t, out);
    return;
  }
  const int dim = spec.dimension();
  std::fill(out, out + dim, 0.0);
  legendre_values(p, t, out);  // level-0 block
  if (spec.resolution == 0) return;
  const MotherWavelet& mw = mother_wavelet(p);
  std::vector<double> psi(n1);
  for (int level = 1; level <= spec.resolution; ++level) {
    const Index n_int = Index(1) << (level - 1);
    const double h = 2.0 / static_cast<double>(n_int);
    // Intervals are half-open [a, a+h) with the last closed at +1.
    Index i = static_cast<Index>(std::floor((t + 1.0) / h));
    i = std::min(n_int - 1, std::max<Index>(0, i));
    const double a = -1.0 + h * static_cast<double>(i);
    const double local = 2.0 * (t - a) / h - 1.0;
    mother_values(mw, p, local, psi.data());
    const double scale = std::pow(2.0, 0.5 * (level - 1));
    double* block = out + n1 * (Index(1) << (level - 1)) + i * n1;
    for (int m = 0; m < n1; ++m) block[m] = scale * psi[m];
  }
}

Vector eval_basis(const BasisSpec& spec, double x) {
  Vector v(spec.dimension());
  eval_basis(spec, x, v.data());
  return v;
}

Matrix design_matrix(const BasisSpec& spec, const std::vector<double>& points) {
  validate(spec);
  const Index q = static_cast<Index>(points.size());
  require(q >= 1, ErrorKind::Parameter, "design_matrix: no points");
  Matrix phi(q, spec.dimension());
  Vector row(spec.dimension());
  for (Index r = 0; r < q; ++r) {
    eval_basis(spec, points[static_cast<std::size_t>(r)], row.data());
    phi.row(r) = row;
  }
  return phi;
}

double grid_to_reference(Index i, Index grid_size) {
  require(grid_size >= 2, ErrorKind::Parameter,
          "grid_to_reference: need at least two nodes");
  require(i >= 0 && i < grid_size, ErrorKind::Parameter,
          "grid_to_reference: node index out of range");
  return -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(grid_size - 1);
}

}  // namespace fstk
