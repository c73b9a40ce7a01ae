#pragma once

// Spectral shift functions: the exact first-order step function built from
// counting functions, least-squares reconstruction of eta_n for n >= 2 from the
// trace functional f -> tau(R_n(f)), bound and growth certification, and the
// resolvent-expansion identities used to control eta_n on the whole line.
//
// In a finite trace algebra tau(R_n(f)) only sees the jets of f on the spectra
// of H0 and H0 + V, so eta_n is a polynomial of degree <= n-1 on every gap
// between those eigenvalues. The reconstruction basis is exactly that space of
// broken polynomials; the B-spline test family only has to resolve it.

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "specshift/bspline.hpp"
#include "specshift/divided_difference.hpp"
#include "specshift/errors.hpp"
#include "specshift/format.hpp"
#include "specshift/moi.hpp"
#include "specshift/quadrature.hpp"
#include "specshift/scalar_function.hpp"
#include "specshift/spectral_action.hpp"
#include "specshift/trace_algebra.hpp"
#include "specshift/verdict.hpp"

namespace specshift {

namespace detail {

// P_0(t), ..., P_deg(t).
inline std::vector<double> legendre(double t, int deg) {
  std::vector<double> p(static_cast<std::size_t>(deg) + 1);
  p[0] = 1.0;
  if (deg >= 1) p[1] = t;
  for (int k = 1; k < deg; ++k) p[k + 1] = ((2 * k + 1) * t * p[k] - k * p[k - 1]) / (k + 1);
  return p;
}

// Monomial coefficients (in x) of P_k((2x - lo - hi) / (hi - lo)), k = 0..deg.
inline std::vector<std::vector<double>> legendre_monomials(double lo, double hi, int deg) {
  const double alpha = 2.0 / (hi - lo), beta = -(lo + hi) / (hi - lo);
  std::vector<std::vector<double>> P(static_cast<std::size_t>(deg) + 1);
  P[0] = {1.0};
  if (deg >= 1) P[1] = {beta, alpha};
  for (int k = 1; k < deg; ++k) {
    std::vector<double> next(static_cast<std::size_t>(k) + 2, 0.0);
    for (std::size_t i = 0; i < P[k].size(); ++i) {
      next[i] += (2 * k + 1) * beta * P[k][i] / (k + 1);
      next[i + 1] += (2 * k + 1) * alpha * P[k][i] / (k + 1);
    }
    for (std::size_t i = 0; i < P[k - 1].size(); ++i) next[i] -= k * P[k - 1][i] / (k + 1);
    P[k + 1] = std::move(next);
  }
  return P;
}

// Sorted breakpoints with near-duplicates (relative 1e-12) removed.
inline std::vector<double> clean_breaks(std::vector<double> x) {
  std::sort(x.begin(), x.end());
  std::vector<double> r;
  for (double v : x) {
    if (r.empty() || v - r.back() > 1e-12 * (1.0 + std::abs(v))) r.push_back(v);
  }
  return r;
}

}  // namespace detail

// Piecewise polynomial on [breaks.front(), breaks.back()], zero outside. Piece k
// covers (breaks[k], breaks[k+1]] (the first piece also owns its left end), so
// the function is left-continuous like the counting functions it extends.
// Coefficients are Legendre coefficients in the local variable t in [-1, 1].
class PiecewisePolynomial {
 public:
  PiecewisePolynomial() = default;
  PiecewisePolynomial(std::vector<double> breaks, std::vector<std::vector<double>> coeffs)
      : breaks_(std::move(breaks)), coeffs_(std::move(coeffs)) {
    if (breaks_.size() < 2 || coeffs_.size() + 1 != breaks_.size()) {
      throw DomainError("piecewise polynomial needs one coefficient vector per piece");
    }
    if (!std::is_sorted(breaks_.begin(), breaks_.end())) throw DomainError("breakpoints must increase");
  }

  // Legendre projection of g onto degree `deg` on each piece (exact for
  // piecewise polynomials of degree <= 19 whose breaks are among `breaks`).
  template <typename G>
  static PiecewisePolynomial project(G&& g, std::vector<double> breaks, int deg) {
    const auto& rule = gauss_rule<20>();
    std::vector<std::vector<double>> c;
    for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
      const double lo = breaks[k], hi = breaks[k + 1];
      std::vector<double> ck(static_cast<std::size_t>(deg) + 1, 0.0);
      for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
        const double t = rule.nodes[q];
        const double v = g(0.5 * (lo + hi) + 0.5 * (hi - lo) * t);
        const auto P = detail::legendre(t, deg);
        for (int j = 0; j <= deg; ++j) ck[j] += rule.weights[q] * v * P[j] * (2 * j + 1) / 2.0;
      }
      c.push_back(std::move(ck));
    }
    return {std::move(breaks), std::move(c)};
  }

  const std::vector<double>& breaks() const { return breaks_; }
  const std::vector<std::vector<double>>& coefficients() const { return coeffs_; }
  int pieces() const { return static_cast<int>(coeffs_.size()); }
  double lo() const { return breaks_.front(); }
  double hi() const { return breaks_.back(); }
  int degree() const {
    int d = 0;
    for (const auto& c : coeffs_) d = std::max(d, static_cast<int>(c.size()) - 1);
    return d;
  }

  int piece(double x) const {
    if (x < lo() || x > hi()) return -1;
    auto it = std::lower_bound(breaks_.begin() + 1, breaks_.end(), x);
    return static_cast<int>(it - breaks_.begin()) - 1;
  }

  double piece_value(int k, double x) const {
    const double a = breaks_[k], b = breaks_[k + 1];
    const double t = b > a ? (2.0 * x - a - b) / (b - a) : 0.0;
    const auto& c = coeffs_[static_cast<std::size_t>(k)];
    const auto P = detail::legendre(t, static_cast<int>(c.size()) - 1);
    double s = 0.0;
    for (std::size_t j = 0; j < c.size(); ++j) s += c[j] * P[j];
    return s;
  }

  double operator()(double x) const {
    const int k = piece(x);
    return k < 0 ? 0.0 : piece_value(k, x);
  }

  // Gauss quadrature piece by piece; exact for polynomial integrands of
  // degree <= 39 on each piece.
  template <typename G>
  double integrate_pieces_fixed(G&& g) const {
    double s = 0.0;
    for (int k = 0; k < pieces(); ++k) {
      s += gauss_fixed<20>([&](double x) { return g(k, x); }, breaks_[k], breaks_[k + 1]);
    }
    return s;
  }

  double l2_norm() const {
    return std::sqrt(integrate_pieces_fixed([&](int k, double x) {
      const double v = piece_value(k, x);
      return v * v;
    }));
  }

  double l1_norm() const {
    double s = 0.0;
    for (int k = 0; k < pieces(); ++k) {
      const auto& c = coeffs_[static_cast<std::size_t>(k)];
      if (c.size() == 1) {
        s += std::abs(c[0]) * (breaks_[k + 1] - breaks_[k]);
        continue;
      }
      s += integrate([&](double x) { return std::abs(piece_value(k, x)); }, breaks_[k], breaks_[k + 1]).value;
    }
    return s;
  }

  // Values at the left and right ends of each piece and at interior samples.
  double sup_weighted(double power, int samples_per_piece = 64) const {
    double best = 0.0;
    for (int k = 0; k < pieces(); ++k) {
      const double a = breaks_[k], b = breaks_[k + 1];
      for (int i = 0; i <= samples_per_piece; ++i) {
        const double x = a + (b - a) * i / samples_per_piece;
        best = std::max(best, std::abs(piece_value(k, x)) / std::pow(1.0 + std::abs(x), power));
      }
    }
    return best;
  }

  // Subtract the global polynomial with monomial coefficients `p`.
  PiecewisePolynomial minus_polynomial(const std::vector<double>& p) const {
    auto eval = [&](double x) {
      double s = 0.0;
      for (auto it = p.rbegin(); it != p.rend(); ++it) s = s * x + *it;
      return s;
    };
    const int deg = std::max(degree(), static_cast<int>(p.size()) - 1);
    return project([&](double x) { return (*this)(x) - eval(x); }, breaks_, deg);
  }

  // L2-best polynomial of degree <= deg on [lo, hi], monomial coefficients.
  std::vector<double> best_polynomial(int deg) const {
    const double a = lo(), b = hi();
    const auto M = detail::legendre_monomials(a, b, deg);
    std::vector<double> p(static_cast<std::size_t>(deg) + 1, 0.0);
    for (int j = 0; j <= deg; ++j) {
      const double qj = integrate_pieces_fixed([&](int k, double x) {
                          return piece_value(k, x) * detail::legendre((2.0 * x - a - b) / (b - a), deg)[j];
                        }) *
                        (2 * j + 1) / (b - a);
      for (std::size_t i = 0; i < M[j].size(); ++i) p[i] += qj * M[j][i];
    }
    return p;
  }

 private:
  std::vector<double> breaks_;
  std::vector<std::vector<double>> coeffs_;
};

// Difference of two piecewise polynomials on the union of their breaks,
// restricted to the common window.
inline PiecewisePolynomial difference(const PiecewisePolynomial& a, const PiecewisePolynomial& b) {
  const double lo = std::max(a.lo(), b.lo()), hi = std::min(a.hi(), b.hi());
  if (!(hi > lo)) throw DomainError("piecewise polynomials do not overlap");
  std::vector<double> br{lo, hi};
  for (double x : a.breaks()) {
    if (x > lo && x < hi) br.push_back(x);
  }
  for (double x : b.breaks()) {
    if (x > lo && x < hi) br.push_back(x);
  }
  return PiecewisePolynomial::project([&](double x) { return a(x) - b(x); }, detail::clean_breaks(br),
                                      std::max(a.degree(), b.degree()));
}

enum class SsfProvenance { CountingExact, Reconstructed };
enum class SsfGauge { None, L2Orthogonal, Support };

inline std::string to_string(SsfProvenance p) {
  return p == SsfProvenance::CountingExact ? "counting-exact" : "reconstructed";
}

inline std::string to_string(SsfGauge g) {
  switch (g) {
    case SsfGauge::None: return "none";
    case SsfGauge::L2Orthogonal: return "l2-orthogonal";
    case SsfGauge::Support: return "support";
  }
  return "?";
}

struct ReconstructionDiagnostics {
  int family_members = 0;
  int fitted = 0;
  int unknowns = 0;
  int rank = 0;
  double condition = 0.0;  // sigma_max / smallest sigma kept in the rank
  double fit_residual = 0.0;
  double held_out_residual = 0.0;  // max over held-out members, relative to certified_l1 ||f^(n)||_inf
  double max_imag = 0.0;
};

struct SpectralShiftFunction {
  int order = 1;
  PiecewisePolynomial eta;
  std::vector<double> grid;
  std::vector<double> values;
  SsfGauge gauge = SsfGauge::None;
  double certified_l1 = 0.0;
  SsfProvenance provenance = SsfProvenance::CountingExact;
  std::optional<ReconstructionDiagnostics> diagnostics;

  double lo() const { return eta.lo(); }
  double hi() const { return eta.hi(); }
  double operator()(double x) const { return eta(x); }

  // int f^(k) eta over the window, adaptive on the merged breakpoints.
  cplx integrate_against(const ScalarFunction& f, int k) const {
    double a = lo(), b = hi();
    if (f.support()) {
      a = std::max(a, f.support()->lo);
      b = std::min(b, f.support()->hi);
    }
    if (!(b > a)) return 0.0;
    std::vector<double> cuts = eta.breaks();
    cuts.insert(cuts.end(), f.breakpoints().begin(), f.breakpoints().end());
    auto re = integrate_pieces([&](double x) { return f.derivative(x, k).real() * eta(x); }, a, b, cuts);
    if (f.real_valued()) return re.value;
    auto im = integrate_pieces([&](double x) { return f.derivative(x, k).imag() * eta(x); }, a, b, cuts);
    return {re.value, im.value};
  }
};

// Uniform grid of `size` points on [lo, hi], nudged 1e-9 off any breakpoint.
inline std::vector<double> ssf_grid(double lo, double hi, int size, const std::vector<double>& breaks) {
  if (size < 2) throw DomainError("grid needs at least two points");
  std::vector<double> g(static_cast<std::size_t>(size));
  for (int i = 0; i < size; ++i) {
    double x = lo + (hi - lo) * i / (size - 1);
    for (double b : breaks) {
      if (b > lo && b < hi && std::abs(x - b) < 1e-9) x = b + (x < hi ? 1e-9 : -1e-9);
    }
    g[static_cast<std::size_t>(i)] = x;
  }
  g.back() = hi;
  return g;
}

namespace detail {

inline void finish_ssf(SpectralShiftFunction& s, int grid_size) {
  s.grid = ssf_grid(s.lo(), s.hi(), grid_size, s.eta.breaks());
  s.values.resize(s.grid.size());
  for (std::size_t i = 0; i < s.grid.size(); ++i) s.values[i] = s.eta(s.grid[i]);
  s.certified_l1 = s.eta.l1_norm();
}

inline std::vector<double> spectra_in(const SelfAdjointOperator& h0, const SelfAdjointOperator& h1, double a,
                                      double b) {
  std::vector<double> x{a, b};
  for (const auto* h : {&h0, &h1}) {
    for (double l : h->all_eigenvalues()) {
      if (l > a && l < b) x.push_back(l);
    }
  }
  return clean_breaks(x);
}

}  // namespace detail

// eta_1(lambda) = tau(E_H0([a, lambda))) - tau(E_{H0+V}([a, lambda))), stored
// with its exact jump locations.
inline SpectralShiftFunction ssf_first_order(const SelfAdjointOperator& h0, const AlgebraElement& v, double a,
                                             double b, int grid_size = 512) {
  if (!(a < b)) throw DomainError("ssf window needs a < b");
  SelfAdjointOperator h1(h0.element() + v);
  const auto breaks = detail::spectra_in(h0, h1, a, b);
  std::vector<std::vector<double>> c;
  for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
    const auto iv = SpectralInterval::half_open(a, breaks[k + 1]);
    c.push_back({h0.counting(iv) - h1.counting(iv)});
  }
  SpectralShiftFunction s;
  s.order = 1;
  s.eta = PiecewisePolynomial(breaks, std::move(c));
  s.provenance = SsfProvenance::CountingExact;
  detail::finish_ssf(s, grid_size);
  return s;
}

// B-spline test functions of degree n+1 on [a, b]. Every piece between
// consecutive breaks gets at least `min_per_piece` knots, placed at cell
// midpoints so no knot coincides with an eigenvalue; `extra` adds knots per
// piece, and families built with different `extra` parity share no member.
struct FamilyOptions {
  int intervals = 128;
  int min_per_piece = 0;  // 0 means n + 3
  int extra = 0;
  int held_out_stride = 7;
};

class TestFunctionFamily {
 public:
  TestFunctionFamily(double a, double b, const std::vector<double>& breaks, int n, const FamilyOptions& opt)
      : order_(n), basis_(knots(a, b, breaks, n, opt), n + 1) {
    for (int i = 0; i < basis_.size(); ++i) {
      if (opt.held_out_stride > 0 && i % opt.held_out_stride == opt.held_out_stride / 2) {
        held_out_.push_back(i);
      } else {
        fitted_.push_back(i);
      }
    }
  }

  int order() const { return order_; }
  int size() const { return basis_.size(); }
  const BSplineBasis& basis() const { return basis_; }
  const std::vector<int>& fitted() const { return fitted_; }
  const std::vector<int>& held_out() const { return held_out_; }
  ScalarFunction member(int i) const { return basis_.function(i).with_tag(FunctionClass::Fc, order_); }

  // sup |B_i^(n)|: the n-th derivative is piecewise linear, so knots suffice.
  double derivative_sup(int i) const {
    double s = 0.0;
    for (int j = i; j <= i + basis_.degree() + 1; ++j) {
      const double x = basis_.knots()[static_cast<std::size_t>(j)];
      s = std::max(s, std::abs(basis_.jet(i, x, order_).derivative(order_)));
      if (j > i) {
        const double xl = std::nextafter(x, -kInfinity);
        s = std::max(s, std::abs(basis_.jet(i, xl, order_).derivative(order_)));
      }
    }
    return s;
  }

 private:
  static std::vector<double> knots(double a, double b, const std::vector<double>& breaks, int n,
                                   const FamilyOptions& opt) {
    const int m = opt.min_per_piece > 0 ? opt.min_per_piece : n + 3;
    const double h = (b - a) / std::max(1, opt.intervals);
    std::vector<double> t{a};
    for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
      const double lo = breaks[k], hi = breaks[k + 1];
      const int s = std::max(m, static_cast<int>(std::ceil((hi - lo) / h))) + opt.extra;
      for (int j = 0; j < s; ++j) t.push_back(lo + (hi - lo) * (j + 0.5) / s);
    }
    t.push_back(b);
    return t;
  }

  int order_;
  BSplineBasis basis_;
  std::vector<int> fitted_;
  std::vector<int> held_out_;
};

struct ReconstructOptions {
  int grid_size = 512;
  FamilyOptions family;
  SsfGauge gauge = SsfGauge::L2Orthogonal;
  double tikhonov = 1e-10;   // relative to sigma_max
  double rank_tol = 1e-9;    // relative to sigma_max
  double imag_tol = 1e-9;
};

// Reconstruct eta_n on [a, b] from int f_j^(n) eta = tau(R_n(f_j)) over a
// B-spline family.
inline SpectralShiftFunction ssf_reconstruct(const SelfAdjointOperator& h0, const AlgebraElement& v, int n,
                                             double a, double b, const ReconstructOptions& opt = {}) {
  if (n < 2 || n > 6) throw DomainError("reconstruction covers 2 <= n <= 6");
  if (!(a < b)) throw DomainError("ssf window needs a < b");
  SelfAdjointOperator h1(h0.element() + v);
  const auto breaks = detail::spectra_in(h0, h1, a, b);
  const int pieces = static_cast<int>(breaks.size()) - 1;
  const int unknowns = pieces * n;
  TestFunctionFamily family(a, b, breaks, n, opt.family);
  const auto& basis = family.basis();

  // Gram entries int B_i^(n) psi_j over each piece. Integrating by parts n
  // times leaves only end-point terms, since psi_j has degree n - 1:
  //   sum_m (-1)^m [B_i^(n-1-m) psi_j^(m)] at the piece ends.
  // These are exact and carry no cancellation from the interior.
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(family.size(), unknowns);
  std::vector<std::vector<double>> dleg(static_cast<std::size_t>(n));  // psi_j^(m)(1) in t
  for (int j = 0; j < n; ++j) {
    for (int m = 0; m < n; ++m) {
      double d = 0.0;
      if (m <= j) {
        d = 1.0;
        for (int q = j - m + 1; q <= j + m; ++q) d *= q;
        for (int q = 0; q < m; ++q) d /= 2.0 * (q + 1);
      }
      dleg[j].push_back(d);
    }
  }
  for (int k = 0; k <= pieces; ++k) {
    const double x = breaks[k];
    int first = 0;
    const auto N = basis.local_jets(x, n - 1, first);
    for (int side = 0; side < 2; ++side) {
      const int p = side == 0 ? k - 1 : k;  // x is the right end of piece k-1, the left end of piece k
      if (p < 0 || p >= pieces) continue;
      const double scale = 2.0 / (breaks[p + 1] - breaks[p]);
      const double sign = side == 0 ? 1.0 : -1.0;
      for (std::size_t r = 0; r < N.size(); ++r) {
        const int i = first + static_cast<int>(r);
        if (i < 0 || i >= family.size()) continue;
        for (int j = 0; j < n; ++j) {
          double acc = 0.0, sm = 1.0;
          for (int m = 0; m < n; ++m) {
            const double end = side == 0 ? dleg[j][m] : ((j + m) % 2 ? -dleg[j][m] : dleg[j][m]);
            acc += (m % 2 ? -1.0 : 1.0) * N[r].derivative(n - 1 - m) * end * sm;
            sm *= scale;
          }
          G(i, p * n + j) += sign * acc;
        }
      }
    }
  }

  // Right-hand sides. Members whose support misses both spectra see nothing.
  const auto ev0 = h0.all_eigenvalues(), ev1 = h1.all_eigenvalues();
  ReconstructionDiagnostics diag;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(family.size());
  for (int i = 0; i < family.size(); ++i) {
    const double lo = basis.support_lo(i), hi = basis.support_hi(i);
    auto inside = [&](double l) { return l > lo && l < hi; };
    if (std::none_of(ev0.begin(), ev0.end(), inside) && std::none_of(ev1.begin(), ev1.end(), inside)) continue;
    const cplx r = remainder_trace(family.member(i), h0, h1, v, n);
    diag.max_imag = std::max(diag.max_imag, std::abs(r.imag()) / (1.0 + std::abs(r)));
    rhs[i] = r.real();
  }
  if (diag.max_imag > opt.imag_tol) {
    throw ReconstructionError("trace functional has imaginary part " + format_double(diag.max_imag));
  }

  // Row-normalized least squares with Tikhonov regularization. A member
  // supported inside one gap has an all-zero row and is dropped.
  std::vector<int> fit;
  for (int i : family.fitted()) {
    if (G.row(i).norm() > 0.0) fit.push_back(i);
  }
  Eigen::MatrixXd A(static_cast<Eigen::Index>(fit.size()), unknowns);
  Eigen::VectorXd y(static_cast<Eigen::Index>(fit.size()));
  for (std::size_t r = 0; r < fit.size(); ++r) {
    const double s = G.row(fit[r]).norm();
    const double w = s > 0.0 ? 1.0 / s : 0.0;
    A.row(static_cast<Eigen::Index>(r)) = G.row(fit[r]) * w;
    y[static_cast<Eigen::Index>(r)] = rhs[fit[r]] * w;
  }
  Eigen::VectorXd colscale(unknowns);
  for (int j = 0; j < unknowns; ++j) {
    const double s = A.col(j).norm();
    colscale[j] = s > 0.0 ? 1.0 / s : 1.0;
    A.col(j) *= colscale[j];
  }
  Eigen::BDCSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sig = svd.singularValues();
  const double smax = sig.size() ? sig[0] : 0.0;

  const double mu = opt.tikhonov * smax;
  Eigen::VectorXd uty = svd.matrixU().transpose() * y;
  Eigen::VectorXd z = Eigen::VectorXd::Zero(sig.size());
  for (Eigen::Index k = 0; k < sig.size(); ++k) {
    if (sig[k] > opt.rank_tol * smax) {
      ++diag.rank;
      diag.condition = smax / sig[k];
    }
    if (sig[k] > 0.0) z[k] = sig[k] / (sig[k] * sig[k] + mu * mu) * uty[k];
  }
  Eigen::VectorXd coef = (svd.matrixV() * z).cwiseProduct(colscale);
  diag.family_members = family.size();
  diag.fitted = static_cast<int>(fit.size());
  diag.unknowns = unknowns;
  diag.fit_residual = y.size() ? (A * (svd.matrixV() * z) - y).norm() / std::max(1e-300, y.norm()) : 0.0;
  if (y.norm() > 0.0 && diag.rank < unknowns - n) {
    std::ostringstream os;
    os << "rank " << diag.rank << " below " << unknowns - n << " (unknowns " << unknowns << ", fitted members "
       << fit.size() << ", sigma_max " << format_double(smax) << ", sigma_min "
       << format_double(sig.size() ? sig[sig.size() - 1] : 0.0) << ")";
    throw ReconstructionError(os.str());
  }

  std::vector<std::vector<double>> c(static_cast<std::size_t>(pieces));
  for (int p = 0; p < pieces; ++p) c[p].assign(coef.data() + p * n, coef.data() + (p + 1) * n);
  SpectralShiftFunction s;
  s.order = n;
  s.eta = PiecewisePolynomial(breaks, std::move(c));
  s.provenance = SsfProvenance::Reconstructed;
  s.gauge = opt.gauge;

  if (opt.gauge == SsfGauge::L2Orthogonal) {
    s.eta = s.eta.minus_polynomial(s.eta.best_polynomial(n - 1));
  } else if (opt.gauge == SsfGauge::Support) {
    // The natural representative vanishes left of both spectra.
    const double left = std::min(h0.min_eigenvalue(), h1.min_eigenvalue());
    if (!(a < left)) throw DomainError("support gauge needs the window to start below both spectra");
    const auto first = PiecewisePolynomial::project([&](double x) { return s.eta.piece_value(0, x); },
                                                    {breaks[0], breaks[1]}, n - 1);
    s.eta = s.eta.minus_polynomial(first.best_polynomial(n - 1));
    auto c0 = s.eta.coefficients();
    std::fill(c0[0].begin(), c0[0].end(), 0.0);
    s.eta = PiecewisePolynomial(s.eta.breaks(), std::move(c0));
  }
  detail::finish_ssf(s, opt.grid_size);

  // Held-out members, judged with the gauged coefficients.
  for (int i : family.held_out()) {
    double pred = 0.0;
    for (int p = 0; p < pieces; ++p) {
      for (int j = 0; j < n; ++j) pred += G(i, p * n + j) * s.eta.coefficients()[p][j];
    }
    const double den = s.certified_l1 * family.derivative_sup(i);
    const double res = std::abs(pred - rhs[i]);
    diag.held_out_residual = std::max(diag.held_out_residual, den > 0.0 ? res / den : res);
  }
  s.diagnostics = diag;
  return s;
}

// |int f^(n) eta - tau(R_n(f))| / (certified_l1 ||f^(n)||_inf).
struct TraceFormulaCheck {
  double integral = 0.0;
  double trace = 0.0;
  double residual = 0.0;
  double relative = 0.0;
};

inline TraceFormulaCheck check_trace_formula(const SpectralShiftFunction& eta, const ScalarFunction& f,
                                             const SelfAdjointOperator& h0, const AlgebraElement& v) {
  SelfAdjointOperator h1(h0.element() + v);
  TraceFormulaCheck r;
  r.integral = eta.integrate_against(f, eta.order).real();
  r.trace = remainder_trace(f, h0, h1, v, eta.order).real();
  r.residual = std::abs(r.integral - r.trace);
  const double den = eta.certified_l1 * f.sup_norm(eta.order);
  r.relative = den > 0.0 ? r.residual / den : r.residual;
  return r;
}

struct EtaBoundReport {
  double l1 = 0.0;
  double D = 0.0;
  double ratio = 0.0;
  Verdict verdict = Verdict::Info;
};

// int |eta| <= D. Only n = 1 has a fully explicit D.
inline EtaBoundReport check_etabound(const SpectralShiftFunction& eta, double D) {
  EtaBoundReport r;
  r.l1 = eta.certified_l1;
  r.D = D;
  r.ratio = D > 0.0 ? r.l1 / D : (r.l1 > 0.0 ? kInfinity : 0.0);
  r.verdict = eta.order == 1 ? check(r.l1 <= D) : Verdict::Info;
  return r;
}

// Half-width R of a window [-R, R] with both spectra inside [-R/2, R/2].
inline double real_line_window(const SelfAdjointOperator& h0, const AlgebraElement& v) {
  SelfAdjointOperator h1(h0.element() + v);
  return 2.0 * std::max({1.0, h0.spectral_radius(), h1.spectral_radius()});
}

struct GrowthReport {
  double K = 0.0;
  double envelope_factor = 0.0;  // (2 + ||V||) ||V||^{n-1} ||(H0 - i)^{-1}||_n^n
  double sup_weighted = 0.0;     // sup |eta(x)| / (1 + |x|)^n
};

inline double growth_envelope_factor(const SelfAdjointOperator& h0, const AlgebraElement& v, int n) {
  const double vn = operator_norm(v);
  return (2.0 + vn) * std::pow(vn, n - 1) * std::pow(schatten_norm(resolvent(h0, cplx(0.0, 1.0)), n), n);
}

// Empirical K_n = sup |eta(x)| / ((2+||V||) ||V||^{n-1} ||(H0-i)^{-1}||_n^n (1+|x|)^n).
inline GrowthReport check_growth_rr0(const SpectralShiftFunction& eta, const SelfAdjointOperator& h0,
                                     const AlgebraElement& v, int n) {
  GrowthReport r;
  r.envelope_factor = growth_envelope_factor(h0, v, n);
  r.sup_weighted = eta.eta.sup_weighted(n);
  if (r.sup_weighted == 0.0) return r;
  r.K = r.envelope_factor > 0.0 ? r.sup_weighted / r.envelope_factor : kInfinity;
  return r;
}

struct UniquenessReport {
  std::vector<double> polynomial;  // monomial coefficients of the fitted eta_B - eta_A
  double residual = 0.0;           // L2 norm of eta_A - eta_B - polynomial
  double relative = 0.0;           // residual / (||eta_A|| + ||eta_B||)
  Verdict verdict = Verdict::Pass;
};

inline UniquenessReport uniqueness_gauge_check(const PiecewisePolynomial& a, const PiecewisePolynomial& b, int n,
                                               double tol = 1e-6) {
  UniquenessReport r;
  const auto d = difference(b, a);
  r.polynomial = d.best_polynomial(n - 1);
  r.residual = d.minus_polynomial(r.polynomial).l2_norm();
  const double scale = a.l2_norm() + b.l2_norm();
  r.relative = scale > 0.0 ? r.residual / scale : r.residual;
  r.verdict = check(r.relative <= tol);
  return r;
}

inline UniquenessReport uniqueness_gauge_check(const SpectralShiftFunction& a, const SpectralShiftFunction& b,
                                               double tol = 1e-6) {
  if (a.order != b.order) throw DomainError("uniqueness check needs equal orders");
  return uniqueness_gauge_check(a.eta, b.eta, a.order, tol);
}

// ---------------------------------------------------------------------------
// Resolvent-expansion identities
// ---------------------------------------------------------------------------

struct IdentityDefect {
  double defect = 0.0;  // ||LHS - RHS||
  double scale = 1.0;   // 1 + ||LHS||
  bool within(double tol) const { return defect <= tol * scale; }
};

// f u^p
inline ScalarFunction times_u_power(const ScalarFunction& f, int p) {
  return p == 0 ? f : (f * fixtures::u_power(p)).renamed(f.name() + "*u^" + std::to_string(p));
}

// Scalar expansion of f^[n-1](l_0, ..., l_{n-1}) through (f u^p)^[p] over the
// subsets {j_1 < ... < j_p} of {1, ..., n-1}.
inline IdentityDefect identity_check_dd1(const ScalarFunction& f, const std::vector<double>& nodes,
                                         const DividedDifferenceOptions& opt = {}) {
  const int n = static_cast<int>(nodes.size());
  if (n < 1) throw DomainError("need at least one node");
  if (n > 20) throw CapabilityError("subset enumeration capped at 20 nodes");
  const cplx lhs = divided_difference(f, nodes, opt);
  std::vector<ScalarFunction> fu;
  for (int p = 0; p < n; ++p) fu.push_back(times_u_power(f, p));
  cplx prod = 1.0;
  for (int i = 1; i < n; ++i) prod /= cplx(nodes[static_cast<std::size_t>(i)], -1.0);
  cplx rhs = 0.0;
  for (unsigned mask = 0; mask < (1u << (n - 1)); ++mask) {
    std::vector<double> sub{nodes[0]};
    for (int i = 1; i < n; ++i) {
      if (mask & (1u << (i - 1))) sub.push_back(nodes[static_cast<std::size_t>(i)]);
    }
    const int p = static_cast<int>(sub.size()) - 1;
    const double sign = (n - 1 - p) % 2 ? -1.0 : 1.0;
    rhs += sign * divided_difference(fu[static_cast<std::size_t>(p)], sub, opt);
  }
  rhs *= prod;
  return {std::abs(lhs - rhs), 1.0 + std::abs(lhs)};
}

// Compositions (j_1, ..., j_{p+1}) of total with j_1..j_p >= 1, j_{p+1} >= 0,
// in lexicographic order.
inline std::vector<std::vector<int>> compositions(int total, int p) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur;
  auto rec = [&](auto&& self, int left, int slot) -> void {
    if (slot == p) {
      cur.push_back(left);
      out.push_back(cur);
      cur.pop_back();
      return;
    }
    for (int j = 1; j <= left; ++j) {
      cur.push_back(j);
      self(self, left - j, slot + 1);
      cur.pop_back();
    }
  };
  rec(rec, total, 0);
  return out;
}

namespace detail {

// T^{Ht, H0, ..., H0}_{g^[k]}(X_1, ..., X_k); k = 0 gives g(Ht).
inline AlgebraElement moi_or_function(const ScalarFunction& g, const SelfAdjointOperator& h0,
                                      const SelfAdjointOperator& ht, std::vector<AlgebraElement> xs) {
  if (xs.empty()) return apply_function(g, ht);
  return moi_eval({g, h0, ht, std::move(xs)}).element;
}

}  // namespace detail

// Operator expansion of T^{Ht,H0,...,H0}_{f^[n-1]}(V, ..., V) with
// Vt = V (H0 - i)^{-1}.
inline IdentityDefect identity_check_ddd1(const ScalarFunction& f, const SelfAdjointOperator& h0,
                                          const AlgebraElement& v, double t, int n) {
  if (n < 1) throw DomainError("identity order must be >= 1");
  if (n > 6) throw CapabilityError("composition enumeration capped at n <= 6");
  if (f.depth() < n) throw CapabilityError(f.name() + ": depth below " + std::to_string(n));
  const auto R = resolvent(h0, cplx(0.0, 1.0));
  const auto Vt = v * R;
  SelfAdjointOperator ht(h0.element() + cplx(t) * v);
  const auto alg = h0.algebra();
  std::vector<AlgebraElement> vpow{AlgebraElement::identity(alg)};
  for (int j = 1; j < n; ++j) vpow.push_back(vpow.back() * Vt);

  const auto lhs = detail::moi_or_function(f, h0, ht, std::vector<AlgebraElement>(static_cast<std::size_t>(n - 1), v));
  const double lead = (n - 1) % 2 ? -1.0 : 1.0;
  AlgebraElement rhs = cplx(lead) * (apply_function(f, ht) * vpow[static_cast<std::size_t>(n - 1)]);
  for (int p = 1; p <= n - 1; ++p) {
    const auto g1 = times_u_power(f, p + 1);
    const auto g0 = times_u_power(f, p);
    const double sign = (n - p - 1) % 2 ? -1.0 : 1.0;
    for (const auto& j : compositions(n - 1, p)) {
      std::vector<AlgebraElement> xs;
      for (int l = 0; l < p; ++l) xs.push_back(vpow[static_cast<std::size_t>(j[l])]);
      xs.back() = xs.back() * R;
      const auto tail = vpow[static_cast<std::size_t>(j[p])];
      auto term = detail::moi_or_function(g1, h0, ht, xs) * tail;
      std::vector<AlgebraElement> ys;
      for (int l = 0; l + 1 < p; ++l) ys.push_back(vpow[static_cast<std::size_t>(j[l])]);
      term -= detail::moi_or_function(g0, h0, ht, ys) * vpow[static_cast<std::size_t>(j[p - 1])] * R * tail;
      rhs += cplx(sign) * term;
    }
  }
  return {operator_norm(lhs - rhs), 1.0 + operator_norm(lhs)};
}

// T^{H0+V,H0}_{f^[1]}(V) = T^{H0+V,H0}_{(fu)^[1]}(Vt) - f(H0+V) Vt.
inline IdentityDefect identity_check_dd(const ScalarFunction& f, const SelfAdjointOperator& h0,
                                        const AlgebraElement& v) {
  const auto Vt = v * resolvent(h0, cplx(0.0, 1.0));
  SelfAdjointOperator h1(h0.element() + v);
  const auto lhs = moi_eval({f, h0, h1, {v}}).element;
  const auto rhs = moi_eval({times_u_power(f, 1), h0, h1, {Vt}}).element - apply_function(f, h1) * Vt;
  return {operator_norm(lhs - rhs), 1.0 + operator_norm(lhs)};
}

// |tau(R_1)| <= ||f u||_inf (2 + ||V||) ||(H0 - i)^{-1}||_1.
struct ResolventBoundReport {
  double abs_trace = 0.0;
  double bound = 0.0;
  double ratio = 0.0;
  Verdict verdict = Verdict::Pass;
};

inline ResolventBoundReport check_resolvent_bound_n1(const ScalarFunction& f, const SelfAdjointOperator& h0,
                                                     const AlgebraElement& v) {
  SelfAdjointOperator h1(h0.element() + v);
  ResolventBoundReport r;
  r.abs_trace = std::abs(remainder_trace(f, h0, h1, v, 1));
  r.bound = times_u_power(f, 1).sup_norm(0) * (2.0 + operator_norm(v)) *
            schatten_norm(resolvent(h0, cplx(0.0, 1.0)), 1.0);
  r.ratio = r.bound > 0.0 ? r.abs_trace / r.bound : 0.0;
  r.verdict = check(r.abs_trace <= r.bound * (1.0 + 1e-12));
  return r;
}

// Two-column CSV of the grid samples.
inline std::string ssf_csv(const SpectralShiftFunction& s) {
  std::string out = "lambda,eta\n";
  for (std::size_t i = 0; i < s.grid.size(); ++i) {
    out += format_double(s.grid[i]) + "," + format_double(s.values[i]) + "\n";
  }
  return out;
}

}  // namespace specshift
