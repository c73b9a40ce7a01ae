#pragma once

// Numerical membership witnesses for the function classes C_c^n, D_c^n,
// F_c^n, W_n and H_n. Each condition is reported with its value and one of
// three verdicts; "inconclusive" means the sufficient test could not decide.

#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "specshift/errors.hpp"
#include "specshift/quadrature.hpp"
#include "specshift/scalar_function.hpp"

namespace specshift {

enum class WitnessVerdict { Holds, Fails, Inconclusive };

inline std::string to_string(WitnessVerdict v) {
  switch (v) {
    case WitnessVerdict::Holds: return "holds";
    case WitnessVerdict::Fails: return "fails";
    case WitnessVerdict::Inconclusive: return "inconclusive";
  }
  return "?";
}

struct WitnessCondition {
  std::string name;
  double value = 0.0;
  WitnessVerdict verdict = WitnessVerdict::Inconclusive;
  std::string note;
};

struct WitnessReport {
  ClassTag tag;
  std::vector<WitnessCondition> conditions;

  bool holds() const {
    for (const auto& c : conditions) {
      if (c.verdict != WitnessVerdict::Holds) return false;
    }
    return true;
  }
};

namespace detail {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Points where f^(k) may jump: declared breakpoints and support ends.
inline std::vector<double> suspect_points(const ScalarFunction& f) {
  std::vector<double> p = f.breakpoints();
  if (f.support()) {
    p.push_back(f.support()->lo);
    p.push_back(f.support()->hi);
  }
  std::sort(p.begin(), p.end());
  p.erase(std::unique(p.begin(), p.end()), p.end());
  return p;
}

// Location of the first jump of f^(k), or NaN if none is seen.
inline double find_jump(const ScalarFunction& f, int k) {
  const double scale = 1.0 + f.sup_norm(k);
  for (double b : suspect_points(f)) {
    const double d = 1e-9 * (1.0 + std::abs(b));
    const double jump = std::abs(f.derivative(b + d, k) - f.derivative(b - d, k));
    if (jump > 1e-6 * scale) return b;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

// Tail exponent of |f^(k)(x)| |u(x)|^j (1 + |x|)^w under a power envelope.
inline double decay_exponent(const DecayEnvelope& e, int k, double growth) { return e.power + k - growth; }

// \int |f^(k)(x)|^q rho(x) dx over the real line, where rho grows like |x|^growth.
// Compact supports integrate piecewise; power envelopes integrate a window
// and add the analytic tail; Gaussian envelopes integrate their window.
template <typename Rho>
double moment_integral(const ScalarFunction& f, int k, int q, Rho&& rho, double growth) {
  auto integrand = [&](double x) { return std::pow(std::abs(f.derivative(x, k)), q) * rho(x); };
  if (f.support()) {
    return integrate_pieces(integrand, f.support()->lo, f.support()->hi, f.breakpoints(), 1e-10).value;
  }
  if (!f.envelope()) throw CapabilityError(f.name() + ": noncompact support without a decay envelope");
  const auto& e = *f.envelope();
  if (e.kind == DecayEnvelope::Kind::Gaussian) {
    const Interval w = f.sampling_window();
    std::vector<double> cuts = f.breakpoints();
    for (int i = 1; i < 8; ++i) cuts.push_back(w.lo + w.length() * i / 8.0);
    return integrate_pieces(integrand, w.lo, w.hi, cuts, 1e-10).value;
  }
  const double tail_exp = q * decay_exponent(e, k, 0.0) - growth;
  if (tail_exp <= 1.0) return kInf;
  const double R = std::min(e.radius, 1e3);
  std::vector<double> cuts = f.breakpoints();
  for (double c : {-100.0, -10.0, -1.0, 0.0, 1.0, 10.0, 100.0}) cuts.push_back(c);
  double v = integrate_pieces(integrand, -R, R, cuts, 1e-10).value;
  // \int_R^inf C x^{-tail_exp} dx with C matched at +-R.
  for (double x : {-R, R}) v += integrand(x) * R / (tail_exp - 1.0);
  return v;
}

inline WitnessCondition weighted_l1_condition(const ScalarFunction& f, int k, int w) {
  WitnessCondition c;
  c.name = "weighted_l1(k=" + std::to_string(k) + ",w=" + std::to_string(w) + ")";
  c.value = moment_integral(
      f, k, 1, [w](double x) { return std::pow(1.0 + std::abs(x), w); }, w);
  c.verdict = std::isfinite(c.value) ? WitnessVerdict::Holds : WitnessVerdict::Fails;
  if (!std::isfinite(c.value)) c.note = "tail not integrable";
  return c;
}

// Is the Fourier transform of h = f^(k) u^j integrable? Necessary: h is
// continuous and vanishes at infinity. Sufficient: h in H^1, where
//   \int |h^| <= sqrt(2 pi^2 (||h||_2^2 + ||h'||_2^2)).
inline WitnessCondition fourier_condition(const ScalarFunction& f, int k, int j) {
  WitnessCondition c;
  c.name = "fourier_l1(k=" + std::to_string(k) + ",u^" + std::to_string(j) + ")";
  const double jump = find_jump(f, k);
  if (!std::isnan(jump)) {
    c.verdict = WitnessVerdict::Fails;
    c.value = kInf;
    c.note = "f^(" + std::to_string(k) + ") jumps at " + std::to_string(jump);
    return c;
  }
  if (!f.support() && f.envelope() && f.envelope()->kind == DecayEnvelope::Kind::Power &&
      decay_exponent(*f.envelope(), k, j) <= 0.0) {
    c.verdict = WitnessVerdict::Fails;
    c.value = kInf;
    c.note = "f^(k) u^j does not vanish at infinity";
    return c;
  }
  if (f.depth() < k + 1) {
    c.verdict = WitnessVerdict::Inconclusive;
    c.value = kInf;
    c.note = "depth too small for the H^1 test";
    return c;
  }
  auto u2 = [](double x, int p) { return std::pow(1.0 + x * x, p); };
  const double h2 = moment_integral(
      f, k, 2, [&](double x) { return u2(x, j); }, 2.0 * j);
  const double d2 = moment_integral(
      f, k + 1, 2, [&](double x) { return u2(x, j); }, 2.0 * j);
  const double e2 = j > 0 ? moment_integral(
                                f, k, 2, [&](double x) { return u2(x, j - 1); }, 2.0 * (j - 1))
                          : 0.0;
  const double hp2 = 2.0 * (d2 + j * j * e2);
  c.value = std::sqrt(2.0 * std::numbers::pi * std::numbers::pi * (h2 + hp2));
  c.verdict = std::isfinite(c.value) ? WitnessVerdict::Holds : WitnessVerdict::Inconclusive;
  if (!std::isfinite(c.value)) c.note = "H^1 bound infinite";
  return c;
}

inline WitnessCondition depth_condition(const ScalarFunction& f, int n) {
  WitnessCondition c{"depth>=" + std::to_string(n), static_cast<double>(f.depth()),
                     f.depth() >= n ? WitnessVerdict::Holds : WitnessVerdict::Fails, ""};
  return c;
}

inline WitnessCondition compact_condition(const ScalarFunction& f) {
  WitnessCondition c{"compact_support", 0.0, WitnessVerdict::Fails, "no support declared"};
  if (f.support()) {
    c.value = f.support()->length();
    c.verdict = WitnessVerdict::Holds;
    c.note.clear();
  }
  return c;
}

inline WitnessCondition continuity_condition(const ScalarFunction& f, int k) {
  WitnessCondition c{"continuous(f^(" + std::to_string(k) + "))", 0.0, WitnessVerdict::Holds, ""};
  const double jump = find_jump(f, k);
  if (!std::isnan(jump)) {
    c.verdict = WitnessVerdict::Fails;
    c.value = jump;
    c.note = "jump at " + std::to_string(jump);
  }
  return c;
}

}  // namespace detail

inline WitnessReport class_witness(const ScalarFunction& f, ClassTag tag) {
  if (!f.support() && !f.envelope()) {
    throw CapabilityError(f.name() + ": noncompact support without a decay envelope");
  }
  WitnessReport r{tag, {}};
  const int n = tag.order;
  auto& out = r.conditions;
  switch (tag.cls) {
    case FunctionClass::Cc:
    case FunctionClass::Dc: {
      // For piecewise smooth fixtures a jump in f^(n) is exactly where
      // f^(n-1) fails to be differentiable, so both tags test the same.
      out.push_back(detail::compact_condition(f));
      out.push_back(detail::depth_condition(f, n));
      if (f.depth() < n) break;
      for (int j = 0; j <= n; ++j) out.push_back(detail::continuity_condition(f, j));
      WitnessCondition s{"sup|f^(n)|", f.sup_norm(n), WitnessVerdict::Holds, ""};
      if (!std::isfinite(s.value)) s.verdict = WitnessVerdict::Fails;
      out.push_back(s);
      break;
    }
    case FunctionClass::Fc: {
      out.push_back(detail::compact_condition(f));
      out.push_back(detail::depth_condition(f, n));
      if (f.depth() < n || !f.support()) break;
      for (int j = 0; j + 1 <= n; ++j) out.push_back(detail::continuity_condition(f, j));
      WitnessCondition l2{"l2(f^(n))", detail::moment_integral(f, n, 2, [](double) { return 1.0; }, 0.0),
                          WitnessVerdict::Holds, ""};
      if (!std::isfinite(l2.value)) l2.verdict = WitnessVerdict::Fails;
      out.push_back(l2);
      break;
    }
    case FunctionClass::W: {
      out.push_back(detail::depth_condition(f, n));
      if (f.depth() < n) break;
      for (int k = 0; k <= n; ++k) out.push_back(detail::fourier_condition(f, k, k));
      for (int k = 1; k <= n; ++k) out.push_back(detail::weighted_l1_condition(f, k, k - 1));
      break;
    }
    case FunctionClass::H: {
      out.push_back(detail::depth_condition(f, n));
      if (f.depth() < n) break;
      for (int k = 0; k < n; ++k) {
        out.push_back(detail::fourier_condition(f, k, k));
        out.push_back(detail::fourier_condition(f, k, k + 1));
      }
      for (int k = 0; k <= n; ++k) out.push_back(detail::weighted_l1_condition(f, k, k));
      break;
    }
  }
  return r;
}

inline bool support_within(const ScalarFunction& f, double a, double b) {
  return f.support() && f.support()->lo >= a && f.support()->hi <= b;
}

struct LemmaReport {
  std::vector<double> sup_norms;  // ||f^(j)||_inf, j = 0..k
  std::vector<double> ratios;     // ||f^(j)||_inf / ((b-a)^{k-j} ||f^(k)||_inf)
  bool holds = true;
};

// ||f^(j)||_inf <= (b-a)^{k-j} ||f^(k)||_inf for f in D_c^k((a,b)).
inline LemmaReport check_lemma_l3(const ScalarFunction& f, double a, double b, int k) {
  if (!support_within(f, a, b)) throw CapabilityError(f.name() + ": support not witnessed inside (a,b)");
  if (!class_witness(f, {FunctionClass::Dc, k}).holds()) {
    throw CapabilityError(f.name() + ": D_c^" + std::to_string(k) + " witness failed");
  }
  LemmaReport r;
  for (int j = 0; j <= k; ++j) r.sup_norms.push_back(f.sup_norm(j));
  const double top = r.sup_norms.back();
  for (int j = 0; j <= k; ++j) {
    const double ratio = top == 0.0 ? 0.0 : r.sup_norms[j] / (std::pow(b - a, k - j) * top);
    r.ratios.push_back(ratio);
    if (ratio > 1.0 + 1e-9) r.holds = false;
  }
  return r;
}

}  // namespace specshift
