#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "specshift/errors.hpp"
#include "specshift/jet.hpp"

namespace specshift {

// Closed interval [lo, hi].
struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double length() const { return hi - lo; }
  bool contains(double x) const { return lo <= x && x <= hi; }
};

enum class FunctionClass { Dc, Fc, Cc, W, H };

inline std::string to_string(FunctionClass c) {
  switch (c) {
    case FunctionClass::Dc: return "D_c";
    case FunctionClass::Fc: return "F_c";
    case FunctionClass::Cc: return "C_c";
    case FunctionClass::W: return "W";
    case FunctionClass::H: return "H";
  }
  return "?";
}

struct ClassTag {
  FunctionClass cls;
  int order;
  auto operator<=>(const ClassTag&) const = default;
};

// Tail behaviour of a function with noncompact support, beyond |x| >= radius:
//   Power:    |f^(k)(x)| ~ C |x|^-(power + k)
//   Gaussian: |f^(k)(x)| ~ C |x|^k exp(-(x - center)^2 / (2 width^2))
struct DecayEnvelope {
  enum class Kind { Power, Gaussian };
  Kind kind = Kind::Power;
  double power = 0.0;
  double center = 0.0;
  double width = 1.0;
  double radius = 1.0;

  // Window outside of which the tail is negligible (Gaussian) or handled
  // analytically (Power).
  double truncation_radius() const {
    if (kind == Kind::Gaussian) return std::abs(center) + 40.0 * width;
    return radius;
  }
};

// Default depth for closed-form fixtures whose derivatives of every order exist.
inline constexpr int kUnlimitedDepth = 64;

// A complex-valued function of one real variable together with its derivative
// stack. Evaluation goes through Taylor jets; metadata (support, breakpoints,
// decay, class tags) drives quadrature windows and the class witnesses.
class ScalarFunction {
 public:
  using Evaluator = std::function<Jet<cplx>(double x, int order)>;

  ScalarFunction() = default;
  ScalarFunction(std::string name, Evaluator eval, int depth, bool real_valued = true)
      : name_(std::move(name)),
        eval_(std::move(eval)),
        depth_(depth),
        real_valued_(real_valued),
        sup_cache_(std::make_shared<SupCache>()) {}

  const std::string& name() const { return name_; }
  int depth() const { return depth_; }
  bool real_valued() const { return real_valued_; }
  const std::optional<Interval>& support() const { return support_; }
  const std::vector<double>& breakpoints() const { return breakpoints_; }
  const std::optional<DecayEnvelope>& envelope() const { return envelope_; }
  const std::set<ClassTag>& class_tags() const { return tags_; }
  bool has_tag(FunctionClass c, int n) const { return tags_.count({c, n}) > 0; }

  ScalarFunction with_support(double lo, double hi) const {
    ScalarFunction r = *this;
    r.support_ = Interval{lo, hi};
    r.sup_cache_ = std::make_shared<SupCache>();
    return r;
  }
  ScalarFunction with_breakpoints(std::vector<double> bp) const {
    ScalarFunction r = *this;
    std::sort(bp.begin(), bp.end());
    bp.erase(std::unique(bp.begin(), bp.end()), bp.end());
    r.breakpoints_ = std::move(bp);
    return r;
  }
  ScalarFunction with_envelope(DecayEnvelope env) const {
    ScalarFunction r = *this;
    r.envelope_ = env;
    r.sup_cache_ = std::make_shared<SupCache>();
    return r;
  }
  ScalarFunction with_tag(FunctionClass c, int n) const {
    ScalarFunction r = *this;
    r.tags_.insert({c, n});
    return r;
  }
  ScalarFunction renamed(std::string name) const {
    ScalarFunction r = *this;
    r.name_ = std::move(name);
    return r;
  }

  Jet<cplx> jet(double x, int order) const {
    if (order > depth_) {
      throw CapabilityError(name_ + ": derivative of order " + std::to_string(order) +
                            " requested, depth is " + std::to_string(depth_));
    }
    return eval_(x, order);
  }

  cplx operator()(double x) const { return eval_(x, 0)[0]; }
  cplx derivative(double x, int k) const { return jet(x, k).derivative(k); }

  // Window used for sampling and quadrature: the support if declared,
  // otherwise the envelope truncation window.
  Interval sampling_window() const {
    if (support_) return *support_;
    if (envelope_) {
      double r = envelope_->truncation_radius();
      return {-r, r};
    }
    throw CapabilityError(name_ + ": neither support nor decay envelope declared");
  }

  // ||f^(k)||_inf by dense sampling of the sampling window followed by a
  // golden-section refinement around the best samples.
  double sup_norm(int k) const {
    {
      std::lock_guard<std::mutex> lock(sup_cache_->mutex);
      auto it = sup_cache_->values.find(k);
      if (it != sup_cache_->values.end()) return it->second;
    }
    double v = compute_sup(k);
    std::lock_guard<std::mutex> lock(sup_cache_->mutex);
    sup_cache_->values.emplace(k, v);
    return v;
  }

  // Pointwise product. Depth is the smaller of the two; supports intersect.
  friend ScalarFunction operator*(const ScalarFunction& f, const ScalarFunction& g) {
    auto fe = f.eval_;
    auto ge = g.eval_;
    ScalarFunction r(
        "(" + f.name_ + ")*(" + g.name_ + ")",
        [fe, ge](double x, int m) { return fe(x, m) * ge(x, m); }, std::min(f.depth_, g.depth_),
        f.real_valued_ && g.real_valued_);
    if (f.support_ && g.support_) {
      r.support_ = Interval{std::max(f.support_->lo, g.support_->lo), std::min(f.support_->hi, g.support_->hi)};
    } else if (f.support_) {
      r.support_ = f.support_;
    } else if (g.support_) {
      r.support_ = g.support_;
    }
    std::vector<double> bp = f.breakpoints_;
    bp.insert(bp.end(), g.breakpoints_.begin(), g.breakpoints_.end());
    r = r.with_breakpoints(std::move(bp));
    if (!r.support_ && f.envelope_ && g.envelope_) {
      DecayEnvelope e = *f.envelope_;
      if (f.envelope_->kind == DecayEnvelope::Kind::Power && g.envelope_->kind == DecayEnvelope::Kind::Power) {
        e.power = f.envelope_->power + g.envelope_->power;
        e.radius = std::max(f.envelope_->radius, g.envelope_->radius);
      } else if (g.envelope_->kind == DecayEnvelope::Kind::Gaussian) {
        e = *g.envelope_;
      }
      r.envelope_ = e;
    } else if (!r.support_ && (f.envelope_ || g.envelope_)) {
      // A polynomial-growth factor times a decaying one keeps the decaying envelope.
      const auto& e = f.envelope_ ? f.envelope_ : g.envelope_;
      if (e->kind == DecayEnvelope::Kind::Gaussian) r.envelope_ = e;
    }
    return r;
  }

  friend ScalarFunction operator*(cplx c, const ScalarFunction& f) {
    auto fe = f.eval_;
    ScalarFunction r = f;
    r.eval_ = [fe, c](double x, int m) { return fe(x, m) * c; };
    r.real_valued_ = f.real_valued_ && c.imag() == 0.0;
    r.name_ = "c*" + f.name_;
    r.sup_cache_ = std::make_shared<SupCache>();
    return r;
  }

 private:
  struct SupCache {
    std::mutex mutex;
    std::map<int, double> values;
  };

  double compute_sup(int k) const {
    const Interval w = sampling_window();
    const int samples = 8192;
    const double h = w.length() / samples;
    auto mag = [&](double x) { return std::abs(jet(x, k).derivative(k)); };
    std::vector<std::pair<double, double>> best;
    for (int i = 0; i <= samples; ++i) {
      double x = w.lo + h * i;
      best.emplace_back(mag(x), x);
    }
    for (double b : breakpoints_) {
      if (w.contains(b)) {
        best.emplace_back(mag(b), b);
        best.emplace_back(mag(b - 1e-12 * (1 + std::abs(b))), b);
      }
    }
    std::partial_sort(best.begin(), best.begin() + std::min<std::size_t>(8, best.size()), best.end(),
                      [](const auto& a, const auto& b) { return a.first > b.first; });
    double sup = best.front().first;
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    for (std::size_t i = 0; i < std::min<std::size_t>(8, best.size()); ++i) {
      double lo = std::max(w.lo, best[i].second - h);
      double hi = std::min(w.hi, best[i].second + h);
      double c = hi - gr * (hi - lo), d = lo + gr * (hi - lo);
      double fc = mag(c), fd = mag(d);
      for (int it = 0; it < 60; ++it) {
        if (fc > fd) {
          hi = d;
          d = c;
          fd = fc;
          c = hi - gr * (hi - lo);
          fc = mag(c);
        } else {
          lo = c;
          c = d;
          fc = fd;
          d = lo + gr * (hi - lo);
          fd = mag(d);
        }
      }
      sup = std::max({sup, fc, fd});
    }
    return sup;
  }

  std::string name_;
  Evaluator eval_;
  int depth_ = 0;
  bool real_valued_ = true;
  std::optional<Interval> support_;
  std::vector<double> breakpoints_;
  std::optional<DecayEnvelope> envelope_;
  std::set<ClassTag> tags_;
  std::shared_ptr<SupCache> sup_cache_ = std::make_shared<SupCache>();
};

// f^(l) as a function in its own right; depth drops by l.
inline ScalarFunction derivative_function(const ScalarFunction& f, int l) {
  if (l < 0 || l > f.depth()) throw CapabilityError(f.name() + ": derivative of order " + std::to_string(l) + " unavailable");
  ScalarFunction r(
      "d" + std::to_string(l) + "(" + f.name() + ")",
      [f, l](double x, int m) {
        const auto J = f.jet(x, m + l);
        Jet<cplx> r(m);
        for (int j = 0; j <= m; ++j) {
          // c'_j = c_{l+j} (l+j)! / j!
          double falling = 1.0;
          for (int i = j + 1; i <= j + l; ++i) falling *= i;
          r[j] = J[j + l] * falling;
        }
        return r;
      },
      f.depth() - l, f.real_valued());
  if (f.support()) r = r.with_support(f.support()->lo, f.support()->hi);
  if (f.envelope()) {
    DecayEnvelope e = *f.envelope();
    if (e.kind == DecayEnvelope::Kind::Power) e.power += l;
    r = r.with_envelope(e);
  }
  return r.with_breakpoints(f.breakpoints());
}

// ---------------------------------------------------------------------------
// Fixtures
// ---------------------------------------------------------------------------

namespace fixtures {

inline ScalarFunction identity() {
  return ScalarFunction("x", [](double x, int m) { return Jet<cplx>::variable(m, x); }, kUnlimitedDepth);
}

// sum_j coeffs[j] x^j
inline ScalarFunction polynomial(std::vector<double> coeffs) {
  std::string name = "poly(";
  for (std::size_t i = 0; i < coeffs.size(); ++i) name += (i ? "," : "") + std::to_string(coeffs[i]);
  name += ")";
  return ScalarFunction(
      name,
      [coeffs](double x, int m) {
        auto X = Jet<cplx>::variable(m, x);
        Jet<cplx> r(m);
        for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) r = r * X + cplx(*it);
        return r;
      },
      kUnlimitedDepth);
}

inline ScalarFunction monomial(int p) {
  std::vector<double> c(static_cast<std::size_t>(p) + 1, 0.0);
  c.back() = 1.0;
  return polynomial(c).renamed("x^" + std::to_string(p));
}

inline ScalarFunction exponential(double rate = 1.0) {
  return ScalarFunction(
      "exp",
      [rate](double x, int m) { return exp(Jet<cplx>::variable(m, x) * cplx(rate)); }, kUnlimitedDepth);
}

inline ScalarFunction sine() {
  return ScalarFunction("sin", [](double x, int m) { return sin(Jet<cplx>::variable(m, x)); }, kUnlimitedDepth);
}

inline ScalarFunction gaussian(double mu = 0.0, double sigma = 1.0) {
  DecayEnvelope env;
  env.kind = DecayEnvelope::Kind::Gaussian;
  env.center = mu;
  env.width = sigma;
  return ScalarFunction("gaussian",
                        [mu, sigma](double x, int m) {
                          auto t = (Jet<cplx>::variable(m, x) - cplx(mu)) * cplx(1.0 / sigma);
                          return exp(t * t * cplx(-0.5));
                        },
                        kUnlimitedDepth)
      .with_envelope(env);
}

// u(x) = x - i
inline ScalarFunction u_power(int p) {
  ScalarFunction r(
      "u^" + std::to_string(p),
      [p](double x, int m) { return pow(Jet<cplx>::variable(m, x) - cplx(0.0, 1.0), p); }, kUnlimitedDepth,
      false);
  if (p < 0) {
    DecayEnvelope env;
    env.kind = DecayEnvelope::Kind::Power;
    env.power = -p;
    env.radius = 1e6;
    r = r.with_envelope(env);
  }
  return r;
}

// g(x) = (x - i)^{-1}
inline ScalarFunction inv_u() { return u_power(-1).renamed("inv_u"); }

// exp(-1 / (1 - t^2)) with t = (x - center) / radius, zero for |t| >= 1.
inline ScalarFunction exp_bump(double center = 0.0, double radius = 1.0) {
  return ScalarFunction("exp_bump",
                        [center, radius](double x, int m) {
                          double t0 = (x - center) / radius;
                          double s = 1.0 - t0 * t0;
                          // exp(-1/s) underflows well before the jet recurrence stops being exact.
                          if (s <= 1.0 / 700.0) return Jet<cplx>(m);
                          auto t = (Jet<cplx>::variable(m, x) - cplx(center)) * cplx(1.0 / radius);
                          auto S = cplx(1.0) - t * t;
                          return exp(-reciprocal(S));
                        },
                        kUnlimitedDepth)
      .with_support(center - radius, center + radius)
      .with_breakpoints({center - radius, center + radius})
      .with_tag(FunctionClass::Cc, kUnlimitedDepth);
}

// x^n (x-1)^n on [0, 1], zero outside: in F_c^n but not C^n.
inline ScalarFunction xn_xm1n(int n) {
  return ScalarFunction("xn_xm1n",
                        [n](double x, int m) {
                          if (x < 0.0 || x >= 1.0) return Jet<cplx>(m);
                          auto X = Jet<cplx>::variable(m, x);
                          return pow(X, n) * pow(X - cplx(1.0), n);
                        },
                        n)
      .with_support(0.0, 1.0)
      .with_breakpoints({0.0, 1.0})
      .with_tag(FunctionClass::Fc, n);
}

}  // namespace fixtures

}  // namespace specshift
