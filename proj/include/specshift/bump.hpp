#pragma once

// Phi_eps = (h1 - h2)^4 where h1 rises from 0 to 1 on [a - eps, a] and h2 on
// [b, b + eps], both as normalized integrals of products of Phi(s) = e^{-1/s}.

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include "specshift/errors.hpp"
#include "specshift/fourier.hpp"
#include "specshift/jet.hpp"
#include "specshift/quadrature.hpp"
#include "specshift/scalar_function.hpp"

namespace specshift {

namespace detail {

inline double phi(double s) { return s > 1.0 / 700.0 ? std::exp(-1.0 / s) : 0.0; }

inline Jet<double> phi_jet(const Jet<double>& s) {
  if (s[0] <= 1.0 / 700.0) return Jet<double>(s.order());
  return exp(-reciprocal(s));
}

// Smooth step on [lo, hi]: integral of phi(t - lo) phi(hi - t), normalized.
class SmoothStep {
 public:
  SmoothStep(double lo, double hi, int panels = 256) : lo_(lo), hi_(hi), cum_(static_cast<std::size_t>(panels) + 1) {
    const double h = (hi - lo) / panels;
    cum_[0] = 0.0;
    for (int j = 0; j < panels; ++j) {
      const double a = lo + h * j;
      cum_[j + 1] = cum_[j] + gauss_fixed<20>([this](double t) { return density(t); }, a, a + h);
    }
    norm_ = cum_.back();
    if (!(norm_ > 0.0)) throw DomainError("smooth step normalization vanished");
    h_ = h;
  }

  double normalization() const { return norm_; }
  double density(double t) const { return phi(t - lo_) * phi(hi_ - t); }

  double value(double x) const {
    if (x <= lo_) return 0.0;
    if (x >= hi_) return 1.0;
    const auto j = std::min(static_cast<std::size_t>((x - lo_) / h_), cum_.size() - 2);
    const double a = lo_ + h_ * static_cast<double>(j);
    const double part = gauss_fixed<20>([this](double t) { return density(t); }, a, x);
    return std::min(1.0, (cum_[j] + part) / norm_);
  }

  Jet<double> jet(double x, int order) const {
    if (x <= lo_) return Jet<double>(order);
    if (x >= hi_) return Jet<double>(order, 1.0);
    if (order == 0) return Jet<double>(0, value(x));
    const auto X = Jet<double>::variable(order - 1, x);
    const auto d = phi_jet(X - lo_) * phi_jet(hi_ - X) * (1.0 / norm_);
    Jet<double> r(order, value(x));
    for (int k = 1; k <= order; ++k) r[k] = d[k - 1] / static_cast<double>(k);
    return r;
  }

 private:
  double lo_, hi_;
  std::vector<double> cum_;
  double norm_ = 0.0;
  double h_ = 0.0;
};

}  // namespace detail

inline constexpr int kBumpDepth = 8;

class BumpFunction {
 public:
  BumpFunction(double a, double b, double eps, int depth = kBumpDepth) : a_(a), b_(b), eps_(eps), depth_(depth) {
    if (!(eps > 0.0)) throw DomainError("bump width eps must be positive");
    if (!(a < b)) throw DomainError("bump needs a < b");
    if (depth < 0) throw DomainError("bump depth must be nonnegative");
    auto rise = std::make_shared<const detail::SmoothStep>(a - eps, a);
    auto fall = std::make_shared<const detail::SmoothStep>(b, b + eps);
    z1_ = rise->normalization();
    z2_ = fall->normalization();
    const double ae = a - eps, be = b + eps;
    f_ = ScalarFunction(
             "bump",
             [rise, fall, a, b, ae, be](double x, int m) {
               if (x <= ae || x >= be) return Jet<cplx>(m);
               if (x >= a && x <= b) return Jet<cplx>(m, 1.0);
               const auto h = rise->jet(x, m) - fall->jet(x, m);
               const auto h2 = h * h;
               return to_complex(h2 * h2);
             },
             depth)
             .with_support(ae, be)
             .with_breakpoints({ae, a, b, be})
             .with_tag(FunctionClass::Cc, depth)
             .with_tag(FunctionClass::Dc, depth)
             .with_tag(FunctionClass::Fc, depth);
  }

  double a() const { return a_; }
  double b() const { return b_; }
  double eps() const { return eps_; }
  double a_eps() const { return a_ - eps_; }
  double b_eps() const { return b_ + eps_; }
  int depth() const { return depth_; }
  double normalization_rise() const { return z1_; }
  double normalization_fall() const { return z2_; }

  const ScalarFunction& function() const { return f_; }
  double operator()(double x) const { return f_(x).real(); }

  // ||(Phi_eps^(l))^||_1, computed once per l.
  FourierL1 derivative_fourier_l1(int l) const {
    std::lock_guard<std::mutex> lock(cache_->mutex);
    auto it = cache_->values.find(l);
    if (it != cache_->values.end()) return it->second;
    auto v = fourier_l1(derivative_function(f_, l));
    cache_->values.emplace(l, v);
    return v;
  }

 private:
  struct Cache {
    std::mutex mutex;
    std::map<int, FourierL1> values;
  };
  double a_, b_, eps_;
  int depth_;
  double z1_ = 0.0, z2_ = 0.0;
  ScalarFunction f_;
  std::shared_ptr<Cache> cache_ = std::make_shared<Cache>();
};

}  // namespace specshift
