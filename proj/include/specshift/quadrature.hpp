#pragma once

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

namespace specshift {

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;
};

// Adaptive 31-point Gauss-Kronrod.
template <typename F>
QuadratureResult integrate(F&& f, double lo, double hi, double tol = 1e-13, unsigned max_depth = 12) {
  QuadratureResult r;
  if (!(hi > lo)) return r;
  r.value = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, lo, hi, max_depth, tol, &r.error);
  return r;
}

// Same, split at the given interior points so kinks and jumps sit on panel edges.
template <typename F>
QuadratureResult integrate_pieces(F&& f, double lo, double hi, std::vector<double> cuts, double tol = 1e-13) {
  cuts.push_back(lo);
  cuts.push_back(hi);
  std::sort(cuts.begin(), cuts.end());
  QuadratureResult r;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double a = std::max(lo, cuts[i]);
    const double b = std::min(hi, cuts[i + 1]);
    if (b <= a) continue;
    auto p = integrate(f, a, b, tol);
    r.value += p.value;
    r.error += p.error;
  }
  return r;
}

// Full Gauss-Legendre rule of N points on [-1, 1].
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

template <unsigned N>
const GaussRule& gauss_rule() {
  static const GaussRule rule = [] {
    using G = boost::math::quadrature::gauss<double, N>;
    const auto& x = G::abscissa();
    const auto& w = G::weights();
    GaussRule r;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (x[i] == 0.0) {
        r.nodes.push_back(0.0);
        r.weights.push_back(w[i]);
      } else {
        r.nodes.push_back(-x[i]);
        r.weights.push_back(w[i]);
        r.nodes.push_back(x[i]);
        r.weights.push_back(w[i]);
      }
    }
    return r;
  }();
  return rule;
}

// Fixed Gauss-Legendre on [lo, hi].
template <unsigned N, typename F>
auto gauss_fixed(F&& f, double lo, double hi) {
  const auto& r = gauss_rule<N>();
  const double c = 0.5 * (lo + hi), h = 0.5 * (hi - lo);
  decltype(f(c)) s{};
  for (std::size_t i = 0; i < r.nodes.size(); ++i) s += r.weights[i] * f(c + h * r.nodes[i]);
  return s * h;
}

}  // namespace specshift
