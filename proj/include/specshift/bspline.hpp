#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "specshift/errors.hpp"
#include "specshift/jet.hpp"
#include "specshift/scalar_function.hpp"

namespace specshift {

// B-spline basis of a given degree over a nondecreasing knot vector. Basis
// function i is supported on [knots[i], knots[i + degree + 1]]. Evaluation
// runs the Cox-de Boor recursion on jets, so derivatives come for free and are
// exact inside each knot span.
class BSplineBasis {
 public:
  BSplineBasis(std::vector<double> knots, int degree) : knots_(std::move(knots)), degree_(degree) {
    if (degree_ < 0) throw DomainError("B-spline degree must be nonnegative");
    if (knots_.size() < static_cast<std::size_t>(degree_) + 2) throw DomainError("too few knots for B-spline degree");
    if (!std::is_sorted(knots_.begin(), knots_.end())) throw DomainError("knots must be nondecreasing");
  }

  int degree() const { return degree_; }
  int size() const { return static_cast<int>(knots_.size()) - degree_ - 1; }
  const std::vector<double>& knots() const { return knots_; }
  double support_lo(int i) const { return knots_[i]; }
  double support_hi(int i) const { return knots_[i + degree_ + 1]; }

  // Index j with knots[j] <= x < knots[j+1] and knots[j] < knots[j+1]; x at the
  // right end maps to the last nonempty span. Returns -1 outside the knot range.
  int span(double x) const {
    const int last = static_cast<int>(knots_.size()) - 1;
    if (x < knots_.front() || x > knots_.back()) return -1;
    if (x == knots_.back()) {
      int j = last - 1;
      while (j > 0 && knots_[j] == knots_[j + 1]) --j;
      return j;
    }
    auto it = std::upper_bound(knots_.begin(), knots_.end(), x);
    return static_cast<int>(it - knots_.begin()) - 1;
  }

  // Jets of the degree+1 basis functions that are nonzero on the span of x,
  // namely indices first..first+degree with first = span - degree. Entries
  // with out-of-range index are zero jets.
  std::vector<Jet<double>> local_jets(double x, int order, int& first) const {
    const int j = span(x);
    std::vector<Jet<double>> N(static_cast<std::size_t>(degree_) + 1, Jet<double>(order));
    first = j - degree_;
    if (j < 0) return N;
    const auto X = Jet<double>::variable(order, x);
    // N[r] holds basis function (j - p + r) of the current degree p.
    N[0] = Jet<double>::constant(order, 1.0);
    for (int p = 1; p <= degree_; ++p) {
      std::vector<Jet<double>> next(static_cast<std::size_t>(p) + 1, Jet<double>(order));
      for (int r = 0; r <= p; ++r) {
        const int i = j - p + r;
        Jet<double> acc(order);
        if (i < 0 || i + p + 1 >= static_cast<int>(knots_.size())) {
          next[r] = acc;
          continue;
        }
        if (r >= 1) {
          const double den = knots_[i + p] - knots_[i];
          if (den > 0.0) acc += (X - knots_[i]) * (1.0 / den) * N[r - 1];
        }
        if (r <= p - 1) {
          const double den = knots_[i + p + 1] - knots_[i + 1];
          if (den > 0.0) acc += (knots_[i + p + 1] - X) * (1.0 / den) * N[r];
        }
        next[r] = acc;
      }
      N = std::move(next);
    }
    return N;
  }

  // Jet of a single basis function.
  Jet<double> jet(int i, double x, int order) const {
    int first = 0;
    auto N = local_jets(x, order, first);
    const int r = i - first;
    if (r < 0 || r > degree_ || span(x) < 0) return Jet<double>(order);
    return N[static_cast<std::size_t>(r)];
  }

  // s(x) = sum_i c_i B_i(x) as a jet.
  Jet<double> combination_jet(const std::vector<double>& coeffs, double x, int order) const {
    int first = 0;
    auto N = local_jets(x, order, first);
    Jet<double> r(order);
    if (span(x) < 0) return r;
    for (int k = 0; k <= degree_; ++k) {
      const int i = first + k;
      if (i >= 0 && i < size()) r += N[k] * coeffs[static_cast<std::size_t>(i)];
    }
    return r;
  }

  // Basis function i as a ScalarFunction, scaled so its maximum is `scale`.
  ScalarFunction function(int i, double scale = 1.0) const {
    std::vector<double> local(knots_.begin() + i, knots_.begin() + i + degree_ + 2);
    const double lo = local.front(), hi = local.back();
    BSplineBasis single(local, degree_);
    ScalarFunction f(
        "bspline",
        [single, scale, lo, hi](double x, int m) {
          if (x < lo || x >= hi) return Jet<cplx>(m);
          return to_complex(single.jet(0, x, m) * scale);
        },
        kUnlimitedDepth);
    return f.with_support(lo, hi)
        .with_breakpoints(local)
        .with_tag(FunctionClass::Fc, degree_)
        .with_tag(FunctionClass::Cc, degree_ - 1);
  }

 private:
  std::vector<double> knots_;
  int degree_;
};

// Uniform knots t_j = lo + j h on [lo, hi] with `intervals` spans.
inline std::vector<double> uniform_knots(double lo, double hi, int intervals) {
  std::vector<double> t(static_cast<std::size_t>(intervals) + 1);
  for (int j = 0; j <= intervals; ++j) t[j] = lo + (hi - lo) * j / intervals;
  t.back() = hi;
  return t;
}

namespace fixtures {

// Cardinal B-spline of the given degree on uniform knots covering [lo, hi],
// normalized to maximum 1.
inline ScalarFunction bspline(double lo, double hi, int degree) {
  BSplineBasis b(uniform_knots(lo, hi, degree + 1), degree);
  double peak = 0.0;
  for (int i = 0; i <= 400; ++i) peak = std::max(peak, b.jet(0, lo + (hi - lo) * i / 400.0, 0)[0]);
  return b.function(0, 1.0 / peak).renamed("bspline");
}

}  // namespace fixtures

}  // namespace specshift
