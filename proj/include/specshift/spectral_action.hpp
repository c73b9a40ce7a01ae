#pragma once

// Derivatives of s -> f(H0 + sV), the Taylor remainder
//   R_n(V) = f(H0+V) - f(H0) - sum_{k<n} (1/k!) d^k/ds^k f(H0+sV)|_0
// and the explicit bound D ||f^(n)||_inf on its trace.

#include <cmath>
#include <string>
#include <vector>

#include "specshift/bounds.hpp"
#include "specshift/class_witness.hpp"
#include "specshift/moi.hpp"
#include "specshift/trace_algebra.hpp"
#include "specshift/verdict.hpp"

namespace specshift {

inline double factorial(int k) {
  double f = 1.0;
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

inline MoiRequest repeated_request(const ScalarFunction& f, const SelfAdjointOperator& h0, const AlgebraElement& v,
                                   int k) {
  return {f, h0, std::nullopt, std::vector<AlgebraElement>(static_cast<std::size_t>(k), v)};
}

// d^k/ds^k f(H0 + sV)|_0 = k! T_{f^[k]}(V, ..., V).
inline AlgebraElement gateaux_derivative(const ScalarFunction& f, const SelfAdjointOperator& h0,
                                         const AlgebraElement& v, int k) {
  return factorial(k) * moi_eval(repeated_request(f, h0, v, k)).element;
}

struct FdResult {
  AlgebraElement element;
  double error_estimate = 0.0;  // Richardson estimate, max-entry
};

namespace detail {

// Fourth-order central stencils: offsets -m..m and weights, divided by h^k.
struct Stencil {
  std::vector<double> w;
  double denom;
};

inline const Stencil& stencil(int k) {
  static const std::vector<Stencil> table = {
      {{1.0, -8.0, 0.0, 8.0, -1.0}, 12.0},
      {{-1.0, 16.0, -30.0, 16.0, -1.0}, 12.0},
      {{1.0, -8.0, 13.0, 0.0, -13.0, 8.0, -1.0}, 8.0},
      {{-1.0, 12.0, -39.0, 56.0, -39.0, 12.0, -1.0}, 6.0},
  };
  return table[static_cast<std::size_t>(k - 1)];
}

inline AlgebraElement fd_apply(const ScalarFunction& f, const SelfAdjointOperator& h0, const AlgebraElement& v, int k,
                               double h) {
  const auto& st = stencil(k);
  const int m = static_cast<int>(st.w.size()) / 2;
  AlgebraElement acc = AlgebraElement::zero(h0.algebra());
  for (int j = -m; j <= m; ++j) {
    const double w = st.w[static_cast<std::size_t>(j + m)];
    if (w == 0.0) continue;
    SelfAdjointOperator hs(h0.element() + cplx(j * h) * v);
    acc += cplx(w) * apply_function(f, hs);
  }
  return cplx(1.0 / (st.denom * std::pow(h, k))) * acc;
}

}  // namespace detail

// Independent oracle: central differences of s -> f(H0 + sV), k <= 4.
inline FdResult fd_derivative_oracle(const ScalarFunction& f, const SelfAdjointOperator& h0, const AlgebraElement& v,
                                     int k, double h) {
  if (k < 1 || k > 4) throw DomainError("finite-difference stencils cover 1 <= k <= 4");
  FdResult r{detail::fd_apply(f, h0, v, k, h), 0.0};
  const auto coarse = detail::fd_apply(f, h0, v, k, 2.0 * h);
  r.error_estimate = (coarse - r.element).max_abs() / 15.0;
  return r;
}

struct RemainderRecord {
  int n = 1;
  std::string function;
  AlgebraElement remainder;
  double trace = 0.0;
  double trace_imag = 0.0;
  std::vector<double> derivative_traces;  // tau((1/k!) d^k f(H0+sV)|_0), k = 1..n-1
  double spectral_action_shift = 0.0;     // tau(f(H0+V)) - tau(f(H0))
};

inline RemainderRecord taylor_remainder(const ScalarFunction& f, const SelfAdjointOperator& h0,
                                        const AlgebraElement& v, int n) {
  if (n < 1) throw DomainError("remainder order must be >= 1");
  SelfAdjointOperator h1(h0.element() + v);
  RemainderRecord r;
  r.n = n;
  r.function = f.name();
  const auto f1 = apply_function(f, h1);
  const auto f0 = apply_function(f, h0);
  r.spectral_action_shift = trace(f1).real() - trace(f0).real();
  r.remainder = f1 - f0;
  for (int k = 1; k < n; ++k) {
    const auto t = moi_eval(repeated_request(f, h0, v, k)).element;
    r.derivative_traces.push_back(trace(t).real());
    r.remainder -= t;
  }
  const cplx tr = trace(r.remainder);
  r.trace = tr.real();
  r.trace_imag = tr.imag();
  return r;
}

// tau(R_n(V)) without forming the remainder: spectral sums plus reduced traces.
inline cplx remainder_trace(const ScalarFunction& f, const SelfAdjointOperator& h0, const SelfAdjointOperator& h1,
                            const AlgebraElement& v, int n) {
  cplx t = trace_of_function(f, h1) - trace_of_function(f, h0);
  for (int k = 1; k < n; ++k) t -= moi_trace(repeated_request(f, h0, v, k));
  return t;
}

struct BoundConstants {
  double a = 0.0, b = 0.0, eps = 0.0;
  int n = 1;
  double count_h0 = 0.0;  // tau(E_H0([a,b]))
  double count_h1 = 0.0;  // tau(E_{H0+V}([a,b]))
  double v_norm = 0.0;
  std::vector<CConstant> c;   // k = 1..n-1
  std::vector<double> terms;  // (b-a)^{n-k} C_k ||V||^k
  double D = 0.0;
};

inline BoundConstants constant_D(double a, double b, int n, double eps, const SelfAdjointOperator& h0,
                                 const AlgebraElement& v, EmpiricalConstantStore& store) {
  if (!(a < b)) throw DomainError("constant_D needs a < b");
  if (!(eps > 0.0)) throw DomainError("constant_D needs eps > 0");
  BoundConstants r;
  r.a = a;
  r.b = b;
  r.n = n;
  r.eps = eps;
  SelfAdjointOperator h1(h0.element() + v);
  const auto closed = SpectralInterval::closed(a, b);
  r.count_h0 = spectral_projection(h0, closed).trace;
  r.count_h1 = spectral_projection(h1, closed).trace;
  r.v_norm = operator_norm(v);
  r.D = std::pow(b - a, n) * std::max(r.count_h0, r.count_h1);
  if (n > 1) {
    BumpFunction phi(a, b, eps);
    for (int k = 1; k < n; ++k) {
      r.c.push_back(c_constant(phi, h0, k, store));
      r.terms.push_back(std::pow(b - a, n - k) * r.c.back().value * std::pow(r.v_norm, k));
      r.D += r.terms.back();
    }
  }
  return r;
}

struct A6Report {
  double abs_trace = 0.0;
  double D = 0.0;
  double sup_derivative = 0.0;
  double ratio = 0.0;
  Verdict verdict = Verdict::Info;
};

// |tau(R_n)| / (D ||f^(n)||_inf). Only n = 1 is free of empirical constants
// and gets a pass/fail verdict.
inline A6Report check_a6(const ScalarFunction& f, const SelfAdjointOperator& h0, const AlgebraElement& v, int n,
                         double a, double b, double eps, EmpiricalConstantStore& store) {
  if (!support_within(f, a, b) || !class_witness(f, {FunctionClass::Dc, n}).holds()) {
    throw CapabilityError(f.name() + ": D_c^" + std::to_string(n) + "((a,b)) witness failed");
  }
  A6Report r;
  SelfAdjointOperator h1(h0.element() + v);
  r.abs_trace = std::abs(remainder_trace(f, h0, h1, v, n));
  r.D = constant_D(a, b, n, eps, h0, v, store).D;
  r.sup_derivative = f.sup_norm(n);
  const double den = r.D * r.sup_derivative;
  r.ratio = den > 0.0 ? r.abs_trace / den : 0.0;
  r.verdict = n == 1 ? check(r.ratio <= 1.0) : Verdict::Info;
  return r;
}

}  // namespace specshift
