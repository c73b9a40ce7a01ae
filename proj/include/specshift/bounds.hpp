#pragma once

// Explicit constants built from the bump Phi_eps: d_{k,eps,H0}, the
// per-order constant C_{a,b,k,eps,H0}, and the trace bound it controls.

#include <cmath>
#include <vector>

#include "specshift/bump.hpp"
#include "specshift/class_witness.hpp"
#include "specshift/moi.hpp"
#include "specshift/trace_algebra.hpp"
#include "specshift/verdict.hpp"

namespace specshift {

// ||Phi_eps(H)||_1 = sum_b w_b sum_i |Phi_eps(lambda_i)|.
inline double bump_trace_norm(const BumpFunction& phi, const SelfAdjointOperator& h) {
  const auto& blocks = h.algebra()->blocks();
  double s = 0.0;
  for (int b = 0; b < h.block_count(); ++b) {
    const auto& ev = h.eigenvalues(b);
    for (int i = 0; i < ev.size(); ++i) s += blocks[static_cast<std::size_t>(b)].weight * std::abs(phi(ev[i]));
  }
  return s;
}

struct DConstant {
  double projection_norm = 0.0;        // ||Phi_eps(H0)||_1
  std::vector<double> fourier_terms;  // ||(Phi_eps^(l))^||_1 / l!, l = 1..k
  double fourier_error = 0.0;
  double value = 0.0;
};

inline DConstant d_constant(const BumpFunction& phi, const SelfAdjointOperator& h0, int k) {
  DConstant d;
  d.projection_norm = bump_trace_norm(phi, h0);
  d.value = d.projection_norm;
  double fact = 1.0;
  for (int l = 1; l <= k; ++l) {
    fact *= l;
    const auto f = phi.derivative_fourier_l1(l);
    d.fourier_terms.push_back(f.value / fact);
    d.fourier_error = std::max(d.fourier_error, f.error / fact);
    d.value = std::max(d.value, f.value / fact);
  }
  return d;
}

struct CConstant {
  int k = 1;
  double c2k = 0.0;
  double open_count = 0.0;  // tau(E_H0((a,b)))
  DConstant d;
  double value = 0.0;
};

// ((k+1) 2^k + c_{2,k}) (b-a+1)^k d_{k,eps,H0} (1 + tau(E_H0((a,b)))).
inline CConstant c_constant(const BumpFunction& phi, const SelfAdjointOperator& h0, int k,
                            EmpiricalConstantStore& store) {
  CConstant c;
  c.k = k;
  c.c2k = constant_or_estimate(store, ConstantKey::two(k));
  c.open_count = h0.counting(SpectralInterval::open(phi.a(), phi.b()));
  c.d = d_constant(phi, h0, k);
  c.value = ((k + 1) * std::pow(2.0, k) + c.c2k) * std::pow(phi.b() - phi.a() + 1.0, k) * c.d.value *
            (1.0 + c.open_count);
  return c;
}

struct A55Report {
  double abs_trace = 0.0;
  double bound = 0.0;
  double ratio = 0.0;
  CConstant constant;
  Verdict verdict = Verdict::Info;
};

// |tau(T^{H0..H0}_{f^[k]}(V_1..V_k))| against C ||f^(k)||_inf prod ||V_l||.
// The constant carries an empirical c_{2,k}, so the verdict is informational.
inline A55Report bound_ratio_a55(const ScalarFunction& f, const SelfAdjointOperator& h0,
                                 const std::vector<AlgebraElement>& vs, double a, double b, double eps,
                                 EmpiricalConstantStore& store) {
  const int k = static_cast<int>(vs.size());
  if (!support_within(f, a, b) || !class_witness(f, {FunctionClass::Fc, k + 1}).holds()) {
    throw CapabilityError(f.name() + ": F_c^" + std::to_string(k + 1) + "((a,b)) witness failed");
  }
  BumpFunction phi(a, b, eps);
  A55Report r;
  MoiRequest req{f, h0, std::nullopt, vs};
  r.abs_trace = std::abs(moi_trace(req));
  r.constant = c_constant(phi, h0, k, store);
  r.bound = r.constant.value * f.sup_norm(k);
  for (const auto& v : vs) r.bound *= operator_norm(v);
  r.ratio = r.bound > 0.0 ? r.abs_trace / r.bound : 0.0;
  return r;
}

}  // namespace specshift
