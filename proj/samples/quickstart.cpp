// Perturb a random 6x6 Hermitian H0 by V and look at the spectral shift
// functions of orders 1 and 2 for the Taylor remainders of a bump.

#include <cstdio>

#include "specshift/bump.hpp"
#include "specshift/spectral_action.hpp"
#include "specshift/ssf.hpp"

using namespace specshift;

int main() {
  Rng rng(2024);
  auto alg = TraceAlgebra::matrices(6);
  SelfAdjointOperator h0(random_hermitian(alg, rng, 1.5));
  const auto v = random_hermitian(alg, rng, 0.4);
  const double R = real_line_window(h0, v);

  BumpFunction phi(-0.5, 0.5, 0.5);
  const auto& f = phi.function();

  auto eta1 = ssf_first_order(h0, v, -R, R);
  auto tf1 = check_trace_formula(eta1, f, h0, v);
  std::printf("order 1: int f' eta_1 = %.12f, tau(f(H1) - f(H0)) = %.12f\n", tf1.integral, tf1.trace);

  auto eta2 = ssf_reconstruct(h0, v, 2, -R, R);
  auto rec = taylor_remainder(f, h0, v, 2);
  std::printf("order 2: int f'' eta_2 = %.12f, tau(R_2) = %.12f, held-out residual %.2e\n",
              eta2.integrate_against(f, 2).real(), rec.trace, eta2.diagnostics->held_out_residual);

  EmpiricalConstantStore store;
  auto bound = check_a6(BumpFunction(-0.6, 0.6, 0.3).function(), h0, v, 1, -1.0, 1.0, 0.5, store);
  std::printf("|tau(R_1)| = %.3e <= D ||f'|| = %.3e: %s\n", bound.abs_trace, bound.D * bound.sup_derivative,
              to_string(bound.verdict).c_str());
  std::printf("\n%s", ssf_csv(ssf_first_order(h0, v, -R, R, 9)).c_str());
}
