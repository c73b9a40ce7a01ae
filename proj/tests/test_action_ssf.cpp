#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "specshift/bump.hpp"
#include "specshift/spectral_action.hpp"
#include "specshift/ssf.hpp"

using namespace specshift;

namespace {

AlgebraElement scalar(const AlgebraPtr& alg, double x) {
  return {alg, {Matrix::Constant(1, 1, cplx(x))}};
}

struct Fixture {
  SelfAdjointOperator h0;
  AlgebraElement v;
};

Fixture random_fixture(int dim, Rng& rng, double h_scale = 1.5, double v_scale = 0.5) {
  auto alg = TraceAlgebra::matrices(dim);
  SelfAdjointOperator h0(random_hermitian(alg, rng, h_scale));
  return {h0, random_hermitian(alg, rng, v_scale)};
}

}  // namespace

TEST(FirstOrderSsf, RankOneExamples) {
  auto one = TraceAlgebra::matrices(1);
  SelfAdjointOperator H0(scalar(one, 0.0));
  auto V = scalar(one, 1.0);
  auto eta = ssf_first_order(H0, V, -1.0, 2.0);
  EXPECT_EQ(eta(-0.5), 0.0);
  EXPECT_EQ(eta(0.0), 0.0);
  EXPECT_EQ(eta(0.5), 1.0);
  EXPECT_EQ(eta(1.0), 1.0);
  EXPECT_EQ(eta(1.5), 0.0);
  EXPECT_EQ(eta.certified_l1, 1.0);
  auto f = fixtures::exp_bump(0.5, 1.2);
  const double direct = (f(1.0) - f(0.0)).real();
  EXPECT_NEAR(eta.integrate_against(f, 1).real(), direct, 1e-12);

  auto half = TraceAlgebra::make({{1, 0.5}});
  SelfAdjointOperator G0(scalar(half, 0.0));
  auto w = ssf_first_order(G0, scalar(half, 1.0), -1.0, 2.0);
  EXPECT_EQ(w(0.5), 0.5);
  EXPECT_EQ(w.certified_l1, 0.5);

  auto zero = ssf_first_order(H0, scalar(one, 0.0), -1.0, 2.0);
  for (double x : zero.values) EXPECT_EQ(x, 0.0);

  EXPECT_EQ(check_etabound(eta, 3.0).verdict, Verdict::Pass);
  EXPECT_EQ(check_etabound(w, 1.5).verdict, Verdict::Pass);
  EXPECT_EQ(check_etabound(zero, 3.0).l1, 0.0);
}

TEST(FirstOrderSsf, TraceFormulaAndIntegrality) {
  Rng rng(50);
  BumpFunction phi(-0.8, 0.7, 0.4);
  for (int i = 0; i < 6; ++i) {
    auto fx = random_fixture(3 + i, rng);
    auto eta = ssf_first_order(fx.h0, fx.v, -4.0, 4.0);
    for (double x : eta.values) EXPECT_EQ(x, std::round(x));
    const double lhs = eta.integrate_against(phi.function(), 1).real();
    SelfAdjointOperator h1(fx.h0.element() + fx.v);
    const double rhs = (trace_of_function(phi.function(), h1) - trace_of_function(phi.function(), fx.h0)).real();
    EXPECT_NEAR(lhs, rhs, 1e-7 * (1e-3 + std::abs(rhs)));
  }
  auto alg = TraceAlgebra::make({{2, 0.25}, {3, 1.5}});
  SelfAdjointOperator h0(random_hermitian(alg, rng));
  auto eta = ssf_first_order(h0, random_hermitian(alg, rng), -5.0, 5.0);
  for (double x : eta.values) {
    const double q = x / 0.25;
    EXPECT_NEAR(q, std::round(q), 1e-12);
  }
}

TEST(Reconstruction, ScalarKernel) {
  auto one = TraceAlgebra::matrices(1);
  SelfAdjointOperator H0(scalar(one, 0.0));
  const double v = 0.7;
  for (int n = 2; n <= 3; ++n) {
    auto eta = ssf_reconstruct(H0, scalar(one, v), n, -1.0, 2.0);
    auto exact = PiecewisePolynomial::project(
        [&](double x) { return x > 0.0 && x <= v ? std::pow(v - x, n - 1) / std::tgamma(n) : 0.0; },
        {-1.0, 0.0, v, 2.0}, n - 1);
    auto u = uniqueness_gauge_check(eta.eta, exact, n);
    EXPECT_LE(u.residual, 1e-8) << n;
    EXPECT_LE(eta.diagnostics->held_out_residual, 1e-10);
  }
  auto zero = ssf_reconstruct(H0, scalar(one, 0.0), 2, -1.0, 2.0);
  for (double x : zero.values) EXPECT_EQ(x, 0.0);
  EXPECT_THROW(ssf_reconstruct(H0, scalar(one, v), 1, -1.0, 2.0), DomainError);
}

TEST(Reconstruction, GaugesAndUniqueness) {
  Rng rng(51);
  auto fx = random_fixture(5, rng);
  const double R = real_line_window(fx.h0, fx.v);
  for (int n = 2; n <= 3; ++n) {
    auto a = ssf_reconstruct(fx.h0, fx.v, n, -R, R);
    for (int j = 0; j < n; ++j) {
      const double m = a.eta.integrate_pieces_fixed(
          [&](int k, double x) { return a.eta.piece_value(k, x) * std::pow(x, j); });
      EXPECT_LE(std::abs(m), 1e-8 * (1.0 + a.certified_l1)) << n << " " << j;
    }
    ReconstructOptions other;
    other.family.extra = 1;
    other.family.intervals = 101;
    other.gauge = SsfGauge::Support;
    auto b = ssf_reconstruct(fx.h0, fx.v, n, -R, R, other);
    EXPECT_EQ(b.eta(-R), 0.0);
    EXPECT_NEAR(b.eta(R), 0.0, 1e-6 * b.certified_l1);
    auto u = uniqueness_gauge_check(a, b);
    EXPECT_EQ(u.verdict, Verdict::Pass) << u.relative;

    BumpFunction phi(-0.5, 0.5, 0.5);
    auto tf = check_trace_formula(a, phi.function(), fx.h0, fx.v);
    EXPECT_LE(tf.relative, 1e-5);
  }
}

TEST(Reconstruction, ShiftedByPolynomial) {
  Rng rng(52);
  auto fx = random_fixture(4, rng);
  auto a = ssf_reconstruct(fx.h0, fx.v, 2, -4.0, 4.0);
  // eta_B = eta_A + (3 lambda - 2)
  auto shifted = a.eta.minus_polynomial({2.0, -3.0});
  auto u = uniqueness_gauge_check(a.eta, shifted, 2);
  EXPECT_NEAR(u.polynomial[0], -2.0, 1e-12);
  EXPECT_NEAR(u.polynomial[1], 3.0, 1e-12);
  EXPECT_LE(u.residual, 1e-12);
  auto same = uniqueness_gauge_check(a.eta, a.eta, 3);
  for (double c : same.polynomial) EXPECT_EQ(c, 0.0);
}

TEST(Reconstruction, TaylorRemainderCrossCheck) {
  Rng rng(53);
  auto fx = random_fixture(6, rng);
  BumpFunction phi(0.0, 1.0, 0.5);
  auto eta = ssf_reconstruct(fx.h0, fx.v, 3, -5.0, 5.0);
  auto rec = taylor_remainder(phi.function(), fx.h0, fx.v, 3);
  const double integral = eta.integrate_against(phi.function(), 3).real();
  EXPECT_LE(std::abs(integral - rec.trace), 1e-5 * std::max(std::abs(rec.trace), eta.certified_l1 * 1e-3));
}

TEST(Growth, EmpiricalConstant) {
  Rng rng(54);
  auto fx = random_fixture(4, rng);
  const double R = real_line_window(fx.h0, fx.v);
  auto zero = ssf_first_order(fx.h0, AlgebraElement::zero(fx.h0.algebra()), -R, R);
  EXPECT_EQ(check_growth_rr0(zero, fx.h0, AlgebraElement::zero(fx.h0.algebra()), 1).K, 0.0);

  auto e1 = ssf_first_order(fx.h0, fx.v, -R, R);
  auto g1 = check_growth_rr0(e1, fx.h0, fx.v, 1);
  EXPECT_TRUE(std::isfinite(g1.K));
  EXPECT_GT(g1.K, 0.0);
  const auto V2 = cplx(2.0) * fx.v;
  const double vn = operator_norm(fx.v);
  EXPECT_NEAR(growth_envelope_factor(fx.h0, V2, 1) / g1.envelope_factor, (2.0 + 2.0 * vn) / (2.0 + vn), 1e-12);

  ReconstructOptions opt;
  opt.gauge = SsfGauge::Support;
  auto narrow = ssf_reconstruct(fx.h0, fx.v, 2, -R, R, opt);
  auto wide = ssf_reconstruct(fx.h0, fx.v, 2, -2.0 * R, 2.0 * R, opt);
  const double k1 = check_growth_rr0(narrow, fx.h0, fx.v, 2).K;
  const double k2 = check_growth_rr0(wide, fx.h0, fx.v, 2).K;
  EXPECT_LE(k2, k1 * (1.0 + 1e-6));
}

TEST(Growth, FirstOrderResolventBound) {
  Rng rng(55);
  for (int i = 0; i < 5; ++i) {
    auto fx = random_fixture(3 + i, rng);
    auto r = check_resolvent_bound_n1(fixtures::gaussian(0.2, 0.7), fx.h0, fx.v);
    EXPECT_EQ(r.verdict, Verdict::Pass) << r.ratio;
  }
}

TEST(Identities, DividedDifferenceExpansion) {
  auto f = fixtures::exponential();
  EXPECT_LE(identity_check_dd1(f, {0.3, -0.4}).defect, 1e-12);
  EXPECT_LE(identity_check_dd1(fixtures::gaussian(), {0.7}).defect, 0.0);
  Rng rng(60);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int i = 0; i < 20; ++i) {
    std::vector<double> x(4);
    for (auto& xi : x) xi = u(rng);
    auto d = identity_check_dd1(f, x);
    EXPECT_TRUE(d.within(1e-9)) << d.defect;
  }
  auto c = identity_check_dd1(f, {0.5, 0.5, 0.5});
  EXPECT_TRUE(c.within(1e-8)) << c.defect;
  auto c2 = identity_check_dd1(fixtures::gaussian(), {-0.2, -0.2, 0.9, 0.9, 0.1});
  EXPECT_TRUE(c2.within(1e-8)) << c2.defect;
}

TEST(Identities, Compositions) {
  EXPECT_EQ(compositions(2, 1), (std::vector<std::vector<int>>{{1, 1}, {2, 0}}));
  EXPECT_EQ(compositions(2, 2), (std::vector<std::vector<int>>{{1, 1, 0}}));
  EXPECT_EQ(compositions(3, 2).size(), 3u);
}

TEST(Identities, OperatorExpansion) {
  Rng rng(61);
  auto f = fixtures::gaussian(0.1, 0.8);
  auto fx = random_fixture(4, rng);
  EXPECT_LE(identity_check_ddd1(f, fx.h0, fx.v, 1.0, 1).defect, 1e-14);
  for (int n = 2; n <= 4; ++n) {
    auto d = identity_check_ddd1(f, fx.h0, fx.v, 1.0, n);
    EXPECT_TRUE(d.within(1e-8)) << n << " " << d.defect;
  }
  auto d = identity_check_ddd1(f, fx.h0, fx.v, 0.37, 3);
  EXPECT_TRUE(d.within(1e-8)) << d.defect;
  EXPECT_THROW(identity_check_ddd1(f, fx.h0, fx.v, 1.0, 7), CapabilityError);

  // 1x1: the operator identity is the scalar one with lambda_0 = H_t.
  auto one = TraceAlgebra::matrices(1);
  SelfAdjointOperator s0(scalar(one, 0.3));
  auto s = identity_check_ddd1(f, s0, scalar(one, 0.4), 1.0, 3);
  EXPECT_TRUE(s.within(1e-12)) << s.defect;
}

TEST(Identities, FirstOrderResolventForm) {
  Rng rng(62);
  auto fx = random_fixture(5, rng);
  EXPECT_LE(identity_check_dd(fixtures::gaussian(), fx.h0, AlgebraElement::zero(fx.h0.algebra())).defect, 1e-15);
  auto r = identity_check_dd(fixtures::inv_u(), fx.h0, fx.v);
  EXPECT_TRUE(r.within(1e-10)) << r.defect;
  // Resolvent identity: (H1 - i)^{-1} - (H0 - i)^{-1} = -(H1 - i)^{-1} V (H0 - i)^{-1}.
  SelfAdjointOperator h1(fx.h0.element() + fx.v);
  const auto R0 = resolvent(fx.h0, cplx(0, 1)), R1 = resolvent(h1, cplx(0, 1));
  const auto lhs = moi_eval({fixtures::inv_u(), fx.h0, h1, {fx.v}}).element;
  EXPECT_LE((lhs + R1 * fx.v * R0).max_abs(), 1e-12);
  BumpFunction phi(-0.5, 0.5, 0.5);
  EXPECT_TRUE(identity_check_dd(phi.function(), fx.h0, fx.v).within(1e-9));
}

TEST(SsfOutput, CsvShape) {
  auto one = TraceAlgebra::matrices(1);
  SelfAdjointOperator H0(scalar(one, 0.0));
  auto eta = ssf_first_order(H0, scalar(one, 1.0), -1.0, 2.0, 4);
  const auto csv = ssf_csv(eta);
  EXPECT_EQ(csv.rfind("lambda,eta\n-1,0\n", 0), 0u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);
  EXPECT_EQ(eta.values, (std::vector<double>{0.0, 1.0, 0.0, 0.0}));
}
