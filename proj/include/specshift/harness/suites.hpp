#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <optional>
#include <random>
#include <thread>
#include <vector>

#include "specshift/bounds.hpp"
#include "specshift/bspline.hpp"
#include "specshift/bump.hpp"
#include "specshift/harness/config.hpp"
#include "specshift/harness/report.hpp"
#include "specshift/moi.hpp"
#include "specshift/spectral_action.hpp"
#include "specshift/ssf.hpp"

namespace specshift::harness {

class FixtureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct OperatorFixture {
  std::string id;
  SelfAdjointOperator h0;
  AlgebraElement v;
};

inline AlgebraPtr make_algebra(const std::vector<BlockSpec>& blocks) {
  std::vector<Block> b;
  for (const auto& s : blocks) b.push_back({s.dim, s.weight});
  return TraceAlgebra::make(std::move(b));
}

inline Rng fixture_rng(std::uint64_t seed, int index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index)};
  return Rng(seq);
}

inline std::string fixture_id(int i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "fx%03d", i);
  return buf;
}

inline OperatorFixture make_fixture(const ExperimentConfig& c, int i) {
  auto alg = make_algebra(c.algebra);
  auto rng = fixture_rng(c.operators.seed, i);
  const auto& o = c.operators;
  if (o.generator == "random-hermitian") {
    SelfAdjointOperator h0(random_hermitian(alg, rng, o.h_scale));
    return {fixture_id(i), h0, random_hermitian(alg, rng, o.v_scale)};
  }
  if (o.generator == "spread-spectrum") {
    std::uniform_real_distribution<double> u(-2.0 * o.h_scale, 2.0 * o.h_scale);
    std::vector<std::vector<double>> spec;
    for (const auto& b : alg->blocks()) {
      spec.emplace_back(static_cast<std::size_t>(b.dim));
      for (auto& s : spec.back()) s = u(rng);
    }
    SelfAdjointOperator h0(hermitian_with_spectrum(alg, spec, rng));
    return {fixture_id(i), h0, random_hermitian(alg, rng, o.v_scale)};
  }
  throw FixtureError("unknown operator generator '" + o.generator + "'");
}

inline ScalarFunction make_function(const FunctionSpec& f) {
  const auto& p = f.params;
  auto arg = [&](std::size_t i, double dflt) { return i < p.size() ? p[i] : dflt; };
  auto arity = [&](std::size_t most) {
    if (p.size() > most) throw ConfigError("function.params", "too many parameters for '" + f.kind + "'");
  };
  if (f.kind == "gaussian") {
    arity(2);
    if (!(arg(1, 1.0) > 0.0)) throw ConfigError("function.params", "gaussian width must be positive");
    return fixtures::gaussian(arg(0, 0.0), arg(1, 1.0));
  }
  if (f.kind == "exp-bump") {
    arity(2);
    if (!(arg(1, 1.0) > 0.0)) throw ConfigError("function.params", "radius must be positive");
    return fixtures::exp_bump(arg(0, 0.0), arg(1, 1.0));
  }
  if (f.kind == "exponential") {
    arity(1);
    return fixtures::exponential(arg(0, 1.0));
  }
  if (f.kind == "polynomial") {
    if (p.empty()) throw ConfigError("function.params", "polynomial needs coefficients");
    return fixtures::polynomial(p);
  }
  try {
    if (f.kind == "bump") {
      arity(3);
      return BumpFunction(arg(0, -0.5), arg(1, 0.5), arg(2, 0.25)).function();
    }
    if (f.kind == "bspline") {
      arity(3);
      return fixtures::bspline(arg(0, -1.0), arg(1, 1.0), static_cast<int>(arg(2, 4)));
    }
  } catch (const DomainError& e) {
    throw ConfigError("function.params", e.what());
  }
  throw ConfigError("function.kind", "unknown function kind '" + f.kind + "'");
}

// Runs fn(i) for i < count on up to `workers` threads; results keep index order.
template <typename Fn>
auto parallel_map(int count, int workers, Fn&& fn) {
  using T = decltype(fn(0));
  std::vector<std::optional<T>> out(static_cast<std::size_t>(count));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(count));
  std::atomic<int> next{0};
  auto work = [&] {
    for (int i = next++; i < count; i = next++) {
      try {
        out[i].emplace(fn(i));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    for (int w = 1; w < std::min(workers, count); ++w) pool.emplace_back(work);
    work();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::vector<T> r;
  r.reserve(out.size());
  for (auto& o : out) r.push_back(std::move(*o));
  return r;
}

// Fixture-level results merged in fixture order.
inline VerificationReport merge(std::string name, std::vector<VerificationReport> parts) {
  VerificationReport r;
  r.name = std::move(name);
  for (const auto& p : parts) r.append(p);
  return r;
}

namespace suites {

// Distance of x from the lattice sum_b w_b m_b, |m_b| <= dim_b. Empty when
// the lattice is too large to enumerate.
inline std::optional<double> lattice_distance(const TraceAlgebra& alg, double x) {
  std::vector<double> sums{0.0};
  for (const auto& b : alg.blocks()) {
    if (sums.size() * (2 * b.dim + 1) > 200000) return std::nullopt;
    std::vector<double> next;
    for (double s : sums) {
      for (int m = -b.dim; m <= b.dim; ++m) next.push_back(s + m * b.weight);
    }
    sums = std::move(next);
  }
  double best = kInfinity;
  for (double s : sums) best = std::min(best, std::abs(x - s));
  return best;
}

// Shape function strictly inside (a, b), used where a check needs supp f in (a, b).
inline BumpFunction inner_bump(double a, double b) {
  const double w = (b - a) / 5.0;
  return BumpFunction(a + w, b - w, 0.5 * w);
}

inline VerificationReport identities_fixture(const ExperimentConfig& c, const ScalarFunction& f, int i) {
  VerificationReport r;
  const auto fx = make_fixture(c, i);
  const auto& tol = c.parameters.tol;
  const int n = c.parameters.n;
  auto rng = fixture_rng(c.operators.seed ^ 0x9e3779b97f4a7c15ULL, i);
  std::uniform_real_distribution<double> u(-2.0, 2.0);

  std::vector<double> nodes(static_cast<std::size_t>(n) + 1);
  for (auto& x : nodes) x = u(rng);
  if (i % 2 == 1 && nodes.size() > 1) nodes[1] = nodes[0];
  const auto dd1 = identity_check_dd1(f, nodes);
  r.add(bounded("identity-divided-difference", fx.id, dd1.defect, tol.divided_difference * dd1.scale));

  if (n <= 6) {
    const auto op = identity_check_ddd1(f, fx.h0, fx.v, 1.0, n);
    r.add(bounded("identity-operator-expansion", fx.id, op.defect, tol.identity * op.scale));
  }
  const auto dd = identity_check_dd(f, fx.h0, fx.v);
  r.add(bounded("identity-first-order-resolvent", fx.id, dd.defect, tol.divided_difference * dd.scale));

  const int k = 1 + i % 3;
  std::vector<AlgebraElement> vs;
  for (int l = 0; l < k; ++l) vs.push_back(random_element(fx.h0.algebra(), rng));
  MoiRequest req{f, fx.h0, std::nullopt, vs};
  const cplx full = moi_eval(req).trace;
  const cplx reduced = moi_trace(req);
  r.add(bounded("moi-cyclic-reduction", fx.id, std::abs(full - reduced), tol.cyclic * (1.0 + std::abs(full))));

  const auto g = gateaux_derivative(f, fx.h0, fx.v, k);
  const auto fd = fd_derivative_oracle(f, fx.h0, fx.v, k, 1e-2);
  r.add(bounded("moi-derivative", fx.id, operator_norm(g - fd.element), tol.moi * (1.0 + operator_norm(g))));
  return r;
}

inline VerificationReport bounds_fixture(const ExperimentConfig& c, EmpiricalConstantStore& store, int i) {
  VerificationReport r;
  const auto fx = make_fixture(c, i);
  const auto& p = c.parameters;
  const auto shape = inner_bump(p.a, p.b);
  const auto& f = shape.function();

  const auto a6 = check_a6(f, fx.h0, fx.v, 1, p.a, p.b, p.eps, store);
  r.add(make_record("remainder-bound-first-order", fx.id, a6.abs_trace, a6.D * a6.sup_derivative, a6.verdict));
  r.series["bound-margin"].rows.push_back({static_cast<double>(i), a6.abs_trace, a6.D * a6.sup_derivative});
  if (p.n > 1) {
    const auto an = check_a6(f, fx.h0, fx.v, p.n, p.a, p.b, p.eps, store);
    r.add(make_record("remainder-bound", fx.id, an.abs_trace, an.D * an.sup_derivative, an.verdict));
    for (int k = 1; k < p.n; ++k) {
      std::vector<AlgebraElement> vs(static_cast<std::size_t>(k), fx.v);
      const auto m = bound_ratio_a55(f, fx.h0, vs, p.a, p.b, p.eps, store);
      r.add(make_record("moi-trace-bound", fx.id, m.abs_trace, m.bound, m.verdict));
    }
  }

  const auto eta = ssf_first_order(fx.h0, fx.v, p.a, p.b, p.grid_size);
  const double D1 = constant_D(p.a, p.b, 1, p.eps, fx.h0, fx.v, store).D;
  const auto eb = check_etabound(eta, D1);
  r.add(make_record("eta-bound-first-order", fx.id, eb.l1, eb.D, eb.verdict));

  const auto rb = check_resolvent_bound_n1(fixtures::gaussian(0.5 * (p.a + p.b), 0.5 * (p.b - p.a)), fx.h0, fx.v);
  r.add(make_record("resolvent-bound-first-order", fx.id, rb.abs_trace, rb.bound, rb.verdict));

  BumpFunction phi(p.a, p.b, p.eps);
  r.add(bounded("bump-trace-norm", fx.id, bump_trace_norm(phi, fx.h0),
                fx.h0.counting(SpectralInterval::open(phi.a_eps(), phi.b_eps()))));
  return r;
}

inline VerificationReport ssf_fixture(const ExperimentConfig& c, int i) {
  VerificationReport r;
  const auto fx = make_fixture(c, i);
  const auto& p = c.parameters;
  const double R = p.window ? *p.window : real_line_window(fx.h0, fx.v);
  BumpFunction phi(p.a, p.b, p.eps);

  const auto eta1 = ssf_first_order(fx.h0, fx.v, -R, R, p.grid_size);
  const auto tf = check_trace_formula(eta1, phi.function(), fx.h0, fx.v);
  r.add(bounded("trace-formula-first-order", fx.id, tf.relative, p.tol.trace_formula));
  double worst = 0.0;
  bool enumerable = true;
  for (double x : eta1.values) {
    if (auto d = lattice_distance(*fx.h0.algebra(), x)) worst = std::max(worst, *d);
    else enumerable = false;
  }
  r.add(enumerable ? bounded("ssf-first-order-values", fx.id, worst, 1e-12)
                   : make_record("ssf-first-order-values", fx.id, worst, 1e-12, Verdict::Info));

  const int n = p.n;
  SpectralShiftFunction shown = eta1, supported = eta1;
  if (n >= 2) {
    ReconstructOptions ra;
    ra.grid_size = p.grid_size;
    ReconstructOptions rb = ra;
    rb.family.extra = 1;
    rb.gauge = SsfGauge::Support;
    try {
      const auto A = ssf_reconstruct(fx.h0, fx.v, n, -R, R, ra);
      const auto B = ssf_reconstruct(fx.h0, fx.v, n, -R, R, rb);
      r.add(bounded("ssf-reconstruction", fx.id, A.diagnostics->held_out_residual, p.tol.reconstruction));
      r.add(bounded("ssf-reconstruction", fx.id, B.diagnostics->held_out_residual, p.tol.reconstruction));
      const auto uq = uniqueness_gauge_check(A, B, p.tol.uniqueness);
      r.add(make_record("ssf-uniqueness", fx.id, uq.relative, p.tol.uniqueness, uq.verdict));
      shown = A;
      supported = B;
    } catch (const ReconstructionError&) {
      r.add(make_record("ssf-reconstruction", fx.id, kInfinity, p.tol.reconstruction, Verdict::Fail));
      return r;
    }
  }
  const auto g = check_growth_rr0(supported, fx.h0, fx.v, n);
  r.add(make_record("growth-envelope", fx.id, g.K, kInfinity, std::isfinite(g.K) ? Verdict::Info : Verdict::Fail));

  if (i == 0) {
    auto& s = r.series["ssf"];
    for (std::size_t j = 0; j < shown.grid.size(); ++j) s.rows.push_back({shown.grid[j], shown.values[j]});
    auto& gr = r.series["growth"];
    for (std::size_t j = 0; j < supported.grid.size(); ++j) {
      const double x = supported.grid[j];
      gr.rows.push_back({x, std::abs(supported.values[j]), g.sup_weighted * std::pow(1.0 + std::abs(x), n)});
    }
  }
  return r;
}

inline VerificationReport remainder_fixture(const ExperimentConfig& c, const ScalarFunction& f, int i) {
  VerificationReport r;
  const auto fx = make_fixture(c, i);
  const auto& p = c.parameters;
  const auto rec = taylor_remainder(f, fx.h0, fx.v, p.n);
  SelfAdjointOperator h1(fx.h0.element() + fx.v);
  const double spectral = remainder_trace(f, fx.h0, h1, fx.v, p.n).real();
  double scale = 1.0 + std::abs(rec.spectral_action_shift);
  for (double d : rec.derivative_traces) scale += std::abs(d);
  r.add(bounded("remainder-consistency", fx.id, std::abs(rec.trace - spectral), p.tol.remainder * scale));
  if (c.function.kind == "polynomial" && c.function.params.size() <= static_cast<std::size_t>(p.n)) {
    r.add(bounded("remainder-polynomial", fx.id, std::abs(rec.trace), p.tol.remainder * scale));
  }
  if (support_within(f, p.a, p.b)) {
    try {
      EmpiricalConstantStore local;
      if (p.n == 1) {
        const auto a6 = check_a6(f, fx.h0, fx.v, 1, p.a, p.b, p.eps, local);
        r.add(make_record("remainder-bound-first-order", fx.id, a6.abs_trace, a6.D * a6.sup_derivative, a6.verdict));
        r.series["bound-margin"].rows.push_back({static_cast<double>(i), a6.abs_trace, a6.D * a6.sup_derivative});
      }
    } catch (const CapabilityError&) {
    }
  }
  return r;
}

}  // namespace suites

inline const std::vector<std::string>& series_header(const std::string& kind) {
  static const std::map<std::string, std::vector<std::string>> h{
      {"ssf", {"lambda", "eta"}},
      {"bound-margin", {"fixture", "abs_trace", "bound"}},
      {"growth", {"x", "abs_eta", "envelope"}},
      {"bump", {"x", "phi"}}};
  return h.at(kind);
}

inline VerificationReport run_experiment(const ExperimentConfig& c) {
  const int count = c.operators.count;
  const auto& p = c.parameters;
  VerificationReport r;
  std::optional<EmpiricalConstantStore> store;
  auto open_store = [&]() -> EmpiricalConstantStore& {
    if (c.constants_store) store.emplace(*c.constants_store);
    else store.emplace();
    return *store;
  };

  switch (c.task) {
    case Task::VerifyIdentities: {
      const auto f = make_function(c.function);
      r = merge(c.name, parallel_map(count, c.workers, [&](int i) { return suites::identities_fixture(c, f, i); }));
      break;
    }
    case Task::VerifyBounds: {
      auto& s = open_store();
      // Estimate shared constants up front; the workers then only read the store.
      for (int k = 1; k < p.n; ++k) constant_or_estimate(s, ConstantKey::two(k), p.instances);
      r = merge(c.name, parallel_map(count, c.workers, [&](int i) { return suites::bounds_fixture(c, s, i); }));
      r.constants = s.snapshot();
      break;
    }
    case Task::Ssf:
      r = merge(c.name, parallel_map(count, c.workers, [&](int i) { return suites::ssf_fixture(c, i); }));
      break;
    case Task::Remainder: {
      const auto f = make_function(c.function);
      r = merge(c.name, parallel_map(count, c.workers, [&](int i) { return suites::remainder_fixture(c, f, i); }));
      break;
    }
    case Task::Bump: {
      r.name = c.name;
      BumpFunction phi(p.a, p.b, p.eps);
      const double lo = phi.a_eps() - p.eps, hi = phi.b_eps() + p.eps;
      auto& s = r.series["bump"];
      double lo_v = 0.0, hi_v = 0.0, outside = 0.0;
      for (int j = 0; j < p.samples; ++j) {
        const double x = j + 1 == p.samples ? hi : lo + (hi - lo) * j / (p.samples - 1);
        const double y = phi(x);
        s.rows.push_back({x, y});
        lo_v = std::min(lo_v, y);
        hi_v = std::max(hi_v, y);
        if (x <= phi.a_eps() || x >= phi.b_eps()) outside = std::max(outside, std::abs(y));
      }
      for (double x : {phi.a_eps(), phi.b_eps()}) outside = std::max(outside, std::abs(phi(x)));
      double plateau = 0.0;
      for (int j = 0; j <= 1000; ++j) plateau = std::max(plateau, std::abs(phi(p.a + (p.b - p.a) * j / 1000.0) - 1.0));
      plateau = std::max(plateau, std::abs(phi(p.b) - 1.0));
      r.add(bounded("bump-plateau", "phi", plateau, p.tol.bump));
      r.add(make_record("bump-range", "phi", hi_v, 1.0, check(lo_v >= 0.0 && hi_v == 1.0)));
      r.add(bounded("bump-support", "phi", outside, 0.0));
      for (const auto& part : parallel_map(count, c.workers, [&](int i) {
             VerificationReport q;
             const auto fx = make_fixture(c, i);
             q.add(bounded("bump-trace-norm", fx.id, bump_trace_norm(phi, fx.h0),
                           fx.h0.counting(SpectralInterval::open(phi.a_eps(), phi.b_eps()))));
             return q;
           })) {
        r.append(part);
      }
      break;
    }
    case Task::Constants: {
      auto& s = open_store();
      for (int k = 1; k <= p.n; ++k) {
        const auto key = ConstantKey::two(k);
        estimate_constant(s, key, p.instances, c.operators.seed);
        r.add(make_record("empirical-constant", key.str(), *s.supremum(key), kInfinity, Verdict::Info));
      }
      r.constants = s.snapshot();
      break;
    }
  }
  r.name = c.name;
  for (auto& [kind, series] : r.series) series.header = series_header(kind);
  r.metadata["config"] = to_json(c);
  return r;
}

}  // namespace specshift::harness
