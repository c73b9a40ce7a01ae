#pragma once

// L1 norm of the Fourier transform, with the convention
//   g^(xi) = \int g(x) e^{-i x xi} dx.

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <complex>
#include <vector>

#include "specshift/errors.hpp"
#include "specshift/scalar_function.hpp"

namespace specshift {

struct FourierL1 {
  double value = 0.0;
  double error = 0.0;
  int samples = 0;  // spatial samples at the accepted level
};

struct FourierOptions {
  int min_log2 = 10;
  int max_log2 = 20;
  int padding = 16;
  double rel_tol = 1e-7;
};

namespace detail {

// Trapezoid sum of |g^| over all resolved frequencies, from N equispaced
// samples zero-padded by `padding`.
inline double fourier_l1_level(const std::vector<cplx>& samples, double dx, int padding) {
  const std::size_t n = samples.size() * static_cast<std::size_t>(padding);
  std::vector<cplx> in(n, cplx(0.0)), out;
  std::copy(samples.begin(), samples.end(), in.begin());
  Eigen::FFT<double> fft;
  fft.fwd(out, in);
  const double dxi = 2.0 * std::numbers::pi / (static_cast<double>(n) * dx);
  double s = 0.0;
  for (const auto& v : out) s += std::abs(v);
  return s * dx * dxi;
}

}  // namespace detail

// Needs a compact support or a Gaussian envelope. Doubles the sampling density
// until the integral settles; a value that keeps growing means g^ is not
// integrable.
inline FourierL1 fourier_l1(const ScalarFunction& g, const FourierOptions& opt = {}) {
  if (!g.support() && !(g.envelope() && g.envelope()->kind == DecayEnvelope::Kind::Gaussian)) {
    throw CapabilityError(g.name() + ": Fourier norm needs a compact support or Gaussian decay");
  }
  const Interval w = g.sampling_window();
  FourierL1 r;
  double prev = -1.0;
  for (int lg = opt.min_log2; lg <= opt.max_log2; ++lg) {
    const int n = 1 << lg;
    const double dx = w.length() / n;
    std::vector<cplx> s(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) s[j] = g(w.lo + dx * j);
    const double v = detail::fourier_l1_level(s, dx, opt.padding);
    if (prev >= 0.0) {
      r.value = v;
      r.error = std::abs(v - prev);
      r.samples = n;
      if (r.error <= opt.rel_tol * std::max(v, 1e-300) || v == 0.0) return r;
    }
    prev = v;
  }
  if (r.error > 1e-2 * r.value) {
    throw DomainError(g.name() + ": Fourier transform does not appear integrable (no convergence)");
  }
  return r;
}

}  // namespace specshift
