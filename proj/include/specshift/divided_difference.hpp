#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "specshift/errors.hpp"
#include "specshift/jet.hpp"
#include "specshift/scalar_function.hpp"

namespace specshift {

struct DividedDifferenceOptions {
  // Nodes closer than merge_tol * (1 + |x|) are treated as coincident.
  double merge_tol = 1e-7;
  // Largest relative node spread handled by local Taylor expansion instead of
  // difference quotients.
  double cluster_tol = 1e-3;
  // Extra Taylor terms beyond the order of the difference.
  int taylor_terms = 10;
};

struct DividedDifferenceTable {
  std::vector<double> nodes;  // sorted, after merging
  std::vector<int> multiplicities;
  cplx value;
};

namespace detail {

// Complete homogeneous symmetric polynomials h_0..h_q of ys.
inline std::vector<double> complete_homogeneous(std::span<const double> ys, int q) {
  std::vector<double> h(static_cast<std::size_t>(q) + 1, 0.0);
  h[0] = 1.0;
  for (double y : ys) {
    for (int r = 1; r <= q; ++r) h[r] += y * h[r - 1];
  }
  return h;
}

inline bool breakpoint_between(const std::vector<double>& bps, double lo, double hi) {
  auto it = std::upper_bound(bps.begin(), bps.end(), lo);
  return it != bps.end() && *it <= hi;
}

}  // namespace detail

// Divided difference over sorted nodes, given the jet of f at each node (the
// jets may be shared between equal nodes). Coincident runs use the normalized
// Taylor coefficient, tight clusters a local Taylor expansion, and everything
// else the difference-quotient recursion.
inline cplx divided_difference_sorted(std::span<const double> x, std::span<const Jet<cplx>* const> jets,
                                      const std::vector<double>& breakpoints,
                                      const DividedDifferenceOptions& opt = {}) {
  const int n = static_cast<int>(x.size()) - 1;
  if (n < 0) throw DomainError("divided difference needs at least one node");
  if (n == 0) return (*jets[0])[0];

  std::vector<cplx> table(static_cast<std::size_t>(n) + 1);
  // table[i] holds f[x_i .. x_{i+k}] for the current k.
  for (int i = 0; i <= n; ++i) table[i] = (*jets[i])[0];
  for (int k = 1; k <= n; ++k) {
    for (int i = 0; i + k <= n; ++i) {
      const int j = i + k;
      const double spread = x[j] - x[i];
      const Jet<cplx>& J = *jets[i];
      const int q = J.order() - k;
      if (spread == 0.0) {
        if (q < 0) {
          throw CapabilityError("divided difference: node multiplicity " + std::to_string(k + 1) +
                                " needs derivative order " + std::to_string(k));
        }
        table[i] = J[k];
        continue;
      }
      const double scale = 1.0 + std::abs(x[i]);
      const double taylor_tol =
          q >= 1 ? std::min(opt.cluster_tol, std::pow(10.0, -15.0 / (q + 1))) * scale : 0.0;
      if (q >= 1 && spread <= taylor_tol && !detail::breakpoint_between(breakpoints, x[i], x[j])) {
        std::vector<double> ys(static_cast<std::size_t>(k) + 1);
        for (int r = 0; r <= k; ++r) ys[r] = x[i + r] - x[i];
        const auto h = detail::complete_homogeneous(ys, q);
        cplx s = 0.0;
        for (int r = q; r >= 0; --r) s += J[k + r] * h[r];
        table[i] = s;
        continue;
      }
      table[i] = (table[i + 1] - table[i]) / spread;
    }
  }
  return table[0];
}

// Sort and merge nodes; reps[i] is the index of the first node of i's cluster.
inline void merge_nodes(std::vector<double>& x, std::vector<int>& reps, double tol) {
  std::sort(x.begin(), x.end());
  reps.assign(x.size(), 0);
  for (std::size_t i = 1; i < x.size(); ++i) {
    const int r = reps[i - 1];
    if (x[i] - x[r] <= tol * (1.0 + std::abs(x[r]))) {
      x[i] = x[r];
      reps[i] = r;
    } else {
      reps[i] = static_cast<int>(i);
    }
  }
}

// f^[n](nodes), n = nodes.size() - 1. Symmetric in the nodes.
inline DividedDifferenceTable divided_difference_table(const ScalarFunction& f, std::vector<double> nodes,
                                                       const DividedDifferenceOptions& opt = {}) {
  if (nodes.empty()) throw DomainError("divided difference needs at least one node");
  const int n = static_cast<int>(nodes.size()) - 1;
  const int order = std::min(f.depth(), n + opt.taylor_terms);
  std::vector<int> reps;
  // Snapping only matters when the Taylor branch cannot absorb near-coincident nodes.
  const bool snap = order - n < 4 || !f.breakpoints().empty();
  if (snap) {
    merge_nodes(nodes, reps, opt.merge_tol);
  } else {
    std::sort(nodes.begin(), nodes.end());
    reps.resize(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) reps[i] = static_cast<int>(i);
  }

  std::vector<Jet<cplx>> jets;
  jets.reserve(nodes.size());
  std::vector<const Jet<cplx>*> ptr(nodes.size());
  std::vector<int> mult;
  // Multiplicity of each distinct node bounds the derivative order needed there.
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (reps[i] == static_cast<int>(i)) {
      int m = 1;
      while (i + m < nodes.size() && reps[i + m] == static_cast<int>(i)) ++m;
      mult.push_back(m);
      if (m - 1 > f.depth()) {
        throw CapabilityError(f.name() + ": node multiplicity " + std::to_string(m) + " exceeds derivative depth " +
                              std::to_string(f.depth()));
      }
      jets.push_back(f.jet(nodes[i], order));
    }
  }
  for (std::size_t i = 0, d = 0; i < nodes.size(); ++i) {
    if (reps[i] == static_cast<int>(i) && i > 0) ++d;
    ptr[i] = &jets[d];
  }

  DividedDifferenceTable t;
  t.value = divided_difference_sorted(nodes, ptr, f.breakpoints(), opt);
  t.multiplicities = std::move(mult);
  t.nodes = std::move(nodes);
  return t;
}

inline cplx divided_difference(const ScalarFunction& f, std::vector<double> nodes,
                               const DividedDifferenceOptions& opt = {}) {
  return divided_difference_table(f, std::move(nodes), opt).value;
}

// Opitz formula: f^[n](x_0..x_n) is the top-right entry of f(J) with J the
// upper bidiagonal matrix carrying the nodes on its diagonal and ones above
// it. f(J) is summed as the Taylor series of f about the node mean, so this
// is reliable for functions analytic on a disc around the nodes.
inline cplx opitz_divided_difference(const ScalarFunction& f, const std::vector<double>& nodes, int terms = 60) {
  const int n = static_cast<int>(nodes.size()) - 1;
  double c = 0.0;
  for (double v : nodes) c += v;
  c /= static_cast<double>(nodes.size());
  const auto J = f.jet(c, std::min(terms, f.depth()));
  // Top row of (J - cI)^m, propagated one power at a time.
  std::vector<cplx> row(static_cast<std::size_t>(n) + 1, 0.0), next(row.size());
  row[0] = 1.0;
  cplx acc = n == 0 ? J[0] : 0.0;
  for (int m = 1; m <= J.order(); ++m) {
    for (int col = 0; col <= n; ++col) {
      next[col] = row[col] * (nodes[col] - c) + (col > 0 ? row[col - 1] : 0.0);
    }
    row.swap(next);
    acc += J[m] * row[n];
  }
  return acc;
}

}  // namespace specshift
