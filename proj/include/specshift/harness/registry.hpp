#pragma once

#include <algorithm>
#include <array>
#include <stdexcept>
#include <string>
#include <string_view>

namespace specshift::harness {

// Every check a report may carry. Closed: records with any other tag are a
// harness bug and are rejected when the record is made.
struct CheckTag {
  std::string_view name;
  std::string_view statement;
};

inline constexpr std::array kCheckTags{
    CheckTag{"moi-derivative", "k! T_{f^[k]}(V,...,V) equals the k-th derivative of f(H0 + sV) at 0"},
    CheckTag{"moi-cyclic-reduction", "reduced-contraction trace equals the full-contraction trace"},
    CheckTag{"trace-formula-first-order", "tau(f(H0+V) - f(H0)) = int f' eta_1"},
    CheckTag{"ssf-first-order-values", "eta_1 takes values in the trace-weight lattice"},
    CheckTag{"eta-bound-first-order", "int |eta_1| <= (b-a) max counting"},
    CheckTag{"remainder-bound-first-order", "|tau(R_1)| <= D ||f'||_inf"},
    CheckTag{"remainder-bound", "|tau(R_n)| <= D ||f^(n)||_inf with empirical constants"},
    CheckTag{"remainder-consistency", "tau(R_n) from the remainder operator equals the spectral-sum form"},
    CheckTag{"remainder-polynomial", "tau(R_n) vanishes for polynomials of degree < n"},
    CheckTag{"moi-trace-bound", "|tau(T_{f^[k]})| <= C ||f^(k)||_inf prod ||V_l||"},
    CheckTag{"ssf-reconstruction", "held-out test functions reproduce tau(R_n) through eta_n"},
    CheckTag{"ssf-uniqueness", "reconstructions from disjoint families differ by a polynomial of degree < n"},
    CheckTag{"growth-envelope", "|eta_n(x)| <= K (1+|x|)^n times the envelope factor"},
    CheckTag{"resolvent-bound-first-order", "|tau(R_1)| bounded through the resolvent form"},
    CheckTag{"identity-divided-difference", "scalar expansion of f^[n] through u-multiplied divided differences"},
    CheckTag{"identity-operator-expansion", "operator expansion of T_{f^[n]} through tilde-V"},
    CheckTag{"identity-first-order-resolvent", "T_{f^[1]}(V) = T_{(fu)^[1]}(tilde V) - f(H1) tilde V"},
    CheckTag{"bump-plateau", "Phi_eps = 1 on [a,b]"},
    CheckTag{"bump-range", "0 <= Phi_eps <= 1 with sup exactly 1"},
    CheckTag{"bump-support", "Phi_eps vanishes outside (a-eps, b+eps)"},
    CheckTag{"bump-trace-norm", "||Phi_eps(H0)||_1 <= tau(E_H0((a-eps, b+eps)))"},
    CheckTag{"empirical-constant", "running supremum of a norm ratio"},
};

inline bool is_registered(std::string_view tag) {
  return std::any_of(kCheckTags.begin(), kCheckTags.end(), [&](const CheckTag& t) { return t.name == tag; });
}

inline const CheckTag& lookup_tag(std::string_view tag) {
  for (const auto& t : kCheckTags) {
    if (t.name == tag) return t;
  }
  throw std::logic_error("unregistered check tag: " + std::string(tag));
}

}  // namespace specshift::harness
