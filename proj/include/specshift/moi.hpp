#pragma once

// Multiple operator integrals in finite dimensions:
//   T^{H~,H,...,H}_{f^[k]}(V_1..V_k)
//     = sum f^[k](mu_{i0}, l_{i1}, ..., l_{ik}) P~_{i0} V_1 P_{i1} ... V_k P_{ik},
// evaluated per block after rotating every V into the eigenbases.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "specshift/divided_difference.hpp"
#include "specshift/errors.hpp"
#include "specshift/format.hpp"
#include "specshift/scalar_function.hpp"
#include "specshift/trace_algebra.hpp"

namespace specshift {

struct MoiRequest {
  ScalarFunction symbol;
  SelfAdjointOperator base;                 // H, in every slot but the first
  std::optional<SelfAdjointOperator> first;  // H~; defaults to H
  std::vector<AlgebraElement> perturbations;

  int order() const { return static_cast<int>(perturbations.size()); }
  const SelfAdjointOperator& first_operator() const { return first ? *first : base; }
  bool single_operator() const { return !first || first->same_as(base); }
};

struct MoiResult {
  AlgebraElement element;
  cplx trace = 0.0;
  std::int64_t contraction_cost = 0;
  std::int64_t symbol_evaluations = 0;
};

namespace detail {

// f^[k] at eigenvalue tuples of one block, from jets cached at every
// eigenvalue and memoized on the sorted tuple of eigen-indices.
class SymbolTable {
 public:
  SymbolTable(const ScalarFunction& f, int k, const RealVector& first, const RealVector& rest, bool same,
              const DividedDifferenceOptions& opt = {})
      : k_(k), same_(same), breakpoints_(f.breakpoints()), opt_(opt) {
    const int order = std::min(f.depth(), k + opt.taylor_terms);
    snap_ = order - k < 4 || !breakpoints_.empty();
    for (int i = 0; i < rest.size(); ++i) rest_.push_back({rest[i], f.jet(rest[i], order)});
    if (!same) {
      for (int i = 0; i < first.size(); ++i) first_.push_back({first[i], f.jet(first[i], order)});
    }
    memoize_ = k + 1 <= 8 && rest.size() < 128 && first.size() < 128;
    nodes_.resize(static_cast<std::size_t>(k) + 1);
    x_.resize(nodes_.size());
    jets_.resize(nodes_.size());
  }

  // idx[0] indexes the first spectrum, idx[1..k] the second.
  cplx operator()(const int* idx) {
    for (int s = 0; s <= k_; ++s) {
      const bool from_first = s == 0 && !same_;
      const auto& e = from_first ? first_[idx[0]] : rest_[idx[s]];
      nodes_[s] = {e.x, &e.jet, (from_first ? 0x80u : 0u) | static_cast<unsigned>(idx[s])};
    }
    std::sort(nodes_.begin(), nodes_.end(), [](const Node& a, const Node& b) {
      return a.x < b.x || (a.x == b.x && a.key < b.key);
    });
    std::uint64_t key = 0;
    if (memoize_) {
      for (const auto& n : nodes_) key = (key << 8) | n.key;
      auto it = memo_.find(key);
      if (it != memo_.end()) return it->second;
    }
    std::size_t rep = 0;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      x_[i] = nodes_[i].x;
      jets_[i] = nodes_[i].jet;
      if (snap_ && i > 0 && x_[i] - x_[rep] <= opt_.merge_tol * (1.0 + std::abs(x_[rep]))) {
        x_[i] = x_[rep];
        jets_[i] = jets_[rep];
      } else {
        rep = i;
      }
    }
    const cplx v = divided_difference_sorted(x_, jets_, breakpoints_, opt_);
    ++evaluations_;
    if (memoize_) memo_.emplace(key, v);
    return v;
  }

  std::int64_t evaluations() const { return evaluations_; }

 private:
  struct Entry {
    double x;
    Jet<cplx> jet;
  };
  struct Node {
    double x;
    const Jet<cplx>* jet;
    unsigned key;
  };
  int k_;
  bool same_;
  bool snap_ = true;
  bool memoize_ = true;
  std::vector<double> breakpoints_;
  DividedDifferenceOptions opt_;
  std::vector<Entry> first_, rest_;
  std::vector<Node> nodes_;
  std::vector<double> x_;
  std::vector<const Jet<cplx>*> jets_;
  std::unordered_map<std::uint64_t, cplx> memo_;
  std::int64_t evaluations_ = 0;
};

inline void check_request(const MoiRequest& req) {
  const int k = req.order();
  if (k < 1) throw DomainError("multiple operator integral needs k >= 1");
  if (req.symbol.depth() < k) {
    throw CapabilityError(req.symbol.name() + ": depth " + std::to_string(req.symbol.depth()) + " below order " +
                          std::to_string(k));
  }
  const auto& alg = *req.base.algebra();
  if (!(*req.first_operator().algebra() == alg)) throw StructuralError("operators belong to different algebras");
  for (const auto& v : req.perturbations) {
    if (!v.algebra() || !(*v.algebra() == alg)) throw StructuralError("perturbation belongs to a different algebra");
  }
}

// Perturbations rotated into eigenbases: W_1 = U~* V_1 U, W_l = U* V_l U.
inline std::vector<Matrix> rotated(const MoiRequest& req, int b) {
  const Matrix& Ut = req.first_operator().eigenvectors(b);
  const Matrix& U = req.base.eigenvectors(b);
  std::vector<Matrix> W;
  for (int l = 0; l < req.order(); ++l) {
    const Matrix& L = l == 0 ? Ut : U;
    W.push_back(L.adjoint() * req.perturbations[static_cast<std::size_t>(l)].block(b) * U);
  }
  return W;
}

}  // namespace detail

inline MoiResult moi_eval(const MoiRequest& req, const DividedDifferenceOptions& opt = {}) {
  detail::check_request(req);
  const int k = req.order();
  const auto& H = req.base;
  const auto& Ht = req.first_operator();
  MoiResult res;
  std::vector<Matrix> out;
  for (int b = 0; b < H.block_count(); ++b) {
    const auto& mu = Ht.eigenvalues(b);
    const auto& lam = H.eigenvalues(b);
    const int n = static_cast<int>(lam.size());
    const auto W = detail::rotated(req, b);
    detail::SymbolTable sym(req.symbol, k, mu, lam, req.single_operator(), opt);
    Matrix T = Matrix::Zero(n, n);
    std::vector<int> idx(static_cast<std::size_t>(k) + 1);
    // Depth-first over the inner indices, carrying the running product.
    auto recurse = [&](auto&& self, int level, cplx prod) -> void {
      const Matrix& Wl = W[static_cast<std::size_t>(level - 1)];
      const int prev = idx[static_cast<std::size_t>(level - 1)];
      if (level == k) {
        for (int c = 0; c < n; ++c) {
          const cplx w = Wl(prev, c);
          if (w == 0.0) continue;
          idx[static_cast<std::size_t>(k)] = c;
          T(idx[0], c) += sym(idx.data()) * prod * w;
        }
        res.contraction_cost += n;
        return;
      }
      for (int i = 0; i < n; ++i) {
        const cplx p = prod * Wl(prev, i);
        if (p == 0.0) continue;
        idx[static_cast<std::size_t>(level)] = i;
        self(self, level + 1, p);
      }
      res.contraction_cost += n;
    };
    for (int a = 0; a < n; ++a) {
      idx[0] = a;
      recurse(recurse, 1, cplx(1.0));
    }
    res.symbol_evaluations += sym.evaluations();
    out.push_back(Ht.eigenvectors(b) * T * H.eigenvectors(b).adjoint());
  }
  res.element = AlgebraElement(H.algebra(), std::move(out));
  res.trace = trace(res.element);
  return res;
}

// tau(T_{f^[k]}(V_1..V_k)). With a single operator the last eigen-index is
// tied to the first by cyclicity, which leaves a k-fold sum of
//   f^[k](l_{i0}, ..., l_{i(k-1)}, l_{i0}) W_1[i0,i1] ... W_k[i(k-1), i0].
inline cplx moi_trace(const MoiRequest& req, const DividedDifferenceOptions& opt = {}) {
  detail::check_request(req);
  if (!req.single_operator()) return moi_eval(req, opt).trace;
  const int k = req.order();
  const auto& H = req.base;
  const auto& blocks = H.algebra()->blocks();
  cplx total = 0.0;
  for (int b = 0; b < H.block_count(); ++b) {
    const auto& lam = H.eigenvalues(b);
    const int n = static_cast<int>(lam.size());
    const auto W = detail::rotated(req, b);
    detail::SymbolTable sym(req.symbol, k, lam, lam, true, opt);
    std::vector<int> idx(static_cast<std::size_t>(k) + 1);
    cplx acc = 0.0;
    auto recurse = [&](auto&& self, int level, cplx prod) -> void {
      if (level == k) {
        idx[static_cast<std::size_t>(k)] = idx[0];
        const cplx w = W[static_cast<std::size_t>(k - 1)](idx[static_cast<std::size_t>(k - 1)], idx[0]);
        if (w != 0.0) acc += sym(idx.data()) * prod * w;
        return;
      }
      const Matrix& Wl = W[static_cast<std::size_t>(level - 1)];
      const int prev = idx[static_cast<std::size_t>(level - 1)];
      for (int i = 0; i < n; ++i) {
        const cplx p = prod * Wl(prev, i);
        if (p == 0.0) continue;
        idx[static_cast<std::size_t>(level)] = i;
        self(self, level + 1, p);
      }
    };
    for (int a = 0; a < n; ++a) {
      idx[0] = a;
      recurse(recurse, 1, cplx(1.0));
    }
    total += blocks[static_cast<std::size_t>(b)].weight * acc;
  }
  return total;
}

// ||f^(k)||_inf: over the declared window when there is one, otherwise over
// the convex hull of the spectra (the only values a matrix MOI sees).
inline double symbol_sup_norm(const ScalarFunction& f, int k, const MoiRequest& req) {
  if (f.support() || f.envelope()) return f.sup_norm(k);
  const double lo = std::min(req.base.min_eigenvalue(), req.first_operator().min_eigenvalue());
  const double hi = std::max(req.base.max_eigenvalue(), req.first_operator().max_eigenvalue());
  double s = 0.0;
  const int samples = 4096;
  for (int i = 0; i <= samples; ++i) {
    const double x = hi > lo ? lo + (hi - lo) * i / samples : lo;
    s = std::max(s, std::abs(f.derivative(x, k)));
  }
  return s;
}

// ---------------------------------------------------------------------------
// Norm-bound ratios and the empirical constant store
// ---------------------------------------------------------------------------

struct ConstantKey {
  int k = 1;
  double alpha = 2.0;
  std::vector<double> alphas;

  std::string str() const {
    std::ostringstream os;
    os.precision(17);
    os << "k=" << k << ";alpha=" << alpha << ";alphas=";
    for (std::size_t i = 0; i < alphas.size(); ++i) os << (i ? ":" : "") << alphas[i];
    return os.str();
  }
  // The split used for c_{2,k}: alpha = 2 and every alpha_l = 2k.
  static ConstantKey two(int k) { return {k, 2.0, std::vector<double>(static_cast<std::size_t>(k), 2.0 * k)}; }
};

struct NormRatio {
  double ratio = 0.0;
  double numerator = 0.0;    // ||T||_alpha
  double denominator = 0.0;  // ||f^(k)||_inf prod ||V_l||_{alpha_l}
};

inline void check_holder(double alpha, const std::vector<double>& alphas) {
  if (!(alpha >= 1.0)) throw DomainError("exponent alpha must be >= 1");
  double s = 0.0;
  for (double a : alphas) {
    if (!(a > 1.0)) throw DomainError("component exponents must exceed 1");
    if (!std::isinf(a)) s += 1.0 / a;
  }
  if (std::abs(s - 1.0 / alpha) > 1e-12) throw DomainError("exponents violate 1/alpha = sum 1/alpha_l");
}

inline NormRatio bound_ratio_norm(const MoiRequest& req, double alpha, const std::vector<double>& alphas) {
  if (static_cast<int>(alphas.size()) != req.order()) throw DomainError("one exponent per perturbation required");
  check_holder(alpha, alphas);
  NormRatio r;
  r.numerator = schatten_norm(moi_eval(req).element, alpha);
  r.denominator = symbol_sup_norm(req.symbol, req.order(), req);
  for (std::size_t l = 0; l < alphas.size(); ++l) r.denominator *= schatten_norm(req.perturbations[l], alphas[l]);
  r.ratio = r.denominator > 0.0 ? r.numerator / r.denominator : 0.0;
  return r;
}

struct RatioRow {
  ConstantKey key;
  std::uint64_t seed = 0;
  double ratio = 0.0;
  double running_sup = 0.0;

  static std::string csv_header() { return "k,alpha,alphas,seed,ratio,running_sup"; }
  std::string csv() const {
    std::string a;
    for (std::size_t i = 0; i < key.alphas.size(); ++i) a += (i ? ":" : "") + format_double(key.alphas[i]);
    return std::to_string(key.k) + "," + format_double(key.alpha) + "," + a + "," + std::to_string(seed) + "," +
           format_double(ratio) + "," + format_double(running_sup);
  }
};

// Running suprema of observed ratios per (k, alpha split). Backed by an
// append-only CSV log; opening a store replays every log line.
class EmpiricalConstantStore {
 public:
  EmpiricalConstantStore() = default;
  explicit EmpiricalConstantStore(std::filesystem::path log) : log_(std::move(log)) {
    std::ifstream in(log_);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty() || line.rfind("k,", 0) == 0) continue;
      std::vector<std::string> f;
      std::stringstream ss(line);
      std::string cell;
      while (std::getline(ss, cell, ',')) f.push_back(cell);
      if (f.size() < 5) continue;
      ConstantKey key;
      key.k = std::stoi(f[0]);
      key.alpha = std::stod(f[1]);
      std::stringstream as(f[2]);
      while (std::getline(as, cell, ':')) key.alphas.push_back(std::stod(cell));
      absorb(key.str(), std::stod(f[4]));
    }
  }

  const std::filesystem::path& log_path() const { return log_; }

  RatioRow record(const ConstantKey& key, std::uint64_t seed, double ratio) {
    std::lock_guard<std::mutex> lock(*mutex_);
    const double sup = absorb(key.str(), ratio);
    RatioRow row{key, seed, ratio, sup};
    if (!log_.empty()) {
      const bool fresh = !std::filesystem::exists(log_);
      std::ofstream out(log_, std::ios::app);
      if (fresh) out << RatioRow::csv_header() << '\n';
      out << row.csv() << '\n';
    }
    return row;
  }

  std::optional<double> supremum(const ConstantKey& key) const {
    auto it = entries_.find(key.str());
    if (it == entries_.end()) return std::nullopt;
    return it->second.sup;
  }
  std::size_t count(const ConstantKey& key) const {
    auto it = entries_.find(key.str());
    return it == entries_.end() ? 0 : it->second.count;
  }
  // key string -> (supremum, sample count), sorted by key.
  std::map<std::string, std::pair<double, std::size_t>> snapshot() const {
    std::map<std::string, std::pair<double, std::size_t>> m;
    for (const auto& [k, e] : entries_) m[k] = {e.sup, e.count};
    return m;
  }

 private:
  struct Entry {
    double sup = 0.0;
    std::size_t count = 0;
  };
  double absorb(const std::string& key, double ratio) {
    auto& e = entries_[key];
    e.sup = std::max(e.sup, ratio);
    ++e.count;
    return e.sup;
  }
  std::filesystem::path log_;
  std::map<std::string, Entry> entries_;
  std::shared_ptr<std::mutex> mutex_ = std::make_shared<std::mutex>();
};

// Random instance i of the family used to estimate c_{alpha,k}: Hermitian H~
// and H (distinct), perturbations with random singular profiles, and a
// Gaussian symbol of random centre and width.
inline MoiRequest constant_family_instance(int k, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_int_distribution<int> dim(3, 8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto alg = TraceAlgebra::matrices(dim(rng));
  MoiRequest req;
  req.symbol = fixtures::gaussian(2.0 * u(rng) - 1.0, 0.2 + 1.3 * u(rng));
  req.base = SelfAdjointOperator(random_hermitian(alg, rng, 3.0));
  req.first = SelfAdjointOperator(random_hermitian(alg, rng, 3.0));
  for (int l = 0; l < k; ++l) req.perturbations.push_back(random_hermitian(alg, rng, 0.1 + u(rng)));
  return req;
}

inline std::vector<RatioRow> estimate_constant(EmpiricalConstantStore& store, const ConstantKey& key, int instances,
                                               std::uint64_t seed) {
  std::vector<RatioRow> rows;
  for (int i = 0; i < instances; ++i) {
    const std::uint64_t s = seed + static_cast<std::uint64_t>(i);
    const auto req = constant_family_instance(key.k, s);
    rows.push_back(store.record(key, s, bound_ratio_norm(req, key.alpha, key.alphas).ratio));
  }
  return rows;
}

inline double constant_or_estimate(EmpiricalConstantStore& store, const ConstantKey& key, int instances = 200,
                                   std::uint64_t seed = 1) {
  if (auto s = store.supremum(key)) return *s;
  estimate_constant(store, key, instances, seed);
  return *store.supremum(key);
}

}  // namespace specshift
