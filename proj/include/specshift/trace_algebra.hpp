#pragma once

// Finite direct sum of matrix blocks with a weighted trace
//   tau(A) = sum_b w_b Tr(A_b),
// standing in for a semifinite von Neumann algebra with a normal faithful
// trace. Elements are block-diagonal; everything below acts block by block.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "specshift/errors.hpp"
#include "specshift/scalar_function.hpp"

namespace specshift {

using Matrix = Eigen::MatrixXcd;
using RealVector = Eigen::VectorXd;

struct Block {
  int dim;
  double weight;
  bool operator==(const Block&) const = default;
};

class TraceAlgebra {
 public:
  explicit TraceAlgebra(std::vector<Block> blocks) : blocks_(std::move(blocks)) {
    if (blocks_.empty()) throw DomainError("trace algebra needs at least one block");
    for (const auto& b : blocks_) {
      if (b.dim < 1) throw DomainError("block dimension must be >= 1");
      if (!(b.weight > 0.0) || !std::isfinite(b.weight)) throw DomainError("block weight must be positive and finite");
      total_dim_ += b.dim;
      trace_of_identity_ += b.weight * b.dim;
    }
  }

  // Single block with the canonical trace.
  static std::shared_ptr<const TraceAlgebra> matrices(int dim) {
    return std::make_shared<const TraceAlgebra>(std::vector<Block>{{dim, 1.0}});
  }
  static std::shared_ptr<const TraceAlgebra> make(std::vector<Block> blocks) {
    return std::make_shared<const TraceAlgebra>(std::move(blocks));
  }

  const std::vector<Block>& blocks() const { return blocks_; }
  int block_count() const { return static_cast<int>(blocks_.size()); }
  int total_dimension() const { return total_dim_; }
  double trace_of_identity() const { return trace_of_identity_; }
  bool operator==(const TraceAlgebra& o) const { return blocks_ == o.blocks_; }

 private:
  std::vector<Block> blocks_;
  int total_dim_ = 0;
  double trace_of_identity_ = 0.0;
};

using AlgebraPtr = std::shared_ptr<const TraceAlgebra>;

class AlgebraElement {
 public:
  AlgebraElement() = default;
  AlgebraElement(AlgebraPtr algebra, std::vector<Matrix> blocks) : algebra_(std::move(algebra)), blocks_(std::move(blocks)) {
    if (!algebra_) throw StructuralError("element without algebra");
    if (static_cast<int>(blocks_.size()) != algebra_->block_count()) throw StructuralError("block count mismatch");
    for (std::size_t b = 0; b < blocks_.size(); ++b) {
      const int d = algebra_->blocks()[b].dim;
      if (blocks_[b].rows() != d || blocks_[b].cols() != d) throw StructuralError("block shape mismatch");
    }
  }

  static AlgebraElement zero(const AlgebraPtr& alg) {
    std::vector<Matrix> m;
    for (const auto& b : alg->blocks()) m.push_back(Matrix::Zero(b.dim, b.dim));
    return {alg, std::move(m)};
  }
  static AlgebraElement identity(const AlgebraPtr& alg) {
    std::vector<Matrix> m;
    for (const auto& b : alg->blocks()) m.push_back(Matrix::Identity(b.dim, b.dim));
    return {alg, std::move(m)};
  }
  // Single-block convenience.
  static AlgebraElement from_matrix(const AlgebraPtr& alg, Matrix m) { return {alg, std::vector<Matrix>{std::move(m)}}; }

  const AlgebraPtr& algebra() const { return algebra_; }
  const std::vector<Matrix>& blocks() const { return blocks_; }
  const Matrix& block(int b) const { return blocks_[static_cast<std::size_t>(b)]; }
  Matrix& block(int b) { return blocks_[static_cast<std::size_t>(b)]; }
  int block_count() const { return static_cast<int>(blocks_.size()); }

  AlgebraElement adjoint() const {
    AlgebraElement r = *this;
    for (auto& m : r.blocks_) m.adjointInPlace();
    return r;
  }

  // Largest entrywise modulus.
  double max_abs() const {
    double m = 0.0;
    for (const auto& b : blocks_) m = std::max(m, b.cwiseAbs().maxCoeff());
    return m;
  }

  bool is_hermitian(double tol = -1.0) const {
    double scale = max_abs();
    double t = tol >= 0.0 ? tol : 1e-10 * (1.0 + scale);
    for (const auto& b : blocks_) {
      if ((b - b.adjoint()).cwiseAbs().maxCoeff() > t) return false;
    }
    return true;
  }

  void check_conforms(const AlgebraElement& o) const {
    if (!algebra_ || !o.algebra_ || !(*algebra_ == *o.algebra_)) throw StructuralError("elements belong to different algebras");
  }

  AlgebraElement& operator+=(const AlgebraElement& o) {
    check_conforms(o);
    for (std::size_t b = 0; b < blocks_.size(); ++b) blocks_[b] += o.blocks_[b];
    return *this;
  }
  AlgebraElement& operator-=(const AlgebraElement& o) {
    check_conforms(o);
    for (std::size_t b = 0; b < blocks_.size(); ++b) blocks_[b] -= o.blocks_[b];
    return *this;
  }
  AlgebraElement& operator*=(cplx s) {
    for (auto& m : blocks_) m *= s;
    return *this;
  }

  friend AlgebraElement operator+(AlgebraElement a, const AlgebraElement& b) { return a += b; }
  friend AlgebraElement operator-(AlgebraElement a, const AlgebraElement& b) { return a -= b; }
  friend AlgebraElement operator*(cplx s, AlgebraElement a) { return a *= s; }
  friend AlgebraElement operator*(AlgebraElement a, cplx s) { return a *= s; }
  friend AlgebraElement operator*(const AlgebraElement& a, const AlgebraElement& b) {
    a.check_conforms(b);
    std::vector<Matrix> m;
    m.reserve(a.blocks_.size());
    for (std::size_t i = 0; i < a.blocks_.size(); ++i) m.push_back(a.blocks_[i] * b.blocks_[i]);
    return {a.algebra_, std::move(m)};
  }

 private:
  AlgebraPtr algebra_;
  std::vector<Matrix> blocks_;
};

inline AlgebraElement power(const AlgebraElement& a, int p) {
  if (p < 0) throw DomainError("negative element power");
  AlgebraElement r = AlgebraElement::identity(a.algebra());
  for (int i = 0; i < p; ++i) r = r * a;
  return r;
}

inline cplx trace(const AlgebraElement& a) {
  cplx s = 0.0;
  const auto& blocks = a.algebra()->blocks();
  for (int b = 0; b < a.block_count(); ++b) s += blocks[b].weight * a.block(b).trace();
  return s;
}

inline std::vector<RealVector> singular_values(const AlgebraElement& a) {
  std::vector<RealVector> out;
  for (const auto& m : a.blocks()) out.push_back(Eigen::JacobiSVD<Matrix>(m).singularValues());
  return out;
}

// Largest singular value across blocks; weights do not enter.
inline double operator_norm(const AlgebraElement& a) {
  double s = 0.0;
  for (const auto& sv : singular_values(a)) {
    if (sv.size()) s = std::max(s, sv.maxCoeff());
  }
  return s;
}

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

// ||A||_p = (tau(|A|^p))^{1/p}; p = infinity gives the operator norm.
inline double schatten_norm(const AlgebraElement& a, double p) {
  if (!(p >= 1.0)) throw DomainError("Schatten exponent must satisfy p >= 1");
  if (std::isinf(p)) return operator_norm(a);
  const auto sv = singular_values(a);
  const auto& blocks = a.algebra()->blocks();
  // Scale by the largest singular value so high powers do not overflow.
  double smax = 0.0;
  for (const auto& s : sv) {
    if (s.size()) smax = std::max(smax, s.maxCoeff());
  }
  if (smax == 0.0) return 0.0;
  double acc = 0.0;
  for (std::size_t b = 0; b < sv.size(); ++b) {
    for (int i = 0; i < sv[b].size(); ++i) acc += blocks[b].weight * std::pow(sv[b][i] / smax, p);
  }
  return smax * std::pow(acc, 1.0 / p);
}

// Right-continuous nonincreasing step function t -> mu_t(A): value values[k]
// on [breaks[k], breaks[k+1]), zero from breaks.back() on.
struct StepFunction {
  std::vector<double> breaks{0.0};
  std::vector<double> values;

  double operator()(double t) const {
    if (t < 0.0) return values.empty() ? 0.0 : values.front();
    auto it = std::upper_bound(breaks.begin(), breaks.end(), t);
    const auto k = static_cast<std::size_t>(it - breaks.begin()) - 1;
    return k < values.size() ? values[k] : 0.0;
  }
  double integral() const {
    double s = 0.0;
    for (std::size_t k = 0; k < values.size(); ++k) s += values[k] * (breaks[k + 1] - breaks[k]);
    return s;
  }
};

// Generalized s-numbers: singular values sorted in decreasing order, each
// occupying trace mass equal to its block weight. Equal neighbours merge.
inline StepFunction s_numbers(const AlgebraElement& a) {
  std::vector<std::pair<double, double>> sv;  // (value, mass)
  const auto all = singular_values(a);
  const auto& blocks = a.algebra()->blocks();
  for (std::size_t b = 0; b < all.size(); ++b) {
    for (int i = 0; i < all[b].size(); ++i) sv.emplace_back(all[b][i], blocks[b].weight);
  }
  std::stable_sort(sv.begin(), sv.end(), [](const auto& x, const auto& y) { return x.first > y.first; });
  StepFunction s;
  double t = 0.0;
  for (const auto& [v, mass] : sv) {
    if (v == 0.0) break;
    t += mass;
    if (!s.values.empty() && s.values.back() == v) {
      s.breaks.back() = t;
    } else {
      s.values.push_back(v);
      s.breaks.push_back(t);
    }
  }
  return s;
}

// Interval with explicit endpoint membership.
struct SpectralInterval {
  double lo;
  double hi;
  bool lo_closed = true;
  bool hi_closed = true;

  static SpectralInterval closed(double lo, double hi) { return {lo, hi, true, true}; }
  static SpectralInterval open(double lo, double hi) { return {lo, hi, false, false}; }
  static SpectralInterval half_open(double lo, double hi) { return {lo, hi, true, false}; }

  bool contains(double x) const {
    const bool above = lo_closed ? x >= lo : x > lo;
    const bool below = hi_closed ? x <= hi : x < hi;
    return above && below;
  }
};

// Hermitian element with its spectral decomposition, computed once at
// construction. Copies share the decomposition.
class SelfAdjointOperator {
 public:
  SelfAdjointOperator() = default;
  explicit SelfAdjointOperator(AlgebraElement element, double hermiticity_tol = -1.0) {
    if (!element.is_hermitian(hermiticity_tol)) throw DomainError("operator is not Hermitian within tolerance");
    auto d = std::make_shared<Data>();
    for (int b = 0; b < element.block_count(); ++b) {
      // Symmetrize so the eigensolver sees an exactly Hermitian block.
      Matrix h = 0.5 * (element.block(b) + element.block(b).adjoint());
      Eigen::SelfAdjointEigenSolver<Matrix> es(h);
      if (es.info() != Eigen::Success) throw DomainError("eigensolver failed to converge");
      d->eigenvalues.push_back(es.eigenvalues());
      d->eigenvectors.push_back(es.eigenvectors());
      const Matrix rec = es.eigenvectors() * es.eigenvalues().cast<cplx>().asDiagonal() * es.eigenvectors().adjoint();
      d->residual = std::max(d->residual, (rec - element.block(b)).cwiseAbs().maxCoeff());
      element.block(b) = h;
    }
    d->element = std::move(element);
    data_ = std::move(d);
  }

  const AlgebraElement& element() const { return data_->element; }
  const AlgebraPtr& algebra() const { return data_->element.algebra(); }
  const RealVector& eigenvalues(int b) const { return data_->eigenvalues[static_cast<std::size_t>(b)]; }
  const Matrix& eigenvectors(int b) const { return data_->eigenvectors[static_cast<std::size_t>(b)]; }
  int block_count() const { return data_->element.block_count(); }
  double decomposition_residual() const { return data_->residual; }
  bool same_as(const SelfAdjointOperator& o) const { return data_ == o.data_; }

  double spectral_radius() const {
    double r = 0.0;
    for (const auto& ev : data_->eigenvalues) {
      if (ev.size()) r = std::max({r, std::abs(ev.minCoeff()), std::abs(ev.maxCoeff())});
    }
    return r;
  }
  double min_eigenvalue() const {
    double r = kInfinity;
    for (const auto& ev : data_->eigenvalues) r = std::min(r, ev.minCoeff());
    return r;
  }
  double max_eigenvalue() const {
    double r = -kInfinity;
    for (const auto& ev : data_->eigenvalues) r = std::max(r, ev.maxCoeff());
    return r;
  }
  std::vector<double> all_eigenvalues() const {
    std::vector<double> out;
    for (const auto& ev : data_->eigenvalues) out.insert(out.end(), ev.data(), ev.data() + ev.size());
    std::sort(out.begin(), out.end());
    return out;
  }

  // Weighted number of eigenvalues in the interval: tau(E_H(interval)).
  double counting(const SpectralInterval& iv) const {
    const auto& blocks = algebra()->blocks();
    double s = 0.0;
    for (std::size_t b = 0; b < data_->eigenvalues.size(); ++b) {
      for (int i = 0; i < data_->eigenvalues[b].size(); ++i) {
        if (iv.contains(data_->eigenvalues[b][i])) s += blocks[b].weight;
      }
    }
    return s;
  }

  // U diag(values) U* per block.
  template <typename Fn>
  AlgebraElement spectral_map(Fn&& fn) const {
    std::vector<Matrix> out;
    for (std::size_t b = 0; b < data_->eigenvalues.size(); ++b) {
      const auto& ev = data_->eigenvalues[b];
      Eigen::VectorXcd d(ev.size());
      for (int i = 0; i < ev.size(); ++i) d[i] = fn(ev[i]);
      const auto& U = data_->eigenvectors[b];
      out.push_back(U * d.asDiagonal() * U.adjoint());
    }
    return {algebra(), std::move(out)};
  }

 private:
  struct Data {
    AlgebraElement element;
    std::vector<RealVector> eigenvalues;
    std::vector<Matrix> eigenvectors;
    double residual = 0.0;
  };
  std::shared_ptr<const Data> data_;
};

struct SpectralProjection {
  AlgebraElement element;
  SpectralInterval interval;
  SelfAdjointOperator source;
  double trace = 0.0;  // weighted eigenvalue count
};

inline SpectralProjection spectral_projection(const SelfAdjointOperator& h, const SpectralInterval& iv) {
  SpectralProjection p{h.spectral_map([&](double l) { return iv.contains(l) ? cplx(1.0) : cplx(0.0); }), iv, h,
                       h.counting(iv)};
  return p;
}

inline AlgebraElement apply_function(const ScalarFunction& f, const SelfAdjointOperator& h) {
  return h.spectral_map([&](double l) {
    const cplx v = f(l);
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
      throw DomainError(f.name() + " is undefined at eigenvalue " + std::to_string(l));
    }
    return v;
  });
}

// tau(f(H)) = sum_b w_b sum_i f(lambda_i).
inline cplx trace_of_function(const ScalarFunction& f, const SelfAdjointOperator& h) {
  const auto& blocks = h.algebra()->blocks();
  cplx s = 0.0;
  for (int b = 0; b < h.block_count(); ++b) {
    const auto& ev = h.eigenvalues(b);
    for (int i = 0; i < ev.size(); ++i) s += blocks[b].weight * f(ev[i]);
  }
  return s;
}

// (H - zI)^{-1}.
inline AlgebraElement resolvent(const SelfAdjointOperator& h, cplx z) {
  const double tol = 1e-12 * (1.0 + h.spectral_radius());
  if (std::abs(z.imag()) <= tol) {
    for (double l : h.all_eigenvalues()) {
      if (std::abs(l - z.real()) <= tol) throw SingularityError("resolvent evaluated at an eigenvalue");
    }
  }
  return h.spectral_map([&](double l) { return 1.0 / (l - z); });
}

// ---------------------------------------------------------------------------
// Random fixtures
// ---------------------------------------------------------------------------

using Rng = std::mt19937_64;

inline Matrix random_complex_matrix(int rows, int cols, Rng& rng) {
  std::normal_distribution<double> nd(0.0, 1.0);
  Matrix m(rows, cols);
  for (int j = 0; j < cols; ++j) {
    for (int i = 0; i < rows; ++i) {
      const double re = nd(rng);
      const double im = nd(rng);
      m(i, j) = cplx(re, im);
    }
  }
  return m;
}

// Hermitian element with entries of size ~scale per block.
inline AlgebraElement random_hermitian(const AlgebraPtr& alg, Rng& rng, double scale = 1.0) {
  std::vector<Matrix> blocks;
  for (const auto& b : alg->blocks()) {
    Matrix g = random_complex_matrix(b.dim, b.dim, rng);
    blocks.push_back((g + g.adjoint()) * (0.5 * scale / std::sqrt(static_cast<double>(b.dim))));
  }
  return {alg, std::move(blocks)};
}

inline AlgebraElement random_element(const AlgebraPtr& alg, Rng& rng, double scale = 1.0) {
  std::vector<Matrix> blocks;
  for (const auto& b : alg->blocks()) {
    blocks.push_back(random_complex_matrix(b.dim, b.dim, rng) * (scale / std::sqrt(2.0 * b.dim)));
  }
  return {alg, std::move(blocks)};
}

inline AlgebraElement random_unitary(const AlgebraPtr& alg, Rng& rng) {
  std::vector<Matrix> blocks;
  for (const auto& b : alg->blocks()) {
    Eigen::HouseholderQR<Matrix> qr(random_complex_matrix(b.dim, b.dim, rng));
    blocks.push_back(qr.householderQ() * Matrix::Identity(b.dim, b.dim));
  }
  return {alg, std::move(blocks)};
}

// Hermitian element with prescribed spectrum (per block, in order), rotated
// by a random unitary.
inline AlgebraElement hermitian_with_spectrum(const AlgebraPtr& alg, const std::vector<std::vector<double>>& spectra,
                                              Rng& rng) {
  auto U = random_unitary(alg, rng);
  std::vector<Matrix> blocks;
  for (int b = 0; b < alg->block_count(); ++b) {
    const auto& s = spectra[static_cast<std::size_t>(b)];
    Eigen::VectorXcd d(static_cast<Eigen::Index>(s.size()));
    for (std::size_t i = 0; i < s.size(); ++i) d[static_cast<Eigen::Index>(i)] = s[i];
    blocks.push_back(U.block(b) * d.asDiagonal() * U.block(b).adjoint());
  }
  return {alg, std::move(blocks)};
}

}  // namespace specshift
