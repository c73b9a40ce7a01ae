#pragma once

// Truncated Taylor arithmetic. A Jet of order m at x holds the normalized
// coefficients c_k = f^(k)(x) / k!, k = 0..m. Closed-form fixtures are written
// once as generic code over Jet and every derivative falls out of the
// recurrences below.

#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

namespace specshift {

using cplx = std::complex<double>;

template <typename T>
class Jet {
 public:
  Jet() = default;
  explicit Jet(int order, T value = T{}) : c_(static_cast<std::size_t>(order) + 1, T{}) { c_[0] = value; }

  // The independent variable x evaluated at x0.
  static Jet variable(int order, T x0) {
    Jet j(order, x0);
    if (order >= 1) j.c_[1] = T{1};
    return j;
  }
  static Jet constant(int order, T v) { return Jet(order, v); }

  int order() const { return static_cast<int>(c_.size()) - 1; }
  T& operator[](int k) { return c_[static_cast<std::size_t>(k)]; }
  const T& operator[](int k) const { return c_[static_cast<std::size_t>(k)]; }
  T value() const { return c_[0]; }

  // k-th derivative, i.e. k! c_k.
  T derivative(int k) const {
    double fact = 1.0;
    for (int i = 2; i <= k; ++i) fact *= i;
    return c_[static_cast<std::size_t>(k)] * fact;
  }

  const std::vector<T>& coefficients() const { return c_; }

  Jet& operator+=(const Jet& o) {
    for (int k = 0; k <= order(); ++k) c_[k] += o[k];
    return *this;
  }
  Jet& operator-=(const Jet& o) {
    for (int k = 0; k <= order(); ++k) c_[k] -= o[k];
    return *this;
  }
  Jet& operator*=(T s) {
    for (auto& v : c_) v *= s;
    return *this;
  }
  Jet& operator+=(T s) {
    c_[0] += s;
    return *this;
  }

 private:
  std::vector<T> c_;
};

template <typename T>
Jet<T> operator+(Jet<T> a, const Jet<T>& b) { return a += b; }
template <typename T>
Jet<T> operator-(Jet<T> a, const Jet<T>& b) { return a -= b; }
template <typename T>
Jet<T> operator-(Jet<T> a) { return a *= T{-1}; }
template <typename T>
Jet<T> operator*(Jet<T> a, T s) { return a *= s; }
template <typename T>
Jet<T> operator*(T s, Jet<T> a) { return a *= s; }
template <typename T>
Jet<T> operator+(Jet<T> a, T s) { return a += s; }
template <typename T>
Jet<T> operator+(T s, Jet<T> a) { return a += s; }
template <typename T>
Jet<T> operator-(Jet<T> a, T s) { return a += -s; }
template <typename T>
Jet<T> operator-(T s, Jet<T> a) { return (a *= T{-1}) += s; }

template <typename T>
Jet<T> operator*(const Jet<T>& a, const Jet<T>& b) {
  const int m = a.order();
  Jet<T> r(m);
  for (int k = 0; k <= m; ++k) {
    T s{};
    for (int j = 0; j <= k; ++j) s += a[j] * b[k - j];
    r[k] = s;
  }
  return r;
}

template <typename T>
Jet<T> operator/(const Jet<T>& a, const Jet<T>& b) {
  const int m = a.order();
  Jet<T> r(m);
  for (int k = 0; k <= m; ++k) {
    T s = a[k];
    for (int j = 1; j <= k; ++j) s -= b[j] * r[k - j];
    r[k] = s / b[0];
  }
  return r;
}

template <typename T>
Jet<T> reciprocal(const Jet<T>& b) { return Jet<T>::constant(b.order(), T{1}) / b; }

template <typename T>
Jet<T> exp(const Jet<T>& a) {
  using std::exp;
  const int m = a.order();
  Jet<T> r(m);
  r[0] = exp(a[0]);
  for (int k = 1; k <= m; ++k) {
    T s{};
    for (int j = 1; j <= k; ++j) s += static_cast<double>(j) * a[j] * r[k - j];
    r[k] = s / static_cast<double>(k);
  }
  return r;
}

// Simultaneous sin/cos recurrence.
template <typename T>
void sincos(const Jet<T>& a, Jet<T>& s, Jet<T>& c) {
  using std::cos;
  using std::sin;
  const int m = a.order();
  s = Jet<T>(m);
  c = Jet<T>(m);
  s[0] = sin(a[0]);
  c[0] = cos(a[0]);
  for (int k = 1; k <= m; ++k) {
    T ss{}, cc{};
    for (int j = 1; j <= k; ++j) {
      ss += static_cast<double>(j) * a[j] * c[k - j];
      cc -= static_cast<double>(j) * a[j] * s[k - j];
    }
    s[k] = ss / static_cast<double>(k);
    c[k] = cc / static_cast<double>(k);
  }
}

template <typename T>
Jet<T> sin(const Jet<T>& a) {
  Jet<T> s, c;
  sincos(a, s, c);
  return s;
}

template <typename T>
Jet<T> cos(const Jet<T>& a) {
  Jet<T> s, c;
  sincos(a, s, c);
  return c;
}

template <typename T>
Jet<T> pow(const Jet<T>& a, int p) {
  Jet<T> r = Jet<T>::constant(a.order(), T{1});
  Jet<T> base = a;
  bool neg = p < 0;
  unsigned e = static_cast<unsigned>(neg ? -p : p);
  while (e) {
    if (e & 1u) r = r * base;
    e >>= 1u;
    if (e) base = base * base;
  }
  return neg ? reciprocal(r) : r;
}

// Antiderivative with prescribed value at the expansion point; the result
// has the same order (the top coefficient of the input is dropped).
template <typename T>
Jet<T> integrate(const Jet<T>& integrand, T value) {
  const int m = integrand.order();
  Jet<T> r(m, value);
  for (int k = 1; k <= m; ++k) r[k] = integrand[k - 1] / static_cast<double>(k);
  return r;
}

template <typename T>
Jet<cplx> to_complex(const Jet<T>& a) {
  Jet<cplx> r(a.order());
  for (int k = 0; k <= a.order(); ++k) r[k] = cplx(a[k]);
  return r;
}

}  // namespace specshift
