#pragma once

// Forward-mode dual numbers with a fixed number of derivative slots.
// Nesting Dual<Dual<double, N>, N> yields exact second derivatives.

#include <array>
#include <cmath>
#include <cstddef>
#include <type_traits>

namespace surfvec {

template <class T, std::size_t N>
struct Dual {
  T val{};
  std::array<T, N> d{};

  Dual() = default;
  Dual(double v) : val(v) {}  // NOLINT: implicit lift of constants
  Dual(const T& v, const std::array<T, N>& g) : val(v), d(g) {}

  template <class U = T, class = std::enable_if_t<!std::is_same_v<U, double>>>
  Dual(const T& v) : val(v) {}  // NOLINT

  Dual& operator+=(const Dual& o) {
    val += o.val;
    for (std::size_t i = 0; i < N; ++i) d[i] += o.d[i];
    return *this;
  }
  Dual& operator-=(const Dual& o) {
    val -= o.val;
    for (std::size_t i = 0; i < N; ++i) d[i] -= o.d[i];
    return *this;
  }
  Dual& operator*=(const Dual& o) {
    for (std::size_t i = 0; i < N; ++i) d[i] = d[i] * o.val + val * o.d[i];
    val *= o.val;
    return *this;
  }
  Dual& operator/=(const Dual& o) {
    const T inv = T(1.0) / o.val;
    const T q = val * inv;
    for (std::size_t i = 0; i < N; ++i) d[i] = (d[i] - q * o.d[i]) * inv;
    val = q;
    return *this;
  }
};

template <class T>
struct is_dual : std::false_type {};
template <class T, std::size_t N>
struct is_dual<Dual<T, N>> : std::true_type {};

/// Innermost real value of a (possibly nested) dual.
inline double value_of(double x) { return x; }
template <class T, std::size_t N>
double value_of(const Dual<T, N>& x) {
  return value_of(x.val);
}

template <class T, std::size_t N>
Dual<T, N> operator-(const Dual<T, N>& a) {
  Dual<T, N> r;
  r.val = -a.val;
  for (std::size_t i = 0; i < N; ++i) r.d[i] = -a.d[i];
  return r;
}

#define SURFVEC_DUAL_BINOP(op, cop)                                          \
  template <class T, std::size_t N>                                          \
  Dual<T, N> operator op(Dual<T, N> a, const Dual<T, N>& b) {                \
    a cop b;                                                                 \
    return a;                                                                \
  }                                                                          \
  template <class T, std::size_t N>                                          \
  Dual<T, N> operator op(Dual<T, N> a, double b) {                           \
    a cop Dual<T, N>(b);                                                     \
    return a;                                                                \
  }                                                                          \
  template <class T, std::size_t N>                                          \
  Dual<T, N> operator op(double a, const Dual<T, N>& b) {                    \
    Dual<T, N> r(a);                                                         \
    r cop b;                                                                 \
    return r;                                                                \
  }

SURFVEC_DUAL_BINOP(+, +=)
SURFVEC_DUAL_BINOP(-, -=)
SURFVEC_DUAL_BINOP(*, *=)
SURFVEC_DUAL_BINOP(/, /=)
#undef SURFVEC_DUAL_BINOP

template <class T, std::size_t N>
bool operator<(const Dual<T, N>& a, double b) {
  return value_of(a) < b;
}
template <class T, std::size_t N>
bool operator>(const Dual<T, N>& a, double b) {
  return value_of(a) > b;
}

namespace detail {
// Applies the chain rule given f(val) and f'(val).
template <class T, std::size_t N>
Dual<T, N> chain(const Dual<T, N>& a, const T& f, const T& df) {
  Dual<T, N> r;
  r.val = f;
  for (std::size_t i = 0; i < N; ++i) r.d[i] = df * a.d[i];
  return r;
}
}  // namespace detail

template <class T, std::size_t N>
Dual<T, N> sqrt(const Dual<T, N>& a) {
  using std::sqrt;
  const T s = sqrt(a.val);
  return detail::chain(a, s, T(0.5) / s);
}

template <class T, std::size_t N>
Dual<T, N> sin(const Dual<T, N>& a) {
  using std::cos;
  using std::sin;
  return detail::chain(a, T(sin(a.val)), T(cos(a.val)));
}

template <class T, std::size_t N>
Dual<T, N> cos(const Dual<T, N>& a) {
  using std::cos;
  using std::sin;
  return detail::chain(a, T(cos(a.val)), T(-sin(a.val)));
}

template <class T, std::size_t N>
Dual<T, N> atan2(const Dual<T, N>& y, const Dual<T, N>& x) {
  using std::atan2;
  Dual<T, N> r;
  r.val = atan2(y.val, x.val);
  const T inv = T(1.0) / (x.val * x.val + y.val * y.val);
  for (std::size_t i = 0; i < N; ++i) r.d[i] = (x.val * y.d[i] - y.val * x.d[i]) * inv;
  return r;
}

/// Seeds a point so that derivative slot i carries d/dx_i.
template <class T, std::size_t N>
std::array<Dual<T, N>, N> seed(const std::array<T, N>& x) {
  std::array<Dual<T, N>, N> out;
  for (std::size_t i = 0; i < N; ++i) {
    out[i].val = x[i];
    out[i].d[i] = T(1.0);
  }
  return out;
}

}  // namespace surfvec
