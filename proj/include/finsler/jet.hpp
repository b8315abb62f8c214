#pragma once

// Truncated multivariate Taylor polynomials in the four tangent-bundle
// coordinates (x1, x2, y1, y2).
//
// A Jet<Scalar, XMax, TMax> stores the Taylor coefficients f^(a)/a! of every
// monomial dx1^a1 dx2^a2 dy1^b1 dy2^b2 with a1+a2 <= XMax and
// a1+a2+b1+b2 <= TMax. The retained monomials form the complement of a
// monomial ideal, so products truncate consistently. Differentiation lowers
// the bounds in the type: dx() gives <XMax-1, TMax-1>, dy() gives
// <XMax, TMax-1>, and mixed-bound arithmetic truncates to the common part.

#include <algorithm>
#include <array>
#include <cstdint>

#include "finsler/scalar.hpp"

namespace finsler {

namespace detail {

struct Monomial {
  std::int8_t e[4];
  constexpr int xdeg() const { return e[0] + e[1]; }
  constexpr int total() const { return e[0] + e[1] + e[2] + e[3]; }
};

template <int XMax, int TMax>
struct JetLayout {
  static constexpr bool contains(int a1, int a2, int b1, int b2) {
    return a1 >= 0 && a2 >= 0 && b1 >= 0 && b2 >= 0 && a1 + a2 <= XMax &&
           a1 + a2 + b1 + b2 <= TMax;
  }

  static constexpr int count() {
    int n = 0;
    for (int t = 0; t <= TMax; ++t)
      for (int a1 = 0; a1 <= t; ++a1)
        for (int a2 = 0; a1 + a2 <= t; ++a2)
          for (int b1 = 0; a1 + a2 + b1 <= t; ++b1)
            if (contains(a1, a2, b1, t - a1 - a2 - b1)) ++n;
    return n;
  }

  static constexpr int size = count();

  static constexpr std::array<Monomial, size> build() {
    std::array<Monomial, size> m{};
    int n = 0;
    for (int t = 0; t <= TMax; ++t)
      for (int a1 = 0; a1 <= t; ++a1)
        for (int a2 = 0; a1 + a2 <= t; ++a2)
          for (int b1 = 0; a1 + a2 + b1 <= t; ++b1) {
            const int b2 = t - a1 - a2 - b1;
            if (contains(a1, a2, b1, b2)) {
              m[n++] = Monomial{{static_cast<std::int8_t>(a1), static_cast<std::int8_t>(a2),
                                 static_cast<std::int8_t>(b1), static_cast<std::int8_t>(b2)}};
            }
          }
    return m;
  }

  static constexpr std::array<Monomial, size> monomials = build();

  static constexpr int kSide = TMax + 1;
  static constexpr std::array<std::int16_t, kSide * kSide * kSide * kSide> build_lookup() {
    std::array<std::int16_t, kSide * kSide * kSide * kSide> t{};
    for (auto& v : t) v = -1;
    for (int i = 0; i < size; ++i) {
      const auto& m = monomials[i];
      t[((m.e[0] * kSide + m.e[1]) * kSide + m.e[2]) * kSide + m.e[3]] = static_cast<std::int16_t>(i);
    }
    return t;
  }
  static constexpr auto lookup_table = build_lookup();

  /// O(1) runtime index of a monomial, -1 when truncated away.
  static int lookup(int a1, int a2, int b1, int b2) {
    if (!contains(a1, a2, b1, b2)) return -1;
    return lookup_table[((a1 * kSide + a2) * kSide + b1) * kSide + b2];
  }

  static constexpr int index(int a1, int a2, int b1, int b2) {
    if (!contains(a1, a2, b1, b2)) return -1;
    for (int i = 0; i < size; ++i) {
      const auto& m = monomials[i];
      if (m.e[0] == a1 && m.e[1] == a2 && m.e[2] == b1 && m.e[3] == b2) return i;
    }
    return -1;
  }
};

struct ProductTerm {
  std::int16_t lhs, rhs, out;
};

template <typename L1, typename L2, typename R>
struct ProductTable {
  static constexpr int count() {
    int n = 0;
    for (int i = 0; i < L1::size; ++i)
      for (int j = 0; j < L2::size; ++j) {
        const auto& a = L1::monomials[i];
        const auto& b = L2::monomials[j];
        if (R::contains(a.e[0] + b.e[0], a.e[1] + b.e[1], a.e[2] + b.e[2], a.e[3] + b.e[3])) ++n;
      }
    return n;
  }
  static constexpr int size = count();
  // Terms grouped by output coefficient so each output can be accumulated in a register.
  static constexpr std::array<ProductTerm, size> build() {
    std::array<ProductTerm, size> raw{};
    std::array<int, R::size + 1> start{};
    int n = 0;
    for (int i = 0; i < L1::size; ++i)
      for (int j = 0; j < L2::size; ++j) {
        const auto& a = L1::monomials[i];
        const auto& b = L2::monomials[j];
        const int k =
            R::index(a.e[0] + b.e[0], a.e[1] + b.e[1], a.e[2] + b.e[2], a.e[3] + b.e[3]);
        if (k >= 0) {
          raw[n++] = ProductTerm{static_cast<std::int16_t>(i), static_cast<std::int16_t>(j),
                                 static_cast<std::int16_t>(k)};
          ++start[k + 1];
        }
      }
    for (int k = 0; k < R::size; ++k) start[k + 1] += start[k];
    std::array<ProductTerm, size> t{};
    for (int m = 0; m < size; ++m) t[start[raw[m].out]++] = raw[m];
    return t;
  }
  static constexpr std::array<ProductTerm, size> terms = build();
  // offsets[k] .. offsets[k + 1] delimit the terms feeding output k.
  static constexpr std::array<int, R::size + 1> build_offsets() {
    std::array<int, R::size + 1> o{};
    for (int n = 0; n < size; ++n) ++o[terms[n].out + 1];
    for (int k = 0; k < R::size; ++k) o[k + 1] += o[k];
    return o;
  }
  static constexpr std::array<int, R::size + 1> offsets = build_offsets();
};

struct DiffTerm {
  std::int16_t src;
  double factor;
};

// d/d(var) maps monomial m of Out to coefficient (m_var + 1) * c[m + e_var] of In.
template <typename In, typename Out, int Var>
struct DiffTable {
  static constexpr std::array<DiffTerm, Out::size> build() {
    std::array<DiffTerm, Out::size> t{};
    for (int k = 0; k < Out::size; ++k) {
      int e[4] = {Out::monomials[k].e[0], Out::monomials[k].e[1], Out::monomials[k].e[2],
                  Out::monomials[k].e[3]};
      const double factor = e[Var] + 1;
      e[Var] += 1;
      t[k] = DiffTerm{static_cast<std::int16_t>(In::index(e[0], e[1], e[2], e[3])), factor};
    }
    return t;
  }
  static constexpr std::array<DiffTerm, Out::size> terms = build();
};

template <typename In, typename Out>
struct EmbedTable {
  static constexpr std::array<std::int16_t, Out::size> build() {
    std::array<std::int16_t, Out::size> t{};
    for (int k = 0; k < Out::size; ++k) {
      const auto& m = Out::monomials[k];
      t[k] = static_cast<std::int16_t>(In::index(m.e[0], m.e[1], m.e[2], m.e[3]));
    }
    return t;
  }
  static constexpr std::array<std::int16_t, Out::size> terms = build();
};

constexpr double factorial(int n) { return n <= 1 ? 1.0 : n * factorial(n - 1); }

}  // namespace detail

template <typename Scalar, int XMax, int TMax>
class Jet {
  static_assert(XMax >= 0 && TMax >= 0 && XMax <= TMax);

 public:
  using Layout = detail::JetLayout<XMax, TMax>;
  using ScalarType = Scalar;
  static constexpr int kXMax = XMax;
  static constexpr int kTMax = TMax;
  static constexpr int kSize = Layout::size;

  Jet() { c_.fill(finsler::constant<Scalar>(0.0)); }
  explicit Jet(const Scalar& c) : Jet() { c_[0] = c; }

  /// Coordinate function `var` (0,1 = x1,x2; 2,3 = y1,y2) expanded about `center`.
  static Jet variable(int var, const Scalar& center) {
    Jet j(center);
    const int e[4] = {var == 0, var == 1, var == 2, var == 3};
    const int k = Layout::index(e[0], e[1], e[2], e[3]);
    if (k >= 0) j.c_[k] = finsler::constant<Scalar>(1.0);
    return j;
  }

  const Scalar& value() const { return c_[0]; }
  Scalar& operator[](int i) { return c_[i]; }
  const Scalar& operator[](int i) const { return c_[i]; }

  /// Taylor coefficient of dx1^a1 dx2^a2 dy1^b1 dy2^b2 (zero when truncated away).
  Scalar coefficient(int a1, int a2, int b1, int b2) const {
    const int k = Layout::lookup(a1, a2, b1, b2);
    return k < 0 ? finsler::constant<Scalar>(0.0) : c_[k];
  }

  /// Partial derivative d^(a1+a2+b1+b2) / dx1^a1 dx2^a2 dy1^b1 dy2^b2 at the center.
  Scalar partial(int a1, int a2, int b1, int b2) const {
    return coefficient(a1, a2, b1, b2) *
           (detail::factorial(a1) * detail::factorial(a2) * detail::factorial(b1) *
            detail::factorial(b2));
  }

  /// Compile-time-indexed partial derivative at the center.
  template <int A1, int A2, int B1, int B2>
  Scalar d() const {
    constexpr int k = Layout::index(A1, A2, B1, B2);
    static_assert(k >= 0, "partial outside the jet truncation");
    constexpr double f = detail::factorial(A1) * detail::factorial(A2) *
                         detail::factorial(B1) * detail::factorial(B2);
    if constexpr (f == 1.0) {
      return c_[k];
    } else {
      return c_[k] * f;
    }
  }

  void set_partial(int a1, int a2, int b1, int b2, const Scalar& v) {
    const int k = Layout::lookup(a1, a2, b1, b2);
    if (k >= 0)
      c_[k] = v * (1.0 / (detail::factorial(a1) * detail::factorial(a2) *
                          detail::factorial(b1) * detail::factorial(b2)));
  }

  auto dx(int i) const {
    static_assert(XMax >= 1);
    using Out = Jet<Scalar, XMax - 1, TMax - 1>;
    return i == 0 ? differentiate<Out, 0>() : differentiate<Out, 1>();
  }

  auto dy(int i) const {
    static_assert(TMax >= 1);
    using Out = Jet<Scalar, std::min(XMax, TMax - 1), TMax - 1>;
    return i == 0 ? differentiate<Out, 2>() : differentiate<Out, 3>();
  }

  template <int X2, int T2>
  Jet<Scalar, X2, T2> truncate() const {
    static_assert(X2 <= XMax && T2 <= TMax);
    using Out = Jet<Scalar, X2, T2>;
    using Table = detail::EmbedTable<Layout, typename Out::Layout>;
    Out r;
    for (int k = 0; k < Out::kSize; ++k) r[k] = c_[Table::terms[k]];
    return r;
  }

  Jet& operator+=(const Jet& o) {
    for (int k = 0; k < kSize; ++k) c_[k] += o.c_[k];
    return *this;
  }
  Jet& operator-=(const Jet& o) {
    for (int k = 0; k < kSize; ++k) c_[k] -= o.c_[k];
    return *this;
  }
  Jet& operator*=(const Scalar& s) {
    for (int k = 0; k < kSize; ++k) c_[k] *= s;
    return *this;
  }
  Jet& operator*=(double s) requires(!std::is_same_v<Scalar, double>) {
    for (int k = 0; k < kSize; ++k) c_[k] *= s;
    return *this;
  }
  Jet operator-() const {
    Jet r;
    for (int k = 0; k < kSize; ++k) r.c_[k] = -c_[k];
    return r;
  }

  /// Adds lhs * rhs into this jet, truncating to this layout.
  template <int X1, int T1, int X2, int T2>
  void add_product(const Jet<Scalar, X1, T1>& lhs, const Jet<Scalar, X2, T2>& rhs) {
    using Table = detail::ProductTable<typename Jet<Scalar, X1, T1>::Layout,
                                       typename Jet<Scalar, X2, T2>::Layout, Layout>;
    for (int k = 0; k < kSize; ++k) {
      const int end = Table::offsets[k + 1];
      int n = Table::offsets[k];
      if (n == end) continue;
      Scalar acc = lhs[Table::terms[n].lhs] * rhs[Table::terms[n].rhs];
      for (++n; n < end; ++n) acc += lhs[Table::terms[n].lhs] * rhs[Table::terms[n].rhs];
      c_[k] += acc;
    }
  }

 private:
  template <typename Out, int Var>
  Out differentiate() const {
    using Table = detail::DiffTable<Layout, typename Out::Layout, Var>;
    Out r;
    for (int k = 0; k < Out::kSize; ++k) r[k] = c_[Table::terms[k].src] * Table::terms[k].factor;
    return r;
  }

  std::array<Scalar, kSize> c_;
};

template <typename S, int X1, int T1, int X2, int T2>
using CommonJet = Jet<S, std::min(X1, X2), std::min(T1, T2)>;

template <typename S, int X1, int T1, int X2, int T2>
CommonJet<S, X1, T1, X2, T2> operator*(const Jet<S, X1, T1>& a, const Jet<S, X2, T2>& b) {
  CommonJet<S, X1, T1, X2, T2> r;
  r.add_product(a, b);
  return r;
}

template <typename S, int X1, int T1, int X2, int T2>
CommonJet<S, X1, T1, X2, T2> operator+(const Jet<S, X1, T1>& a, const Jet<S, X2, T2>& b) {
  using R = CommonJet<S, X1, T1, X2, T2>;
  R r = a.template truncate<R::kXMax, R::kTMax>();
  r += b.template truncate<R::kXMax, R::kTMax>();
  return r;
}

template <typename S, int X1, int T1, int X2, int T2>
CommonJet<S, X1, T1, X2, T2> operator-(const Jet<S, X1, T1>& a, const Jet<S, X2, T2>& b) {
  using R = CommonJet<S, X1, T1, X2, T2>;
  R r = a.template truncate<R::kXMax, R::kTMax>();
  r -= b.template truncate<R::kXMax, R::kTMax>();
  return r;
}

template <typename S, int X, int T>
Jet<S, X, T> operator*(Jet<S, X, T> a, const S& s) {
  a *= s;
  return a;
}
template <typename S, int X, int T>
Jet<S, X, T> operator*(const S& s, Jet<S, X, T> a) {
  a *= s;
  return a;
}
template <typename S, int X, int T>
Jet<S, X, T> operator*(Jet<S, X, T> a, double s) requires(!std::is_same_v<S, double>) {
  a *= s;
  return a;
}
template <typename S, int X, int T>
Jet<S, X, T> operator*(double s, Jet<S, X, T> a) requires(!std::is_same_v<S, double>) {
  a *= s;
  return a;
}
template <typename S, int X, int T>
Jet<S, X, T> operator+(Jet<S, X, T> a, const S& s) {
  a[0] += s;
  return a;
}
template <typename S, int X, int T>
Jet<S, X, T> operator+(const S& s, Jet<S, X, T> a) {
  a[0] += s;
  return a;
}
template <typename S, int X, int T>
Jet<S, X, T> operator-(Jet<S, X, T> a, const S& s) {
  a[0] -= s;
  return a;
}
template <typename S, int X, int T>
Jet<S, X, T> operator-(const S& s, const Jet<S, X, T>& a) {
  Jet<S, X, T> r = -a;
  r[0] += s;
  return r;
}

/// f(a) for a univariate f given its derivatives f^(k)(a0), k = 0..TMax, at
/// the constant term a0 of `a`. The nilpotent part h = a - a0 satisfies
/// h^(TMax+1) = 0, so the Horner sum below is exact within the truncation.
template <typename S, int X, int T>
Jet<S, X, T> compose(const Jet<S, X, T>& a, const std::array<S, T + 1>& derivs) {
  Jet<S, X, T> h = a;
  h[0] = constant<S>(0.0);
  Jet<S, X, T> acc(derivs[T] * (1.0 / detail::factorial(T)));
  for (int k = T - 1; k >= 0; --k) {
    acc = acc * h;
    acc[0] += derivs[k] * (1.0 / detail::factorial(k));
  }
  return acc;
}

template <typename S, int X, int T>
Jet<S, X, T> reciprocal(const Jet<S, X, T>& a) {
  std::array<S, T + 1> d;
  const S inv = ScalarTraits<S>::inverse(a.value());
  S p = inv;
  double sign = 1.0;
  for (int k = 0; k <= T; ++k) {
    d[k] = p * (sign * detail::factorial(k));
    p = p * inv;
    sign = -sign;
  }
  return compose(a, d);
}

template <typename S, int X, int T>
Jet<S, X, T> sqrt(const Jet<S, X, T>& a) {
  // d^k/da^k a^(1/2) = c_k a^(1/2 - k), c_k = prod_{j<k} (1/2 - j).
  std::array<S, T + 1> d;
  const S root = ScalarTraits<S>::sqrt(a.value());
  const S inv = ScalarTraits<S>::inverse(a.value());
  S p = root;
  double c = 1.0;
  for (int k = 0; k <= T; ++k) {
    d[k] = p * c;
    c *= 0.5 - k;
    p = p * inv;
  }
  return compose(a, d);
}

template <int X, int T>
Jet<double, X, T> cos(const Jet<double, X, T>& a) {
  std::array<double, T + 1> d;
  const double c = std::cos(a.value()), s = std::sin(a.value());
  const double cyc[4] = {c, -s, -c, s};
  for (int k = 0; k <= T; ++k) d[k] = cyc[k % 4];
  return compose(a, d);
}

template <int X, int T>
Jet<double, X, T> sin(const Jet<double, X, T>& a) {
  std::array<double, T + 1> d;
  const double c = std::cos(a.value()), s = std::sin(a.value());
  const double cyc[4] = {s, c, -s, -c};
  for (int k = 0; k <= T; ++k) d[k] = cyc[k % 4];
  return compose(a, d);
}

/// atan about zero; used for angle increments, so the argument must have zero constant term.
template <typename S, int X, int T>
Jet<S, X, T> atan_increment(const Jet<S, X, T>& u) {
  // atan(u) = u - u^3/3 + u^5/5 - ...
  std::array<S, T + 1> d;
  const double series[6] = {0.0, 1.0, 0.0, -2.0, 0.0, 24.0};
  for (int k = 0; k <= T; ++k) d[k] = constant<S>(k < 6 ? series[k] : 0.0);
  static_assert(T <= 5, "atan_increment series tabulated to order 5");
  return compose(u, d);
}

}  // namespace finsler
