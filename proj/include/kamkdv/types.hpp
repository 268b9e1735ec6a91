#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace kamkdv {

using cd = std::complex<double>;
inline constexpr cd I1{0.0, 1.0};

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Forward-mode dual number over the complex field: a + b*eps, eps^2 = 0.
struct Dual {
  cd a{0.0}, b{0.0};
  Dual() = default;
  Dual(cd v) : a(v) {}
  Dual(double v) : a(v) {}
  Dual(cd v, cd d) : a(v), b(d) {}
  Dual& operator+=(const Dual& o) { a += o.a; b += o.b; return *this; }
  Dual& operator-=(const Dual& o) { a -= o.a; b -= o.b; return *this; }
  Dual& operator*=(const Dual& o) { b = b * o.a + a * o.b; a *= o.a; return *this; }
};
inline Dual operator+(Dual x, const Dual& y) { return x += y; }
inline Dual operator-(Dual x, const Dual& y) { return x -= y; }
inline Dual operator-(const Dual& x) { return {-x.a, -x.b}; }
inline Dual operator*(Dual x, const Dual& y) { return x *= y; }
inline Dual operator*(cd s, const Dual& y) { return {s * y.a, s * y.b}; }
inline Dual operator*(const Dual& y, cd s) { return {s * y.a, s * y.b}; }
inline Dual operator*(double s, const Dual& y) { return {s * y.a, s * y.b}; }
inline Dual operator/(const Dual& x, const Dual& y) {
  cd q = x.a / y.a;
  return {q, (x.b - q * y.b) / y.a};
}
inline Dual operator/(const Dual& x, double s) { return {x.a / s, x.b / s}; }

template <class T> inline cd value_of(const T& x);
template <> inline cd value_of<cd>(const cd& x) { return x; }
template <> inline cd value_of<Dual>(const Dual& x) { return x.a; }

}  // namespace kamkdv

namespace kamkdv {
inline Dual exp(const Dual& x) {
  cd e = std::exp(x.a);
  return {e, e * x.b};
}
inline Dual sqrt(const Dual& x) {
  cd s = std::sqrt(x.a);
  return {s, x.b / (2.0 * s)};
}
inline Dual pow_int(Dual x, int n) {
  Dual r(1.0);
  for (int k = 0; k < n; ++k) r *= x;
  return r;
}
inline cd pow_int(cd x, int n) {
  cd r(1.0);
  for (int k = 0; k < n; ++k) r *= x;
  return r;
}
}  // namespace kamkdv
