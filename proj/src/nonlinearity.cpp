#include "kamkdv/nonlinearity.hpp"

#include <algorithm>
#include <cmath>

namespace kamkdv {

int NonlinearitySpec::degree() const {
  int d = 3;
  for (const auto& t : terms) d = std::max(d, t.p + t.q);
  return d;
}

void NonlinearitySpec::validate() const {
  for (const auto& t : terms) {
    if (t.p < 0 || t.q < 0) throw Error("nonlinearity: negative exponent");
    if (t.p + t.q < 5) throw Error("nonlinearity: monomials must have degree >= 5");
    if (t.kx != 0 && t.p + t.q < 6) throw Error("nonlinearity: x-dependence only allowed from degree 6");
    if (t.kx < 0) throw Error("nonlinearity: x-harmonic must be nonnegative");
  }
}

HomogPoly NonlinearitySpec::quintic_part(int W) const {
  HomogPoly H(5);
  for (const auto& t : terms)
    if (t.p + t.q == 5 && t.kx == 0) H += monomial_hamiltonian(t.coef, t.p, t.q, W);
  return H;
}

template <class T> void NonlinearitySpec::partials(double x, const T& u, const T& ux, T* out) const {
  for (int k = 0; k < kNumPartials; ++k) out[k] = T(0.0);
  for (const auto& t : terms) {
    double c = t.coef * (t.kx ? std::cos(t.kx * x) : 1.0);
    auto pw = [](const T& v, int n) { return n < 0 ? T(0.0) : pow_int(v, n); };
    T up = pw(u, t.p), up1 = pw(u, t.p - 1), up2 = pw(u, t.p - 2);
    T uq = pw(ux, t.q), uq1 = pw(ux, t.q - 1), uq2 = pw(ux, t.q - 2);
    out[kF] += c * (up * uq);
    out[kFu] += (c * t.p) * (up1 * uq);
    out[kFux] += (c * t.q) * (up * uq1);
    out[kFuu] += (c * t.p * (t.p - 1)) * (up2 * uq);
    out[kFuux] += (c * t.p * t.q) * (up1 * uq1);
    out[kFuxux] += (c * t.q * (t.q - 1)) * (up * uq2);
  }
}
template void NonlinearitySpec::partials<cd>(double, const cd&, const cd&, cd*) const;
template void NonlinearitySpec::partials<Dual>(double, const Dual&, const Dual&, Dual*) const;

NonlinearGrid::NonlinearGrid(const NonlinearitySpec& nl, int J_, int Nx_) : J(J_), nl_(nl) {
  nl_.validate();
  Truncation t;
  t.J = J;
  Nx = Nx_ > 0 ? Nx_ : t.x_nodes(nl_.degree());
  xg_ = XGrid(J, Nx);
}

namespace {

// Split T-valued coefficients into value and derivative parts for FFTs.
template <class T> struct Parts;
template <> struct Parts<cd> {
  static constexpr int n = 1;
  static cd get(const cd& v, int) { return v; }
  static void set(cd& v, int, cd x) { v = x; }
};
template <> struct Parts<Dual> {
  static constexpr int n = 2;
  static cd get(const Dual& v, int k) { return k == 0 ? v.a : v.b; }
  static void set(Dual& v, int k, cd x) {
    if (k == 0)
      v.a = x;
    else
      v.b = x;
  }
};

template <class T> void to_grid(const XGrid& xg, const T* coef, T* vals) {
  std::vector<cd> c(2 * xg.J + 1), v(xg.Nx);
  for (int k = 0; k < Parts<T>::n; ++k) {
    for (int j = 0; j < 2 * xg.J + 1; ++j) c[j] = Parts<T>::get(coef[j], k);
    xg.to_grid(c.data(), v.data());
    for (int i = 0; i < xg.Nx; ++i) Parts<T>::set(vals[i], k, v[i]);
  }
}

template <class T> void to_coeffs(const XGrid& xg, const T* vals, T* coef) {
  std::vector<cd> c(2 * xg.J + 1), v(xg.Nx);
  for (int k = 0; k < Parts<T>::n; ++k) {
    for (int i = 0; i < xg.Nx; ++i) v[i] = Parts<T>::get(vals[i], k);
    xg.to_coeffs(v.data(), c.data());
    for (int j = 0; j < 2 * xg.J + 1; ++j) Parts<T>::set(coef[j], k, c[j]);
  }
}

}  // namespace

template <class T> void NonlinearGrid::xnl(const T* w, T* out) const {
  const int nj = 2 * J + 1;
  std::vector<T> wx(nj), g(Nx), gx(Nx), a(Nx), b(Nx), ca(nj), cb(nj);
  for (int j = -J; j <= J; ++j) wx[j + J] = (I1 * static_cast<double>(j)) * w[j + J];
  to_grid(xg_, w, g.data());
  to_grid(xg_, wx.data(), gx.data());
  T pd[kNumPartials];
  for (int i = 0; i < Nx; ++i) {
    nl_.partials(xg_.node(i), g[i], gx[i], pd);
    a[i] = 3.0 * (g[i] * g[i]) + pd[kFu];
    b[i] = pd[kFux];
  }
  to_coeffs(xg_, a.data(), ca.data());
  to_coeffs(xg_, b.data(), cb.data());
  for (int j = -J; j <= J; ++j) {
    cd ij = I1 * static_cast<double>(j);
    out[j + J] = ij * (ca[j + J] - ij * cb[j + J]);
  }
}
template void NonlinearGrid::xnl<cd>(const cd*, cd*) const;
template void NonlinearGrid::xnl<Dual>(const Dual*, Dual*) const;

double NonlinearGrid::energy(const cd* w) const {
  const int nj = 2 * J + 1;
  std::vector<cd> wx(nj), g(Nx), gx(Nx);
  for (int j = -J; j <= J; ++j) wx[j + J] = (I1 * static_cast<double>(j)) * w[j + J];
  xg_.to_grid(w, g.data());
  xg_.to_grid(wx.data(), gx.data());
  cd pd[kNumPartials];
  cd acc = 0.0;
  for (int i = 0; i < Nx; ++i) {
    nl_.partials(xg_.node(i), g[i], gx[i], pd);
    acc += 0.5 * gx[i] * gx[i] + g[i] * g[i] * g[i] + pd[kF];
  }
  return (acc / static_cast<double>(Nx)).real();
}

void NonlinearGrid::hessian_symbols(const cd* w, int Jout, cd* a1, cd* a0) const {
  const int nj = 2 * J + 1;
  std::vector<cd> wx(nj), g(Nx), gx(Nx), s1(Nx), s0(Nx), s2(Nx);
  for (int j = -J; j <= J; ++j) wx[j + J] = (I1 * static_cast<double>(j)) * w[j + J];
  xg_.to_grid(w, g.data());
  xg_.to_grid(wx.data(), gx.data());
  cd pd[kNumPartials];
  for (int i = 0; i < Nx; ++i) {
    nl_.partials(xg_.node(i), g[i], gx[i], pd);
    s1[i] = 1.0 + pd[kFuxux];
    s0[i] = -(6.0 * g[i] + pd[kFuu]);
    s2[i] = pd[kFuux];
  }
  // Coefficients beyond J are needed for a faithful symbol; use a wide grid transform.
  XGrid wide(std::min(Jout, Nx / 2 - 1), Nx);
  std::vector<cd> w1(2 * wide.J + 1), w0(2 * wide.J + 1), w2(2 * wide.J + 1);
  wide.to_coeffs(s1.data(), w1.data());
  wide.to_coeffs(s0.data(), w0.data());
  wide.to_coeffs(s2.data(), w2.data());
  for (int j = -Jout; j <= Jout; ++j) {
    bool in = std::abs(j) <= wide.J;
    a1[j + Jout] = in ? w1[j + wide.J] : cd(0.0);
    a0[j + Jout] = in ? w0[j + wide.J] + (I1 * static_cast<double>(j)) * w2[j + wide.J] : cd(0.0);
  }
}

}  // namespace kamkdv
