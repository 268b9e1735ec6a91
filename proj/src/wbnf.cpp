#include "kamkdv/wbnf.hpp"

#include <algorithm>
#include <cmath>

namespace kamkdv {

int WeakBNF::outside(const Mono& m) const {
  int c = 0;
  for (int j : m)
    if (!S_.contains(j)) ++c;
  return c;
}

bool WeakBNF::in_A3(const Mono& m) const { return index_sum(m) == 0 && outside(m) <= 1; }
bool WeakBNF::in_A4(const Mono& m) const {
  return index_sum(m) == 0 && outside(m) <= 1 && cube_sum(m) != 0;
}
bool WeakBNF::in_A5(const Mono& m) const { return index_sum(m) == 0 && outside(m) <= 1; }

namespace {

HomogPoly homological(const HomogPoly& part, bool require_nonzero) {
  HomogPoly F(part.degree());
  for (const auto& [m, c] : part.terms()) {
    long long cs = cube_sum(m);
    if (cs == 0) {
      if (require_nonzero && std::abs(c) > 0) throw Error("site set violates (S2)");
      continue;
    }
    F.add(m, c / (I1 * static_cast<double>(cs)));
  }
  return F;
}

}  // namespace

WeakBNF::WeakBNF(const SiteSet& S, const NonlinearitySpec& nl, int flow_steps) : steps(flow_steps), S_(S) {
  if (S.nu() < 1) throw Error("WeakBNF: empty site set");
  CS = S.max_site();
  W = 4 * CS;
  H3 = cubic_hamiltonian(W);
  H5 = nl.quintic_part(W);

  auto a3 = [this](const Mono& m) { return in_A3(m); };
  auto a4 = [this](const Mono& m) { return in_A4(m); };
  auto a5 = [this](const Mono& m) { return in_A5(m); };
  auto not_ = [](auto f) { return [f](const Mono& m) { return !f(m); }; };

  // Degree 3: {H2, F3} = -H3 on A.
  F3 = homological(H3.filtered(a3), true);
  NF3 = H3.filtered(not_(a3));

  // Degree 4 and 5 after Phi3.
  HomogPoly b3 = poisson_bracket(H3, F3);             // {H3, F3}
  HomogPoly b2 = h2_bracket(F3);                      // {H2, F3}
  HomogPoly b22 = poisson_bracket(b2, F3);            // {{H2, F3}, F3}
  H4_3 = b3;
  H4_3 += b22.scaled(0.5);
  H5_3 = H5;
  H5_3 += poisson_bracket(b3, F3).scaled(0.5);
  H5_3 += poisson_bracket(b22, F3).scaled(1.0 / 6.0);

  F4 = homological(H4_3.filtered(a4), false);
  NF4 = H4_3.filtered(not_(a4));

  // Degree 5 after Phi4: H5^(3) + {H3^(3), F4}.
  H5_4 = H5_3;
  H5_4 += poisson_bracket(NF3, F4);

  F5 = homological(H5_4.filtered(a5), true);
  NF5 = H5_4.filtered(not_(a5));

  for (HomogPoly* p : {&F3, &F4, &F5, &NF3, &NF4, &NF5, &H4_3, &H5_3, &H5_4}) p->prune(0.0);
  CE = std::max({F3.max_index(), F4.max_index(), F5.max_index(), 1});
  X3 = PolyField(F3, CE);
  X4 = PolyField(F4, CE);
  X5 = PolyField(F5, CE);
}

const PolyField& WeakBNF::field(int k) const {
  switch (k) {
    case 3:
      return X3;
    case 4:
      return X4;
    case 5:
      return X5;
    default:
      throw Error("WeakBNF: generator index must be 3, 4 or 5");
  }
}

template <class T> int WeakBNF::step_count(const PolyField& X, const T* u) const {
  double r = 0;
  for (int i = 0; i < ncoords(); ++i) r = std::max(r, std::abs(value_of(u[i])));
  // RK4 local error scales like (h Lip)^5; keep h Lip below the step target.
  int n = static_cast<int>(std::ceil(X.lipschitz(2.0 * r) / defaults::flow_step_target));
  return std::clamp(n, 1, steps);
}

template <class T> void WeakBNF::flow(int k, T* u, double dir, int nsteps) const {
  const PolyField& X = field(k);
  if (X.nterms() == 0) return;
  const int n = ncoords();
  const int ns = nsteps > 0 ? nsteps : step_count(X, u);
  const double h = dir / ns;
  std::vector<T> k1(n), k2(n), k3(n), k4(n), tmp(n);
  auto rhs = [&](const T* x, T* out) {
    for (int i = 0; i < n; ++i) out[i] = T(0.0);
    X.eval(x, out);
  };
  for (int s = 0; s < ns; ++s) {
    rhs(u, k1.data());
    for (int i = 0; i < n; ++i) tmp[i] = u[i] + (0.5 * h) * k1[i];
    rhs(tmp.data(), k2.data());
    for (int i = 0; i < n; ++i) tmp[i] = u[i] + (0.5 * h) * k2[i];
    rhs(tmp.data(), k3.data());
    for (int i = 0; i < n; ++i) tmp[i] = u[i] + h * k3[i];
    rhs(tmp.data(), k4.data());
    for (int i = 0; i < n; ++i) u[i] += (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  }
  for (int i = 0; i < n; ++i)
    if (!std::isfinite(std::abs(value_of(u[i])))) throw Error("flow left validity ball");
}

template <class T> void WeakBNF::forward(T* u) const {
  flow(5, u, 1.0);
  flow(4, u, 1.0);
  flow(3, u, 1.0);
}

template <class T> void WeakBNF::inverse(T* w) const {
  flow(3, w, -1.0);
  flow(4, w, -1.0);
  flow(5, w, -1.0);
}

template <class T> void WeakBNF::pullback(T* s, T* d) const {
  const int n = ncoords();
  std::vector<cd> lam(n);
  for (int j = -CE; j <= CE; ++j) lam[j + CE] = I1 * std::pow(static_cast<double>(j), 3);
  std::vector<T> ks[4], kd[4];
  for (int r = 0; r < 4; ++r) {
    ks[r].resize(n);
    kd[r].resize(n);
  }
  std::vector<T> ts(n), td(n), ls(n), fx(n);
  for (int k : {3, 4, 5}) {
    const PolyField& X = field(k);
    if (X.nterms() == 0) continue;
    const int ns = step_count(X, s);
    const double h = -1.0 / ns;
    auto rhs = [&](const T* x, const T* dd, T* os, T* od) {
      for (int i = 0; i < n; ++i) {
        os[i] = T(0.0);
        od[i] = T(0.0);
        ls[i] = lam[i] * (x[i]);
      }
      X.eval(x, os);
      for (int i = 0; i < n; ++i) ls[i] += dd[i];
      X.jvp(x, ls.data(), od);
      for (int i = 0; i < n; ++i) od[i] -= lam[i] * os[i];
    };
    for (int st = 0; st < ns; ++st) {
      rhs(s, d, ks[0].data(), kd[0].data());
      for (int i = 0; i < n; ++i) {
        ts[i] = s[i] + (0.5 * h) * ks[0][i];
        td[i] = d[i] + (0.5 * h) * kd[0][i];
      }
      rhs(ts.data(), td.data(), ks[1].data(), kd[1].data());
      for (int i = 0; i < n; ++i) {
        ts[i] = s[i] + (0.5 * h) * ks[1][i];
        td[i] = d[i] + (0.5 * h) * kd[1][i];
      }
      rhs(ts.data(), td.data(), ks[2].data(), kd[2].data());
      for (int i = 0; i < n; ++i) {
        ts[i] = s[i] + h * ks[2][i];
        td[i] = d[i] + h * kd[2][i];
      }
      rhs(ts.data(), td.data(), ks[3].data(), kd[3].data());
      for (int i = 0; i < n; ++i) {
        s[i] += (h / 6.0) * (ks[0][i] + 2.0 * ks[1][i] + 2.0 * ks[2][i] + ks[3][i]);
        d[i] += (h / 6.0) * (kd[0][i] + 2.0 * kd[1][i] + 2.0 * kd[2][i] + kd[3][i]);
      }
    }
  }
}

template void WeakBNF::flow<cd>(int, cd*, double, int) const;
template void WeakBNF::flow<Dual>(int, Dual*, double, int) const;
template void WeakBNF::forward<cd>(cd*) const;
template void WeakBNF::forward<Dual>(Dual*) const;
template void WeakBNF::inverse<cd>(cd*) const;
template void WeakBNF::inverse<Dual>(Dual*) const;
template void WeakBNF::pullback<cd>(cd*, cd*) const;
template void WeakBNF::pullback<Dual>(Dual*, Dual*) const;

cd h2_value(const cd* u, int W) {
  cd acc = 0.0;
  for (int j = -W; j <= W; ++j) acc += 0.5 * double(j) * double(j) * u[j + W] * u[-j + W];
  return acc;
}

cd WeakBNF::normal_form(const cd* u) const {
  return h2_value(u, W) + NF3.eval(u, W) + NF4.eval(u, W) + NF5.eval(u, W);
}

double WeakBNF::richardson_defect(int k, const cd* u) const {
  std::vector<cd> a(u, u + ncoords()), b(u, u + ncoords());
  flow(k, a.data(), 1.0, steps);
  flow(k, b.data(), 1.0, 2 * steps);
  double d = 0;
  for (int i = 0; i < ncoords(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

}  // namespace kamkdv
