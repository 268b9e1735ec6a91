#include "kamkdv/hamsys.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace kamkdv {

Params Params::make(double eps, double a, const std::vector<double>& xi, const SiteSet& S, double tau) {
  if (static_cast<int>(xi.size()) != S.nu()) throw Error("params: xi has wrong length");
  Params p;
  p.eps = eps;
  p.a = a;
  p.b = 1.0 + a / 2.0;
  p.gamma = std::pow(eps, 2.0 + a);
  p.tau = tau > 0 ? tau : S.nu() + defaults::tau_offset;
  p.xi = xi;
  p.omega = freq_amp_map(xi, eps, S);
  return p;
}

std::vector<double> freq_amp_map(const std::vector<double>& xi, double eps, const SiteSet& S) {
  std::vector<double> w(S.nu());
  for (int k = 0; k < S.nu(); ++k) {
    double j = S.s_plus[k];
    w[k] = j * j * j - 6.0 * eps * eps * xi[k] / j;
  }
  return w;
}

std::vector<double> amp_freq_map(const std::vector<double>& omega, double eps, const SiteSet& S) {
  if (eps == 0.0) throw Error("amp_freq_map: eps must be nonzero");
  std::vector<double> xi(S.nu());
  for (int k = 0; k < S.nu(); ++k) {
    double j = S.s_plus[k];
    xi[k] = (omega[k] - j * j * j) * j / (-6.0 * eps * eps);
  }
  return xi;
}

// ---------------------------------------------------------------- embeddings

TorusEmbedding TorusEmbedding::trivial(int nu, int L, int J) {
  TorusEmbedding t;
  for (int k = 0; k < nu; ++k) {
    t.Theta.emplace_back(nu, L, 0);
    t.y.emplace_back(nu, L, 0);
  }
  t.z = FourierField(nu, L, J, true);
  return t;
}

TorusEmbedding& TorusEmbedding::axpy(double a, const TorusEmbedding& o) {
  for (size_t k = 0; k < Theta.size(); ++k) {
    Theta[k] += cd(a) * o.Theta[k];
    y[k] += cd(a) * o.y[k];
  }
  z += cd(a) * o.z;
  return *this;
}

void TorusEmbedding::enforce_reality(const SiteSet& S) {
  for (size_t k = 0; k < Theta.size(); ++k) {
    Theta[k].enforce_reality();
    y[k].enforce_reality();
  }
  z.enforce_reality();
  for (int li = 0; li < z.nl(); ++li) {
    z.at(li, 0) = 0.0;
    for (int j : S.s)
      if (std::abs(j) <= z.J()) z.at(li, j) = 0.0;
  }
}

double TorusEmbedding::norm(double s) const {
  double acc = 0;
  for (size_t k = 0; k < Theta.size(); ++k) {
    acc += std::pow(sobolev_norm(Theta[k], s), 2);
    acc += std::pow(sobolev_norm(y[k], s), 2);
  }
  acc += std::pow(sobolev_norm(z, s), 2);
  return std::sqrt(acc);
}

double Residual::norm(double s) const {
  double acc = 0;
  for (size_t k = 0; k < F1.size(); ++k) {
    acc += std::pow(sobolev_norm(F1[k], s), 2);
    acc += std::pow(sobolev_norm(F2[k], s), 2);
  }
  acc += std::pow(sobolev_norm(F3, s), 2);
  return std::sqrt(acc);
}

FourierField d_omega(const FourierField& u, const std::vector<double>& omega) {
  FourierField r = u;
  const LIndex& li = u.lindex();
  for (int i = 0; i < li.n; ++i) {
    auto l = li.comps(i);
    double w = 0;
    for (int k = 0; k < li.nu; ++k) w += omega[k] * l[k];
    for (int j = -u.J(); j <= u.J(); ++j) r.at(i, j) *= cd(0.0, w);
  }
  return r;
}

FourierField d_omega_inverse(const FourierField& g, const std::vector<double>& omega, double tol) {
  FourierField r = g;
  const LIndex& li = g.lindex();
  for (int i = 0; i < li.n; ++i) {
    auto l = li.comps(i);
    double w = 0;
    for (int k = 0; k < li.nu; ++k) w += omega[k] * l[k];
    for (int j = -g.J(); j <= g.J(); ++j) {
      if (i == li.zero()) {
        if (std::abs(g.at(i, j)) > tol) throw Error("d_omega_inverse: nonzero phi-mean");
        r.at(i, j) = 0.0;
        continue;
      }
      if (std::abs(w) < defaults::resonance_floor) throw Error("d_omega_inverse: exact resonance");
      r.at(i, j) /= cd(0.0, w);
    }
  }
  return r;
}

DiophantineResult diophantine_check(const std::vector<double>& omega, double gamma, double tau, int L) {
  DiophantineResult res;
  const int nu = static_cast<int>(omega.size());
  LIndex li(nu, L);
  res.worst_value = INFINITY;
  for (int i = 0; i < li.n; ++i) {
    if (i == li.zero()) continue;
    auto l = li.comps(i);
    double w = 0;
    for (int k = 0; k < nu; ++k) w += omega[k] * l[k];
    double v = std::abs(w) * std::pow(bracket(li.norm_inf(i), 0), tau);
    if (v < res.worst_value) {
      res.worst_value = v;
      res.worst_l = l;
    }
  }
  res.ok = res.worst_value >= gamma;
  return res;
}

FourierField aa_embed(const TorusEmbedding& i, const Params& p, const SiteSet& S, int M) {
  const int nu = i.nu(), L = i.z.L(), J = i.z.J();
  if (M == 0) M = 2 * L + 2;
  PhiGrid pg(nu, M);
  const double c2 = std::pow(p.eps, 2.0 * (p.b - 1.0));
  const double eb = std::pow(p.eps, p.b);
  std::vector<cd> th(static_cast<size_t>(pg.P) * nu), yy(static_cast<size_t>(pg.P) * nu);
  std::vector<cd> ct(static_cast<size_t>(i.Theta[0].nl()) * nu), cy(ct.size());
  for (int li = 0; li < i.Theta[0].nl(); ++li)
    for (int k = 0; k < nu; ++k) {
      ct[li * nu + k] = i.Theta[k].at(li, 0);
      cy[li * nu + k] = i.y[k].at(li, 0);
    }
  pg.to_nodes(ct.data(), L, nu, th.data());
  pg.to_nodes(cy.data(), L, nu, yy.data());
  auto zn = field_to_nodes(i.z, pg);
  const int nj = 2 * J + 1;
  for (int q = 0; q < pg.P; ++q) {
    auto ang = pg.angles(q);
    cd* u = &zn[static_cast<size_t>(q) * nj];
    for (int t = 0; t < nj; ++t) u[t] *= eb;
    for (int k = 0; k < nu; ++k) {
      int s = S.s_plus[k];
      cd rad = p.xi[k] + c2 * s * yy[q * nu + k];
      if (rad.real() <= 0) throw Error("action out of chart");
      cd r = p.eps * std::sqrt(rad);
      cd theta = ang[k] + th[q * nu + k];
      if (s <= J) {
        u[s + J] = r * std::exp(I1 * theta);
        u[-s + J] = r * std::exp(-I1 * theta);
      }
    }
  }
  return nodes_to_field(zn, pg, L, J, true);
}

// ---------------------------------------------------------------- model

KdVModel::KdVModel(const SiteSet& S, const Params& p, const NonlinearitySpec& nl, const Truncation& tr)
    : S_(S), p_(p), tr_(tr), bnf_(S, nl), ng_(nl, tr.J, tr.Nx), pg_(S.nu(), tr.phi_nodes()) {
  tr_.validate();
  if (tr_.nu != S.nu()) throw Error("model: truncation nu differs from site count");
  if (tr_.J < bnf_.CE) throw Error("model: J must cover the Birkhoff support E");
  normal_ = normal_basis(tr_.J, S.s);
  for (int j : S.s_plus) omega_bar_.push_back(double(j) * j * j);
  if (p_.omega.empty()) p_.omega = freq_amp_map(p_.xi, p_.eps, S);
}

void KdVModel::set_omega(const std::vector<double>& omega) { p_.omega = omega; }

template <class T> void KdVModel::nonlinear_field(const T* u, T* out) const {
  const int J = tr_.J, nj = 2 * J + 1, CE = bnf_.CE, ne = 2 * CE + 1;
  std::vector<T> w(u, u + nj);
  std::vector<T> s(ne), d(ne);
  for (int j = -CE; j <= CE; ++j) s[j + CE] = w[j + J];
  bnf_.forward(s.data());
  for (int j = -CE; j <= CE; ++j) w[j + J] = s[j + CE];
  ng_.xnl(w.data(), out);
  for (int j = -CE; j <= CE; ++j) d[j + CE] = out[j + J];
  bnf_.pullback(s.data(), d.data());
  for (int j = -CE; j <= CE; ++j) out[j + J] = d[j + CE];
}

template <class T> void KdVModel::embed(const T* theta, const T* y, const T* z, T* u) const {
  const int J = tr_.J, nj = 2 * J + 1;
  const double c2 = std::pow(p_.eps, 2.0 * (p_.b - 1.0));
  const double eb = std::pow(p_.eps, p_.b);
  for (int t = 0; t < nj; ++t) u[t] = T(0.0);
  for (int k = 0; k < S_.nu(); ++k) {
    int s = S_.s_plus[k];
    T rad = T(p_.xi[k]) + (c2 * s) * y[k];
    if (value_of(rad).real() <= 0) throw Error("action out of chart");
    T r = p_.eps * sqrt(rad);
    T e = exp(I1 * theta[k]);
    T em = exp(-I1 * theta[k]);
    u[s + J] = r * e;
    u[-s + J] = r * em;
  }
  for (int n = 0; n < normal_.size(); ++n) u[normal_.modes[n] + J] = eb * z[n];
}

template <class T> void KdVModel::node_velocity(const T* theta, const T* y, const T* z, T* th, T* yd, T* zn) const {
  const int J = tr_.J, nj = 2 * J + 1;
  if (p_.eps == 0.0) {
    // Zero-amplitude limit of the rescaled nonlinear velocities.
    for (int k = 0; k < S_.nu(); ++k) th[k] = yd[k] = T(0.0);
    for (int n = 0; n < normal_.size(); ++n) zn[n] = T(0.0);
    return;
  }
  std::vector<T> u(nj), N(nj);
  embed(theta, y, z, u.data());
  nonlinear_field(u.data(), N.data());
  const double e2b = std::pow(p_.eps, 2.0 * p_.b);
  const double emb = std::pow(p_.eps, -p_.b);
  for (int k = 0; k < S_.nu(); ++k) {
    int s = S_.s_plus[k];
    const T& up = u[s + J];
    const T& um = u[-s + J];
    const T& Np = N[s + J];
    const T& Nm = N[-s + J];
    th[k] = (Np / up - Nm / um) * (1.0 / (2.0 * I1));
    yd[k] = (um * Np + up * Nm) / (e2b * s);
  }
  for (int n = 0; n < normal_.size(); ++n) zn[n] = emb * N[normal_.modes[n] + J];
}

template void KdVModel::nonlinear_field<cd>(const cd*, cd*) const;
template void KdVModel::nonlinear_field<Dual>(const Dual*, Dual*) const;
template void KdVModel::embed<cd>(const cd*, const cd*, const cd*, cd*) const;
template void KdVModel::embed<Dual>(const Dual*, const Dual*, const Dual*, Dual*) const;
template void KdVModel::node_velocity<cd>(const cd*, const cd*, const cd*, cd*, cd*, cd*) const;
template void KdVModel::node_velocity<Dual>(const Dual*, const Dual*, const Dual*, Dual*, Dual*, Dual*) const;

void KdVModel::to_nodes(const TorusEmbedding& i, std::vector<cd>& th, std::vector<cd>& y, std::vector<cd>& z) const {
  const int nu = S_.nu(), L = tr_.L, P = pg_.P;
  std::vector<cd> ct(static_cast<size_t>(i.Theta[0].nl()) * nu), cy(ct.size());
  for (int li = 0; li < i.Theta[0].nl(); ++li)
    for (int k = 0; k < nu; ++k) {
      ct[li * nu + k] = i.Theta[k].at(li, 0);
      cy[li * nu + k] = i.y[k].at(li, 0);
    }
  th.assign(static_cast<size_t>(P) * nu, 0.0);
  y.assign(static_cast<size_t>(P) * nu, 0.0);
  pg_.to_nodes(ct.data(), L, nu, th.data());
  pg_.to_nodes(cy.data(), L, nu, y.data());
  for (int q = 0; q < P; ++q) {
    auto a = pg_.angles(q);
    for (int k = 0; k < nu; ++k) th[q * nu + k] += a[k];
  }
  z = field_to_normal_nodes(i.z);
}

std::vector<cd> KdVModel::field_to_normal_nodes(const FourierField& zf) const {
  const int P = pg_.P, nz = normal_.size();
  auto zfull = field_to_nodes(zf, pg_);
  std::vector<cd> z(static_cast<size_t>(P) * nz);
  for (int q = 0; q < P; ++q)
    for (int n = 0; n < nz; ++n) {
      int j = normal_.modes[n];
      z[static_cast<size_t>(q) * nz + n] = std::abs(j) <= zf.J() ? zfull[static_cast<size_t>(q) * zf.nj() + j + zf.J()] : cd(0.0);
    }
  return z;
}

FourierField KdVModel::normal_to_field(const std::vector<cd>& nodes) const {
  const int P = pg_.P, nz = normal_.size(), J = tr_.J, nj = 2 * J + 1;
  std::vector<cd> full(static_cast<size_t>(P) * nj, cd(0.0));
  for (int q = 0; q < P; ++q)
    for (int n = 0; n < nz; ++n) full[static_cast<size_t>(q) * nj + normal_.modes[n] + J] = nodes[static_cast<size_t>(q) * nz + n];
  return nodes_to_field(full, pg_, tr_.L, J, true);
}

namespace {

FourierField phi_coeffs(const PhiGrid& pg, const std::vector<cd>& vals, int batch, int k, int L) {
  std::vector<cd> one(pg.P);
  for (int q = 0; q < pg.P; ++q) one[q] = vals[static_cast<size_t>(q) * batch + k];
  FourierField f(pg.nu, L, 0);
  pg.to_coeffs(one.data(), L, 1, f.data().data());
  return f;
}

FourierField dxxx(const FourierField& z) {
  FourierField r = z;
  for (int li = 0; li < z.nl(); ++li)
    for (int j = -z.J(); j <= z.J(); ++j) r.at(li, j) *= cd(0.0, -double(j) * j * j);
  return r;
}

}  // namespace

Residual KdVModel::eval_F(const TorusEmbedding& i, const std::vector<double>& zeta) const {
  const int nu = S_.nu(), P = pg_.P, nz = normal_.size(), L = tr_.L;
  std::vector<cd> th, yv, zv;
  to_nodes(i, th, yv, zv);
  std::vector<cd> oth(static_cast<size_t>(P) * nu), oyd(oth.size()), ozn(static_cast<size_t>(P) * nz);
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (int q = 0; q < P; ++q)
    node_velocity(&th[static_cast<size_t>(q) * nu], &yv[static_cast<size_t>(q) * nu], &zv[static_cast<size_t>(q) * nz],
                  &oth[static_cast<size_t>(q) * nu], &oyd[static_cast<size_t>(q) * nu], &ozn[static_cast<size_t>(q) * nz]);
  Residual R;
  const int l0 = LIndex(nu, L).zero();
  for (int k = 0; k < nu; ++k) {
    FourierField f1 = d_omega(i.Theta[k], p_.omega) - phi_coeffs(pg_, oth, nu, k, L);
    f1.at(l0, 0) += p_.omega[k] - omega_bar_[k];
    FourierField f2 = d_omega(i.y[k], p_.omega) - phi_coeffs(pg_, oyd, nu, k, L);
    if (!zeta.empty()) f2.at(l0, 0) += zeta[k];
    R.F1.push_back(f1);
    R.F2.push_back(f2);
  }
  R.F3 = d_omega(i.z, p_.omega) + dxxx(i.z) - normal_to_field(ozn);
  return R;
}

Residual KdVModel::dF(const TorusEmbedding& i, const TorusEmbedding& di, const std::vector<double>& dzeta) const {
  const int nu = S_.nu(), P = pg_.P, nz = normal_.size(), L = tr_.L;
  std::vector<cd> th, yv, zv, dth, dyv, dzv;
  to_nodes(i, th, yv, zv);
  to_nodes(di, dth, dyv, dzv);
  for (int q = 0; q < P; ++q) {
    auto a = pg_.angles(q);
    for (int k = 0; k < nu; ++k) dth[q * nu + k] -= a[k];
  }
  std::vector<cd> oth(static_cast<size_t>(P) * nu), oyd(oth.size()), ozn(static_cast<size_t>(P) * nz);
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (int q = 0; q < P; ++q) {
    std::vector<Dual> t(nu), y(nu), z(nz), ot(nu), oy(nu), oz(nz);
    for (int k = 0; k < nu; ++k) {
      t[k] = Dual(th[q * nu + k], dth[q * nu + k]);
      y[k] = Dual(yv[q * nu + k], dyv[q * nu + k]);
    }
    for (int n = 0; n < nz; ++n) z[n] = Dual(zv[static_cast<size_t>(q) * nz + n], dzv[static_cast<size_t>(q) * nz + n]);
    node_velocity(t.data(), y.data(), z.data(), ot.data(), oy.data(), oz.data());
    for (int k = 0; k < nu; ++k) {
      oth[q * nu + k] = ot[k].b;
      oyd[q * nu + k] = oy[k].b;
    }
    for (int n = 0; n < nz; ++n) ozn[static_cast<size_t>(q) * nz + n] = oz[n].b;
  }
  Residual R;
  const int l0 = LIndex(nu, L).zero();
  for (int k = 0; k < nu; ++k) {
    R.F1.push_back(d_omega(di.Theta[k], p_.omega) - phi_coeffs(pg_, oth, nu, k, L));
    FourierField f2 = d_omega(di.y[k], p_.omega) - phi_coeffs(pg_, oyd, nu, k, L);
    if (!dzeta.empty()) f2.at(l0, 0) += dzeta[k];
    R.F2.push_back(f2);
  }
  R.F3 = d_omega(di.z, p_.omega) + dxxx(di.z) - normal_to_field(ozn);
  return R;
}

NodeJacobian KdVModel::node_jacobians(const TorusEmbedding& i) const {
  const int nu = S_.nu(), P = pg_.P, nz = normal_.size();
  std::vector<cd> th, yv, zv;
  to_nodes(i, th, yv, zv);
  NodeJacobian Jc;
  Jc.thy.assign(P, MatC::Zero(nu, nu));
  Jc.zy.assign(P, MatC::Zero(nz, nu));
  Jc.zz.assign(P, MatC::Zero(nz, nz));
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (int q = 0; q < P; ++q) {
    std::vector<Dual> t(nu), y(nu), z(nz), ot(nu), oy(nu), oz(nz);
    auto reset = [&]() {
      for (int k = 0; k < nu; ++k) {
        t[k] = Dual(th[q * nu + k]);
        y[k] = Dual(yv[q * nu + k]);
      }
      for (int n = 0; n < nz; ++n) z[n] = Dual(zv[static_cast<size_t>(q) * nz + n]);
    };
    for (int k = 0; k < nu; ++k) {
      reset();
      y[k].b = 1.0;
      node_velocity(t.data(), y.data(), z.data(), ot.data(), oy.data(), oz.data());
      for (int r = 0; r < nu; ++r) Jc.thy[q](r, k) = ot[r].b;
      for (int n = 0; n < nz; ++n) Jc.zy[q](n, k) = oz[n].b;
    }
    for (int m = 0; m < nz; ++m) {
      reset();
      z[m].b = 1.0;
      node_velocity(t.data(), y.data(), z.data(), ot.data(), oy.data(), oz.data());
      for (int n = 0; n < nz; ++n) Jc.zz[q](n, m) = oz[n].b;
      double j = normal_.modes[m];
      Jc.zz[q](m, m) += cd(0.0, j * j * j);
    }
  }
  return Jc;
}

void KdVModel::original_solution(const cd* u, cd* U) const {
  const int J = tr_.J, nj = 2 * J + 1, CE = bnf_.CE;
  std::copy(u, u + nj, U);
  std::vector<cd> s(2 * CE + 1);
  for (int j = -CE; j <= CE; ++j) s[j + CE] = U[j + J];
  bnf_.forward(s.data());
  for (int j = -CE; j <= CE; ++j) U[j + J] = s[j + CE];
}

}  // namespace kamkdv
