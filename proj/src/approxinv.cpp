#include "kamkdv/approxinv.hpp"

#include <cmath>

namespace kamkdv {

namespace {

FourierField d_phi(const FourierField& f, int k) {
  FourierField r = f;
  const LIndex& li = f.lindex();
  for (int i = 0; i < li.n; ++i) {
    double lk = li.comps(i)[k];
    for (int j = -f.J(); j <= f.J(); ++j) r.at(i, j) *= cd(0.0, lk);
  }
  return r;
}

FourierField inverse_laplacian(const FourierField& f) {
  FourierField r = f;
  const LIndex& li = f.lindex();
  for (int i = 0; i < li.n; ++i) {
    auto l = li.comps(i);
    double s = 0;
    for (int x : l) s += double(x) * x;
    for (int j = -f.J(); j <= f.J(); ++j) r.at(i, j) = s == 0 ? cd(0.0) : -r.at(i, j) / s;
  }
  return r;
}

std::vector<cd> nodes_of(const std::vector<FourierField>& f, const PhiGrid& pg) {
  const int nu = static_cast<int>(f.size());
  const int nl = f[0].nl();
  std::vector<cd> c(static_cast<size_t>(nl) * nu), v(static_cast<size_t>(pg.P) * nu);
  for (int i = 0; i < nl; ++i)
    for (int k = 0; k < nu; ++k) c[i * nu + k] = f[k].at(i, 0);
  pg.to_nodes(c.data(), f[0].L(), nu, v.data());
  return v;
}

std::vector<FourierField> coeffs_of(const std::vector<cd>& v, int nu, const PhiGrid& pg, int L) {
  LIndex li(pg.nu, L);
  std::vector<cd> c(static_cast<size_t>(li.n) * nu);
  pg.to_coeffs(v.data(), L, nu, c.data());
  std::vector<FourierField> f(nu, FourierField(pg.nu, L, 0));
  for (int i = 0; i < li.n; ++i)
    for (int k = 0; k < nu; ++k) f[k].at(i, 0) = c[i * nu + k];
  return f;
}

FourierField scalar_field(const std::vector<cd>& v, const PhiGrid& pg, int L) { return coeffs_of(v, 1, pg, L)[0]; }

// Pairing (f, g) = sum_j f_j g_{-j} over a symmetric basis.
cd pairing(const cd* f, const cd* g, const Basis& b) {
  cd s = 0.0;
  for (int k = 0; k < b.size(); ++k) s += f[k] * g[b.find(-b.modes[k])];
  return s;
}

}  // namespace

std::vector<cd> ApproxInverse::vec_nodes(const std::vector<FourierField>& f) const {
  return nodes_of(f, model_.phi_grid());
}

std::vector<FourierField> ApproxInverse::vec_coeffs(const std::vector<cd>& v) const {
  return coeffs_of(v, nu_, model_.phi_grid(), L_);
}

IsotropicData isotropic_correction(const KdVModel& model, const TorusEmbedding& i0) {
  const PhiGrid& pg = model.phi_grid();
  const Basis& nb = model.normal();
  const int nu = model.nu(), P = pg.P, nz = nb.size(), L = model.L();
  IsotropicData d;
  // Node values of d_phi theta0, y0, z0, d_k z0.
  std::vector<std::vector<cd>> dth(nu);
  for (int k = 0; k < nu; ++k) {
    std::vector<FourierField> col;
    for (int m = 0; m < nu; ++m) col.push_back(d_phi(i0.Theta[m], k));
    dth[k] = nodes_of(col, pg);
  }
  auto y = nodes_of(i0.y, pg);
  auto z = model.field_to_normal_nodes(i0.z);
  std::vector<std::vector<cd>> dz(nu);
  for (int k = 0; k < nu; ++k) dz[k] = model.field_to_normal_nodes(d_phi(i0.z, k));
  std::vector<cd> a(static_cast<size_t>(P) * nu);
  std::vector<cd> dxz(nz);
  for (int p = 0; p < P; ++p) {
    for (int n = 0; n < nz; ++n) dxz[n] = z[static_cast<size_t>(p) * nz + n] / cd(0.0, nb.modes[n]);
    for (int k = 0; k < nu; ++k) {
      // a_k = -(P^T y)_k + (1/2)(d_x^{-1} z0, d_k z0)
      cd s = 0.0;
      for (int m = 0; m < nu; ++m) s += ((m == k ? 1.0 : 0.0) + dth[k][p * nu + m]) * y[p * nu + m];
      a[p * nu + k] = -s + 0.5 * pairing(dxz.data(), &dz[k][static_cast<size_t>(p) * nz], nb);
    }
  }
  d.a = coeffs_of(a, nu, pg, L);
  d.A.assign(nu, std::vector<FourierField>(nu, FourierField(pg.nu, L, 0)));
  for (int k = 0; k < nu; ++k)
    for (int j = 0; j < nu; ++j) d.A[k][j] = d_phi(d.a[j], k) - d_phi(d.a[k], j);
  d.rho.assign(nu, FourierField(pg.nu, L, 0));
  for (int j = 0; j < nu; ++j) {
    FourierField s(pg.nu, L, 0);
    for (int k = 0; k < nu; ++k) s += d_phi(d.A[k][j], k);
    d.rho[j] = inverse_laplacian(s);
  }
  // y_delta = y0 + P^{-T} rho
  auto rho = nodes_of(d.rho, pg);
  std::vector<cd> yd(y);
  for (int p = 0; p < P; ++p) {
    MatC Pm(nu, nu);
    for (int m = 0; m < nu; ++m)
      for (int k = 0; k < nu; ++k) Pm(m, k) = (m == k ? 1.0 : 0.0) + dth[k][p * nu + m];
    Eigen::PartialPivLU<MatC> lu(Pm.transpose());
    if (std::abs(lu.determinant()) < defaults::torus_det_floor) throw Error("torus too distorted");
    VecC r(nu);
    for (int k = 0; k < nu; ++k) r[k] = rho[p * nu + k];
    VecC c = lu.solve(r);
    for (int k = 0; k < nu; ++k) yd[p * nu + k] += c[k];
  }
  d.y_delta = coeffs_of(yd, nu, pg, L);
  return d;
}

std::vector<std::vector<FourierField>> torus_two_form(const KdVModel& model, const TorusEmbedding& i0) {
  const PhiGrid& pg = model.phi_grid();
  const Basis& nb = model.normal();
  const int nu = model.nu(), P = pg.P, nz = nb.size(), L = model.L();
  std::vector<std::vector<cd>> th(nu), yy(nu), zz(nu);
  for (int k = 0; k < nu; ++k) {
    std::vector<FourierField> ct, cy;
    for (int m = 0; m < nu; ++m) {
      FourierField t = d_phi(i0.Theta[m], k);
      if (m == k) t.at(t.lindex().zero(), 0) += 1.0;
      ct.push_back(t);
      cy.push_back(d_phi(i0.y[m], k));
    }
    th[k] = nodes_of(ct, pg);
    yy[k] = nodes_of(cy, pg);
    zz[k] = model.field_to_normal_nodes(d_phi(i0.z, k));
  }
  std::vector<std::vector<FourierField>> W(nu, std::vector<FourierField>(nu, FourierField(pg.nu, L, 0)));
  std::vector<cd> v(P), dxz(nz);
  for (int k = 0; k < nu; ++k)
    for (int j = 0; j < nu; ++j) {
      for (int p = 0; p < P; ++p) {
        cd s = 0.0;
        for (int m = 0; m < nu; ++m) s += th[k][p * nu + m] * yy[j][p * nu + m] - th[j][p * nu + m] * yy[k][p * nu + m];
        for (int n = 0; n < nz; ++n) dxz[n] = zz[k][static_cast<size_t>(p) * nz + n] / cd(0.0, nb.modes[n]);
        s += pairing(dxz.data(), &zz[j][static_cast<size_t>(p) * nz], nb);
        v[p] = s;
      }
      W[k][j] = scalar_field(v, pg, L);
    }
  return W;
}

ApproxInverse::ApproxInverse(const KdVModel& model, const TorusEmbedding& i0, const std::vector<double>& zeta0)
    : model_(model), nu_(model.nu()), nz_(model.normal().size()), P_(model.phi_grid().P), L_(model.L()), J_(model.J()) {
  const PhiGrid& pg = model.phi_grid();
  const Basis& nb = model.normal();
  iso_ = isotropic_correction(model, i0);
  idelta_ = i0;
  idelta_.y = iso_.y_delta;

  // Geometry of the torus at the nodes.
  Pm_.assign(P_, MatC::Identity(nu_, nu_));
  Ydphi_.assign(P_, MatC::Zero(nu_, nu_));
  Zpsi_.assign(P_, MatC::Zero(nz_, nu_));
  for (int k = 0; k < nu_; ++k) {
    std::vector<FourierField> ct, cy;
    for (int m = 0; m < nu_; ++m) {
      ct.push_back(d_phi(i0.Theta[m], k));
      cy.push_back(d_phi(iso_.y_delta[m], k));
    }
    auto tn = nodes_of(ct, pg), yn = nodes_of(cy, pg);
    auto zn = model.field_to_normal_nodes(d_phi(i0.z, k));
    for (int p = 0; p < P_; ++p) {
      for (int m = 0; m < nu_; ++m) {
        Pm_[p](m, k) += tn[p * nu_ + m];
        Ydphi_[p](m, k) = yn[p * nu_ + m];
      }
      for (int n = 0; n < nz_; ++n) Zpsi_[p](n, k) = zn[static_cast<size_t>(p) * nz_ + n];
    }
  }
  Pinv_.resize(P_);
  L2_.resize(P_);
  L2T_.resize(P_);
  VecC invdx(nz_);
  for (int n = 0; n < nz_; ++n) invdx[n] = 1.0 / cd(0.0, nb.modes[n]);
  for (int p = 0; p < P_; ++p) {
    Eigen::PartialPivLU<MatC> lu(Pm_[p]);
    if (std::abs(lu.determinant()) < defaults::torus_det_floor) throw Error("torus too distorted");
    Pinv_[p] = lu.inverse();
    // L2 w = P^{-T} [(d_k z0, d_x^{-1} w)]_k ; L2^T v = -d_x^{-1} Zpsi P^{-1} v
    MatC C(nu_, nz_);
    for (int k = 0; k < nu_; ++k)
      for (int n = 0; n < nz_; ++n) C(k, n) = Zpsi_[p](nb.find(-nb.modes[n]), k) * invdx[n];
    L2_[p] = Pinv_[p].transpose() * C;
    L2T_[p] = -(invdx.asDiagonal() * Zpsi_[p]) * Pinv_[p];
  }

  // Second derivatives of the Hamiltonian at i_delta.
  NodeJacobian Jc = model.node_jacobians(idelta_);
  K_.K20.resize(P_);
  K_.K11.resize(P_);
  K_.K02 = NodeOp(pg, nb, nb);
  Aw_ = NodeOp(pg, nb, nb);
  for (int p = 0; p < P_; ++p) {
    MatC Q = Pinv_[p].transpose();
    const MatC& Hyy = Jc.thy[p];
    MatC Hzy = invdx.asDiagonal() * Jc.zy[p];
    MatC Hzz = invdx.asDiagonal() * Jc.zz[p];
    MatC Hyz(nu_, nz_);
    for (int m = 0; m < nu_; ++m)
      for (int n = 0; n < nz_; ++n) Hyz(m, n) = Hzy(nb.find(-nb.modes[n]), m);
    K_.K20[p] = Q.transpose() * Hyy * Q;
    K_.K11[p] = (Hzy + L2T_[p] * Hyy) * Q;
    K_.K02.m[p] = Hzz + Hzy * L2_[p] + L2T_[p] * Hyz + L2T_[p] * Hyy * L2_[p];
    VecC dx(nz_);
    for (int n = 0; n < nz_; ++n) dx[n] = cd(0.0, nb.modes[n]);
    Aw_.m[p] = -(dx.asDiagonal() * K_.K02.m[p]);
  }

  // Diagnostics: K10 = omega - P^{-1} Z1, K01 = -d_x^{-1} Z3 + d_x^{-1} Zpsi P^{-1} Z1.
  Residual Zd = model.eval_F(idelta_, zeta0);
  auto z1 = nodes_of(Zd.F1, pg);
  auto z3 = model.field_to_normal_nodes(Zd.F3);
  std::vector<cd> k10(static_cast<size_t>(P_) * nu_), k01(static_cast<size_t>(P_) * nz_);
  for (int p = 0; p < P_; ++p) {
    VecC v = Pinv_[p] * Eigen::Map<const VecC>(&z1[p * nu_], nu_);
    for (int k = 0; k < nu_; ++k) k10[p * nu_ + k] = model.params().omega[k] - v[k];
    VecC zv = Zpsi_[p] * v;
    for (int n = 0; n < nz_; ++n) k01[static_cast<size_t>(p) * nz_ + n] = invdx[n] * (zv[n] - z3[static_cast<size_t>(p) * nz_ + n]);
  }
  K_.K10 = coeffs_of(k10, nu_, pg, L_);
  K_.K01 = model.normal_to_field(k01);
}

FourierField ApproxInverse::apply_L_omega(const FourierField& h) const {
  return apply_qp(Aw_, model_.params().omega, h);
}

TriangularSolution ApproxInverse::solve_triangular(const std::vector<FourierField>& g1,
                                                   const std::vector<FourierField>& g2, const FourierField& g3,
                                                   const LinearSolve& Lw_inverse) const {
  const PhiGrid& pg = model_.phi_grid();
  const Basis& nb = model_.normal();
  const auto& omega = model_.params().omega;
  const int l0 = LIndex(pg.nu, L_).zero();
  TriangularSolution s;
  // zeta = <g2>; eta~ = D_omega^{-1}(g2 - P^T zeta)
  s.zeta.resize(nu_);
  for (int k = 0; k < nu_; ++k) s.zeta[k] = g2[k].at(l0, 0).real();
  std::vector<cd> pz(static_cast<size_t>(P_) * nu_);
  VecC zv(nu_);
  for (int k = 0; k < nu_; ++k) zv[k] = s.zeta[k];
  for (int p = 0; p < P_; ++p) {
    VecC v = Pm_[p].transpose() * zv;
    for (int k = 0; k < nu_; ++k) pz[p * nu_ + k] = v[k];
  }
  auto pzc = vec_coeffs(pz);
  std::vector<FourierField> eta_t(nu_);
  for (int k = 0; k < nu_; ++k) {
    FourierField r = g2[k] - pzc[k];
    r.at(l0, 0) = 0.0;
    eta_t[k] = d_omega_inverse(r, omega, INFINITY);
  }
  // Helpers: d_x K11 applied to nu-vector nodes, K11^T applied to normal nodes.
  std::vector<cd> dx(nz_);
  for (int n = 0; n < nz_; ++n) dx[n] = cd(0.0, nb.modes[n]);
  auto dxK11 = [&](const std::vector<cd>& v) {
    std::vector<cd> out(static_cast<size_t>(P_) * nz_);
    for (int p = 0; p < P_; ++p) {
      VecC r = K_.K11[p] * Eigen::Map<const VecC>(&v[p * nu_], nu_);
      for (int n = 0; n < nz_; ++n) out[static_cast<size_t>(p) * nz_ + n] = dx[n] * r[n];
    }
    return model_.normal_to_field(out);
  };
  auto K11T = [&](const FourierField& w) {
    auto wn = model_.field_to_normal_nodes(w);
    std::vector<cd> out(static_cast<size_t>(P_) * nu_);
    std::vector<cd> col(nz_);
    for (int p = 0; p < P_; ++p)
      for (int k = 0; k < nu_; ++k) {
        for (int n = 0; n < nz_; ++n) col[n] = K_.K11[p](n, k);
        out[p * nu_ + k] = pairing(&wn[static_cast<size_t>(p) * nz_], col.data(), nb);
      }
    return out;
  };
  auto K20v = [&](const std::vector<cd>& v) {
    std::vector<cd> out(static_cast<size_t>(P_) * nu_);
    for (int p = 0; p < P_; ++p) {
      VecC r = K_.K20[p] * Eigen::Map<const VecC>(&v[p * nu_], nu_);
      for (int k = 0; k < nu_; ++k) out[p * nu_ + k] = r[k];
    }
    return out;
  };
  auto eta_t_n = vec_nodes(eta_t);
  FourierField w_t = Lw_inverse(g3 + dxK11(eta_t_n));
  std::vector<FourierField> c(nu_);
  MatC M1(nu_, nu_);
  for (int k = 0; k < nu_; ++k) {
    std::vector<cd> e(static_cast<size_t>(P_) * nu_, cd(0.0));
    for (int p = 0; p < P_; ++p) e[p * nu_ + k] = 1.0;
    c[k] = Lw_inverse(dxK11(e));
    auto a = K20v(e), b = K11T(c[k]);
    for (size_t t = 0; t < a.size(); ++t) a[t] += b[t];
    auto ac = vec_coeffs(a);
    for (int m = 0; m < nu_; ++m) M1(m, k) = ac[m].at(l0, 0);
  }
  // <eta> = -<M1>^{-1} <g1 + K20 eta~ + K11^T w~>
  auto rhs = K20v(eta_t_n);
  auto b = K11T(w_t);
  for (size_t t = 0; t < rhs.size(); ++t) rhs[t] += b[t];
  auto rc = vec_coeffs(rhs);
  VecC mean(nu_);
  for (int m = 0; m < nu_; ++m) mean[m] = g1[m].at(l0, 0) + rc[m].at(l0, 0);
  Eigen::FullPivLU<MatC> lu(M1);
  if (lu.rank() < nu_ || lu.rcond() < defaults::m1_rcond_floor) throw Error("frequency-amplitude degeneracy");
  VecC eta_mean = -lu.solve(mean);
  s.eta = eta_t;
  for (int k = 0; k < nu_; ++k) s.eta[k].at(l0, 0) += eta_mean[k].real();
  s.w = w_t;
  for (int k = 0; k < nu_; ++k) s.w += cd(eta_mean[k].real()) * c[k];
  // psi = D_omega^{-1}(g1 + K20 eta + K11^T w)
  auto en = vec_nodes(s.eta);
  auto r1 = K20v(en);
  auto r2 = K11T(s.w);
  for (size_t t = 0; t < r1.size(); ++t) r1[t] += r2[t];
  auto r1c = vec_coeffs(r1);
  s.psi.resize(nu_);
  for (int k = 0; k < nu_; ++k) {
    FourierField r = g1[k] + r1c[k];
    r.at(l0, 0) = 0.0;
    s.psi[k] = d_omega_inverse(r, omega, INFINITY);
  }
  return s;
}

void ApproxInverse::apply_D(const TriangularSolution& s, std::vector<FourierField>& g1,
                            std::vector<FourierField>& g2, FourierField& g3) const {
  const PhiGrid& pg = model_.phi_grid();
  const Basis& nb = model_.normal();
  const auto& omega = model_.params().omega;
  auto en = vec_nodes(s.eta);
  auto wn = model_.field_to_normal_nodes(s.w);
  std::vector<cd> v1(static_cast<size_t>(P_) * nu_), v2(v1.size()), v3(static_cast<size_t>(P_) * nz_);
  VecC zv(nu_);
  for (int k = 0; k < nu_; ++k) zv[k] = s.zeta[k];
  std::vector<cd> col(nz_);
  for (int p = 0; p < P_; ++p) {
    Eigen::Map<const VecC> e(&en[p * nu_], nu_);
    VecC a = K_.K20[p] * e;
    for (int k = 0; k < nu_; ++k) {
      for (int n = 0; n < nz_; ++n) col[n] = K_.K11[p](n, k);
      a[k] += pairing(&wn[static_cast<size_t>(p) * nz_], col.data(), nb);
    }
    VecC b = Pm_[p].transpose() * zv;
    VecC c = K_.K11[p] * e;
    for (int k = 0; k < nu_; ++k) {
      v1[p * nu_ + k] = a[k];
      v2[p * nu_ + k] = b[k];
    }
    for (int n = 0; n < nz_; ++n) v3[static_cast<size_t>(p) * nz_ + n] = cd(0.0, nb.modes[n]) * c[n];
  }
  auto c1 = vec_coeffs(v1), c2 = vec_coeffs(v2);
  g1.resize(nu_);
  g2.resize(nu_);
  for (int k = 0; k < nu_; ++k) {
    g1[k] = d_omega(s.psi[k], omega) - c1[k];
    g2[k] = d_omega(s.eta[k], omega) + c2[k];
  }
  g3 = apply_L_omega(s.w) - model_.normal_to_field(v3);
  (void)pg;
}

TorusEmbedding ApproxInverse::DG(const std::vector<FourierField>& psi, const std::vector<FourierField>& eta,
                                 const FourierField& w) const {
  auto pn = vec_nodes(psi), en = vec_nodes(eta);
  auto wn = model_.field_to_normal_nodes(w);
  std::vector<cd> th(static_cast<size_t>(P_) * nu_), yy(th.size()), zz(static_cast<size_t>(P_) * nz_);
  for (int p = 0; p < P_; ++p) {
    Eigen::Map<const VecC> ps(&pn[p * nu_], nu_), et(&en[p * nu_], nu_);
    Eigen::Map<const VecC> wv(&wn[static_cast<size_t>(p) * nz_], nz_);
    VecC a = Pm_[p] * ps;
    VecC b = Ydphi_[p] * ps + Pinv_[p].transpose() * et + L2_[p] * wv;
    VecC c = Zpsi_[p] * ps + wv;
    for (int k = 0; k < nu_; ++k) {
      th[p * nu_ + k] = a[k];
      yy[p * nu_ + k] = b[k];
    }
    for (int n = 0; n < nz_; ++n) zz[static_cast<size_t>(p) * nz_ + n] = c[n];
  }
  TorusEmbedding r;
  r.Theta = vec_coeffs(th);
  r.y = vec_coeffs(yy);
  r.z = model_.normal_to_field(zz);
  return r;
}

void ApproxInverse::DG_inverse(const TorusEmbedding& v, std::vector<FourierField>& psi,
                               std::vector<FourierField>& eta, FourierField& w) const {
  auto tn = vec_nodes(v.Theta), yn = vec_nodes(v.y);
  auto zn = model_.field_to_normal_nodes(v.z);
  std::vector<cd> ps(static_cast<size_t>(P_) * nu_), et(ps.size()), ww(static_cast<size_t>(P_) * nz_);
  for (int p = 0; p < P_; ++p) {
    VecC a = Pinv_[p] * Eigen::Map<const VecC>(&tn[p * nu_], nu_);
    VecC c = Eigen::Map<const VecC>(&zn[static_cast<size_t>(p) * nz_], nz_) - Zpsi_[p] * a;
    VecC b = Pm_[p].transpose() * (Eigen::Map<const VecC>(&yn[p * nu_], nu_) - Ydphi_[p] * a - L2_[p] * c);
    for (int k = 0; k < nu_; ++k) {
      ps[p * nu_ + k] = a[k];
      et[p * nu_ + k] = b[k];
    }
    for (int n = 0; n < nz_; ++n) ww[static_cast<size_t>(p) * nz_ + n] = c[n];
  }
  psi = vec_coeffs(ps);
  eta = vec_coeffs(et);
  w = model_.normal_to_field(ww);
}

std::pair<TorusEmbedding, std::vector<double>> ApproxInverse::apply_T0(const Residual& g,
                                                                      const LinearSolve& Lw_inverse) const {
  TorusEmbedding v;
  v.Theta = g.F1;
  v.y = g.F2;
  v.z = g.F3;
  std::vector<FourierField> g1, g2;
  FourierField g3;
  DG_inverse(v, g1, g2, g3);
  TriangularSolution s = solve_triangular(g1, g2, g3, Lw_inverse);
  return {DG(s.psi, s.eta, s.w), s.zeta};
}

}  // namespace kamkdv
