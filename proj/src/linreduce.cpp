#include "kamkdv/linreduce.hpp"

#include <algorithm>
#include <cmath>

#include "kamkdv/constants.hpp"

namespace kamkdv {

namespace {

int xgrid_size(int Jc) {
  int n = 8;
  while (n < 4 * Jc + 4) n *= 2;
  return n;
}

std::vector<cd> x_derivative(const std::vector<cd>& c, int Jc, int k = 1) {
  std::vector<cd> r(c.size());
  for (int j = -Jc; j <= Jc; ++j) r[j + Jc] = std::pow(cd(0.0, j), k) * c[j + Jc];
  return r;
}

void scale_rows(NodeOp& A, int power) {
  VecC d(A.rows.size());
  for (int r = 0; r < A.rows.size(); ++r) d[r] = std::pow(cd(0.0, A.rows.modes[r]), power);
  for (auto& m : A.m) m = d.asDiagonal() * m;
}

double report_norm(const NodeOp& A, int L, double s) {
  const int Lr = std::min(L, (A.pg.M - 1) / 2);
  return decay_norm(A.to_decay(Lr), s);
}

double series_tol(const NodeOp& M) { return defaults::series_tol * std::max(1.0, M.max_abs()); }

std::vector<double> shifted_points(const PhiGrid& pg, const std::vector<double>& omega, const std::vector<double>& a) {
  std::vector<double> pts(static_cast<size_t>(pg.P) * pg.nu);
  for (int p = 0; p < pg.P; ++p) {
    auto ang = pg.angles(p);
    for (int d = 0; d < pg.nu; ++d) pts[p * pg.nu + d] = ang[d] + omega[d] * a[p];
  }
  return pts;
}

std::vector<double> real_part(const std::vector<cd>& v) {
  std::vector<double> r(v.size());
  for (size_t i = 0; i < v.size(); ++i) r[i] = v[i].real();
  return r;
}

double sqrt_xi(const SiteSet& S, const std::vector<double>& xi, int j) { return std::sqrt(xi[S.ell(j).first]); }

std::vector<int> ell_vec(const SiteSet& S, int j) {
  std::vector<int> l(S.nu(), 0);
  auto [i, sg] = S.ell(j);
  l[i] = sg;
  return l;
}

}  // namespace

// ------------------------------------------------------------------ operator

NodeOp g_form_op(const PhiGrid& pg, const Basis& b, const std::vector<cd>& g1, const std::vector<cd>& g0, int Jc) {
  NodeOp A = symbol_op(pg, b, g1, Jc, 1);
  scale_rows(A, 2);
  NodeOp B = symbol_op(pg, b, g0, Jc, 0);
  scale_rows(B, 1);
  return A + B;
}

NodeOp QPLinearOperator::symbol_part() const { return g_form_op(pg, basis, g1, g0, Jc); }

std::vector<cd> QPLinearOperator::symbol(int k) const {
  const int nc = ncoef();
  std::vector<cd> out(g1.size());
  for (int p = 0; p < pg.P; ++p) {
    std::vector<cd> a(g1.begin() + p * nc, g1.begin() + (p + 1) * nc), b(g0.begin() + p * nc, g0.begin() + (p + 1) * nc);
    std::vector<cd> r;
    switch (k) {
      case 3: r = a; break;
      case 2: r = x_derivative(a, Jc); for (auto& x : r) x *= 2.0; break;
      case 1: r = x_derivative(a, Jc, 2); for (int j = 0; j < nc; ++j) r[j] += b[j]; break;
      case 0: r = x_derivative(b, Jc); break;
      default: throw Error("QPLinearOperator::symbol: order must be 0..3");
    }
    std::copy(r.begin(), r.end(), out.begin() + p * nc);
  }
  return out;
}

QPLinearOperator assemble_L_omega(const KdVModel& model, const ApproxInverse& ai) {
  QPLinearOperator Lw;
  Lw.pg = model.phi_grid();
  Lw.basis = model.normal();
  const int J = model.J(), nj = 2 * J + 1;
  Lw.Jc = 2 * J;
  const int nc = Lw.ncoef(), P = Lw.pg.P;
  FourierField u = aa_embed(ai.i_delta(), model.params(), model.sites(), Lw.pg.M);
  auto un = field_to_nodes(u, Lw.pg);
  Lw.g1.assign(static_cast<size_t>(P) * nc, 0.0);
  Lw.g0.assign(Lw.g1.size(), 0.0);
#pragma omp parallel for schedule(dynamic)
  for (int p = 0; p < P; ++p) {
    std::vector<cd> U(nj);
    model.original_solution(&un[static_cast<size_t>(p) * nj], U.data());
    model.grid().hessian_symbols(U.data(), Lw.Jc, &Lw.g1[static_cast<size_t>(p) * nc], &Lw.g0[static_cast<size_t>(p) * nc]);
  }
  Lw.tail = ai.L_omega_nodes() - Lw.symbol_part();
  return Lw;
}

std::vector<cd> vbar_nodes(const PhiGrid& pg, const SiteSet& S, const std::vector<double>& xi, int Jc) {
  const int nc = 2 * Jc + 1;
  std::vector<cd> v(static_cast<size_t>(pg.P) * nc, 0.0);
  for (int p = 0; p < pg.P; ++p) {
    auto ang = pg.angles(p);
    for (int j : S.s) {
      if (std::abs(j) > Jc) continue;
      auto [i, sg] = S.ell(j);
      v[static_cast<size_t>(p) * nc + j + Jc] = std::sqrt(xi[i]) * std::polar(1.0, sg * ang[i]);
    }
  }
  return v;
}

// ------------------------------------------------------------------ explicit LBNF matrices

bool lbnf_resonant(const SiteSet& S, const std::vector<int>& l, int j, int jp) {
  long long w = 0;
  for (int k = 0; k < S.nu(); ++k) {
    long long s = S.s_plus[k];
    w += s * s * s * l[k];
  }
  return w + static_cast<long long>(jp) * jp * jp - static_cast<long long>(j) * j * j == 0;
}

DecayMatrix lbnf_B1(const SiteSet& S, const std::vector<double>& xi, const Basis& b) {
  DecayMatrix B(S.nu(), 1, b, b);
  for (int r = 0; r < b.size(); ++r)
    for (int c = 0; c < b.size(); ++c) {
      int j = b.modes[r], jp = b.modes[c], k = j - jp;
      if (!S.contains(k)) continue;
      B.blocks[B.li.index(ell_vec(S, k))](r, c) = cd(0.0, -6.0 * j * sqrt_xi(S, xi, k));
    }
  return B;
}

DecayMatrix lbnf_A1bar(const SiteSet& S, const std::vector<double>& xi, const Basis& b) {
  DecayMatrix A(S.nu(), 1, b, b);
  for (int r = 0; r < b.size(); ++r)
    for (int c = 0; c < b.size(); ++c) {
      int j = b.modes[r], jp = b.modes[c], k = j - jp;
      if (!S.contains(k)) continue;
      A.blocks[A.li.index(ell_vec(S, k))](r, c) = 2.0 * sqrt_xi(S, xi, k) / (double(jp) * (jp - j));
    }
  return A;
}

DecayMatrix lbnf_A1(const SiteSet& S, const std::vector<double>& xi, const Basis& b, double eps,
                    const std::vector<double>& omega, double m3) {
  DecayMatrix A(S.nu(), 1, b, b);
  for (int r = 0; r < b.size(); ++r)
    for (int c = 0; c < b.size(); ++c) {
      int j = b.modes[r], jp = b.modes[c], k = j - jp;
      if (!S.contains(k)) continue;
      auto l = ell_vec(S, k);
      double div = m3 * (std::pow(double(jp), 3) - std::pow(double(j), 3));
      for (int d = 0; d < S.nu(); ++d) div += omega[d] * l[d];
      if (std::abs(div) < defaults::step4_divisor_min)
        throw Error("step-4 divisor too small at l=" + std::to_string(k) + " j=" + std::to_string(j) +
                    " j'=" + std::to_string(jp));
      // i div A = -eps B1 with B1 = -6 i j sqrt(xi)
      A.blocks[A.li.index(l)](r, c) = 6.0 * eps * j * sqrt_xi(S, xi, k) / div;
    }
  return A;
}

LBNFPieces lbnf_pieces(const SiteSet& S, const std::vector<double>& xi, const Basis& b) {
  const int nu = S.nu();
  LBNFPieces P{DecayMatrix(nu, 2, b, b), DecayMatrix(nu, 2, b, b), DecayMatrix(nu, 2, b, b), DecayMatrix(nu, 2, b, b)};
  std::vector<int> l(nu);
  for (int r = 0; r < b.size(); ++r)
    for (int c = 0; c < b.size(); ++c) {
      const int j = b.modes[r], jp = b.modes[c];
      for (int j1 : S.s)
        for (int j2 : S.s) {
          if (j1 + j2 != j - jp) continue;
          auto l1 = ell_vec(S, j1), l2 = ell_vec(S, j2);
          for (int d = 0; d < nu; ++d) l[d] = l1[d] + l2[d];
          const int li = P.B1cal.li.index(l);
          const double sx = sqrt_xi(S, xi, j1) * sqrt_xi(S, xi, j2);
          if (S.contains(j1 + jp)) {
            P.B1cal.blocks[li](r, c) += cd(0.0, 6.0 * j * sx / (double(j1) * jp));
            P.B3cal.blocks[li](r, c) += 6.0 * sx / cd(0.0, j2);
          }
          if (j1 + j2 != 0) P.B2cal.blocks[li](r, c) += cd(0.0, 6.0 * j * sx / (double(j1) * j2));
          const int m = jp + j2;
          if (m != 0 && !S.contains(m))
            P.comm.blocks[li](r, c) += cd(0.0, 12.0 * (double(j) * j1 - double(jp) * j2) * sx / (double(jp) * j1 * j2));
        }
    }
  return P;
}

DecayMatrix LBNFPieces::T(double eps) const {
  DecayMatrix R = B1cal;
  for (int i = 0; i < R.li.n; ++i)
    R.blocks[i] = eps * eps * (B1cal.blocks[i] + B2cal.blocks[i] + B3cal.blocks[i] + 0.5 * comm.blocks[i]);
  return R;
}

DecayMatrix lbnf_A2(const DecayMatrix& T, const SiteSet& S, const std::vector<double>& omega, double m3) {
  DecayMatrix A(T.li.nu, T.li.L, T.rows, T.cols);
  for (int i = 0; i < T.li.n; ++i) {
    auto l = T.li.comps(i);
    double wl = 0;
    for (int d = 0; d < T.li.nu; ++d) wl += omega[d] * l[d];
    for (int r = 0; r < T.rows.size(); ++r)
      for (int c = 0; c < T.cols.size(); ++c) {
        if (T.blocks[i](r, c) == cd(0.0)) continue;
        const int j = T.rows.modes[r], jp = T.cols.modes[c];
        if (lbnf_resonant(S, l, j, jp)) continue;
        double div = wl + m3 * (std::pow(double(jp), 3) - std::pow(double(j), 3));
        if (std::abs(div) < defaults::step4_divisor_min)
          throw Error("step-5 divisor too small at j=" + std::to_string(j) + " j'=" + std::to_string(jp));
        A.blocks[i](r, c) = -T.blocks[i](r, c) / cd(0.0, div);
      }
  }
  return A;
}

DecayMatrix homological_residual(const DecayMatrix& A, const DecayMatrix& F, const std::vector<double>& omega,
                                 double m3) {
  DecayMatrix R = F;
  for (int i = 0; i < A.li.n; ++i) {
    auto l = A.li.comps(i);
    int o = R.li.index(l);
    if (o < 0) throw Error("homological_residual: index boxes differ");
    double wl = 0;
    for (int d = 0; d < A.li.nu; ++d) wl += omega[d] * l[d];
    for (int r = 0; r < A.rows.size(); ++r)
      for (int c = 0; c < A.cols.size(); ++c) {
        const int j = A.rows.modes[r], jp = A.cols.modes[c];
        double div = wl + m3 * (std::pow(double(jp), 3) - std::pow(double(j), 3));
        R.blocks[o](r, c) += cd(0.0, div) * A.blocks[i](r, c);
      }
  }
  return R;
}

// ------------------------------------------------------------------ stages

void step1_space(QPLinearOperator& Lw, ReductionTranscript& tr, const SiteSet& S, const ReductionOptions& opt) {
  const PhiGrid& pg = Lw.pg;
  const int P = pg.P, Jc = Lw.Jc, nc = Lw.ncoef();
  // The transport generator lives on a buffered basis with x-band Jb.
  const int Jmax = Lw.basis.Jmax + opt.buffer, Jb = 2 * Jmax;
  int Nx = xgrid_size(Jc);
  while (Nx <= 2 * Jb) Nx *= 2;
  XGrid xg(Jc, Nx);
  NodeOp M0 = Lw.full();
  tr.beta.assign(static_cast<size_t>(P) * nc, 0.0);
  tr.b3.assign(P, 0.0);
  std::vector<cd> bx(static_cast<size_t>(P) * nc, 0.0);
  bool degenerate = false;
  for (int p = 0; p < P; ++p) {
    std::vector<cd> a(Nx), v(Nx);
    xg.to_grid(&Lw.g1[static_cast<size_t>(p) * nc], a.data());
    double mean = 0;
    for (int k = 0; k < Nx; ++k) {
      if (a[k].real() <= 0) degenerate = true;
      mean += std::pow(a[k].real(), -1.0 / 3.0);
    }
    if (degenerate) break;
    mean /= Nx;
    const double b3 = std::pow(mean, -3.0);
    tr.b3[p] = b3;
    for (int k = 0; k < Nx; ++k) v[k] = std::cbrt(b3 / a[k].real()) - 1.0;
    xg.to_coeffs(v.data(), &bx[static_cast<size_t>(p) * nc]);
    bx[static_cast<size_t>(p) * nc + Jc] = 0.0;
    for (int j = -Jc; j <= Jc; ++j)
      if (j != 0) tr.beta[static_cast<size_t>(p) * nc + j + Jc] = bx[static_cast<size_t>(p) * nc + j + Jc] / cd(0.0, j);
  }
  if (degenerate) throw Error("degenerate dispersion");
  std::vector<cd> dbeta(tr.beta.size());
  pg.omega_derivative(tr.beta.data(), nc, tr.omega, dbeta.data());

  // New symbols: g1 = q^3 a1(y + bt) = b3, g0 = a0(y + bt) q + q (m q')' + (omega.d beta)(y + bt).
  std::vector<cd> g1n(Lw.g1.size(), 0.0), g0n(Lw.g0.size(), 0.0);
  double dev = 0;
#pragma omp parallel for schedule(dynamic) reduction(max : dev)
  for (int p = 0; p < P; ++p) {
    const size_t off = static_cast<size_t>(p) * nc;
    std::vector<cd> bc(tr.beta.begin() + off, tr.beta.begin() + off + nc);
    auto bt = invert_diffeo_grid(bc, Jc, Nx, defaults::tol_diffeo, defaults::diffeo_max_iter);
    std::vector<cd> btv(Nx), btc(nc), q(Nx), qc(nc), qy(Nx), a1t(Nx), a0t(Nx), p0(Nx), mqy(Nx), mqc(nc), mqyy(Nx);
    for (int k = 0; k < Nx; ++k) btv[k] = bt[k];
    xg.to_coeffs(btv.data(), btc.data());
    auto dbt = x_derivative(btc, Jc);
    xg.to_grid(dbt.data(), q.data());
    for (int k = 0; k < Nx; ++k) q[k] = 1.0 / (1.0 + q[k].real());
    xg.to_coeffs(q.data(), qc.data());
    auto dq = x_derivative(qc, Jc);
    xg.to_grid(dq.data(), qy.data());
    for (int k = 0; k < Nx; ++k) {
      const double x = xg.node(k) + bt[k];
      a1t[k] = xg.eval(&Lw.g1[off], x);
      a0t[k] = xg.eval(&Lw.g0[off], x);
      p0[k] = xg.eval(&dbeta[off], x);
      mqy[k] = a1t[k] * q[k] * qy[k];
    }
    xg.to_coeffs(mqy.data(), mqc.data());
    auto dmq = x_derivative(mqc, Jc);
    xg.to_grid(dmq.data(), mqyy.data());
    std::vector<cd> g0v(Nx);
    for (int k = 0; k < Nx; ++k) {
      g0v[k] = a0t[k] * q[k] + q[k] * mqyy[k] + p0[k];
      dev = std::max(dev, std::abs(q[k] * q[k] * q[k] * a1t[k] - tr.b3[p]) / std::abs(tr.b3[p]));
    }
    xg.to_coeffs(g0v.data(), &g0n[off]);
    g1n[off + Jc] = tr.b3[p];
  }

  // Transport flow of Pi_perp dx (b(tau) .), b = beta / (1 + tau beta_x), on a buffered basis.
  Basis bb = normal_basis(Jmax, S.s);
  const int nbc = 2 * Jb + 1, nb = bb.size();
  XGrid xb(Jb, Nx);
  double lip = 0;
  for (int p = 0; p < P; ++p) {
    double l1 = 0, sx = 0;
    std::vector<cd> v(Nx);
    for (int j = -Jc; j <= Jc; ++j) l1 += std::abs(tr.beta[static_cast<size_t>(p) * nc + j + Jc]);
    xg.to_grid(&bx[static_cast<size_t>(p) * nc], v.data());
    for (auto& x : v) sx = std::max(sx, std::abs(x));
    if (sx >= 1.0) throw Error("degenerate dispersion");
    lip = std::max(lip, Jmax * l1 / (1.0 - sx));
  }
  const int steps = std::clamp(static_cast<int>(std::ceil(lip / 0.02)), 1, defaults::transport_steps);
  NodeOp Phi(pg, Lw.basis, Lw.basis);
#pragma omp parallel for schedule(dynamic)
  for (int p = 0; p < P; ++p) {
    const size_t off = static_cast<size_t>(p) * nc;
    std::vector<cd> bv(Nx), bxv(Nx);
    xg.to_grid(&tr.beta[off], bv.data());
    xg.to_grid(&bx[off], bxv.data());
    auto gen = [&](double tau) {
      std::vector<cd> v(Nx), c(nbc);
      for (int k = 0; k < Nx; ++k) v[k] = bv[k] / (1.0 + tau * bxv[k]);
      xb.to_coeffs(v.data(), c.data());
      MatC G = MatC::Zero(nb, nb);
      for (int r = 0; r < nb; ++r)
        for (int q = 0; q < nb; ++q) {
          int d = bb.modes[r] - bb.modes[q];
          if (std::abs(d) <= Jb) G(r, q) = cd(0.0, bb.modes[r]) * c[d + Jb];
        }
      return G;
    };
    MatC F = MatC::Identity(nb, nb);
    const double h = 1.0 / steps;
    for (int st = 0; st < steps; ++st) {
      const double t = st * h;
      MatC G0 = gen(t), Gh = gen(t + 0.5 * h), G1 = gen(t + h);
      MatC k1 = G0 * F;
      MatC k2 = Gh * (F + 0.5 * h * k1);
      MatC k3 = Gh * (F + 0.5 * h * k2);
      MatC k4 = G1 * (F + h * k3);
      F += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    for (int r = 0; r < Lw.basis.size(); ++r)
      for (int q = 0; q < Lw.basis.size(); ++q)
        Phi.m[p](r, q) = F(bb.find(Lw.basis.modes[r]), bb.find(Lw.basis.modes[q]));
  }
  tr.Phi = Phi;
  tr.Phi_inv = Phi.inverse();
  NodeOp M1 = tr.Phi_inv * Phi.omega_derivative(tr.omega) + tr.Phi_inv * M0 * Phi;
  Lw.g1 = g1n;
  Lw.g0 = g0n;
  Lw.tail = M1 - Lw.symbol_part();
  tr.stages.push_back({"space", report_norm(Lw.tail, tr.L, tr.s), dev, steps});
}

void step2_time(QPLinearOperator& Lw, ReductionTranscript& tr) {
  const PhiGrid& pg = Lw.pg;
  const int P = pg.P, nc = Lw.ncoef();
  double m3 = 0;
  for (int p = 0; p < P; ++p) m3 += tr.b3[p].real();
  m3 /= P;
  tr.m3 = m3;
  std::vector<cd> r(P), a(P), da(P);
  for (int p = 0; p < P; ++p) r[p] = tr.b3[p].real() / m3 - 1.0;
  pg.omega_inverse(r.data(), 1, tr.omega, a.data());
  pg.omega_derivative(a.data(), 1, tr.omega, da.data());
  tr.alpha = real_part(a);
  // Inverse reparametrization: at(th) = -alpha(th + omega at(th)).
  std::vector<double> at(P, 0.0);
  for (int p = 0; p < P; ++p) at[p] = -tr.alpha[p];
  std::vector<cd> ai(P);
  for (int it = 0; it < defaults::diffeo_max_iter; ++it) {
    pg.interpolate(a.data(), 1, shifted_points(pg, tr.omega, at), ai.data());
    double d = 0;
    for (int p = 0; p < P; ++p) {
      d = std::max(d, std::abs(-ai[p].real() - at[p]));
      at[p] = -ai[p].real();
    }
    if (d < defaults::tol_diffeo) break;
  }
  tr.alpha_t = at;
  auto pts = shifted_points(pg, tr.omega, at);
  std::vector<cd> one_plus(P), rho(P), b3s(P);
  for (int p = 0; p < P; ++p) one_plus[p] = 1.0 + da[p];
  pg.interpolate(one_plus.data(), 1, pts, rho.data());
  pg.interpolate(tr.b3.data(), 1, pts, b3s.data());
  tr.rho = real_part(rho);
  double dev = 0;
  for (int p = 0; p < P; ++p) dev = std::max(dev, std::abs(b3s[p].real() / tr.rho[p] - m3) / m3);
  std::vector<cd> g0s(Lw.g0.size());
  pg.interpolate(Lw.g0.data(), nc, pts, g0s.data());
  NodeOp tail = Lw.tail.at_points(pts, pg);
  for (int p = 0; p < P; ++p) {
    for (int k = 0; k < nc; ++k) g0s[static_cast<size_t>(p) * nc + k] /= tr.rho[p];
    tail.m[p] /= tr.rho[p];
  }
  std::fill(Lw.g1.begin(), Lw.g1.end(), cd(0.0));
  for (int p = 0; p < P; ++p) Lw.g1[static_cast<size_t>(p) * nc + Lw.Jc] = m3;
  Lw.g0 = g0s;
  Lw.tail = tail;
  tr.stages.push_back({"time", report_norm(Lw.tail, tr.L, tr.s), dev, 0});
}

void step3_translate(QPLinearOperator& Lw, ReductionTranscript& tr) {
  const PhiGrid& pg = Lw.pg;
  const int P = pg.P, nc = Lw.ncoef(), Jc = Lw.Jc;
  double m1 = 0;
  for (int p = 0; p < P; ++p) m1 += Lw.g0[static_cast<size_t>(p) * nc + Jc].real();
  m1 /= P;
  tr.m1 = m1;
  std::vector<cd> r(P), pv(P), dp(P);
  for (int p = 0; p < P; ++p) r[p] = m1 - Lw.g0[static_cast<size_t>(p) * nc + Jc].real();
  pg.omega_inverse(r.data(), 1, tr.omega, pv.data());
  pg.omega_derivative(pv.data(), 1, tr.omega, dp.data());
  tr.p = real_part(pv);
  double dev = 0;
  for (int p = 0; p < P; ++p) {
    const size_t off = static_cast<size_t>(p) * nc;
    for (int j = -Jc; j <= Jc; ++j) {
      cd ph = std::polar(1.0, -j * tr.p[p]);
      Lw.g1[off + j + Jc] *= ph;
      Lw.g0[off + j + Jc] *= ph;
    }
    Lw.g0[off + Jc] += dp[p].real();
    dev = std::max(dev, std::abs(Lw.g0[off + Jc] - m1));
    const Basis& b = Lw.basis;
    for (int a = 0; a < b.size(); ++a)
      for (int c = 0; c < b.size(); ++c) Lw.tail.m[p](a, c) *= std::polar(1.0, -(b.modes[a] - b.modes[c]) * tr.p[p]);
  }
  tr.stages.push_back({"translate", report_norm(Lw.tail, tr.L, tr.s), dev, 0});
}

void step4_lbnf1(QPLinearOperator& Lw, ReductionTranscript& tr, const SiteSet& S, const std::vector<double>& xi,
                 double eps) {
  tr.A1 = lbnf_A1(S, xi, Lw.basis, eps, tr.omega, tr.m3);
  NodeOp A = NodeOp::from_decay(tr.A1, Lw.pg);
  NodeOp M0 = Lw.full();
  LieResult lr = lie_conjugate(M0, A, tr.omega, series_tol(M0));
  auto v = vbar_nodes(Lw.pg, S, xi, Lw.Jc);
  for (size_t k = 0; k < v.size(); ++k) Lw.g0[k] += 6.0 * eps * v[k];
  Lw.tail = lr.M - Lw.symbol_part();
  tr.E1 = node_exp(A);
  tr.E1_inv = node_exp(cd(-1.0) * A);
  tr.stages.push_back({"lbnf1", report_norm(Lw.tail, tr.L, tr.s), 0.0, lr.terms});
}

void step5_lbnf2(QPLinearOperator& Lw, ReductionTranscript& tr, const SiteSet& S, const std::vector<double>& xi,
                 double eps) {
  LBNFPieces pieces = lbnf_pieces(S, xi, Lw.basis);
  tr.A2 = lbnf_A2(pieces.T(eps), S, tr.omega, tr.m3);
  NodeOp A = NodeOp::from_decay(tr.A2, Lw.pg);
  NodeOp M0 = Lw.full();
  LieResult lr = lie_conjugate(M0, A, tr.omega, series_tol(M0));
  // The multiplication part of T leaves the first-order symbol: g0 += 6 eps^2 pi0[(dx^{-1} v)^2].
  const int Jc = Lw.Jc, nc = Lw.ncoef();
  auto v = vbar_nodes(Lw.pg, S, xi, Jc);
  for (int p = 0; p < Lw.pg.P; ++p) {
    const size_t off = static_cast<size_t>(p) * nc;
    for (int j1 = -Jc; j1 <= Jc; ++j1) {
      if (j1 == 0 || v[off + j1 + Jc] == cd(0.0)) continue;
      for (int j2 = -Jc; j2 <= Jc; ++j2) {
        if (j2 == 0 || j1 + j2 == 0 || std::abs(j1 + j2) > Jc || v[off + j2 + Jc] == cd(0.0)) continue;
        cd t = v[off + j1 + Jc] / cd(0.0, j1) * v[off + j2 + Jc] / cd(0.0, j2);
        Lw.g0[off + j1 + j2 + Jc] += 6.0 * eps * eps * t;
      }
    }
  }
  Lw.tail = lr.M - Lw.symbol_part();
  tr.E2 = node_exp(A);
  tr.E2_inv = node_exp(cd(-1.0) * A);
  tr.stages.push_back({"lbnf2", report_norm(Lw.tail, tr.L, tr.s), 0.0, lr.terms});
}

void step6_descent(QPLinearOperator& Lw, ReductionTranscript& tr) {
  const int P = Lw.pg.P, nc = Lw.ncoef(), Jc = Lw.Jc;
  tr.w.assign(static_cast<size_t>(P) * nc, 0.0);
  for (int p = 0; p < P; ++p) {
    const size_t off = static_cast<size_t>(p) * nc;
    if (std::abs(Lw.g0[off + Jc] - tr.m1) > 1e-10) throw Error("descent precondition");
    for (int j = -Jc; j <= Jc; ++j)
      if (j != 0) tr.w[off + j + Jc] = -Lw.g0[off + j + Jc] / (3.0 * tr.m3 * cd(0.0, j));
  }
  NodeOp W = symbol_op(Lw.pg, Lw.basis, tr.w, Jc, -1);
  NodeOp M0 = Lw.full();
  LieResult lr = lie_conjugate(M0, W, tr.omega, series_tol(M0));
  // First-order coefficient after the step: g0 + 3 m3 w_x.
  double dev = 0;
  for (int p = 0; p < P; ++p) {
    const size_t off = static_cast<size_t>(p) * nc;
    for (int j = -Jc; j <= Jc; ++j) {
      cd c = Lw.g0[off + j + Jc] + 3.0 * tr.m3 * cd(0.0, j) * tr.w[off + j + Jc];
      dev = std::max(dev, std::abs(c - (j == 0 ? cd(tr.m1) : cd(0.0))));
    }
  }
  std::fill(Lw.g0.begin(), Lw.g0.end(), cd(0.0));
  for (int p = 0; p < P; ++p) Lw.g0[static_cast<size_t>(p) * nc + Jc] = tr.m1;
  Lw.tail = lr.M - Lw.symbol_part();
  tr.EW = node_exp(W);
  tr.EW_inv = node_exp(cd(-1.0) * W);
  tr.stages.push_back({"descent", report_norm(Lw.tail, tr.L, tr.s), dev, lr.terms});
}

ReductionResult reduce_linear_operator(const QPLinearOperator& Lw, const std::vector<double>& omega, int L,
                                       const SiteSet& S, const std::vector<double>& xi, double eps,
                                       const ReductionOptions& opt) {
  ReductionResult res{Lw, {}};
  ReductionTranscript& tr = res.transcript;
  tr.omega = omega;
  tr.pg = Lw.pg;
  tr.basis = Lw.basis;
  tr.L = L;
  ReductionOptions o = opt;
  if (o.s < 0) o.s = (S.nu() + 2) / 2.0;
  tr.s = o.s;
  tr.stages.push_back({"initial", report_norm(Lw.tail, L, tr.s), 0.0, 0});
  step1_space(res.L6, tr, S, o);
  step2_time(res.L6, tr);
  step3_translate(res.L6, tr);
  if (o.lbnf) {
    step4_lbnf1(res.L6, tr, S, xi, eps);
    step5_lbnf2(res.L6, tr, S, xi, eps);
  } else {
    tr.E1 = tr.E1_inv = tr.E2 = tr.E2_inv = NodeOp::identity(Lw.pg, Lw.basis);
  }
  step6_descent(res.L6, tr);
  return res;
}

// ------------------------------------------------------------------ transcript maps

void ReductionTranscript::apply_B(std::vector<cd>& v, bool inverse) const {
  auto pts = shifted_points(pg, omega, inverse ? alpha_t : alpha);
  std::vector<cd> out(v.size());
  pg.interpolate(v.data(), basis.size(), pts, out.data());
  v.swap(out);
}

namespace {

void apply_node(const NodeOp& A, std::vector<cd>& v) {
  std::vector<cd> out(v.size());
  A.apply(v.data(), out.data());
  v.swap(out);
}

void apply_translation(const Basis& b, const std::vector<double>& p, double sign, std::vector<cd>& v) {
  const int nb = b.size();
  for (size_t q = 0; q < p.size(); ++q)
    for (int k = 0; k < nb; ++k) v[q * nb + k] *= std::polar(1.0, sign * b.modes[k] * p[q]);
}

}  // namespace

void ReductionTranscript::apply_M2(std::vector<cd>& v) const {
  apply_node(EW, v);
  apply_node(E2, v);
  apply_node(E1, v);
  apply_translation(basis, p, 1.0, v);
  apply_B(v, false);
  apply_node(Phi, v);
}

void ReductionTranscript::apply_M1_inverse(std::vector<cd>& v) const {
  apply_node(Phi_inv, v);
  apply_B(v, true);
  const int nb = basis.size();
  for (int q = 0; q < pg.P; ++q)
    for (int k = 0; k < nb; ++k) v[static_cast<size_t>(q) * nb + k] /= rho[q];
  apply_translation(basis, p, -1.0, v);
  apply_node(E1_inv, v);
  apply_node(E2_inv, v);
  apply_node(EW_inv, v);
}

}  // namespace kamkdv
