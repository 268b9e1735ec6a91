#include "kamkdv/kamred.hpp"

#include <algorithm>
#include <cmath>

namespace kamkdv {

cd Spectrum::mu_of(int j) const {
  if (j == 0) return 0.0;
  for (size_t k = 0; k < modes.size(); ++k)
    if (modes[k] == j) return mu[k];
  throw Error("Spectrum: mode outside basis");
}

double Spectrum::max_real_defect() const {
  double d = 0;
  for (size_t k = 0; k < modes.size(); ++k)
    d = std::max(d, std::abs(mu[k].real()) / (1.0 + std::pow(std::abs(double(modes[k])), 3)));
  return d;
}

double contraction_exponent(const std::vector<double>& d, double floor) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (size_t k = 0; k + 1 < d.size(); ++k) {
    if (d[k] <= floor || d[k + 1] <= floor) continue;
    double x = std::log(d[k]), y = std::log(d[k + 1]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  if (n == 0) return 0.0;
  if (n == 1) return sy / sx;  // single pair: d1 = d0^e
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

KamResult reduce_to_diagonal(double m3, double m1, const NodeOp& R0, const std::vector<double>& omega,
                             const KamOptions& opt) {
  const PhiGrid& pg = R0.pg;
  const Basis& b = R0.rows;
  const int nb = b.size(), Lr = (pg.M - 1) / 2;
  const double s = opt.s < 0 ? (pg.nu + 2) / 2.0 : opt.s;
  KamResult res;
  res.spec.modes = b.modes;
  res.spec.m3 = m3;
  res.spec.m1 = m1;
  res.spec.r.assign(nb, 0.0);
  res.spec.mu.resize(nb);
  auto base = [&](int j) { return cd(0.0, -m3 * std::pow(double(j), 3) + m1 * j); };
  for (int k = 0; k < nb; ++k) res.spec.mu[k] = base(b.modes[k]);
  res.Phi = NodeOp::identity(pg, b);
  res.Phi_inv = res.Phi;
  NodeOp R = R0;
  for (int n = 0;; ++n) {
    DecayMatrix D = R.to_decay(Lr);
    const int z = D.li.zero();
    // Move the l = 0 diagonal into the normal form.
    NodeOp Dg(pg, b, b);
    for (int k = 0; k < nb; ++k) {
      cd d = D.blocks[z](k, k);
      res.spec.r[k] += d;
      res.spec.mu[k] += d;
      D.blocks[z](k, k) = 0.0;
      for (auto& m : Dg.m) m(k, k) = d;
    }
    R -= Dg;
    const double dn = decay_norm(D, s);
    res.offdiag.push_back(dn);
    if (dn <= opt.tol || n >= opt.max_scales) {
      res.scales = n;
      break;
    }
    int N = Lr;
    if (opt.N0 > 0) N = std::clamp(static_cast<int>(std::floor(std::pow(opt.N0, std::pow(opt.chi, n)))), 2, Lr);
    res.cutoffs.push_back(N);
    const double gn = opt.gamma * (1.0 + std::pow(2.0, -n));
    DecayMatrix Psi(pg.nu, N, b, b), RN(pg.nu, N, b, b);
    for (int i = 0; i < Psi.li.n; ++i) {
      auto l = Psi.li.comps(i);
      const int src = D.li.index(l);
      double wl = 0;
      for (int d = 0; d < pg.nu; ++d) wl += omega[d] * l[d];
      const double br = std::pow(bracket(Psi.li.norm_inf(i), 0), opt.tau);
      for (int a = 0; a < nb; ++a)
        for (int c = 0; c < nb; ++c) {
          cd v = D.blocks[src](a, c);
          if (v == cd(0.0)) continue;
          cd div = cd(0.0, wl) + res.spec.mu[a] - res.spec.mu[c];
          const int ja = b.modes[a], jc = b.modes[c];
          double need = gn * std::max(1.0, std::abs(std::pow(double(ja), 3) - std::pow(double(jc), 3))) / br;
          if (std::abs(div) < need || std::abs(div) == 0.0)
            throw Error("Melnikov failure at scale " + std::to_string(n) + " (j=" + std::to_string(ja) +
                        ", k=" + std::to_string(jc) + ")");
          RN.blocks[i](a, c) = v;
          Psi.blocks[i](a, c) = -v / div;
        }
    }
    NodeOp P = NodeOp::from_decay(Psi, pg), RNn = NodeOp::from_decay(RN, pg);
    // e^{-P} (D_omega + D + R) e^{P} with [D_omega + D, P] = -R_N.
    NodeOp out = R - RNn;
    NodeOp X = commutator(R, P), Y = commutator(RNn, P);
    double fx = 1.0, fy = 2.0;
    const double tol = defaults::series_tol * std::max(1e-300, dn);
    for (int k = 1; k <= defaults::series_max_terms; ++k) {
      NodeOp t = (1.0 / fx) * X - (1.0 / fy) * Y;
      out += t;
      if (t.max_abs() < tol) break;
      if (k == defaults::series_max_terms) throw Error("reduce_to_diagonal: Lie series did not converge");
      X = commutator(X, P);
      Y = commutator(Y, P);
      fx *= (k + 1);
      fy *= (k + 2);
    }
    R = out;
    NodeOp E = node_exp(P), Ei = node_exp(cd(-1.0) * P);
    res.Phi = res.Phi * E;
    res.Phi_inv = Ei * res.Phi_inv;
  }
  res.contraction_exponent = contraction_exponent(res.offdiag, 1e-300);
  return res;
}

KamResult reduce_to_diagonal(const QPLinearOperator& L6, const ReductionTranscript& tr, const KamOptions& opt) {
  return reduce_to_diagonal(tr.m3, tr.m1, L6.tail, tr.omega, opt);
}

MelnikovReport melnikov_check(const Spectrum& spec, const std::vector<double>& omega, double gamma, double tau,
                              int Lmax, int Jmax) {
  MelnikovReport rep;
  rep.gamma = gamma;
  rep.margin = INFINITY;
  const int nu = static_cast<int>(omega.size());
  LIndex li(nu, Lmax);
  std::vector<int> js;
  for (int j : spec.modes)
    if (std::abs(j) <= Jmax) js.push_back(j);
  std::vector<int> ks = js;
  ks.push_back(0);
  for (int i = 0; i < li.n; ++i) {
    double wl = 0;
    auto l = li.comps(i);
    for (int d = 0; d < nu; ++d) wl += omega[d] * l[d];
    const double br = std::pow(bracket(li.norm_inf(i), 0), tau);
    for (int j : js) {
      const cd mj = spec.mu_of(j);
      for (int k : ks) {
        if (k == j) continue;
        const double cube = std::abs(std::pow(double(j), 3) - std::pow(double(k), 3));
        const double m = std::abs(cd(0.0, wl) + mj - spec.mu_of(k)) * br / (2.0 * gamma * cube);
        if (m < rep.margin) {
          rep.margin = m;
          rep.worst_l = l;
          rep.worst_j = j;
          rep.worst_k = k;
        }
      }
    }
  }
  rep.pass = rep.margin >= 1.0;
  return rep;
}

GmresResult gmres(const std::function<VecC(const VecC&)>& A, const std::function<VecC(const VecC&)>& M,
                  const VecC& b, double tol, int restart, int max_iter) {
  GmresResult out;
  const Eigen::Index n = b.size();
  out.x = VecC::Zero(n);
  const double bn = b.norm();
  if (bn == 0.0) {
    out.converged = true;
    return out;
  }
  VecC r = b;
  int it = 0;
  while (it < max_iter) {
    const double beta = r.norm();
    out.residual = beta / bn;
    if (out.residual <= tol) {
      out.converged = true;
      break;
    }
    const int m = restart;
    MatC V(n, m + 1), H = MatC::Zero(m + 1, m);
    VecC g = VecC::Zero(m + 1);
    std::vector<Eigen::JacobiRotation<cd>> rot(m);
    V.col(0) = r / beta;
    g[0] = beta;
    int k = 0;
    for (; k < m && it < max_iter; ++k, ++it) {
      VecC w = A(M(V.col(k)));
      for (int i = 0; i <= k; ++i) {
        H(i, k) = V.col(i).dot(w);
        w -= H(i, k) * V.col(i);
      }
      H(k + 1, k) = w.norm();
      if (std::abs(H(k + 1, k)) > 0) V.col(k + 1) = w / H(k + 1, k);
      for (int i = 0; i < k; ++i) H.col(k).applyOnTheLeft(i, i + 1, rot[i].adjoint());
      rot[k].makeGivens(H(k, k), H(k + 1, k));
      H.col(k).applyOnTheLeft(k, k + 1, rot[k].adjoint());
      g.applyOnTheLeft(k, k + 1, rot[k].adjoint());
      if (std::abs(g[k + 1]) / bn <= tol) {
        ++k;
        ++it;
        break;
      }
    }
    VecC y = H.topLeftCorner(k, k).triangularView<Eigen::Upper>().solve(g.head(k));
    out.x += M(V.leftCols(k) * y);
    r = b - A(out.x);
  }
  out.iterations = it;
  out.residual = (b - A(out.x)).norm() / bn;
  out.converged = out.residual <= tol;
  return out;
}

LOmegaInverse::LOmegaInverse(const ApproxInverse& ai, ReductionResult red, KamResult kam, int L, int J)
    : ai_(ai), red_(std::move(red)), kam_(std::move(kam)), L_(L), J_(J), basis_(red_.transcript.basis) {}

VecC LOmegaInverse::pack(const FourierField& f) const {
  const int nb = basis_.size();
  VecC v(static_cast<Eigen::Index>(f.nl()) * nb);
  for (int i = 0; i < f.nl(); ++i)
    for (int k = 0; k < nb; ++k) v[static_cast<Eigen::Index>(i) * nb + k] = f.at(i, basis_.modes[k]);
  return v;
}

FourierField LOmegaInverse::unpack(const VecC& v) const {
  FourierField f(basis_.size() ? red_.transcript.pg.nu : 1, L_, J_, true);
  const int nb = basis_.size();
  for (int i = 0; i < f.nl(); ++i)
    for (int k = 0; k < nb; ++k) f.at(i, basis_.modes[k]) = v[static_cast<Eigen::Index>(i) * nb + k];
  return f;
}

FourierField LOmegaInverse::chain(const FourierField& g) const {
  const ReductionTranscript& tr = red_.transcript;
  const PhiGrid& pg = tr.pg;
  const int nb = basis_.size(), Lr = (pg.M - 1) / 2;
  auto v = field_to_basis_nodes(g, pg, basis_);
  tr.apply_M1_inverse(v);
  std::vector<cd> t(v.size());
  kam_.Phi_inv.apply(v.data(), t.data());
  // Diagonal division by i omega.l + mu_j.
  LIndex li(pg.nu, Lr);
  std::vector<cd> c(static_cast<size_t>(li.n) * nb);
  pg.to_coeffs(t.data(), Lr, nb, c.data());
  for (int i = 0; i < li.n; ++i) {
    auto l = li.comps(i);
    double wl = 0;
    for (int d = 0; d < pg.nu; ++d) wl += tr.omega[d] * l[d];
    for (int k = 0; k < nb; ++k) {
      cd div = cd(0.0, wl) + kam_.spec.mu[k];
      if (std::abs(div) < defaults::resonance_floor) throw Error("invert_L_omega: divisor below floor");
      c[static_cast<size_t>(i) * nb + k] /= div;
    }
  }
  pg.to_nodes(c.data(), Lr, nb, t.data());
  kam_.Phi.apply(t.data(), v.data());
  tr.apply_M2(v);
  return basis_nodes_to_field(v, pg, basis_, L_, J_);
}

FourierField LOmegaInverse::operator()(const FourierField& g) const {
  auto A = [&](const VecC& x) { return pack(ai_.apply_L_omega(unpack(x))); };
  auto M = [&](const VecC& x) { return pack(chain(unpack(x))); };
  GmresResult r = gmres(A, M, pack(g), tol, restart, max_iter);
  last_iterations = r.iterations;
  last_residual = r.residual;
  if (!r.converged && r.residual > 1e-8) throw Error("invert_L_omega: refinement did not converge");
  return unpack(r.x);
}

}  // namespace kamkdv
