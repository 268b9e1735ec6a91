// Acceptance checks: one line per criterion, thresholds fixed below.
// Usage: kamkdv_acceptance [--only 1,3,...] [--expect-fail 7,...]

#include <CLI11.hpp>
#include <Eigen/Eigenvalues>
#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <string>

#include "kamkdv/nashmoser.hpp"

using namespace kamkdv;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  const char* name;
  double limit_s;
  std::function<Outcome()> run;
};

std::string fmt(const char* f, auto... a) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, a...);
  return buf;
}

double slope(const std::vector<double>& x, const std::vector<double>& y) {
  const size_t n = x.size();
  double mx = 0, my = 0;
  for (size_t k = 0; k < n; ++k) {
    mx += std::log(x[k]) / n;
    my += std::log(y[k]) / n;
  }
  double sxy = 0, sxx = 0;
  for (size_t k = 0; k < n; ++k) {
    sxy += (std::log(x[k]) - mx) * (std::log(y[k]) - my);
    sxx += (std::log(x[k]) - mx) * (std::log(x[k]) - mx);
  }
  return sxy / sxx;
}

std::vector<cd> random_coords(int C, double r, std::mt19937_64& rng) {
  std::normal_distribution<double> N;
  std::vector<cd> u(2 * C + 1, 0.0);
  double m = 0;
  for (int j = 1; j <= C; ++j) {
    u[j + C] = cd(N(rng), N(rng)) / double(j);
    m = std::max(m, std::abs(u[j + C]));
  }
  for (int j = 1; j <= C; ++j) {
    u[j + C] *= r / m;
    u[-j + C] = std::conj(u[j + C]);
  }
  return u;
}

// Dense matrix of a linear map on node vectors, applied to unit vectors.
MatC dense_of(int n, const std::function<void(std::vector<cd>&)>& f) {
  MatC D(n, n);
  std::vector<cd> v(n);
  for (int c = 0; c < n; ++c) {
    std::fill(v.begin(), v.end(), cd(0.0));
    v[c] = 1.0;
    f(v);
    for (int r = 0; r < n; ++r) D(r, c) = v[r];
  }
  return D;
}

// ---------------------------------------------------------------- criteria

Outcome identities() {
  const long long t = verify_triple_identity(50), q = verify_quadruple_identity(50);
  return {t == 0 && q == 0, fmt("triple failures %lld, quadruple failures %lld (|j| <= 50)", t, q)};
}

Outcome sites() {
  bool ok = true;
  std::string d;
  for (int nu = 1; nu <= 4; ++nu) {
    SiteReport r = generate_sites_report(nu, 1, 60);
    const bool s = check_S1(r.sites) && check_S2(r.sites) && r.certifier_disagreements == 0;
    ok = ok && s;
    std::string plus;
    for (int j : r.sites.s_plus) plus += (plus.empty() ? "" : ",") + std::to_string(j);
    d += fmt("nu=%d {%s} disagreements %lld; ", nu, plus.c_str(), r.certifier_disagreements);
  }
  return {ok, d};
}

Outcome wbnf() {
  SiteSet S({1, 3});
  NonlinearitySpec nl = NonlinearitySpec::ux5();
  WeakBNF B(S, nl);
  NonlinearGrid ng(nl, B.CE);
  std::mt19937_64 rng(4);
  auto base = random_coords(B.CE, 1.0, rng);
  std::vector<double> rs{1e-2, 3e-3, 1e-3}, d;
  for (double r : rs) {
    std::vector<cd> u(B.ncoords()), uw(2 * B.W + 1, 0.0);
    for (int k = 0; k < B.ncoords(); ++k) u[k] = r * base[k];
    for (int j = -B.CE; j <= B.CE; ++j) uw[j + B.W] = u[j + B.CE];
    const cd nf = B.normal_form(uw.data());
    B.forward(u.data());
    d.push_back(std::abs(ng.energy(u.data()) - nf));
  }
  const double sl = slope(rs, d);
  // Symplecticity of the tangent map through forward-mode duals.
  const int C = B.CE;
  auto u = random_coords(C, 1e-2, rng);
  auto h1 = random_coords(C, 1.0, rng), h2 = random_coords(C, 1.0, rng);
  auto push = [&](const std::vector<cd>& h) {
    std::vector<Dual> x(B.ncoords());
    for (int k = 0; k < B.ncoords(); ++k) x[k] = Dual(u[k], h[k]);
    B.forward(x.data());
    std::vector<cd> o(B.ncoords());
    for (int k = 0; k < B.ncoords(); ++k) o[k] = x[k].b;
    return o;
  };
  auto W = [&](const std::vector<cd>& a, const std::vector<cd>& b) {
    cd s = 0;
    for (int j = -C; j <= C; ++j)
      if (j != 0) s += a[j + C] * b[-j + C] / cd(0.0, j);
    return s;
  };
  const cd w0 = W(h1, h2);
  const double sym = std::abs(W(push(h1), push(h2)) - w0) / std::abs(w0);
  return {sl >= 5.8 && sym <= 1e-8,
          fmt("defect slope %.3f (>= 5.8), symplecticity defect %.2e (<= 1e-8)", sl, sym)};
}

Outcome linear_bnf() {
  SiteSet S({1, 3});
  Basis b = normal_basis(24, S.s);
  const double eps = 1e-2;
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> U(1.0, 2.0);
  double r4 = 0, r5 = 0, diag = 0, scale = 0;
  for (int t = 0; t < 20; ++t) {
    std::vector<double> xi{U(rng), U(rng)};
    auto omega = freq_amp_map(xi, eps, S);
    DecayMatrix A1 = lbnf_A1(S, xi, b, eps, omega, 1.0);
    DecayMatrix B1 = lbnf_B1(S, xi, b);
    for (auto& blk : B1.blocks) blk *= eps;
    r4 = std::max(r4, decay_norm(homological_residual(A1, B1, omega, 1.0), 2.0));
    DecayMatrix T = lbnf_pieces(S, xi, b).T(eps);
    DecayMatrix R = homological_residual(lbnf_A2(T, S, omega, 1.0), T, omega, 1.0);
    for (int i = 0; i < R.li.n; ++i)
      for (int r = 0; r < b.size(); ++r)
        for (int c = 0; c < b.size(); ++c)
          if (lbnf_resonant(S, R.li.comps(i), b.modes[r], b.modes[c])) R.blocks[i](r, c) = 0.0;
    r5 = std::max(r5, decay_norm(R, 2.0));
    const MatC& T0 = T.blocks[T.li.zero()];
    for (int r = 0; r < b.size(); ++r) diag = std::max(diag, std::abs(T0(r, r)));
    scale = std::max(scale, decay_norm(T, 2.0));
  }
  const double rel = diag / scale;
  return {r4 <= 1e-10 && r5 <= 1e-10 && rel <= 1e-14,
          fmt("step-4 residual %.2e, step-5 residual %.2e (<= 1e-10), diagonal T_jj(0) %.2e relative (20 draws)", r4,
              r5, rel)};
}

Outcome reduction() {
  SiteSet S = generate_sites(1, 1);
  const double eps = 3e-2;
  const int L = 3, J = 12, M = 32;
  Params p = Params::make(eps, 0.1, {1.5}, S);
  Truncation tr;
  tr.nu = 1;
  tr.L = L;
  tr.J = J;
  tr.M = M;
  KdVModel m(S, p, NonlinearitySpec::ux5(), tr);
  ApproxInverse ai(m, TorusEmbedding::trivial(1, L, J), {0.0});
  QPLinearOperator Lw = assemble_L_omega(m, ai);
  ReductionResult R = reduce_linear_operator(Lw, p.omega, L, S, p.xi, eps);
  const auto& T = R.transcript;
  const PhiGrid& pg = T.pg;
  const int nb = T.basis.size(), n = pg.P * nb;
  MatC Dw = dense_of(n, [&](std::vector<cd>& v) {
    std::vector<cd> o(v.size());
    pg.omega_derivative(v.data(), nb, p.omega, o.data());
    v = o;
  });
  auto dense_op = [&](const NodeOp& A) {
    return dense_of(n, [&](std::vector<cd>& v) {
      std::vector<cd> o(v.size());
      A.apply(v.data(), o.data());
      v = o;
    });
  };
  MatC L0 = Dw + dense_op(Lw.full());
  MatC L6 = Dw + dense_op(R.L6.full());
  MatC M2 = dense_of(n, [&](std::vector<cd>& v) { T.apply_M2(v); });
  MatC M1i = dense_of(n, [&](std::vector<cd>& v) { T.apply_M1_inverse(v); });
  MatC diff = M1i * L0 * M2 - L6;
  // Node representation to (l, j) coefficients.
  const int Lr = (M - 1) / 2;
  LIndex li(1, Lr);
  const int nc = li.n * nb;
  MatC Sn(n, nc), Tc(nc, n);
  std::vector<cd> c(nc), v(n);
  for (int k = 0; k < nc; ++k) {
    std::fill(c.begin(), c.end(), cd(0.0));
    c[k] = 1.0;
    pg.to_nodes(c.data(), Lr, nb, v.data());
    for (int r = 0; r < n; ++r) Sn(r, k) = v[r];
  }
  for (int k = 0; k < n; ++k) {
    std::fill(v.begin(), v.end(), cd(0.0));
    v[k] = 1.0;
    pg.to_coeffs(v.data(), Lr, nb, c.data());
    for (int r = 0; r < nc; ++r) Tc(r, k) = c[r];
  }
  const double dn = dense_decay_norm(Tc * diff * Sn, 1, Lr, T.basis, L, J, 1.5);
  double dev2 = 0, dev6 = 0;
  for (const auto& st : T.stages) {
    if (st.name == "time") dev2 = st.coef_dev;
    if (st.name == "descent") dev6 = st.coef_dev;
  }
  return {dn <= 1e-8 && dev2 <= 1e-9 && dev6 <= 1e-9,
          fmt("dense conjugation mismatch %.2e (<= 1e-8), stage-2 deviation %.2e, stage-6 deviation %.2e (<= 1e-9)",
              dn, dev2, dev6)};
}

Outcome floquet() {
  std::vector<double> omega{(1 + std::sqrt(5.0)) / 2};
  PhiGrid pg(1, 32);
  Basis b({2, 5});
  const int LR = 6;
  std::mt19937_64 rng(11);
  std::normal_distribution<double> N;
  DecayMatrix R(1, LR, b, b);
  for (int i = 0; i < R.li.n; ++i) {
    const int ln = R.li.neg(i);
    if (ln < i) continue;
    const double w = 1e-4 * std::exp(-0.7 * R.li.norm_inf(i));
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < 2; ++c) {
        cd v = w * cd(N(rng), N(rng));
        R.blocks[i](r, c) += v;
        R.blocks[ln](c, r) -= std::conj(v);
      }
  }
  const double m3 = 1.0, m1 = 0.3;
  KamOptions ko;
  ko.gamma = 1e-3;
  ko.tau = 3.0;
  KamResult K = reduce_to_diagonal(m3, m1, NodeOp::from_decay(R, pg), omega, ko);
  DecayMatrix G = R;
  for (int r = 0; r < 2; ++r) {
    const int j = b.modes[r];
    G.blocks[G.li.zero()](r, r) += cd(0.0, -m3 * j * j * j + m1 * j);
  }
  Eigen::ComplexEigenSolver<MatC> es(toeplitz_dense(G, 24, &omega));
  const auto& ev = es.eigenvalues();
  double err = 0;
  for (int r = 0; r < 2; ++r) {
    double best = INFINITY;
    for (Eigen::Index k = 0; k < ev.size(); ++k) best = std::min(best, std::abs(ev[k] - K.spec.mu[r]));
    err = std::max(err, best);
  }
  std::string ds;
  for (double d : K.offdiag) ds += fmt("%.1e ", d);
  return {err <= 1e-8 && K.offdiag.size() >= 3 && K.contraction_exponent >= 1.8,
          fmt("eigenvalue mismatch %.2e (<= 1e-8), off-diagonal %s, exponent %.3f (>= 1.8)", err, ds.c_str(),
              K.contraction_exponent)};
}

Outcome end_to_end() {
  SiteSet S({1, 3});
  const int L = 7, J = 24;
  const std::vector<double> eps{1e-3, 5e-4};
  std::vector<double> torus;
  bool ok = true;
  std::string d;
  for (double e : eps) {
    Params p = Params::make(e, 0.1, {1.0, 1.0}, S);
    Truncation tr;
    tr.nu = 2;
    tr.L = L;
    tr.J = J;
    KdVModel m(S, p, NonlinearitySpec::ux5(), tr);
    SolveResult r = newton_fallback(m, TorusEmbedding::trivial(2, L, J), {});
    VerifyReport v = verify_solution(m, r);
    torus.push_back(v.torus_norm);
    const int its = static_cast<int>(r.history.size()) - 1;
    const bool s = r.converged && v.F_s0 <= 1e-10 && its <= 12 && v.pde_residual <= 1e-8 && v.max_real_defect <= 1e-9;
    ok = ok && s;
    d += fmt("eps=%.0e: |F| %.2e in %d its, PDE residual %.2e, Re defect %.2e; ", e, v.F_s0, its, v.pde_residual,
             v.max_real_defect);
  }
  const double a = 0.1, predicted = std::pow(eps[1] / eps[0], 2 - 2 * a), ratio = torus[1] / torus[0];
  const bool shape = std::abs(ratio / predicted - 1) <= 0.3;
  d += fmt("torus ratio %.3f vs predicted %.3f (within 30%%: %s)", ratio, predicted, shape ? "yes" : "no");
  return {ok && shape, d};
}

Outcome approx_inverse() {
  SiteSet S({1, 3});
  const int L = 3, J = 12;
  Params p = Params::make(1e-3, 0.1, {1.0, 1.0}, S);
  Truncation tr;
  tr.nu = 2;
  tr.L = L;
  tr.J = J;
  KdVModel m(S, p, NonlinearitySpec::ux5(), tr);
  SolveResult sol = newton_fallback(m, TorusEmbedding::trivial(2, L, J), {});
  std::mt19937_64 rng(7);
  TorusEmbedding h = TorusEmbedding::trivial(2, L, J);
  for (int k = 0; k < 2; ++k) {
    h.Theta[k] = random_real_field(2, L, 0, rng, 1.0, 0.5, false);
    h.y[k] = random_real_field(2, L, 0, rng, 1.0, 0.5, false);
  }
  h.z = random_real_field(2, L, J, rng, 1.0, 0.5, true, S.s);
  Residual g;
  for (int k = 0; k < 2; ++k) {
    g.F1.push_back(random_real_field(2, L, 0, rng, 1.0, 0.5, false));
    g.F2.push_back(random_real_field(2, L, 0, rng, 1.0, 0.5, false));
  }
  g.F3 = random_real_field(2, L, J, rng, 1.0, 0.5, true, S.s);
  const double s0 = m.s0();
  std::vector<double> F, D;
  for (double t : {1e-11, 1e-10, 1e-9, 1e-8}) {
    TorusEmbedding i = sol.i;
    i.axpy(t, h);
    F.push_back(m.eval_F(i, sol.zeta).norm(s0));
    Linearization lin(m, i, sol.zeta, kam_options(p));
    auto [di, dz] = lin.T0(g);
    D.push_back((m.dF(i, di, dz) - g).norm(s0) / g.norm(s0));
  }
  const double sl = slope(F, D);
  return {std::abs(sl - 1) <= 0.15,
          fmt("defect %.2e..%.2e over |F| %.2e..%.2e, slope %.3f (1 +- 0.15)", D.front(), D.back(), F.front(),
              F.back(), sl)};
}

Outcome measure() {
  SiteSet S({1, 3});
  const double eps = 1e-3;
  Params p = Params::make(eps, 0.1, {1.0, 1.0}, S);
  CantorOptions o;
  o.samples = 20000;
  std::vector<double> g, f;
  for (double c : {0.25, 0.5, 1.0, 2.0}) {
    CantorResult r = cantor_measure(S, eps, c * p.gamma, p.tau, o);
    g.push_back(c * p.gamma);
    f.push_back(r.excluded_fraction);
  }
  for (double x : f)
    if (x <= 0) return {false, "an excluded fraction is zero"};
  const double sl = slope(g, f);
  return {std::abs(sl - 1) <= 0.2,
          fmt("excluded %.4f %.4f %.4f %.4f at 2e4 samples, slope %.3f (1 +- 0.2)", f[0], f[1], f[2], f[3], sl)};
}

std::set<int> parse_ids(const std::string& s) {
  std::set<int> out;
  size_t pos = 0;
  while (pos < s.size()) {
    size_t e = s.find(',', pos);
    if (e == std::string::npos) e = s.size();
    if (e > pos) out.insert(std::stoi(s.substr(pos, e - pos)));
    pos = e + 1;
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  std::string only, expect;
  app.add_option("--only", only, "comma-separated criterion ids");
  app.add_option("--expect-fail", expect, "criterion ids whose failure does not fail the run");
  CLI11_PARSE(app, argc, argv);
  const std::set<int> sel = parse_ids(only), xfail = parse_ids(expect);

  const std::vector<Criterion> all = {
      {1, "algebraic identities", 10, identities},
      {2, "site certification", 30, sites},
      {3, "weak BNF cancellation", 120, wbnf},
      {4, "linear BNF exactness", 60, linear_bnf},
      {5, "reduction correctness", 120, reduction},
      {6, "reducibility vs dense Floquet", 120, floquet},
      {7, "end-to-end solve", 600, end_to_end},
      {8, "approximate-inverse law", 120, approx_inverse},
      {9, "measure trend", 300, measure},
  };
  int unexpected = 0;
  for (const auto& c : all) {
    if (!sel.empty() && !sel.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool pass = o.pass && secs <= c.limit_s;
    std::printf("%s %d %s: %s [%.1f s / %.0f s]%s\n", pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), secs,
                c.limit_s, !pass && xfail.count(c.id) ? " (expected failure)" : "");
    std::fflush(stdout);
    if (!pass && !xfail.count(c.id)) ++unexpected;
  }
  return unexpected == 0 ? 0 : 1;
}
