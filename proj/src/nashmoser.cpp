#include "kamkdv/nashmoser.hpp"

#include <algorithm>
#include <boost/math/distributions/binomial.hpp>
#include <cmath>
#include <map>
#include <random>

namespace kamkdv {

NMConstants NMConstants::make(double mu, const Params& p, double C1, double rho) {
  NMConstants c;
  c.mu = mu;
  c.a = p.a;
  c.b = p.b;
  c.tau = p.tau;
  c.C1 = C1;
  c.rho_exp = rho > 0 ? rho : 0.5 * (1.0 - 3.0 * p.a) / (C1 * (1.0 + p.a));
  c.mu1 = 3.0 * mu + 9.0;
  c.alpha = 3.0 * c.mu1 + 1.0;
  c.alpha1 = (c.alpha - 3.0 * mu) / 2.0;
  c.kappa = 3.0 * (c.mu1 + 1.0 / c.rho_exp) + 1.0;
  c.beta1 = 6.0 * c.mu1 + 3.0 / c.rho_exp + 3.0;
  c.N0 = (p.eps > 0 && p.gamma > 0) ? std::pow(p.eps / p.gamma, c.rho_exp) : 2.0;
  return c;
}

int NMConstants::N(int n) const {
  const double v = std::floor(std::pow(N0, std::pow(chi, n)));
  return v < 2.0 ? 2 : (v > 1e9 ? 1000000000 : static_cast<int>(v));
}

FourierField smooth(const FourierField& u, int N) {
  FourierField r = u;
  const LIndex& li = u.lindex();
  for (int i = 0; i < u.nl(); ++i)
    for (int j = -u.J(); j <= u.J(); ++j)
      if (std::max(li.norm_inf(i), std::abs(j)) > N) r.at(i, j) = 0.0;
  return r;
}

TorusEmbedding smooth(const TorusEmbedding& i, int N) {
  TorusEmbedding r = i;
  for (auto& f : r.Theta) f = smooth(f, N);
  for (auto& f : r.y) f = smooth(f, N);
  r.z = smooth(r.z, N);
  return r;
}

Residual smooth(const Residual& F, int N) {
  Residual r = F;
  for (auto& f : r.F1) f = smooth(f, N);
  for (auto& f : r.F2) f = smooth(f, N);
  r.F3 = smooth(r.F3, N);
  return r;
}

TorusEmbedding operator-(const TorusEmbedding& a, const TorusEmbedding& b) {
  TorusEmbedding r = a;
  r.axpy(-1.0, b);
  return r;
}

namespace {

Residual combine(const Residual& a, const Residual& b, double sb) {
  Residual r = a;
  for (size_t k = 0; k < r.F1.size(); ++k) {
    r.F1[k] += cd(sb) * b.F1[k];
    r.F2[k] += cd(sb) * b.F2[k];
  }
  r.F3 += cd(sb) * b.F3;
  return r;
}

}  // namespace

Residual operator-(const Residual& a, const Residual& b) { return combine(a, b, -1.0); }
Residual operator+(const Residual& a, const Residual& b) { return combine(a, b, 1.0); }

double log10_norm(const Residual& F, double s) {
  std::vector<double> terms;
  auto add = [&](const FourierField& f) {
    const LIndex& li = f.lindex();
    for (int i = 0; i < f.nl(); ++i)
      for (int j = -f.J(); j <= f.J(); ++j) {
        const double a = std::abs(f.at(i, j));
        if (a == 0.0) continue;
        terms.push_back(2.0 * (std::log10(a) + s * std::log10(bracket(li.norm_inf(i), j))));
      }
  };
  for (const auto& f : F.F1) add(f);
  for (const auto& f : F.F2) add(f);
  add(F.F3);
  if (terms.empty()) return -INFINITY;
  const double m = *std::max_element(terms.begin(), terms.end());
  double acc = 0;
  for (double t : terms) acc += std::pow(10.0, t - m);
  return 0.5 * (m + std::log10(acc));
}

KamOptions kam_options(const Params& p) {
  KamOptions k;
  k.gamma = p.gamma;
  k.tau = p.tau;
  return k;
}

Linearization::Linearization(const KdVModel& model, const TorusEmbedding& i, const std::vector<double>& zeta,
                             const KamOptions& kam, const ReductionOptions& ropt) {
  const Params& p = model.params();
  ai_ = std::make_unique<ApproxInverse>(model, i, zeta);
  QPLinearOperator Lw = assemble_L_omega(model, *ai_);
  ReductionResult red = reduce_linear_operator(Lw, p.omega, model.L(), model.sites(), p.xi, p.eps, ropt);
  KamResult kr = reduce_to_diagonal(red.L6, red.transcript, kam);
  inv_ = std::make_unique<LOmegaInverse>(*ai_, std::move(red), std::move(kr), model.L(), model.J());
}

std::pair<TorusEmbedding, std::vector<double>> Linearization::T0(const Residual& g) const {
  return ai_->apply_T0(g, [this](const FourierField& f) { return (*inv_)(f); });
}

namespace {

Spectrum unperturbed_spectrum(const KdVModel& model) {
  Spectrum s;
  s.modes = model.normal().modes;
  for (int j : s.modes) {
    s.mu.push_back(cd(0.0, -std::pow(double(j), 3)));
    s.r.push_back(0.0);
  }
  return s;
}

double abs_zeta(const std::vector<double>& z) {
  double a = 0;
  for (double v : z) a += v * v;
  return std::sqrt(a);
}

}  // namespace

SolveResult newton_fallback(const KdVModel& model, const TorusEmbedding& i0, const std::vector<double>& zeta0,
                            const NewtonOptions& opt, const KamOptions* kam_in) {
  const Params& p = model.params();
  const KamOptions kam = kam_in ? *kam_in : kam_options(p);
  const double s0 = model.s0();
  SolveResult r;
  r.i = i0;
  r.zeta = zeta0.empty() ? std::vector<double>(model.nu(), 0.0) : zeta0;
  Residual F = model.eval_F(r.i, r.zeta);
  double nF = F.norm(s0);
  for (int it = 0;; ++it) {
    IterationLog log{it, nF, log10_norm(F, s0 + 2.0), 0.0, abs_zeta(r.zeta), 0};
    if (nF <= opt.tol) {
      r.history.push_back(log);
      r.converged = true;
      break;
    }
    if (it >= opt.max_iter) {
      r.history.push_back(log);
      break;
    }
    Linearization lin(model, r.i, r.zeta, kam);
    auto [di, dz] = lin.T0(F);
    log.gmres_its = lin.inverse().last_iterations;
    double t = 1.0;
    bool accepted = false;
    for (int h = 0; h <= opt.max_halvings; ++h, t *= 0.5) {
      TorusEmbedding it_i = r.i;
      it_i.axpy(-t, di);
      std::vector<double> it_z = r.zeta;
      for (int k = 0; k < model.nu(); ++k) it_z[k] -= t * dz[k];
      Residual Ft;
      try {
        Ft = model.eval_F(it_i, it_z);
      } catch (const Error&) {
        continue;  // trial left the chart
      }
      const double nt = Ft.norm(s0);
      if (nt < (1.0 - 1e-4 * t) * nF) {
        r.i = std::move(it_i);
        r.zeta = std::move(it_z);
        F = std::move(Ft);
        nF = nt;
        accepted = true;
        break;
      }
    }
    log.step = accepted ? t : 0.0;
    r.history.push_back(log);
    if (!accepted) throw Error("newton: line search failed at iteration " + std::to_string(it));
    const int w = opt.stagnation_window;
    if (static_cast<int>(r.history.size()) >= w && nF > (1.0 - opt.stagnation) * r.history[r.history.size() - w].F_s0)
      throw Error("newton: stagnation (residual reduced by less than 1% over " + std::to_string(w) + " iterations)");
  }
  if (p.eps == 0.0) {
    r.spectrum = unperturbed_spectrum(model);
    r.melnikov.pass = true;
    return r;
  }
  Linearization fin(model, r.i, r.zeta, kam);
  r.spectrum = fin.spectrum();
  r.melnikov = melnikov_check(r.spectrum, p.omega, kam.gamma, kam.tau, model.L(), model.J());
  return r;
}

StepDecomposition nm_step(const KdVModel& model, SolverState& st, const NMConstants& c, const KamOptions& kam) {
  const double s0 = model.s0();
  StepDecomposition d;
  d.N = c.N(st.n);
  if (st.zeta.empty()) st.zeta.assign(model.nu(), 0.0);
  Residual F = model.eval_F(st.i, st.zeta);
  d.F_before = F.norm(s0);
  Residual PF = smooth(F, d.N);
  Linearization lin(model, st.i, st.zeta, kam);
  auto [di, dz] = lin.T0(PF);
  TorusEmbedding H = smooth(di, d.N);
  for (auto& f : H.Theta) f *= -1.0;
  for (auto& f : H.y) f *= -1.0;
  H.z *= -1.0;
  std::vector<double> dzeta(dz.size());
  for (size_t k = 0; k < dz.size(); ++k) dzeta[k] = -dz[k];
  Residual dFH = model.dF(st.i, H, dzeta);
  TorusEmbedding i1 = st.i;
  i1.axpy(1.0, H);
  std::vector<double> z1 = st.zeta;
  for (size_t k = 0; k < z1.size(); ++k) z1[k] += dzeta[k];
  Residual F1 = model.eval_F(i1, z1);
  Residual perp = F - PF, R = PF + dFH, Q = F1 - F - dFH;
  d.F_after = F1.norm(s0);
  d.perp = perp.norm(s0);
  d.R = R.norm(s0);
  d.Q = Q.norm(s0);
  d.identity_defect = (F1 - (perp + R + Q)).norm(s0);
  st.history.push_back({st.n, d.F_before, log10_norm(F, s0 + c.beta1), 1.0, abs_zeta(st.zeta),
                        lin.inverse().last_iterations});
  st.i = std::move(i1);
  st.zeta = std::move(z1);
  ++st.n;
  return d;
}

CantorResult cantor_measure(const SiteSet& S, double eps, double gamma, double tau, const CantorOptions& opt,
                            const SpectrumModel& model) {
  const int nu = S.nu();
  std::vector<int> js;
  for (int j = -opt.Jmax; j <= opt.Jmax; ++j)
    if (j != 0 && !S.contains(j)) js.push_back(j);
  std::vector<int> ks = js;
  ks.push_back(0);
  struct Pair {
    double d, c;
    int j, k;
  };
  auto build = [&](const Spectrum* spec) {
    std::vector<Pair> pairs;
    for (int j : js)
      for (int k : ks) {
        if (j == k) continue;
        const double mj = spec ? spec->mu_of(j).imag() : -std::pow(double(j), 3);
        const double mk = spec ? spec->mu_of(k).imag() : -std::pow(double(k), 3);
        pairs.push_back({mj - mk, 2.0 * gamma * std::abs(std::pow(double(j), 3) - std::pow(double(k), 3)), j, k});
      }
    std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) { return a.d < b.d; });
    return pairs;
  };
  const std::vector<Pair> proxy = model ? std::vector<Pair>{} : build(nullptr);
  double cmax = 0;
  for (int j : js)
    for (int k : ks) cmax = std::max(cmax, 2.0 * gamma * std::abs(std::pow(double(j), 3) - std::pow(double(k), 3)));

  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> U(1.0, 2.0);
  std::vector<std::vector<double>> xis(opt.samples, std::vector<double>(nu));
  for (auto& x : xis)
    for (auto& v : x) v = U(rng);
  LIndex li(nu, opt.Lmax);
  std::vector<int> offender(opt.samples, -1);
  const int nk = static_cast<int>(ks.size());
#pragma omp parallel for schedule(dynamic, 64)
  for (int sidx = 0; sidx < opt.samples; ++sidx) {
    auto omega = freq_amp_map(xis[sidx], eps, S);
    std::vector<Pair> own;
    if (model) {
      Spectrum sp = model(omega);
      own = build(&sp);
    }
    const std::vector<Pair>& pairs = model ? own : proxy;
    for (int i = 0; i < li.n && offender[sidx] < 0; ++i) {
      auto l = li.comps(i);
      double v = 0;
      for (int d = 0; d < nu; ++d) v += omega[d] * l[d];
      const double br = std::pow(bracket(li.norm_inf(i), 0), tau);
      const double lo = -v - cmax / br, hi = -v + cmax / br;
      auto it = std::lower_bound(pairs.begin(), pairs.end(), lo, [](const Pair& a, double x) { return a.d < x; });
      for (; it != pairs.end() && it->d <= hi; ++it)
        if (std::abs(v + it->d) < it->c / br) {
          const int kk = static_cast<int>(std::find(ks.begin(), ks.end(), it->k) - ks.begin());
          const int jj = static_cast<int>(std::find(js.begin(), js.end(), it->j) - js.begin());
          offender[sidx] = jj * nk + kk;
          break;
        }
    }
  }
  CantorResult res;
  res.samples = opt.samples;
  std::map<int, int> counts;
  for (int o : offender)
    if (o >= 0) {
      ++res.excluded;
      ++counts[o];
    }
  res.excluded_fraction = opt.samples ? double(res.excluded) / opt.samples : 0.0;
  res.fraction = 1.0 - res.excluded_fraction;
  if (opt.samples > 0) {
    using boost::math::binomial_distribution;
    const double a = (1.0 - opt.confidence) / 2.0;
    res.ci_low = binomial_distribution<>::find_lower_bound_on_p(opt.samples, res.excluded, a);
    res.ci_high = binomial_distribution<>::find_upper_bound_on_p(opt.samples, res.excluded, a);
  }
  std::vector<std::pair<int, int>> sorted(counts.begin(), counts.end());
  std::stable_sort(sorted.begin(), sorted.end(), [](auto& x, auto& y) { return x.second > y.second; });
  for (size_t q = 0; q < sorted.size() && q < 10; ++q) {
    const int o = sorted[q].first;
    res.offenders.emplace_back("(" + std::to_string(js[o / nk]) + "," + std::to_string(ks[o % nk]) + ")",
                               sorted[q].second);
  }
  return res;
}

FourierField original_field(const KdVModel& model, const TorusEmbedding& i, int M) {
  const int J = model.J(), nj = 2 * J + 1;
  FourierField u = aa_embed(i, model.params(), model.sites(), model.phi_grid().M);
  PhiGrid pg(model.nu(), M);
  auto un = field_to_nodes(u, pg);
  std::vector<cd> Un(un.size());
#pragma omp parallel for schedule(dynamic)
  for (int p = 0; p < pg.P; ++p)
    model.original_solution(&un[static_cast<size_t>(p) * nj], &Un[static_cast<size_t>(p) * nj]);
  return nodes_to_field(Un, pg, M / 2 - 1, J, true);
}

double pde_residual(const FourierField& U, const std::vector<double>& omega, const NonlinearitySpec& nl, int Nx) {
  const int J = U.J(), nj = 2 * J + 1;
  PhiGrid pg(U.nu(), 2 * U.L() + 2);
  NonlinearGrid ng(nl, J);
  XGrid xg(J, Nx > 0 ? Nx : 4 * J + 4);
  auto un = field_to_nodes(U, pg);
  std::vector<cd> ut(un.size());
  pg.omega_derivative(un.data(), nj, omega, ut.data());
  double sup = 0;
#pragma omp parallel for schedule(dynamic) reduction(max : sup)
  for (int p = 0; p < pg.P; ++p) {
    const cd* u = &un[static_cast<size_t>(p) * nj];
    std::vector<cd> x(nj), r(nj), vals(xg.Nx);
    ng.xnl(u, x.data());
    for (int j = -J; j <= J; ++j) {
      const double jd = j;
      r[j + J] = ut[static_cast<size_t>(p) * nj + j + J] - I1 * jd * jd * jd * u[j + J] - x[j + J];
    }
    xg.to_grid(r.data(), vals.data());
    for (const cd& v : vals) sup = std::max(sup, std::abs(v));
  }
  return sup;
}

VerifyReport verify_solution(const KdVModel& model, const SolveResult& sol) {
  const Params& p = model.params();
  VerifyReport rep;
  rep.F_s0 = model.eval_F(sol.i, sol.zeta).norm(model.s0());
  FourierField U = original_field(model, sol.i, 2 * model.phi_grid().M);
  rep.pde_residual = pde_residual(U, p.omega, model.grid().spec());
  rep.torus_norm = sol.i.norm(model.s0());
  rep.torus_shape = p.gamma > 0 ? std::pow(p.eps, 6.0 - 2.0 * p.b) / p.gamma : 0.0;
  rep.max_real_defect = sol.spectrum.max_real_defect();
  rep.imaginary = rep.max_real_defect <= defaults::tol_imag;
  double wn = 0;
  for (double w : p.omega) wn += w * w;
  const double T = 100.0 * 2.0 * M_PI / std::sqrt(wn);
  double growth = 1.0;
  for (const cd& m : sol.spectrum.mu) growth = std::max(growth, std::exp(-m.real() * T));
  rep.floquet_growth = growth;
  // Row two of the triangular system at (psi, eta, w) = (0, eta0, 0): d/dt eta = 0.
  ApproxInverse ai(model, sol.i, sol.zeta);
  TriangularSolution s;
  const int L = model.L(), J = model.J(), nu = model.nu();
  for (int k = 0; k < nu; ++k) {
    s.psi.emplace_back(nu, L, 0);
    FourierField e(nu, L, 0);
    e.at(e.lindex().zero(), 0) = 1.0 + k;
    s.eta.push_back(e);
  }
  s.w = FourierField(nu, L, J, true);
  s.zeta.assign(nu, 0.0);
  std::vector<FourierField> g1, g2;
  FourierField g3;
  ai.apply_D(s, g1, g2, g3);
  for (const auto& g : g2) rep.eta_drift = std::max(rep.eta_drift, g.max_abs());
  rep.pass = rep.pde_residual <= 1e-8 && rep.imaginary && rep.floquet_growth <= 1.0 + 1e-6;
  return rep;
}

}  // namespace kamkdv
