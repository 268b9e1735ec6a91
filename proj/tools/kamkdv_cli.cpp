#include <CLI11.hpp>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <omp.h>
#include <spdlog/spdlog.h>

#include "kamkdv/io.hpp"

using namespace kamkdv;
namespace fs = std::filesystem;

namespace {

struct Common {
  std::string config;
  std::string output;
  int threads = 0;
};

void add_common(CLI::App* sub, Common& c, bool need_config = true) {
  auto* o = sub->add_option("-c,--config", c.config, "JSON run configuration");
  if (need_config) o->required()->check(CLI::ExistingFile);
  sub->add_option("-o,--output", c.output, "run directory (overrides output.dir)");
  sub->add_option("--threads", c.threads, "thread cap (fallback: KAMKDV_THREADS)");
}

RunConfig prepare(const Common& c) {
  if (int t = thread_cap(c.threads); t > 0) omp_set_num_threads(t);
  RunConfig cfg = c.config.empty() ? RunConfig{} : load_config(c.config);
  if (!c.output.empty()) cfg.output = c.output;
  return cfg;
}

KdVModel make_model(const RunConfig& cfg) {
  return KdVModel(cfg.sites(), cfg.params(), cfg.nonlinearity, cfg.truncation());
}

void write_config(const RunConfig& cfg) { write_json_atomic(fs::path(cfg.output) / "config.json", config_to_json(cfg)); }

std::vector<CantorResult> run_measure(const RunConfig& cfg, std::vector<double>& gammas) {
  const Params p = cfg.params();
  CantorOptions o;
  o.samples = cfg.samples;
  o.seed = cfg.seed;
  o.Lmax = cfg.Lmax > 0 ? cfg.Lmax : cfg.L;
  o.Jmax = cfg.Jmax > 0 ? cfg.Jmax : cfg.J;
  std::vector<CantorResult> out;
  gammas.clear();
  for (double g : cfg.gamma_scales) {
    gammas.push_back(g * p.gamma);
    out.push_back(cantor_measure(cfg.sites(), p.eps, g * p.gamma, p.tau, o));
  }
  return out;
}

int cmd_sites(int nu, int start, int check) {
  SiteReport r = generate_sites_report(nu, start, check);
  json j = {{"nu", nu},
            {"start", start},
            {"s_plus", r.sites.s_plus},
            {"S1", check_S1(r.sites)},
            {"S2", check_S2(r.sites)},
            {"candidates_checked", r.candidates_checked},
            {"certifier_disagreements", r.certifier_disagreements}};
  std::cout << j.dump(2) << "\n";
  return (j["S1"].get<bool>() && j["S2"].get<bool>() && r.certifier_disagreements == 0) ? 0 : 1;
}

int cmd_reduce(const RunConfig& cfg) {
  KdVModel model = make_model(cfg);
  const Params& p = model.params();
  TorusEmbedding i = TorusEmbedding::trivial(model.nu(), cfg.L, cfg.J);
  ApproxInverse ai(model, i, std::vector<double>(model.nu(), 0.0));
  QPLinearOperator Lw = assemble_L_omega(model, ai);
  ReductionResult red = reduce_linear_operator(Lw, p.omega, cfg.L, model.sites(), p.xi, p.eps);
  KamResult kam = reduce_to_diagonal(red.L6, red.transcript, kam_options(p));
  MelnikovReport mr = melnikov_check(kam.spec, p.omega, p.gamma, p.tau, cfg.L, cfg.J);
  json stages = json::array();
  for (const auto& s : red.transcript.stages)
    stages.push_back({{"name", s.name}, {"tail_norm", s.tail_norm}, {"coef_dev", s.coef_dev}, {"terms", s.terms}});
  json kamj = {{"scales", kam.scales}, {"offdiag", kam.offdiag}, {"cutoffs", kam.cutoffs},
               {"contraction_exponent", kam.contraction_exponent}};
  const fs::path out(cfg.output);
  write_config(cfg);
  write_json_atomic(out / "transcript" / "reduction.json",
                    {{"m3", red.transcript.m3},
                     {"m1", red.transcript.m1},
                     {"support_E", model.bnf().CE},
                     {"stages", stages},
                     {"kam", kamj}});
  write_text_atomic(out / "spectrum.csv", spectrum_csv(kam.spec));
  write_json_atomic(out / "melnikov.json", melnikov_json(mr));
  write_json_atomic(out / "manifest.json",
                    manifest_json(cfg, {"config.json", "transcript/reduction.json", "spectrum.csv", "melnikov.json"}));
  spdlog::info("reduce: m3-1 = {:.3e}, m1 = {:.6e}, KAM scales {}, Melnikov margin {:.3f}", red.transcript.m3 - 1,
               red.transcript.m1, kam.scales, mr.margin);
  return mr.pass ? 0 : 3;
}

int cmd_solve(const RunConfig& cfg) {
  KdVModel model = make_model(cfg);
  const Params& p = model.params();
  const fs::path out(cfg.output);
  write_config(cfg);
  TorusEmbedding i0 = TorusEmbedding::trivial(model.nu(), cfg.L, cfg.J);
  SolveResult sol;
  if (cfg.mode == "nash-moser" && p.eps > 0) {
    const double mu = cfg.mu > 0 ? cfg.mu : p.tau + 2.0;
    NMConstants c = NMConstants::make(mu, p, cfg.C1);
    if (cfg.N0 > 0) c.N0 = cfg.N0;
    SolverState st{0, i0, std::vector<double>(model.nu(), 0.0), {}};
    json steps = json::array();
    for (int n = 0; n < cfg.stages; ++n) {
      StepDecomposition d = nm_step(model, st, c, kam_options(p));
      spdlog::info("nash-moser stage {}: N = {}, |F| {:.3e} -> {:.3e}", n, d.N, d.F_before, d.F_after);
      steps.push_back({{"stage", n}, {"N", d.N}, {"F_before", d.F_before}, {"F_after", d.F_after},
                       {"perp", d.perp}, {"R", d.R}, {"Q", d.Q}, {"identity_defect", d.identity_defect}});
    }
    write_json_atomic(out / "transcript" / "nash_moser.json", {{"steps", steps}});
    NewtonOptions no;
    no.tol = cfg.tol;
    no.max_iter = cfg.max_iter;
    sol = newton_fallback(model, st.i, st.zeta, no);
    sol.history.insert(sol.history.begin(), st.history.begin(), st.history.end());
  } else {
    NewtonOptions no;
    no.tol = cfg.tol;
    no.max_iter = cfg.max_iter;
    sol = newton_fallback(model, i0, {}, no);
  }
  for (const auto& h : sol.history) spdlog::info("iteration {}: |F|_s0 = {:.3e}", h.iter, h.F_s0);
  VerifyReport v = verify_solution(model, sol);
  FourierField U = original_field(model, sol.i, 2 * model.phi_grid().M);
  std::vector<double> gammas;
  auto cantor = run_measure(cfg, gammas);
  write_text_atomic(out / "norms.csv", norms_csv(sol.history));
  write_text_atomic(out / "spectrum.csv", spectrum_csv(sol.spectrum));
  write_json_atomic(out / "cantor.json", cantor_json(gammas, cantor));
  write_field_atomic(out / "solution.bin", U);
  json report = {{"converged", sol.converged},
                 {"iterations", static_cast<int>(sol.history.size()) - 1},
                 {"zeta", sol.zeta},
                 {"omega", p.omega},
                 {"melnikov", melnikov_json(sol.melnikov)},
                 {"verify", verify_json(v)}};
  write_json_atomic(out / "report.json", report);
  write_json_atomic(out / "manifest.json",
                    manifest_json(cfg, {"config.json", "norms.csv", "spectrum.csv", "cantor.json", "solution.bin",
                                        "report.json"}));
  spdlog::info("solve: converged {}, PDE residual {:.3e}, torus norm {:.3e}", sol.converged, v.pde_residual,
               v.torus_norm);
  return (sol.converged && v.pass) ? 0 : 2;
}

int cmd_measure(const RunConfig& cfg) {
  std::vector<double> gammas;
  auto r = run_measure(cfg, gammas);
  const fs::path out(cfg.output);
  write_config(cfg);
  write_json_atomic(out / "cantor.json", cantor_json(gammas, r));
  write_json_atomic(out / "manifest.json", manifest_json(cfg, {"config.json", "cantor.json"}));
  for (size_t k = 0; k < r.size(); ++k)
    spdlog::info("gamma {:.3e}: excluded {:.4f} [{:.4f}, {:.4f}]", gammas[k], r[k].excluded_fraction, r[k].ci_low,
                 r[k].ci_high);
  return 0;
}

int cmd_verify(const RunConfig& cfg, const std::string& run, double threshold) {
  const fs::path dir = run.empty() ? fs::path(cfg.output) : fs::path(run);
  RunConfig rc = cfg;
  if (fs::exists(dir / "config.json")) rc = load_config(dir / "config.json");
  FourierField U = read_binary((dir / "solution.bin").string());
  for (const cd& v : U.data())
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) throw Error("verify: non-finite coefficient");
  const Params p = rc.params();
  if (U.nu() != static_cast<int>(p.omega.size()) || U.J() != rc.J)
    throw Error("verify: solution.bin does not match the configuration");
  const double r = pde_residual(U, p.omega, rc.nonlinearity);
  json j = {{"pde_residual", r}, {"threshold", threshold}, {"pass", r <= threshold}};
  std::cout << j.dump(2) << "\n";
  return r <= threshold ? 0 : 2;
}

int cmd_export(const std::string& run, int nt, int nx, double periods) {
  const fs::path dir(run);
  RunConfig rc = load_config(dir / "config.json");
  FourierField U = read_binary((dir / "solution.bin").string());
  const Params p = rc.params();
  const int nu = U.nu(), J = U.J(), nj = 2 * J + 1;
  PhiGrid pg(nu, 2 * U.L() + 2);
  auto nodes = field_to_nodes(U, pg);
  double wn = 0;
  for (double w : p.omega) wn += w * w;
  const double T = periods * 2.0 * M_PI / std::sqrt(wn);
  std::vector<double> pts(static_cast<size_t>(nt) * nu);
  for (int k = 0; k < nt; ++k)
    for (int d = 0; d < nu; ++d) pts[static_cast<size_t>(k) * nu + d] = std::fmod(p.omega[d] * T * k / nt, 2 * M_PI);
  std::vector<cd> coef(static_cast<size_t>(nt) * nj);
  pg.interpolate(nodes.data(), nj, pts, coef.data());
  // Direct summation so any nx is accepted, including nx <= 2J.
  std::string s = "t,x,u\n";
  for (int k = 0; k < nt; ++k) {
    const cd* c = &coef[static_cast<size_t>(k) * nj];
    for (int q = 0; q < nx; ++q) {
      const double x = 2.0 * M_PI * q / nx;
      cd v = 0.0;
      for (int j = -J; j <= J; ++j) v += c[j + J] * std::exp(I1 * (j * x));
      s += format_double(T * k / nt) + "," + format_double(x) + "," + format_double(v.real()) + "\n";
    }
  }
  write_text_atomic(dir / "ugrid.csv", s);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fourier-spectral KAM toolkit for quasi-linear KdV perturbations"};
  app.require_subcommand(1);
  Common c;
  int nu = 2, start = 1, check = 0;
  auto* s = app.add_subcommand("sites", "generate and certify a tangential site set");
  s->add_option("--nu", nu)->check(CLI::Range(1, 8));
  s->add_option("--start", start)->check(CLI::PositiveNumber);
  s->add_option("--check", check, "brute-force cross-check bound");
  auto* r = app.add_subcommand("reduce", "reduce the linearized operator at the trivial torus");
  add_common(r, c);
  auto* so = app.add_subcommand("solve", "solve for an invariant torus and write the run directory");
  add_common(so, c);
  auto* m = app.add_subcommand("measure", "Monte-Carlo estimate of the Melnikov-admissible fraction");
  add_common(m, c);
  std::string run;
  double threshold = 1e-8;
  auto* v = app.add_subcommand("verify", "check the PDE residual of a stored solution");
  add_common(v, c, false);
  v->add_option("--run", run, "run directory");
  v->add_option("--threshold", threshold);
  int nt = 64, nx = 64;
  double periods = 1.0;
  auto* e = app.add_subcommand("export", "sample u(t, x) on a space-time grid");
  e->add_option("--run", run)->required();
  e->add_option("--nt", nt)->check(CLI::PositiveNumber);
  e->add_option("--nx", nx)->check(CLI::PositiveNumber);
  e->add_option("--periods", periods);
  CLI11_PARSE(app, argc, argv);
  spdlog::set_pattern("[%l] %v");
  try {
    if (s->parsed()) return cmd_sites(nu, start, check);
    if (e->parsed()) return cmd_export(run, nt, nx, periods);
    RunConfig cfg = prepare(c);
    if (r->parsed()) return cmd_reduce(cfg);
    if (so->parsed()) return cmd_solve(cfg);
    if (m->parsed()) return cmd_measure(cfg);
    if (v->parsed()) return cmd_verify(cfg, run, threshold);
  } catch (const std::exception& ex) {
    spdlog::error("{}", ex.what());
    return 1;
  }
  return 0;
}
