#include "kamkdv/io.hpp"

#include <Eigen/Core>
#include <cstdio>
#include <cstdlib>
#include <fftw3.h>
#include <fmt/format.h>
#include <fstream>

namespace kamkdv {

namespace fs = std::filesystem;

namespace {

template <class T> T get_or(const json& b, const char* key, T def) {
  if (!b.contains(key)) return def;
  try {
    return b.at(key).get<T>();
  } catch (const json::exception&) {
    throw Error(std::string("config: field '") + key + "' has the wrong type");
  }
}

void check_keys(const json& b, const char* block, std::initializer_list<const char*> allowed) {
  if (!b.is_object()) throw Error(std::string("config: block '") + block + "' must be an object");
  for (auto it = b.begin(); it != b.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || it.key() == a;
    if (!ok) throw Error(std::string("config: unknown field '") + it.key() + "' in block '" + block + "'");
  }
}

const json& block(const json& j, const char* name) {
  static const json empty = json::object();
  return j.contains(name) ? j.at(name) : empty;
}

}  // namespace

SiteSet RunConfig::sites() const { return s_plus.empty() ? generate_sites(nu, start) : SiteSet(s_plus); }

Params RunConfig::params() const {
  SiteSet S = sites();
  std::vector<double> x = xi;
  if (x.empty() && !omega.empty()) x = amp_freq_map(omega, eps, S);
  if (x.empty()) x.assign(S.nu(), 1.0);
  return Params::make(eps, a, x, S, tau);
}

Truncation RunConfig::truncation() const {
  Truncation t;
  t.nu = sites().nu();
  t.L = L;
  t.J = J;
  t.M = M;
  t.Nx = Nx;
  return t;
}

RunConfig parse_config(const json& j) {
  if (!j.is_object()) throw Error("config: top level must be an object");
  check_keys(j, "root", {"sites", "params", "truncation", "nonlinearity", "solver", "measure", "output", "derived"});
  RunConfig c;
  const json& s = block(j, "sites");
  check_keys(s, "sites", {"nu", "start", "s_plus"});
  c.nu = get_or(s, "nu", c.nu);
  c.start = get_or(s, "start", c.start);
  c.s_plus = get_or(s, "s_plus", c.s_plus);
  if (!c.s_plus.empty()) c.nu = static_cast<int>(c.s_plus.size());
  if (c.nu < 1 || c.start < 1) throw Error("config: sites.nu and sites.start must be positive");

  const json& p = block(j, "params");
  check_keys(p, "params", {"eps", "a", "tau", "xi", "omega"});
  c.eps = get_or(p, "eps", c.eps);
  c.a = get_or(p, "a", c.a);
  c.tau = get_or(p, "tau", c.tau);
  c.xi = get_or(p, "xi", c.xi);
  c.omega = get_or(p, "omega", c.omega);
  if (c.eps < 0) throw Error("config: params.eps must be non-negative");
  if (c.a <= 0 || c.a >= 1.0 / 6.0) throw Error("config: params.a must lie in (0, 1/6)");
  if (!c.xi.empty() && !c.omega.empty()) throw Error("config: give params.xi or params.omega, not both");
  if (!c.xi.empty() && static_cast<int>(c.xi.size()) != c.nu) throw Error("config: params.xi has wrong length");
  if (!c.omega.empty() && static_cast<int>(c.omega.size()) != c.nu)
    throw Error("config: params.omega has wrong length");
  for (double x : c.xi)
    if (x < 1.0 || x > 2.0) throw Error("config: params.xi entries must lie in [1, 2]");

  const json& t = block(j, "truncation");
  check_keys(t, "truncation", {"L", "J", "M", "Nx"});
  c.L = get_or(t, "L", c.L);
  c.J = get_or(t, "J", c.J);
  c.M = get_or(t, "M", c.M);
  c.Nx = get_or(t, "Nx", c.Nx);

  if (j.contains("nonlinearity")) {
    const json& n = j.at("nonlinearity");
    check_keys(n, "nonlinearity", {"terms"});
    if (!n.contains("terms") || !n.at("terms").is_array()) throw Error("config: nonlinearity.terms must be an array");
    c.nonlinearity.terms.clear();
    for (const auto& m : n.at("terms")) {
      check_keys(m, "nonlinearity.terms", {"coef", "p", "q", "kx"});
      c.nonlinearity.terms.push_back(
          {get_or(m, "coef", 0.0), get_or(m, "p", 0), get_or(m, "q", 0), get_or(m, "kx", 0)});
    }
    try {
      c.nonlinearity.validate();
    } catch (const Error& e) {
      throw Error(std::string("config: ") + e.what());
    }
  }

  const json& v = block(j, "solver");
  check_keys(v, "solver", {"mode", "tol", "max_iter", "N0", "stages", "mu", "C1"});
  c.mode = get_or(v, "mode", c.mode);
  if (c.mode != "newton" && c.mode != "nash-moser") throw Error("config: solver.mode must be newton or nash-moser");
  c.tol = get_or(v, "tol", c.tol);
  c.max_iter = get_or(v, "max_iter", c.max_iter);
  c.N0 = get_or(v, "N0", c.N0);
  c.stages = get_or(v, "stages", c.stages);
  c.mu = get_or(v, "mu", c.mu);
  c.C1 = get_or(v, "C1", c.C1);

  const json& m = block(j, "measure");
  check_keys(m, "measure", {"samples", "seed", "Lmax", "Jmax", "gamma_scales"});
  c.samples = get_or(m, "samples", c.samples);
  c.seed = get_or(m, "seed", c.seed);
  c.Lmax = get_or(m, "Lmax", c.Lmax);
  c.Jmax = get_or(m, "Jmax", c.Jmax);
  c.gamma_scales = get_or(m, "gamma_scales", c.gamma_scales);
  if (c.samples < 1) throw Error("config: measure.samples must be positive");

  if (j.contains("output")) {
    const json& o = j.at("output");
    if (o.is_string()) {
      c.output = o.get<std::string>();
    } else {
      check_keys(o, "output", {"dir"});
      c.output = get_or(o, "dir", c.output);
    }
  }
  try {
    c.truncation().validate();
  } catch (const Error& e) {
    throw Error(std::string("config: ") + e.what());
  }
  return c;
}

RunConfig load_config(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw Error("config: cannot open " + p.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(std::string("config: parse error: ") + e.what());
  }
  return parse_config(j);
}

json config_to_json(const RunConfig& c) {
  json j;
  SiteSet S = c.sites();
  Params p = c.params();
  j["sites"] = {{"nu", S.nu()}, {"start", c.start}, {"s_plus", S.s_plus}};
  j["params"] = {{"eps", c.eps}, {"a", c.a}, {"tau", p.tau}, {"xi", p.xi}};
  j["truncation"] = {{"L", c.L}, {"J", c.J}, {"M", c.M}, {"Nx", c.Nx}};
  json terms = json::array();
  for (const auto& m : c.nonlinearity.terms) terms.push_back({{"coef", m.coef}, {"p", m.p}, {"q", m.q}, {"kx", m.kx}});
  j["nonlinearity"] = {{"terms", terms}};
  j["solver"] = {{"mode", c.mode}, {"tol", c.tol}, {"max_iter", c.max_iter}, {"N0", c.N0},
                 {"stages", c.stages}, {"mu", c.mu}, {"C1", c.C1}};
  j["measure"] = {{"samples", c.samples}, {"seed", c.seed}, {"Lmax", c.Lmax}, {"Jmax", c.Jmax},
                  {"gamma_scales", c.gamma_scales}};
  j["output"] = {{"dir", c.output}};
  const double mu = c.mu > 0 ? c.mu : p.tau + 2.0;
  NMConstants k = NMConstants::make(mu, p, c.C1);
  j["derived"] = {{"b", p.b},         {"gamma", p.gamma},   {"omega", p.omega},     {"mu", k.mu},
                  {"mu1", k.mu1},     {"alpha", k.alpha},   {"alpha1", k.alpha1},   {"kappa", k.kappa},
                  {"beta1", k.beta1}, {"rho", k.rho_exp},   {"N0", k.N0},           {"chi", k.chi}};
  return j;
}

std::string config_hash(const RunConfig& c) {
  json j = config_to_json(c);
  j.erase("output");
  const std::string s = j.dump();
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return fmt::format("{:016x}", h);
}

void write_text_atomic(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  fs::path tmp = p;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw Error("io: cannot write " + tmp.string());
    out << text;
  }
  fs::rename(tmp, p);
}

void write_json_atomic(const fs::path& p, const json& j) { write_text_atomic(p, j.dump(2) + "\n"); }

void write_field_atomic(const fs::path& p, const FourierField& u) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  fs::path tmp = p;
  tmp += ".tmp";
  write_binary(u, tmp.string());
  fs::rename(tmp, p);
}

std::string format_double(double v) { return fmt::format("{:.17g}", v); }

std::string norms_csv(const std::vector<IterationLog>& h) {
  std::string s = "iter,F_s0,log10_F_high,step,zeta,gmres_its\n";
  for (const auto& r : h)
    s += fmt::format("{},{},{},{},{},{}\n", r.iter, format_double(r.F_s0), format_double(r.log10_F_high),
                     format_double(r.step), format_double(r.zeta), r.gmres_its);
  return s;
}

std::string spectrum_csv(const Spectrum& sp) {
  std::string s = "j,re_mu,im_mu,abs_r\n";
  for (size_t k = 0; k < sp.modes.size(); ++k)
    s += fmt::format("{},{},{},{}\n", sp.modes[k], format_double(sp.mu[k].real()), format_double(sp.mu[k].imag()),
                     format_double(std::abs(sp.r[k])));
  return s;
}

json melnikov_json(const MelnikovReport& m) {
  return {{"pass", m.pass},       {"worst_l", m.worst_l}, {"worst_j", m.worst_j},
          {"worst_k", m.worst_k}, {"margin", m.margin},   {"gamma", m.gamma}};
}

json cantor_json(const std::vector<double>& gammas, const std::vector<CantorResult>& r) {
  json arr = json::array();
  for (size_t k = 0; k < r.size(); ++k) {
    json off = json::array();
    for (const auto& [lab, n] : r[k].offenders) off.push_back({{"pair", lab}, {"count", n}});
    arr.push_back({{"gamma", gammas[k]},
                   {"samples", r[k].samples},
                   {"excluded", r[k].excluded},
                   {"fraction", r[k].fraction},
                   {"excluded_fraction", r[k].excluded_fraction},
                   {"ci_low", r[k].ci_low},
                   {"ci_high", r[k].ci_high},
                   {"offenders", off}});
  }
  return {{"sweep", arr}};
}

json verify_json(const VerifyReport& v) {
  return {{"F_s0", v.F_s0},
          {"pde_residual", v.pde_residual},
          {"torus_norm", v.torus_norm},
          {"torus_shape", v.torus_shape},
          {"max_real_defect", v.max_real_defect},
          {"imaginary", v.imaginary},
          {"floquet_growth", v.floquet_growth},
          {"eta_drift", v.eta_drift},
          {"pass", v.pass}};
}

json manifest_json(const RunConfig& c, const std::vector<std::string>& artifacts) {
  return {{"tool", "kamkdv"},
          {"version", "1.0.0"},
          {"config_hash", config_hash(c)},
          {"eigen", fmt::format("{}.{}.{}", EIGEN_WORLD_VERSION, EIGEN_MAJOR_VERSION, EIGEN_MINOR_VERSION)},
          {"fftw", std::string(fftw_version)},
          {"artifacts", artifacts}};
}

json field_to_json(const FourierField& u) {
  std::vector<double> re, im;
  re.reserve(u.data().size());
  im.reserve(u.data().size());
  for (const cd& v : u.data()) {
    re.push_back(v.real());
    im.push_back(v.imag());
  }
  return {{"nu", u.nu()}, {"L", u.L()}, {"J", u.J()}, {"zero_mean", u.space_zero_mean()}, {"re", re}, {"im", im}};
}

FourierField field_from_json(const json& j) {
  try {
    FourierField u(j.at("nu").get<int>(), j.at("L").get<int>(), j.at("J").get<int>(), j.value("zero_mean", false));
    const auto re = j.at("re").get<std::vector<double>>(), im = j.at("im").get<std::vector<double>>();
    if (re.size() != u.data().size() || im.size() != u.data().size()) throw Error("field json: length mismatch");
    for (size_t k = 0; k < re.size(); ++k) u.data()[k] = cd(re[k], im[k]);
    return u;
  } catch (const json::exception& e) {
    throw Error(std::string("field json: ") + e.what());
  }
}

json poly_to_json(const HomogPoly& P) {
  json terms = json::array();
  for (const auto& [m, c] : P.terms()) terms.push_back({m, {c.real(), c.imag()}});
  return {{"degree", P.degree()}, {"terms", terms}};
}

HomogPoly poly_from_json(const json& j) {
  try {
    HomogPoly P(j.at("degree").get<int>());
    for (const auto& t : j.at("terms")) {
      auto c = t.at(1).get<std::vector<double>>();
      if (c.size() != 2) throw Error("poly json: coefficient must be [re, im]");
      P.add(t.at(0).get<Mono>(), cd(c[0], c[1]));
    }
    return P;
  } catch (const json::exception& e) {
    throw Error(std::string("poly json: ") + e.what());
  }
}

int thread_cap(int flag_value) {
  if (flag_value > 0) return flag_value;
  if (const char* e = std::getenv("KAMKDV_THREADS")) {
    int v = std::atoi(e);
    if (v > 0) return v;
  }
  return 0;
}

}  // namespace kamkdv
