#include "kamkdv/fourier.hpp"

#include <fftw3.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <mutex>
#include <numbers>
#include <tuple>

#include "kamkdv/constants.hpp"

namespace kamkdv {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// FFTW plans are cached per shape; creation is serialized, execution is thread safe.
struct PlanCache {
  std::mutex mu;
  std::map<std::tuple<int, int, int, int>, fftw_plan> plans;
  ~PlanCache() {
    for (auto& kv : plans) fftw_destroy_plan(kv.second);
  }
  fftw_plan get(int rank, int n, int batch, int sign) {
    std::lock_guard<std::mutex> lock(mu);
    auto key = std::make_tuple(rank, n, batch, sign);
    auto it = plans.find(key);
    if (it != plans.end()) return it->second;
    std::vector<int> dims(rank, n);
    size_t total = 1;
    for (int r = 0; r < rank; ++r) total *= static_cast<size_t>(n);
    total *= static_cast<size_t>(batch);
    fftw_complex* a = fftw_alloc_complex(total);
    fftw_complex* b = fftw_alloc_complex(total);
    fftw_plan p = fftw_plan_many_dft(rank, dims.data(), batch, a, nullptr, batch, 1, b, nullptr, batch, 1, sign,
                                     FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(a);
    fftw_free(b);
    plans.emplace(key, p);
    return p;
  }
};

PlanCache& plan_cache() {
  static PlanCache cache;
  return cache;
}

void exec(fftw_plan p, const cd* in, cd* out) {
  fftw_execute_dft(p, reinterpret_cast<fftw_complex*>(const_cast<cd*>(in)), reinterpret_cast<fftw_complex*>(out));
}

}  // namespace

// ---------------------------------------------------------------- LIndex

LIndex::LIndex(int nu_, int L_) : nu(nu_), L(L_), n(1) {
  for (int k = 0; k < nu; ++k) n *= (2 * L + 1);
}

std::vector<int> LIndex::comps(int idx) const {
  std::vector<int> l(nu);
  for (int k = nu - 1; k >= 0; --k) {
    l[k] = idx % (2 * L + 1) - L;
    idx /= (2 * L + 1);
  }
  return l;
}

int LIndex::index(const int* l) const {
  int idx = 0;
  for (int k = 0; k < nu; ++k) {
    if (l[k] < -L || l[k] > L) return -1;
    idx = idx * (2 * L + 1) + (l[k] + L);
  }
  return idx;
}

int LIndex::norm_inf(int idx) const {
  int m = 0;
  for (int k = nu - 1; k >= 0; --k) {
    int c = std::abs(idx % (2 * L + 1) - L);
    m = std::max(m, c);
    idx /= (2 * L + 1);
  }
  return m;
}

// ---------------------------------------------------------------- Truncation

int Truncation::x_nodes(int degree) const {
  if (Nx > 0) return Nx;
  int d = std::max(2, degree - 1);
  int need = (d + 1) * J + 1;
  int n = 8;
  while (n < need) n *= 2;
  return n;
}

void Truncation::validate() const {
  if (nu < 1) throw Error("truncation: nu must be >= 1");
  if (L < 1) throw Error("truncation: L must be >= 1");
  if (J < 1) throw Error("truncation: J must be >= 1");
  if (phi_nodes() <= 2 * L) throw Error("truncation: phi grid must exceed twice the time bandwidth");
  if (Nx > 0 && Nx <= 2 * J) throw Error("truncation: x grid must exceed twice the space bandwidth");
}

// ---------------------------------------------------------------- FourierField

FourierField::FourierField(int nu, int L, int J, bool zero_mean)
    : li_(nu, L), J_(J), zero_mean_(zero_mean), c_(static_cast<size_t>(li_.n) * (2 * J + 1), cd(0.0)) {}

cd FourierField::get(const std::vector<int>& l, int j) const {
  int idx = li_.index(l);
  if (idx < 0 || std::abs(j) > J_) return 0.0;
  return at(idx, j);
}

void FourierField::set(const std::vector<int>& l, int j, cd v) {
  int idx = li_.index(l);
  if (idx < 0 || std::abs(j) > J_) throw Error("FourierField::set: index outside truncation");
  if (zero_mean_ && j == 0 && std::abs(v) > 0) throw Error("FourierField::set: j=0 excluded");
  at(idx, j) = v;
}

FourierField& FourierField::operator+=(const FourierField& o) {
  if (o.c_.size() != c_.size()) throw Error("FourierField: shape mismatch");
  for (size_t k = 0; k < c_.size(); ++k) c_[k] += o.c_[k];
  return *this;
}

FourierField& FourierField::operator-=(const FourierField& o) {
  if (o.c_.size() != c_.size()) throw Error("FourierField: shape mismatch");
  for (size_t k = 0; k < c_.size(); ++k) c_[k] -= o.c_[k];
  return *this;
}

FourierField& FourierField::operator*=(cd s) {
  for (auto& v : c_) v *= s;
  return *this;
}

FourierField operator+(FourierField a, const FourierField& b) { return a += b; }
FourierField operator-(FourierField a, const FourierField& b) { return a -= b; }
FourierField operator*(cd s, FourierField a) { return a *= s; }

double FourierField::max_abs() const {
  double m = 0;
  for (const auto& v : c_) m = std::max(m, std::abs(v));
  return m;
}

double FourierField::reality_defect() const {
  double m = 0;
  for (int li = 0; li < li_.n; ++li)
    for (int j = -J_; j <= J_; ++j) m = std::max(m, std::abs(at(li, j) - std::conj(at(li_.neg(li), -j))));
  return m;
}

void FourierField::enforce_reality() {
  for (int li = 0; li < li_.n; ++li)
    for (int j = -J_; j <= J_; ++j) {
      const int ln = li_.neg(li);
      if (ln < li || (ln == li && -j < j)) continue;
      cd v = 0.5 * (at(li, j) + std::conj(at(ln, -j)));
      at(li, j) = v;
      at(ln, -j) = std::conj(v);
    }
}

FourierField FourierField::retruncate(int L, int J) const {
  FourierField r(nu(), L, J, zero_mean_);
  for (int li = 0; li < r.nl(); ++li) {
    auto l = r.li_.comps(li);
    int src = li_.index(l);
    if (src < 0) continue;
    for (int j = -std::min(J, J_); j <= std::min(J, J_); ++j) r.at(li, j) = at(src, j);
  }
  return r;
}

// ---------------------------------------------------------------- basic ops

FourierField dx_pow(const FourierField& u, int k, double tol) {
  FourierField r = u;
  if (k < 0) {
    for (int li = 0; li < u.nl(); ++li)
      if (std::abs(u.at(li, 0)) > tol) throw Error("dx_pow: nonzero mean");
  }
  for (int li = 0; li < u.nl(); ++li)
    for (int j = -u.J(); j <= u.J(); ++j) {
      if (j == 0) {
        r.at(li, j) = (k == 0) ? u.at(li, j) : cd(0.0);
        continue;
      }
      r.at(li, j) = u.at(li, j) * std::pow(cd(0.0, j), k);
    }
  return r;
}

FourierField project(const FourierField& u, Projection which, const std::vector<int>& S, int N) {
  FourierField r = u;
  auto inS = [&](int j) {
    for (int s : S)
      if (s == j) return true;
    return false;
  };
  for (int li = 0; li < u.nl(); ++li) {
    int linf = u.lindex().norm_inf(li);
    for (int j = -u.J(); j <= u.J(); ++j) {
      bool keep = true;
      switch (which) {
        case Projection::S: keep = inS(j); break;
        case Projection::SPerp: keep = (j != 0) && !inS(j); break;
        case Projection::Pi0: keep = (j != 0); break;
        case Projection::Smoothing: keep = std::max(linf, std::abs(j)) < N; break;
      }
      if (!keep) r.at(li, j) = 0.0;
    }
  }
  return r;
}

double sobolev_norm(const FourierField& u, double s) {
  double acc = 0;
  for (int li = 0; li < u.nl(); ++li) {
    int linf = u.lindex().norm_inf(li);
    for (int j = -u.J(); j <= u.J(); ++j) acc += std::norm(u.at(li, j)) * std::pow(bracket(linf, j), 2 * s);
  }
  return std::sqrt(acc);
}

FourierField random_real_field(int nu, int L, int J, std::mt19937_64& rng, double amp, double rho, bool zero_mean,
                               const std::vector<int>& exclude) {
  FourierField f(nu, L, J, zero_mean);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int li = 0; li < f.nl(); ++li) {
    int linf = f.lindex().norm_inf(li);
    for (int j = -J; j <= J; ++j) {
      if (zero_mean && j == 0) continue;
      bool skip = false;
      for (int e : exclude) skip = skip || (e == j);
      if (skip) continue;
      double w = amp * std::pow(rho, linf + std::abs(j));
      f.at(li, j) = cd(g(rng), g(rng)) * w;
    }
  }
  f.enforce_reality();
  return f;
}

// ---------------------------------------------------------------- PhiGrid

PhiGrid::PhiGrid(int nu_, int M_) : nu(nu_), M(M_), P(1) {
  for (int k = 0; k < nu; ++k) P *= M;
}

std::vector<double> PhiGrid::angles(int p) const {
  std::vector<double> a(nu);
  for (int k = nu - 1; k >= 0; --k) {
    a[k] = kTwoPi * (p % M) / M;
    p /= M;
  }
  return a;
}

void PhiGrid::fft(const cd* in, cd* out, int batch, int sign) const {
  fftw_plan p = plan_cache().get(nu, M, batch, sign);
  exec(p, in, out);
}

void PhiGrid::to_nodes(const cd* coef, int L, int batch, cd* vals) const {
  if (2 * L >= M) throw Error("PhiGrid::to_nodes: grid too coarse for L");
  LIndex li(nu, L);
  std::vector<cd> buf(static_cast<size_t>(P) * batch, cd(0.0));
  std::vector<int> l(nu);
  for (int i = 0; i < li.n; ++i) {
    l = li.comps(i);
    int g = 0;
    for (int k = 0; k < nu; ++k) g = g * M + ((l[k] % M) + M) % M;
    std::memcpy(&buf[static_cast<size_t>(g) * batch], &coef[static_cast<size_t>(i) * batch], sizeof(cd) * batch);
  }
  fft(buf.data(), vals, batch, FFTW_BACKWARD);
}

void PhiGrid::to_coeffs(const cd* vals, int L, int batch, cd* coef) const {
  if (2 * L >= M) throw Error("PhiGrid::to_coeffs: grid too coarse for L");
  LIndex li(nu, L);
  std::vector<cd> buf(static_cast<size_t>(P) * batch);
  fft(vals, buf.data(), batch, FFTW_FORWARD);
  const double s = 1.0 / P;
  std::vector<int> l(nu);
  for (int i = 0; i < li.n; ++i) {
    l = li.comps(i);
    int g = 0;
    for (int k = 0; k < nu; ++k) g = g * M + ((l[k] % M) + M) % M;
    for (int b = 0; b < batch; ++b) coef[static_cast<size_t>(i) * batch + b] = buf[static_cast<size_t>(g) * batch + b] * s;
  }
}

namespace {

template <class F>
void spectral_apply(const PhiGrid& g, const cd* vals, int batch, cd* out, F&& symbol) {
  std::vector<cd> buf(static_cast<size_t>(g.P) * batch);
  std::vector<cd> tmp(static_cast<size_t>(g.P) * batch);
  fftw_plan pf = plan_cache().get(g.nu, g.M, batch, FFTW_FORWARD);
  fftw_plan pb = plan_cache().get(g.nu, g.M, batch, FFTW_BACKWARD);
  exec(pf, vals, buf.data());
  std::vector<int> k(g.nu);
  for (int p = 0; p < g.P; ++p) {
    int q = p;
    bool nyq = false;
    for (int d = g.nu - 1; d >= 0; --d) {
      int m = q % g.M;
      q /= g.M;
      if (g.M % 2 == 0 && m == g.M / 2) nyq = true;
      k[d] = g.grid_mode(m);
    }
    cd s = nyq ? cd(0.0) : symbol(k) / static_cast<double>(g.P);
    for (int b = 0; b < batch; ++b) buf[static_cast<size_t>(p) * batch + b] *= s;
  }
  exec(pb, buf.data(), tmp.data());
  std::memcpy(out, tmp.data(), sizeof(cd) * tmp.size());
}

}  // namespace

void PhiGrid::omega_derivative(const cd* vals, int batch, const std::vector<double>& omega, cd* out) const {
  spectral_apply(*this, vals, batch, out, [&](const std::vector<int>& k) {
    double w = 0;
    for (int d = 0; d < nu; ++d) w += omega[d] * k[d];
    return cd(0.0, w);
  });
}

void PhiGrid::omega_inverse(const cd* vals, int batch, const std::vector<double>& omega, cd* out) const {
  spectral_apply(*this, vals, batch, out, [&](const std::vector<int>& k) {
    double w = 0;
    bool zero = true;
    for (int d = 0; d < nu; ++d) {
      w += omega[d] * k[d];
      zero = zero && k[d] == 0;
    }
    if (zero) return cd(0.0);
    if (std::abs(w) < defaults::resonance_floor) throw Error("omega_inverse: exact resonance");
    return 1.0 / cd(0.0, w);
  });
}

void PhiGrid::partial(const cd* vals, int batch, int dir, cd* out) const {
  spectral_apply(*this, vals, batch, out, [&](const std::vector<int>& k) { return cd(0.0, k[dir]); });
}

void PhiGrid::inverse_laplacian(const cd* vals, int batch, cd* out) const {
  spectral_apply(*this, vals, batch, out, [&](const std::vector<int>& k) {
    double s = 0;
    for (int d = 0; d < nu; ++d) s += double(k[d]) * k[d];
    return s == 0 ? cd(0.0) : cd(-1.0 / s);
  });
}

void PhiGrid::filter(const cd* vals, int batch, int L, cd* out) const {
  spectral_apply(*this, vals, batch, out, [&](const std::vector<int>& k) {
    for (int d = 0; d < nu; ++d)
      if (std::abs(k[d]) > L) return cd(0.0);
    return cd(1.0);
  });
}

void PhiGrid::mean(const cd* vals, int batch, cd* out) const {
  for (int b = 0; b < batch; ++b) out[b] = 0.0;
  for (int p = 0; p < P; ++p)
    for (int b = 0; b < batch; ++b) out[b] += vals[static_cast<size_t>(p) * batch + b];
  for (int b = 0; b < batch; ++b) out[b] /= static_cast<double>(P);
}

void PhiGrid::interpolate(const cd* vals, int batch, const std::vector<double>& pts, cd* out) const {
  std::vector<cd> coef(static_cast<size_t>(P) * batch);
  fftw_plan pf = plan_cache().get(nu, M, batch, FFTW_FORWARD);
  exec(pf, vals, coef.data());
  const int npts = static_cast<int>(pts.size()) / nu;
  // Separable evaluation: phase tables per dimension.
  std::vector<cd> ph(static_cast<size_t>(nu) * M);
  for (int q = 0; q < npts; ++q) {
    for (int d = 0; d < nu; ++d)
      for (int m = 0; m < M; ++m) {
        int k = grid_mode(m);
        ph[d * M + m] = (M % 2 == 0 && m == M / 2) ? cd(0.0) : std::polar(1.0, k * pts[q * nu + d]);
      }
    for (int b = 0; b < batch; ++b) out[static_cast<size_t>(q) * batch + b] = 0.0;
    for (int p = 0; p < P; ++p) {
      int r = p;
      cd w = 1.0 / static_cast<double>(P);
      for (int d = nu - 1; d >= 0; --d) {
        w *= ph[d * M + r % M];
        r /= M;
      }
      if (w == cd(0.0)) continue;
      const cd* c = &coef[static_cast<size_t>(p) * batch];
      cd* o = &out[static_cast<size_t>(q) * batch];
      for (int b = 0; b < batch; ++b) o[b] += w * c[b];
    }
  }
}

// ---------------------------------------------------------------- XGrid

XGrid::XGrid(int J_, int Nx_) : J(J_), Nx(Nx_) {
  if (Nx <= 2 * J) throw Error("XGrid: Nx must exceed 2J");
}

double XGrid::node(int k) const { return kTwoPi * k / Nx; }

void XGrid::to_grid(const cd* coef, cd* vals) const {
  std::vector<cd> buf(Nx, cd(0.0));
  for (int j = -J; j <= J; ++j) buf[(j + Nx) % Nx] = coef[j + J];
  exec(plan_cache().get(1, Nx, 1, FFTW_BACKWARD), buf.data(), vals);
}

void XGrid::to_coeffs(const cd* vals, cd* coef) const {
  std::vector<cd> buf(Nx);
  exec(plan_cache().get(1, Nx, 1, FFTW_FORWARD), vals, buf.data());
  for (int j = -J; j <= J; ++j) coef[j + J] = buf[(j + Nx) % Nx] / static_cast<double>(Nx);
}

cd XGrid::eval(const cd* coef, double x) const {
  cd s = 0.0;
  for (int j = -J; j <= J; ++j) s += coef[j + J] * std::polar(1.0, j * x);
  return s;
}

// ---------------------------------------------------------------- field <-> grid

std::vector<cd> field_to_nodes(const FourierField& u, const PhiGrid& pg) {
  std::vector<cd> vals(static_cast<size_t>(pg.P) * u.nj());
  pg.to_nodes(u.data().data(), u.L(), u.nj(), vals.data());
  return vals;
}

FourierField nodes_to_field(const std::vector<cd>& vals, const PhiGrid& pg, int L, int J, bool zero_mean) {
  FourierField f(pg.nu, L, J, zero_mean);
  pg.to_coeffs(vals.data(), L, f.nj(), f.data().data());
  if (zero_mean)
    for (int li = 0; li < f.nl(); ++li) f.at(li, 0) = 0.0;
  return f;
}

std::vector<cd> field_to_grid(const FourierField& u, const PhiGrid& pg, const XGrid& xg) {
  if (xg.J < u.J()) throw Error("field_to_grid: x grid J too small");
  auto nodes = field_to_nodes(u, pg);
  std::vector<cd> out(static_cast<size_t>(pg.P) * xg.Nx);
  std::vector<cd> c(2 * xg.J + 1);
  for (int p = 0; p < pg.P; ++p) {
    std::fill(c.begin(), c.end(), cd(0.0));
    for (int j = -u.J(); j <= u.J(); ++j) c[j + xg.J] = nodes[static_cast<size_t>(p) * u.nj() + j + u.J()];
    xg.to_grid(c.data(), &out[static_cast<size_t>(p) * xg.Nx]);
  }
  return out;
}

FourierField grid_to_field(const std::vector<cd>& vals, const PhiGrid& pg, const XGrid& xg, int L, int J,
                           bool zero_mean) {
  std::vector<cd> nodes(static_cast<size_t>(pg.P) * (2 * J + 1));
  std::vector<cd> c(2 * xg.J + 1);
  for (int p = 0; p < pg.P; ++p) {
    xg.to_coeffs(&vals[static_cast<size_t>(p) * xg.Nx], c.data());
    for (int j = -J; j <= J; ++j) nodes[static_cast<size_t>(p) * (2 * J + 1) + j + J] = (std::abs(j) <= xg.J) ? c[j + xg.J] : cd(0.0);
  }
  return nodes_to_field(nodes, pg, L, J, zero_mean);
}

// ---------------------------------------------------------------- diffeomorphisms

std::vector<double> invert_diffeo_grid(const std::vector<cd>& beta_coef, int J, int Nx, double tol, int max_iter) {
  XGrid xg(J, std::max(Nx, 2 * J + 2));
  std::vector<double> bt(Nx, 0.0);
  for (int k = 0; k < Nx; ++k) {
    double y = kTwoPi * k / Nx;
    double b = 0.0;
    int it = 0;
    for (; it < max_iter; ++it) {
      double nb = -xg.eval(beta_coef.data(), y + b).real();
      double d = std::abs(nb - b);
      b = nb;
      if (d < tol) break;
    }
    if (it == max_iter) throw Error("compose_diffeo: inverse diffeomorphism did not converge");
    bt[k] = b;
  }
  return bt;
}

FourierField compose_diffeo(const FourierField& u, const FourierField& beta, DiffeoMode mode, int M, int Nx) {
  const int nu = u.nu();
  const int L = u.L();
  const int J = u.J();
  const int Jb = beta.J();
  const int Mg = M > 0 ? M : 2 * std::max(L, beta.L()) + 2;
  const int Ng = Nx > 0 ? Nx : 4 * std::max(J, Jb) + 8;
  PhiGrid pg(nu, Mg);
  auto un = field_to_nodes(u.retruncate(std::min(L, (Mg - 1) / 2), J), pg);
  auto bn = field_to_nodes(beta.retruncate(std::min(beta.L(), (Mg - 1) / 2), Jb), pg);
  XGrid xg(std::max(J, Jb), Ng);
  std::vector<cd> outn(static_cast<size_t>(pg.P) * u.nj());
  std::vector<cd> bc(2 * Jb + 1), uc(2 * xg.J + 1, cd(0.0)), vals(Ng), oc(2 * xg.J + 1);
  XGrid xb(Jb, std::max(Ng, 2 * Jb + 2));
  for (int p = 0; p < pg.P; ++p) {
    for (int j = -Jb; j <= Jb; ++j) bc[j + Jb] = bn[static_cast<size_t>(p) * beta.nj() + j + Jb];
    std::fill(uc.begin(), uc.end(), cd(0.0));
    for (int j = -J; j <= J; ++j) uc[j + xg.J] = un[static_cast<size_t>(p) * u.nj() + j + J];
    double maxbx = 0;
    for (int k = 0; k < Ng; ++k) {
      double x = xg.node(k);
      cd bx = 0;
      for (int j = -Jb; j <= Jb; ++j) bx += cd(0.0, j) * bc[j + Jb] * std::polar(1.0, j * x);
      maxbx = std::max(maxbx, std::abs(bx.real()));
    }
    if (maxbx >= 0.5) throw Error("compose_diffeo: non-invertible diffeomorphism");
    if (mode == DiffeoMode::Direct) {
      for (int k = 0; k < Ng; ++k) {
        double x = xg.node(k);
        double b = xb.eval(bc.data(), x).real();
        cd bx = 0;
        for (int j = -Jb; j <= Jb; ++j) bx += cd(0.0, j) * bc[j + Jb] * std::polar(1.0, j * x);
        vals[k] = (1.0 + bx.real()) * xg.eval(uc.data(), x + b);
      }
    } else {
      auto bt = invert_diffeo_grid(bc, Jb, Ng, defaults::tol_diffeo, defaults::diffeo_max_iter);
      std::vector<cd> btc(2 * xg.J + 1);
      std::vector<cd> btv(Ng);
      for (int k = 0; k < Ng; ++k) btv[k] = bt[k];
      XGrid xfull((Ng - 1) / 2, Ng);
      std::vector<cd> btcf(2 * xfull.J + 1);
      xfull.to_coeffs(btv.data(), btcf.data());
      for (int k = 0; k < Ng; ++k) {
        double y = xg.node(k);
        cd v = xg.eval(uc.data(), y + bt[k]);
        if (mode == DiffeoMode::Inverse) {
          cd d = 0;
          for (int j = -xfull.J; j <= xfull.J; ++j) d += cd(0.0, j) * btcf[j + xfull.J] * std::polar(1.0, j * y);
          v *= (1.0 + d.real());
        }
        vals[k] = v;
      }
    }
    xg.to_coeffs(vals.data(), oc.data());
    for (int j = -J; j <= J; ++j) outn[static_cast<size_t>(p) * u.nj() + j + J] = oc[j + xg.J];
  }
  return nodes_to_field(outn, pg, L, J, false);
}

// ---------------------------------------------------------------- binary I/O

void write_binary(const FourierField& u, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("write_binary: cannot open " + path);
  int32_t hdr[4] = {u.nu(), u.L(), u.J(), u.space_zero_mean() ? 1 : 0};
  os.write(reinterpret_cast<const char*>(hdr), sizeof(hdr));
  for (const auto& v : u.data()) {
    double re = v.real(), im = v.imag();
    os.write(reinterpret_cast<const char*>(&re), sizeof(double));
    os.write(reinterpret_cast<const char*>(&im), sizeof(double));
  }
}

FourierField read_binary(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("read_binary: cannot open " + path);
  int32_t hdr[4];
  is.read(reinterpret_cast<char*>(hdr), sizeof(hdr));
  if (!is || hdr[0] < 1 || hdr[0] > 8 || hdr[1] < 0 || hdr[1] > 4096 || hdr[2] < 0 || hdr[2] > 1 << 20 ||
      (hdr[3] != 0 && hdr[3] != 1))
    throw Error("read_binary: invalid header in " + path);
  FourierField u(hdr[0], hdr[1], hdr[2], hdr[3] == 1);
  for (auto& v : u.data()) {
    double re, im;
    is.read(reinterpret_cast<char*>(&re), sizeof(double));
    is.read(reinterpret_cast<char*>(&im), sizeof(double));
    if (!is) throw Error("read_binary: truncated payload in " + path);
    v = cd(re, im);
  }
  char extra;
  if (is.read(&extra, 1)) throw Error("read_binary: trailing bytes in " + path);
  return u;
}

}  // namespace kamkdv
