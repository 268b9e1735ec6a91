#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "kamkdv/kamred.hpp"

namespace kamkdv {

struct NMConstants {
  double mu = 0.0;  // loss of derivatives of T0
  double mu1 = 0.0, alpha = 0.0, alpha1 = 0.0, kappa = 0.0, beta1 = 0.0;
  double rho_exp = 0.0;
  double N0 = 0.0;
  double chi = 1.5;
  double a = 0.0, b = 0.0, tau = 0.0;
  double C1 = 1.0;
  // rho <= 0 selects half of (1 - 3a) / (C1 (1 + a)).
  static NMConstants make(double mu, const Params& p, double C1 = 1.0, double rho = 0.0);
  int N(int n) const;  // floor(N0^{chi^n}), at least 2
};

// Pi_N: keeps modes with max(|l|_inf, |j|) <= N.
FourierField smooth(const FourierField& u, int N);
TorusEmbedding smooth(const TorusEmbedding& i, int N);
Residual smooth(const Residual& F, int N);
TorusEmbedding operator-(const TorusEmbedding& a, const TorusEmbedding& b);
Residual operator-(const Residual& a, const Residual& b);
Residual operator+(const Residual& a, const Residual& b);
// log10 of the Sobolev norm, safe for large s.
double log10_norm(const Residual& F, double s);

// Approximate inverse T0 at one embedding: isotropic correction, reduction, KAM diagonalization, GMRES refinement.
class Linearization {
 public:
  Linearization(const KdVModel& model, const TorusEmbedding& i, const std::vector<double>& zeta, const KamOptions& kam,
                const ReductionOptions& red = {});
  const ApproxInverse& approx() const { return *ai_; }
  const LOmegaInverse& inverse() const { return *inv_; }
  const Spectrum& spectrum() const { return inv_->spectrum(); }
  // (di, dzeta) = T0 g.
  std::pair<TorusEmbedding, std::vector<double>> T0(const Residual& g) const;

 private:
  std::unique_ptr<ApproxInverse> ai_;
  std::unique_ptr<LOmegaInverse> inv_;
};

KamOptions kam_options(const Params& p);

struct NewtonOptions {
  double tol = defaults::newton_tol;
  int max_iter = defaults::newton_max_iter;
  int max_halvings = 8;
  double stagnation = 0.01;  // minimum relative reduction over the window
  int stagnation_window = 3;
};

struct IterationLog {
  int iter = 0;
  double F_s0 = 0.0;
  double log10_F_high = 0.0;
  double step = 0.0;     // accepted line-search factor
  double zeta = 0.0;     // |zeta|
  int gmres_its = 0;
};

struct SolveResult {
  TorusEmbedding i;
  std::vector<double> zeta;
  std::vector<IterationLog> history;
  bool converged = false;
  Spectrum spectrum;     // at the final embedding
  MelnikovReport melnikov;
};

SolveResult newton_fallback(const KdVModel& model, const TorusEmbedding& i0, const std::vector<double>& zeta0,
                            const NewtonOptions& opt = {}, const KamOptions* kam = nullptr);

struct SolverState {
  int n = 0;
  TorusEmbedding i;
  std::vector<double> zeta;
  std::vector<IterationLog> history;
};

// F(U_{n+1}) = Pi_n^perp F(U_n) + R_n + Q_n with R_n = Pi_n F(U_n) + dF(U_n) H and Q_n the Taylor remainder.
struct StepDecomposition {
  int N = 0;
  double F_before = 0.0, F_after = 0.0;
  double perp = 0.0, R = 0.0, Q = 0.0;
  double identity_defect = 0.0;  // |F(U_{n+1}) - (perp + R + Q)|
};

StepDecomposition nm_step(const KdVModel& model, SolverState& st, const NMConstants& c, const KamOptions& kam);

struct CantorOptions {
  int samples = defaults::mc_samples;
  std::uint64_t seed = defaults::mc_seed;
  int Lmax = 7;
  int Jmax = 24;
  double confidence = 0.95;
};

struct CantorResult {
  int samples = 0;
  int excluded = 0;
  double fraction = 0.0;  // surviving fraction
  double excluded_fraction = 0.0;
  double ci_low = 0.0, ci_high = 0.0;  // on the excluded fraction
  std::vector<std::pair<std::string, int>> offenders;  // (j,k) pair labels by count, descending
};

// Spectrum for a sampled omega; the default proxy is mu_j = i(-j^3).
using SpectrumModel = std::function<Spectrum(const std::vector<double>& omega)>;
CantorResult cantor_measure(const SiteSet& S, double eps, double gamma, double tau, const CantorOptions& opt,
                            const SpectrumModel& model = nullptr);

struct VerifyReport {
  double F_s0 = 0.0;
  double pde_residual = 0.0;
  double torus_norm = 0.0;
  double torus_shape = 0.0;  // eps^{6-2b} / gamma
  double max_real_defect = 0.0;
  bool imaginary = true;
  double floquet_growth = 0.0;
  double eta_drift = 0.0;
  bool pass = false;
};

// Original-variable solution U = Phi_B(u) on a phi grid with M nodes per dimension (coefficients |l| < M/2).
FourierField original_field(const KdVModel& model, const TorusEmbedding& i, int M);
// sup over phi nodes and x nodes of |U_t + U_xxx - dx(3U^2 + f_u - dx f_ux)| with U_t = omega.d_phi U.
double pde_residual(const FourierField& U, const std::vector<double>& omega, const NonlinearitySpec& nl, int Nx = 0);

VerifyReport verify_solution(const KdVModel& model, const SolveResult& sol);

}  // namespace kamkdv
