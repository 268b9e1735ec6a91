#pragma once

#include <functional>
#include <vector>

#include "kamkdv/linreduce.hpp"

namespace kamkdv {

struct Spectrum {
  std::vector<int> modes;
  std::vector<cd> mu;   // mu_j = i(-m3 j^3 + m1 j) + r_j
  std::vector<cd> r;
  double m3 = 1.0, m1 = 0.0;
  // mu_0 = 0 by convention; throws for modes outside the basis.
  cd mu_of(int j) const;
  double max_real_defect() const;  // max_j |Re mu_j| / (1 + |j|^3)
};

struct MelnikovReport {
  bool pass = true;
  std::vector<int> worst_l;
  int worst_j = 0, worst_k = 0;
  double margin = 0.0;
  double gamma = 0.0;
};

struct KamOptions {
  double gamma = 0.0;
  double tau = 0.0;
  double N0 = 0.0;                  // first cutoff; <= 0 uses the full grid band
  double chi = 1.5;
  int max_scales = defaults::kam_max_scales;
  double tol = defaults::tol_red;
  double s = -1.0;                  // decay norm index; negative selects (nu + 2) / 2
};

struct KamResult {
  Spectrum spec;
  NodeOp Phi, Phi_inv;              // accumulated conjugation
  std::vector<double> offdiag;      // off-diagonal decay norm before each scale
  std::vector<int> cutoffs;
  int scales = 0;
  double contraction_exponent = 0.0;
};

// Quadratic KAM reduction of D_omega + i(-m3 j^3 + m1 j) + R to diagonal form.
KamResult reduce_to_diagonal(double m3, double m1, const NodeOp& R, const std::vector<double>& omega,
                             const KamOptions& opt);
KamResult reduce_to_diagonal(const QPLinearOperator& L6, const ReductionTranscript& tr, const KamOptions& opt);

// Least-squares slope of log d_{n+1} against log d_n over entries above the floor.
double contraction_exponent(const std::vector<double>& d, double floor = 1e-300);

// min |i omega.l + mu_j - mu_k| <l>^tau / (2 gamma |j^3 - k^3|) over |l| <= Lmax, j != k in the basis and k = 0.
MelnikovReport melnikov_check(const Spectrum& spec, const std::vector<double>& omega, double gamma, double tau,
                              int Lmax, int Jmax);

struct GmresResult {
  VecC x;
  int iterations = 0;
  double residual = 0.0;  // relative
  bool converged = false;
};
// Right-preconditioned restarted GMRES.
GmresResult gmres(const std::function<VecC(const VecC&)>& A, const std::function<VecC(const VecC&)>& M,
                  const VecC& b, double tol, int restart, int max_iter);

// Inverse of L_omega through the conjugation chain, refined by GMRES against the exact forward operator.
class LOmegaInverse {
 public:
  LOmegaInverse(const ApproxInverse& ai, ReductionResult red, KamResult kam, int L, int J);
  // h = M2 L_inf^{-1} M1^{-1} g, without refinement.
  FourierField chain(const FourierField& g) const;
  FourierField operator()(const FourierField& g) const;
  const Spectrum& spectrum() const { return kam_.spec; }
  const ReductionResult& reduction() const { return red_; }
  const KamResult& kam() const { return kam_; }
  double tol = 1e-13;
  int restart = 40;
  int max_iter = 400;
  mutable int last_iterations = 0;
  mutable double last_residual = 0.0;

 private:
  const ApproxInverse& ai_;
  ReductionResult red_;
  KamResult kam_;
  int L_, J_;
  Basis basis_;
  VecC pack(const FourierField& f) const;
  FourierField unpack(const VecC& v) const;
};

}  // namespace kamkdv
