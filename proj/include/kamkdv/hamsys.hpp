#pragma once

#include <vector>

#include "kamkdv/decay.hpp"
#include "kamkdv/fourier.hpp"
#include "kamkdv/nonlinearity.hpp"
#include "kamkdv/sites.hpp"
#include "kamkdv/wbnf.hpp"

namespace kamkdv {

struct Params {
  double eps = 0.0;
  double a = defaults::a_exp;
  double b = 1.0 + defaults::a_exp / 2;
  double gamma = 0.0;
  double tau = 0.0;
  std::vector<double> xi;
  std::vector<double> omega;
  // Derives b, gamma, tau (if unset) and omega from (eps, a, xi).
  static Params make(double eps, double a, const std::vector<double>& xi, const SiteSet& S, double tau = 0.0);
};

// omega_k = jbar_k^3 - 6 eps^2 xi_k / jbar_k and its inverse.
std::vector<double> freq_amp_map(const std::vector<double>& xi, double eps, const SiteSet& S);
std::vector<double> amp_freq_map(const std::vector<double>& omega, double eps, const SiteSet& S);

// Phi-only fields are FourierFields with J = 0.
struct TorusEmbedding {
  std::vector<FourierField> Theta;  // periodic part of theta
  std::vector<FourierField> y;
  FourierField z;                   // normal component, zero on S and j = 0
  static TorusEmbedding trivial(int nu, int L, int J);
  int nu() const { return static_cast<int>(Theta.size()); }
  TorusEmbedding& axpy(double a, const TorusEmbedding& o);
  void enforce_reality(const SiteSet& S);
  double norm(double s) const;
};

struct Residual {
  std::vector<FourierField> F1, F2;
  FourierField F3;
  double norm(double s) const;
};

// Action-angle embedding u = eps sum sqrt(xi + eps^{2(b-1)} |j| y) e^{i theta} e^{ijx} + eps^b z.
FourierField aa_embed(const TorusEmbedding& i, const Params& p, const SiteSet& S, int M = 0);

// Multiplication by i omega.l and its inverse (the latter requires zero phi-mean).
FourierField d_omega(const FourierField& u, const std::vector<double>& omega);
FourierField d_omega_inverse(const FourierField& g, const std::vector<double>& omega, double tol = defaults::tol_mean);

struct DiophantineResult {
  bool ok = true;
  std::vector<int> worst_l;
  double worst_value = 0.0;  // min |omega.l| <l>^tau
};
DiophantineResult diophantine_check(const std::vector<double>& omega, double gamma, double tau, int L);

// Per-node first derivatives of the velocity field needed by the approximate inverse.
struct NodeJacobian {
  std::vector<MatC> thy;   // d theta_dot / d y           (nu x nu)
  std::vector<MatC> zy;    // d z_dot / d y               (nz x nu)
  std::vector<MatC> zz;    // d z_dot / d z, linear part included (nz x nz)
};

// Rescaled Hamiltonian system in action-angle-normal coordinates on a truncated grid.
class KdVModel {
 public:
  KdVModel(const SiteSet& S, const Params& p, const NonlinearitySpec& nl, const Truncation& tr);

  const SiteSet& sites() const { return S_; }
  const Params& params() const { return p_; }
  const Truncation& truncation() const { return tr_; }
  const WeakBNF& bnf() const { return bnf_; }
  const NonlinearGrid& grid() const { return ng_; }
  const PhiGrid& phi_grid() const { return pg_; }
  const Basis& normal() const { return normal_; }
  int nu() const { return S_.nu(); }
  int J() const { return tr_.J; }
  int L() const { return tr_.L; }
  double s0() const { return (nu() + 2) / 2.0; }
  void set_omega(const std::vector<double>& omega);
  bool parallel = true;

  // N(u) = X_H(u) - Lambda u for the transformed Hamiltonian; u and out are coefficients |j| <= J.
  template <class T> void nonlinear_field(const T* u, T* out) const;
  // Coefficients |j| <= J of the embedding at one node.
  template <class T> void embed(const T* theta, const T* y, const T* z, T* u) const;
  // Velocity at one node: th = Im(N/u) on sites, yd = d y/dt, zn = eps^{-b} Pi_perp N on the normal basis.
  template <class T> void node_velocity(const T* theta, const T* y, const T* z, T* th, T* yd, T* zn) const;

  Residual eval_F(const TorusEmbedding& i, const std::vector<double>& zeta) const;
  Residual dF(const TorusEmbedding& i, const TorusEmbedding& di, const std::vector<double>& dzeta) const;
  NodeJacobian node_jacobians(const TorusEmbedding& i) const;

  // Node values: theta (P x nu), y (P x nu), z (P x nz on the normal basis).
  void to_nodes(const TorusEmbedding& i, std::vector<cd>& th, std::vector<cd>& y, std::vector<cd>& z) const;
  FourierField normal_to_field(const std::vector<cd>& nodes) const;  // P x nz -> field
  std::vector<cd> field_to_normal_nodes(const FourierField& z) const;

  // Original-variable solution U = Phi_B(u) at one node (coefficients |j| <= J).
  void original_solution(const cd* u, cd* U) const;

 private:
  SiteSet S_;
  Params p_;
  Truncation tr_;
  WeakBNF bnf_;
  NonlinearGrid ng_;
  PhiGrid pg_;
  Basis normal_;
  std::vector<double> omega_bar_;
};

}  // namespace kamkdv
