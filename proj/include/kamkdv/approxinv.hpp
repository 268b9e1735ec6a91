#pragma once

#include <functional>
#include <vector>

#include "kamkdv/hamsys.hpp"
#include "kamkdv/qpop.hpp"

namespace kamkdv {

struct IsotropicData {
  std::vector<FourierField> a;                 // pullback one-form coefficients a_k
  std::vector<std::vector<FourierField>> A;    // A[k][j] = d_k a_j - d_j a_k
  std::vector<FourierField> rho;
  std::vector<FourierField> y_delta;
};

IsotropicData isotropic_correction(const KdVModel& model, const TorusEmbedding& i0);

// Symplectic form evaluated on the tangent vectors d_k i, d_j i (direct oracle for A_kj).
std::vector<std::vector<FourierField>> torus_two_form(const KdVModel& model, const TorusEmbedding& i0);

struct KCoeffs {
  std::vector<MatC> K20;           // per node, nu x nu
  std::vector<MatC> K11;           // per node, nz x nu
  NodeOp K02;                      // per node, nz x nz
  std::vector<FourierField> K10;   // diagnostics from the residual of i_delta
  FourierField K01;
};

using LinearSolve = std::function<FourierField(const FourierField&)>;

struct TriangularSolution {
  std::vector<FourierField> psi, eta;
  FourierField w;
  std::vector<double> zeta;
};

class ApproxInverse {
 public:
  ApproxInverse(const KdVModel& model, const TorusEmbedding& i0, const std::vector<double>& zeta0);

  const IsotropicData& iso() const { return iso_; }
  const KCoeffs& K() const { return K_; }
  const TorusEmbedding& i_delta() const { return idelta_; }
  // L_omega = D_omega + A with A = -d_x K02.
  const NodeOp& L_omega_nodes() const { return Aw_; }
  FourierField apply_L_omega(const FourierField& h) const;

  TriangularSolution solve_triangular(const std::vector<FourierField>& g1, const std::vector<FourierField>& g2,
                                      const FourierField& g3, const LinearSolve& Lw_inverse) const;
  // Forward triangular operator D, for round-trip checks.
  void apply_D(const TriangularSolution& s, std::vector<FourierField>& g1, std::vector<FourierField>& g2,
               FourierField& g3) const;

  // DG_delta(phi,0,0) and its inverse.
  TorusEmbedding DG(const std::vector<FourierField>& psi, const std::vector<FourierField>& eta,
                    const FourierField& w) const;
  void DG_inverse(const TorusEmbedding& v, std::vector<FourierField>& psi, std::vector<FourierField>& eta,
                  FourierField& w) const;

  // T0 applied to a residual-shaped vector.
  std::pair<TorusEmbedding, std::vector<double>> apply_T0(const Residual& g, const LinearSolve& Lw_inverse) const;

 private:
  const KdVModel& model_;
  int nu_, nz_, P_, L_, J_;
  IsotropicData iso_;
  TorusEmbedding idelta_;
  std::vector<MatC> Pm_, Pinv_, Ydphi_;  // d theta0, its inverse, d y_delta per node
  std::vector<MatC> Zpsi_;               // d z0 per node (nz x nu)
  std::vector<MatC> L2_, L2T_;           // nu x nz, nz x nu
  KCoeffs K_;
  NodeOp Aw_;

  std::vector<cd> vec_nodes(const std::vector<FourierField>& f) const;
  std::vector<FourierField> vec_coeffs(const std::vector<cd>& v) const;
};

}  // namespace kamkdv
