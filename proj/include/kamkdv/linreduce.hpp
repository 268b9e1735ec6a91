#pragma once

#include <string>
#include <vector>

#include "kamkdv/approxinv.hpp"
#include "kamkdv/qpop.hpp"

namespace kamkdv {

// D_omega + Pi_perp dx (dx g1 dx + g0) Pi_perp + tail on the normal basis, sampled at the phi nodes.
struct QPLinearOperator {
  PhiGrid pg;
  Basis basis;
  int Jc = 0;                // x-band of g1, g0
  std::vector<cd> g1, g0;    // g[p * (2 Jc + 1) + j + Jc]
  NodeOp tail;

  int ncoef() const { return 2 * Jc + 1; }
  // Coefficient of dx^k for k = 3, 2, 1, 0 (c3 = g1, c2 = 2 g1', c1 = g1'' + g0, c0 = g0').
  std::vector<cd> symbol(int k) const;
  NodeOp symbol_part() const;
  NodeOp full() const { return symbol_part() + tail; }
  FourierField apply(const std::vector<double>& omega, const FourierField& h) const {
    return apply_qp(full(), omega, h);
  }
};

// Symbol part built from per-node coefficient arrays.
NodeOp g_form_op(const PhiGrid& pg, const Basis& b, const std::vector<cd>& g1, const std::vector<cd>& g0, int Jc);

// L_omega at i_delta: symbols from the Hessian of the original density at Phi_B(u), tail by difference.
QPLinearOperator assemble_L_omega(const KdVModel& model, const ApproxInverse& ai);

// Explicit linear Birkhoff matrices (tangential sites S, amplitudes xi, normal basis b).
DecayMatrix lbnf_B1(const SiteSet& S, const std::vector<double>& xi, const Basis& b);
DecayMatrix lbnf_A1bar(const SiteSet& S, const std::vector<double>& xi, const Basis& b);
// Solution of D_omega A1 + m3 [dxxx, A1] + eps B1 = 0; throws when a divisor drops below the floor.
DecayMatrix lbnf_A1(const SiteSet& S, const std::vector<double>& xi, const Basis& b, double eps,
                    const std::vector<double>& omega, double m3);
struct LBNFPieces {
  DecayMatrix B1cal, B2cal, B3cal;  // finite-rank and multiplication parts of the eps^2 term
  DecayMatrix comm;                 // [B1, A1bar] from its closed form
  DecayMatrix T(double eps) const;  // eps^2 (B1cal + B2cal + B3cal + comm / 2)
};
LBNFPieces lbnf_pieces(const SiteSet& S, const std::vector<double>& xi, const Basis& b);
DecayMatrix lbnf_A2(const DecayMatrix& T, const SiteSet& S, const std::vector<double>& omega, double m3);
// i(omega.l + m3 (j'^3 - j^3)) A + F, entrywise.
DecayMatrix homological_residual(const DecayMatrix& A, const DecayMatrix& F, const std::vector<double>& omega,
                                 double m3);
// Integer resonance test omega_bar.l + j'^3 - j^3 == 0.
bool lbnf_resonant(const SiteSet& S, const std::vector<int>& l, int j, int jp);

struct StageReport {
  std::string name;
  double tail_norm = 0.0;  // decay norm of the tail at s0
  double coef_dev = 0.0;   // deviation of the normalized coefficient from its constant
  int terms = 0;           // Lie series terms used
};

struct ReductionTranscript {
  std::vector<double> omega;
  PhiGrid pg;
  Basis basis;
  int L = 0;
  double s = 1.0;  // norm index for stage reports
  // stage 1
  std::vector<cd> beta, b3;
  NodeOp Phi, Phi_inv;
  // stage 2
  double m3 = 1.0;
  std::vector<double> alpha, alpha_t, rho;
  // stage 3
  double m1 = 0.0;
  std::vector<double> p;
  // stages 4-6
  DecayMatrix A1, A2;
  std::vector<cd> w;
  NodeOp E1, E1_inv, E2, E2_inv, EW, EW_inv;
  std::vector<StageReport> stages;

  // v -> Phi B T E1 E2 EW v and v -> (Phi B rho T E1 E2 EW)^{-1} v on node vectors.
  void apply_M2(std::vector<cd>& v) const;
  void apply_M1_inverse(std::vector<cd>& v) const;
  // Time reparametrization on node vectors (B and its inverse).
  void apply_B(std::vector<cd>& v, bool inverse) const;
};

struct ReductionOptions {
  int buffer = 8;          // extra modes for the stage-1 transport flow
  bool lbnf = true;        // run stages 4 and 5
  double s = -1.0;         // norm index for reports; negative selects s0
};

// Individual stages; each updates the operator in place and records its data in the transcript.
void step1_space(QPLinearOperator& Lw, ReductionTranscript& tr, const SiteSet& S, const ReductionOptions& opt);
void step2_time(QPLinearOperator& Lw, ReductionTranscript& tr);
void step3_translate(QPLinearOperator& Lw, ReductionTranscript& tr);
void step4_lbnf1(QPLinearOperator& Lw, ReductionTranscript& tr, const SiteSet& S, const std::vector<double>& xi,
                 double eps);
void step5_lbnf2(QPLinearOperator& Lw, ReductionTranscript& tr, const SiteSet& S, const std::vector<double>& xi,
                 double eps);
void step6_descent(QPLinearOperator& Lw, ReductionTranscript& tr);

struct ReductionResult {
  QPLinearOperator L6;
  ReductionTranscript transcript;
};
ReductionResult reduce_linear_operator(const QPLinearOperator& Lw, const std::vector<double>& omega, int L,
                                       const SiteSet& S, const std::vector<double>& xi, double eps,
                                       const ReductionOptions& opt = {});

// The eps-order profile v(phi, x) = sum_{j in S} sqrt(xi_j) e^{i l(j).phi + i j x} as per-node x-coefficients.
std::vector<cd> vbar_nodes(const PhiGrid& pg, const SiteSet& S, const std::vector<double>& xi, int Jc);

}  // namespace kamkdv
