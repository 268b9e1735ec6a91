#pragma once

#include <functional>
#include <vector>

#include "kamkdv/decay.hpp"

namespace kamkdv {

// Quasi-periodic linear operator sampled on the phi grid: one dense matrix per node,
// acting on x-Fourier coefficients indexed by a mode basis.
class NodeOp {
 public:
  NodeOp() = default;
  NodeOp(const PhiGrid& pg, Basis rows, Basis cols);
  static NodeOp identity(const PhiGrid& pg, const Basis& b);
  // Constant diagonal operator with entries f(j).
  static NodeOp diagonal(const PhiGrid& pg, const Basis& b, const std::function<cd(int)>& f);
  static NodeOp from_decay(const DecayMatrix& A, const PhiGrid& pg);

  PhiGrid pg;
  Basis rows, cols;
  std::vector<MatC> m;

  int P() const { return pg.P; }
  NodeOp& operator+=(const NodeOp& o);
  NodeOp& operator-=(const NodeOp& o);
  NodeOp& operator*=(cd s);

  NodeOp omega_derivative(const std::vector<double>& omega) const;
  NodeOp inverse() const;
  // Transpose for the pairing (f, g) = sum_j f_j g_{-j}.
  NodeOp pairing_transpose() const;
  // Entries evaluated by trigonometric interpolation at the given points (npts = target.P).
  NodeOp at_points(const std::vector<double>& pts, const PhiGrid& target) const;
  DecayMatrix to_decay(int L) const;
  NodeOp filtered(int L) const;
  NodeOp restricted(const Basis& r, const Basis& c) const;
  double max_abs() const;
  // y = A x with x[p * ncols + c], y[p * nrows + r].
  void apply(const cd* x, cd* y) const;

 private:
  void pack(std::vector<cd>& v) const;
  void unpack(const std::vector<cd>& v);
};

NodeOp operator+(NodeOp a, const NodeOp& b);
NodeOp operator-(NodeOp a, const NodeOp& b);
NodeOp operator*(cd s, NodeOp a);
NodeOp operator*(const NodeOp& a, const NodeOp& b);  // pointwise in phi
NodeOp commutator(const NodeOp& X, const NodeOp& A);  // X A - A X

// Multiplication by c(phi_p, x) followed by (i j')^k on the columns: entries c_{j - j'} (i j')^k.
// c holds x-coefficients per node: c[p * (2 Jc + 1) + j + Jc].
NodeOp symbol_op(const PhiGrid& pg, const Basis& b, const std::vector<cd>& c, int Jc, int k);

struct LieResult {
  NodeOp M;   // exp(-A) (D_omega + M0) exp(A) - D_omega
  int terms = 0;
};
// Lie series for the conjugation of D_omega + M0 by exp(A), stopped when a term drops below tol.
LieResult lie_conjugate(const NodeOp& M0, const NodeOp& A, const std::vector<double>& omega, double tol,
                        int max_terms = 80);
// Same, without the D_omega part.
LieResult lie_conjugate_static(const NodeOp& M0, const NodeOp& A, double tol, int max_terms = 80);

NodeOp node_exp(const NodeOp& A);

// Field <-> node vectors on a basis: v[p * nb + k] = coefficient of mode b.modes[k] at node p.
std::vector<cd> field_to_basis_nodes(const FourierField& f, const PhiGrid& pg, const Basis& b);
FourierField basis_nodes_to_field(const std::vector<cd>& v, const PhiGrid& pg, const Basis& b, int L, int J);

// (D_omega + A) h on a normal field; the node product is filtered back to |l| <= h.L().
FourierField apply_qp(const NodeOp& A, const std::vector<double>& omega, const FourierField& h);

}  // namespace kamkdv
