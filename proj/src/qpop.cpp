#include "kamkdv/qpop.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>

namespace kamkdv {

NodeOp::NodeOp(const PhiGrid& g, Basis r, Basis c)
    : pg(g), rows(std::move(r)), cols(std::move(c)), m(g.P, MatC::Zero(rows.size(), cols.size())) {}

NodeOp NodeOp::identity(const PhiGrid& g, const Basis& b) {
  NodeOp A(g, b, b);
  for (auto& x : A.m) x.setIdentity();
  return A;
}

NodeOp NodeOp::diagonal(const PhiGrid& g, const Basis& b, const std::function<cd(int)>& f) {
  NodeOp A(g, b, b);
  VecC d(b.size());
  for (int k = 0; k < b.size(); ++k) d[k] = f(b.modes[k]);
  for (auto& x : A.m) x.diagonal() = d;
  return A;
}

void NodeOp::pack(std::vector<cd>& v) const {
  const size_t bs = static_cast<size_t>(rows.size()) * cols.size();
  v.resize(bs * P());
  for (int p = 0; p < P(); ++p) std::copy(m[p].data(), m[p].data() + bs, v.begin() + p * bs);
}

void NodeOp::unpack(const std::vector<cd>& v) {
  const size_t bs = static_cast<size_t>(rows.size()) * cols.size();
  for (int p = 0; p < P(); ++p) std::copy(v.begin() + p * bs, v.begin() + (p + 1) * bs, m[p].data());
}

NodeOp NodeOp::from_decay(const DecayMatrix& A, const PhiGrid& g) {
  NodeOp R(g, A.rows, A.cols);
  const int bs = A.rows.size() * A.cols.size();
  std::vector<cd> coef(static_cast<size_t>(A.li.n) * bs), vals(static_cast<size_t>(g.P) * bs);
  for (int i = 0; i < A.li.n; ++i) std::copy(A.blocks[i].data(), A.blocks[i].data() + bs, coef.begin() + i * bs);
  g.to_nodes(coef.data(), A.li.L, bs, vals.data());
  R.unpack(vals);
  return R;
}

NodeOp& NodeOp::operator+=(const NodeOp& o) {
  for (int p = 0; p < P(); ++p) m[p] += o.m[p];
  return *this;
}
NodeOp& NodeOp::operator-=(const NodeOp& o) {
  for (int p = 0; p < P(); ++p) m[p] -= o.m[p];
  return *this;
}
NodeOp& NodeOp::operator*=(cd s) {
  for (auto& x : m) x *= s;
  return *this;
}
NodeOp operator+(NodeOp a, const NodeOp& b) { return a += b; }
NodeOp operator-(NodeOp a, const NodeOp& b) { return a -= b; }
NodeOp operator*(cd s, NodeOp a) { return a *= s; }

NodeOp operator*(const NodeOp& a, const NodeOp& b) {
  NodeOp c(a.pg, a.rows, b.cols);
#pragma omp parallel for schedule(static)
  for (int p = 0; p < a.P(); ++p) c.m[p].noalias() = a.m[p] * b.m[p];
  return c;
}

NodeOp commutator(const NodeOp& X, const NodeOp& A) {
  NodeOp c(X.pg, X.rows, A.cols);
#pragma omp parallel for schedule(static)
  for (int p = 0; p < X.P(); ++p) {
    c.m[p].noalias() = X.m[p] * A.m[p];
    c.m[p].noalias() -= A.m[p] * X.m[p];
  }
  return c;
}

NodeOp NodeOp::omega_derivative(const std::vector<double>& omega) const {
  std::vector<cd> v, out;
  pack(v);
  out.resize(v.size());
  pg.omega_derivative(v.data(), rows.size() * cols.size(), omega, out.data());
  NodeOp R(pg, rows, cols);
  R.unpack(out);
  return R;
}

NodeOp NodeOp::inverse() const {
  NodeOp R(pg, cols, rows);
#pragma omp parallel for schedule(static)
  for (int p = 0; p < P(); ++p) R.m[p] = m[p].partialPivLu().inverse();
  return R;
}

NodeOp NodeOp::pairing_transpose() const {
  NodeOp R(pg, cols, rows);
  for (int p = 0; p < P(); ++p)
    for (int a = 0; a < cols.size(); ++a) {
      int ra = cols.find(-cols.modes[a]);
      for (int b = 0; b < rows.size(); ++b) {
        int rb = rows.find(-rows.modes[b]);
        if (ra < 0 || rb < 0) throw Error("pairing_transpose: basis not symmetric");
        R.m[p](a, b) = m[p](rb, ra);
      }
    }
  return R;
}

NodeOp NodeOp::at_points(const std::vector<double>& pts, const PhiGrid& target) const {
  if (static_cast<int>(pts.size()) != target.P * pg.nu) throw Error("at_points: point count mismatch");
  std::vector<cd> v, out;
  pack(v);
  const int bs = rows.size() * cols.size();
  out.resize(static_cast<size_t>(target.P) * bs);
  pg.interpolate(v.data(), bs, pts, out.data());
  NodeOp R(target, rows, cols);
  R.unpack(out);
  return R;
}

DecayMatrix NodeOp::to_decay(int L) const {
  DecayMatrix A(pg.nu, L, rows, cols);
  std::vector<cd> v;
  pack(v);
  const int bs = rows.size() * cols.size();
  std::vector<cd> coef(static_cast<size_t>(A.li.n) * bs);
  pg.to_coeffs(v.data(), L, bs, coef.data());
  for (int i = 0; i < A.li.n; ++i) std::copy(coef.begin() + i * bs, coef.begin() + (i + 1) * bs, A.blocks[i].data());
  return A;
}

NodeOp NodeOp::filtered(int L) const {
  std::vector<cd> v, out;
  pack(v);
  out.resize(v.size());
  pg.filter(v.data(), rows.size() * cols.size(), L, out.data());
  NodeOp R(pg, rows, cols);
  R.unpack(out);
  return R;
}

NodeOp NodeOp::restricted(const Basis& r, const Basis& c) const {
  NodeOp R(pg, r, c);
  std::vector<int> ri(r.size()), ci(c.size());
  for (int a = 0; a < r.size(); ++a) ri[a] = rows.find(r.modes[a]);
  for (int b = 0; b < c.size(); ++b) ci[b] = cols.find(c.modes[b]);
  for (int p = 0; p < P(); ++p)
    for (int a = 0; a < r.size(); ++a)
      for (int b = 0; b < c.size(); ++b)
        if (ri[a] >= 0 && ci[b] >= 0) R.m[p](a, b) = m[p](ri[a], ci[b]);
  return R;
}

double NodeOp::max_abs() const {
  double s = 0;
  for (const auto& x : m)
    if (x.size()) s = std::max(s, x.cwiseAbs().maxCoeff());
  return s;
}

void NodeOp::apply(const cd* x, cd* y) const {
  const int nr = rows.size(), nc = cols.size();
#pragma omp parallel for schedule(static)
  for (int p = 0; p < P(); ++p) {
    Eigen::Map<const VecC> xv(x + static_cast<size_t>(p) * nc, nc);
    Eigen::Map<VecC> yv(y + static_cast<size_t>(p) * nr, nr);
    yv.noalias() = m[p] * xv;
  }
}

NodeOp symbol_op(const PhiGrid& pg, const Basis& b, const std::vector<cd>& c, int Jc, int k) {
  NodeOp A(pg, b, b);
  const int nc = 2 * Jc + 1;
  std::vector<cd> dk(b.size());
  for (int q = 0; q < b.size(); ++q) dk[q] = std::pow(cd(0.0, b.modes[q]), k);
  for (int p = 0; p < pg.P; ++p)
    for (int r = 0; r < b.size(); ++r)
      for (int q = 0; q < b.size(); ++q) {
        int d = b.modes[r] - b.modes[q];
        if (std::abs(d) <= Jc) A.m[p](r, q) = c[static_cast<size_t>(p) * nc + d + Jc] * dk[q];
      }
  return A;
}

LieResult lie_conjugate(const NodeOp& M0, const NodeOp& A, const std::vector<double>& omega, double tol,
                        int max_terms) {
  // ad_A^n (D_omega + M0) with [D_omega, A] = omega.d_phi A.
  NodeOp X = A.omega_derivative(omega) + commutator(M0, A);
  LieResult r{M0, 0};
  double fact = 1.0;
  for (int n = 1; n <= max_terms; ++n) {
    fact *= n;
    NodeOp t = (1.0 / fact) * X;
    r.M += t;
    r.terms = n;
    if (t.max_abs() < tol) return r;
    X = commutator(X, A);
  }
  throw Error("lie_conjugate: series did not converge");
}

LieResult lie_conjugate_static(const NodeOp& M0, const NodeOp& A, double tol, int max_terms) {
  NodeOp X = commutator(M0, A);
  LieResult r{M0, 0};
  double fact = 1.0;
  for (int n = 1; n <= max_terms; ++n) {
    fact *= n;
    NodeOp t = (1.0 / fact) * X;
    r.M += t;
    r.terms = n;
    if (t.max_abs() < tol) return r;
    X = commutator(X, A);
  }
  throw Error("lie_conjugate: series did not converge");
}

NodeOp node_exp(const NodeOp& A) {
  NodeOp R(A.pg, A.rows, A.cols);
#pragma omp parallel for schedule(static)
  for (int p = 0; p < A.P(); ++p) R.m[p] = A.m[p].exp();
  return R;
}

std::vector<cd> field_to_basis_nodes(const FourierField& f, const PhiGrid& pg, const Basis& b) {
  auto full = field_to_nodes(f, pg);
  std::vector<cd> v(static_cast<size_t>(pg.P) * b.size(), cd(0.0));
  for (int p = 0; p < pg.P; ++p)
    for (int k = 0; k < b.size(); ++k) {
      int j = b.modes[k];
      if (std::abs(j) <= f.J()) v[static_cast<size_t>(p) * b.size() + k] = full[static_cast<size_t>(p) * f.nj() + j + f.J()];
    }
  return v;
}

FourierField basis_nodes_to_field(const std::vector<cd>& v, const PhiGrid& pg, const Basis& b, int L, int J) {
  const int nj = 2 * J + 1;
  std::vector<cd> full(static_cast<size_t>(pg.P) * nj, cd(0.0));
  for (int p = 0; p < pg.P; ++p)
    for (int k = 0; k < b.size(); ++k) {
      int j = b.modes[k];
      if (std::abs(j) <= J) full[static_cast<size_t>(p) * nj + j + J] = v[static_cast<size_t>(p) * b.size() + k];
    }
  return nodes_to_field(full, pg, L, J, true);
}

FourierField apply_qp(const NodeOp& A, const std::vector<double>& omega, const FourierField& h) {
  auto x = field_to_basis_nodes(h, A.pg, A.cols);
  std::vector<cd> y(static_cast<size_t>(A.P()) * A.rows.size());
  A.apply(x.data(), y.data());
  FourierField r = basis_nodes_to_field(y, A.pg, A.rows, h.L(), h.J());
  const LIndex& li = h.lindex();
  for (int i = 0; i < li.n; ++i) {
    auto l = li.comps(i);
    double w = 0;
    for (int k = 0; k < li.nu; ++k) w += omega[k] * l[k];
    for (int j = -h.J(); j <= h.J(); ++j) r.at(i, j) += cd(0.0, w) * h.at(i, j);
  }
  return r;
}

}  // namespace kamkdv
