#pragma once

#include <Eigen/Dense>
#include <vector>

#include "kamkdv/fourier.hpp"

namespace kamkdv {

using MatC = Eigen::MatrixXcd;
using VecC = Eigen::VectorXcd;

// Ordered list of space modes with reverse lookup.
struct Basis {
  std::vector<int> modes;
  int Jmax = 0;
  std::vector<int> pos;  // pos[j + Jmax] = index or -1
  Basis() = default;
  explicit Basis(std::vector<int> m);
  int size() const { return static_cast<int>(modes.size()); }
  int find(int j) const { return (std::abs(j) > Jmax) ? -1 : pos[j + Jmax]; }
  bool operator==(const Basis& o) const { return modes == o.modes; }
};

// All nonzero modes |j| <= J, optionally excluding a site set.
Basis normal_basis(int J, const std::vector<int>& S);
Basis full_basis(int J);

// Toeplitz-in-time matrix A_j^{j'}(l): one dense block per l with |l|_inf <= L.
struct DecayMatrix {
  LIndex li;
  Basis rows, cols;
  std::vector<MatC> blocks;
  DecayMatrix() = default;
  DecayMatrix(int nu, int L, Basis r, Basis c);
  MatC& block(int lidx) { return blocks[lidx]; }
  const MatC& block(int lidx) const { return blocks[lidx]; }
};

// s-decay norm: sum over (l, j-j') of (sup |entry|)^2 <l, j-j'>^{2s}.
double decay_norm(const DecayMatrix& A, double s);

// Multiplication operator by a function p(phi, x) restricted to a basis.
DecayMatrix multiplication_matrix(const FourierField& p, const Basis& b);

// Time-Toeplitz product (A B)(l) = sum_{l1 + l2 = l} A(l1) B(l2), truncated to the output box.
DecayMatrix toeplitz_product(const DecayMatrix& A, const DecayMatrix& B, int Lout);

// Dense (l, j) representation of a Toeplitz matrix on an l box of size Lbox, plus optional i*omega.l diagonal.
MatC toeplitz_dense(const DecayMatrix& A, int Lbox, const std::vector<double>* omega = nullptr);

// Decay norm of an arbitrary dense (l, j) block restricted to inner indices.
double dense_decay_norm(const MatC& D, int nu, int Lbox, const Basis& b, int Lin, int Jin, double s);

}  // namespace kamkdv
