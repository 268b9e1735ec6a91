#pragma once

#include <vector>

#include "kamkdv/fourier.hpp"
#include "kamkdv/poly.hpp"

namespace kamkdv {

// One term c * u^p * u_x^q, optionally times cos(kx * x) (only allowed for p + q >= 6).
struct Monomial {
  double coef = 0.0;
  int p = 0;
  int q = 0;
  int kx = 0;
};

struct NonlinearitySpec {
  std::vector<Monomial> terms;
  int degree() const;
  void validate() const;
  // Mean of the degree-5 x-independent part as a polynomial on indices |j| <= W.
  HomogPoly quintic_part(int W) const;
  // Density f and its first and second partial derivatives in (u, u_x) at position x.
  template <class T> void partials(double x, const T& u, const T& ux, T* out) const;
  static NonlinearitySpec ux5(double c = 1.0) { return {{Monomial{c, 0, 5, 0}}}; }
};

// Indices into the output of NonlinearitySpec::partials.
enum PartialIdx { kF = 0, kFu = 1, kFux = 2, kFuu = 3, kFuux = 4, kFuxux = 5, kNumPartials = 6 };

// Spectral evaluation of the nonlinear vector field dx[3w^2 + f_u - dx f_ux] on an x grid.
class NonlinearGrid {
 public:
  NonlinearGrid() = default;
  NonlinearGrid(const NonlinearitySpec& nl, int J, int Nx = 0);
  int J = 0, Nx = 0;
  const NonlinearitySpec& spec() const { return nl_; }
  // Coefficients |j| <= J in, coefficients |j| <= J out.
  template <class T> void xnl(const T* w, T* out) const;
  // Full Hamiltonian mean(w_x^2/2 + w^3 + f).
  double energy(const cd* w) const;
  // Hessian symbols a1 = 1 + f_uxux and a0 = -(6w + f_uu - dx f_uux) as coefficients |j| <= Jout.
  void hessian_symbols(const cd* w, int Jout, cd* a1, cd* a0) const;

 private:
  NonlinearitySpec nl_;
  XGrid xg_;
};

}  // namespace kamkdv
