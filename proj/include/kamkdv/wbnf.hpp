#pragma once

#include <vector>

#include "kamkdv/constants.hpp"
#include "kamkdv/nonlinearity.hpp"
#include "kamkdv/poly.hpp"
#include "kamkdv/sites.hpp"

namespace kamkdv {

// Generators of the weak Birkhoff normal form and the finite-rank map Phi_B = Phi3 o Phi4 o Phi5.
class WeakBNF {
 public:
  WeakBNF() = default;
  WeakBNF(const SiteSet& S, const NonlinearitySpec& nl, int flow_steps = defaults::flow_steps);

  const SiteSet& sites() const { return S_; }
  int CS = 0;  // max site
  int W = 0;   // index window of all stored polynomials
  int CE = 0;  // support of the generators (the finite set E)
  int steps = defaults::flow_steps;

  HomogPoly H3, H5;                 // original cubic and quintic Hamiltonians on |j| <= W
  HomogPoly F3, F4, F5;             // generators
  HomogPoly H4_3, H5_3, H5_4;       // intermediate transformed parts
  HomogPoly NF3, NF4, NF5;          // normal form parts
  PolyField X3, X4, X5;             // generator vector fields on E coordinates u[j + CE]

  int ncoords() const { return 2 * CE + 1; }
  // Time-dir flow of X_{F_k} (k in {3,4,5}) on E coordinates.
  // nsteps = 0 picks an RK4 step count from a Lipschitz bound, capped at `steps`.
  template <class T> void flow(int k, T* u, double dir, int nsteps = 0) const;
  template <class T> int step_count(const PolyField& X, const T* u) const;
  template <class T> void forward(T* u) const;  // u -> Phi_B(u)
  template <class T> void inverse(T* w) const;  // w -> Phi_B^{-1}(w)
  // Pulls back a vector field through Phi_B. On entry s = Phi_B(u), d = V(s) - Lambda s;
  // on exit s ~ u and d = DPhi_B(u)^{-1} V(Phi_B(u)) - Lambda s, with Lambda = diag(i j^3).
  template <class T> void pullback(T* s, T* d) const;

  // H2 + NF3 + NF4 + NF5 at coordinates u[j + W].
  cd normal_form(const cd* u) const;
  // Sup difference between flows with nsteps and 2 nsteps.
  double richardson_defect(int k, const cd* u) const;
  // True iff the tuple lies in the support of F3 (at least two indices in S).
  bool in_A3(const Mono& m) const;
  bool in_A4(const Mono& m) const;
  bool in_A5(const Mono& m) const;

 private:
  SiteSet S_;
  int outside(const Mono& m) const;
  const PolyField& field(int k) const;
};

// Mean of u_x^2 / 2 in Fourier coordinates u[j + W].
cd h2_value(const cd* u, int W);

}  // namespace kamkdv
