#pragma once

#include <functional>
#include <map>
#include <vector>

#include "kamkdv/types.hpp"

namespace kamkdv {

// Sorted index tuple of a monomial u_{j1} ... u_{jn}.
using Mono = std::vector<int>;

// Number of distinct orderings of a sorted tuple.
double orderings(const Mono& m);

// Homogeneous polynomial in the Fourier coordinates, stored by monomial coefficients.
class HomogPoly {
 public:
  explicit HomogPoly(int degree = 0) : degree_(degree) {}
  int degree() const { return degree_; }
  const std::map<Mono, cd>& terms() const { return terms_; }
  size_t size() const { return terms_.size(); }

  void add(Mono m, cd c);
  cd coeff(Mono m) const;
  // Coefficient per ordered index tuple (monomial coefficient divided by the number of orderings).
  cd sym_coeff(Mono tuple) const;

  HomogPoly& operator+=(const HomogPoly& o);
  HomogPoly& operator-=(const HomogPoly& o);
  HomogPoly scaled(cd s) const;
  HomogPoly filtered(const std::function<bool(const Mono&)>& keep) const;
  void prune(double tol);

  // Value at coordinates u(j) given as u[j + W] for |j| <= W.
  template <class T> T eval(const T* u, int W) const;

  double momentum_defect() const;
  double reality_defect() const;
  int max_index() const;
  double max_abs() const;

 private:
  int degree_;
  std::map<Mono, cd> terms_;
};

// {P, Q} = -sum_k i k (d P / d u_{-k}) (d Q / d u_k).
HomogPoly poisson_bracket(const HomogPoly& P, const HomogPoly& Q);
// {H2, F} for H2 = (1/2) sum j^2 u_j u_{-j}: multiplies each monomial by -i sum j^3.
HomogPoly h2_bracket(const HomogPoly& F);
inline long long cube_sum(const Mono& m) {
  long long s = 0;
  for (int j : m) s += 1LL * j * j * j;
  return s;
}
inline long long index_sum(const Mono& m) {
  long long s = 0;
  for (int j : m) s += j;
  return s;
}

// Mean of u^3 restricted to indices |j| <= W.
HomogPoly cubic_hamiltonian(int W);
// Mean of c u^p u_x^q restricted to indices |j| <= W.
HomogPoly monomial_hamiltonian(cd c, int p, int q, int W);

// Hamiltonian vector field X_F(u)_m = i m dF/du_{-m} as a flat list of polynomial terms.
class PolyField {
 public:
  PolyField() = default;
  PolyField(const HomogPoly& F, int C);
  int C = 0;       // coordinates u[j + C], |j| <= C
  int order = 0;   // degree of each term (deg F - 1)
  size_t nterms() const { return target_.size(); }
  template <class T> void eval(const T* u, T* out) const;             // out += X_F(u)
  template <class T> void jvp(const T* u, const T* du, T* out) const;  // out += DX_F(u) du
  // Bound on the sup-norm Lipschitz constant of X_F on the ball max|u_j| <= r.
  double lipschitz(double r) const;

 private:
  std::vector<int> target_;
  std::vector<cd> coef_;
  std::vector<int> rest_;
  double row_sum_ = 0.0;  // max over targets of sum |coef|
};

}  // namespace kamkdv
