#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "kamkdv/types.hpp"

namespace kamkdv {

// Index set {l in Z^nu : |l|_inf <= L} in lexicographic order (first component slowest).
struct LIndex {
  int nu = 1, L = 0, n = 1;
  LIndex() = default;
  LIndex(int nu_, int L_);
  std::vector<int> comps(int idx) const;
  int index(const int* l) const;  // -1 when outside the box
  int index(const std::vector<int>& l) const { return index(l.data()); }
  int norm_inf(int idx) const;
  int zero() const { return (n - 1) / 2; }
  int neg(int idx) const { return n - 1 - idx; }
};

struct Truncation {
  int nu = 1;
  int L = 1;
  int J = 1;
  int M = 0;   // phi nodes per dimension; 0 selects 2L+2
  int Nx = 0;  // x nodes; 0 selects a dealiased size for the given degree
  int phi_nodes() const { return M > 0 ? M : 2 * L + 2; }
  int x_nodes(int degree) const;
  void validate() const;
};

// Truncated Fourier coefficients of a function on T^nu x T, indexed by (l, j).
class FourierField {
 public:
  FourierField() = default;
  FourierField(int nu, int L, int J, bool space_zero_mean = false);

  int nu() const { return li_.nu; }
  int L() const { return li_.L; }
  int J() const { return J_; }
  int nj() const { return 2 * J_ + 1; }
  int nl() const { return li_.n; }
  bool space_zero_mean() const { return zero_mean_; }
  const LIndex& lindex() const { return li_; }

  cd& at(int lidx, int j) { return c_[static_cast<size_t>(lidx) * nj() + (j + J_)]; }
  const cd& at(int lidx, int j) const { return c_[static_cast<size_t>(lidx) * nj() + (j + J_)]; }
  cd get(const std::vector<int>& l, int j) const;
  void set(const std::vector<int>& l, int j, cd v);

  std::vector<cd>& data() { return c_; }
  const std::vector<cd>& data() const { return c_; }

  FourierField& operator+=(const FourierField& o);
  FourierField& operator-=(const FourierField& o);
  FourierField& operator*=(cd s);
  double max_abs() const;
  double reality_defect() const;
  void enforce_reality();
  FourierField retruncate(int L, int J) const;

 private:
  LIndex li_;
  int J_ = 0;
  bool zero_mean_ = false;
  std::vector<cd> c_;
};

FourierField operator+(FourierField a, const FourierField& b);
FourierField operator-(FourierField a, const FourierField& b);
FourierField operator*(cd s, FourierField a);

// (i j)^k on coefficients; k < 0 requires vanishing j = 0 modes.
FourierField dx_pow(const FourierField& u, int k, double tol = 1e-12);

enum class Projection { S, SPerp, Pi0, Smoothing };
FourierField project(const FourierField& u, Projection which, const std::vector<int>& S = {}, int N = 0);

inline double bracket(int linf, int j) {
  int m = linf > std::abs(j) ? linf : std::abs(j);
  return m < 1 ? 1.0 : static_cast<double>(m);
}
double sobolev_norm(const FourierField& u, double s);

// Real-valued random field with band limits and amplitude decay rho^{|l|+|j|}.
FourierField random_real_field(int nu, int L, int J, std::mt19937_64& rng, double amp, double rho = 0.5,
                               bool zero_mean = true, const std::vector<int>& exclude = {});

// Tensor grid on T^nu with M nodes per dimension; batched FFTs over trailing components.
class PhiGrid {
 public:
  PhiGrid() = default;
  PhiGrid(int nu, int M);
  int nu = 1, M = 1, P = 1;
  std::vector<double> angles(int p) const;
  // Coefficients |l|_inf <= L (LIndex order) times batch <-> node values (p * batch + b).
  void to_nodes(const cd* coef, int L, int batch, cd* vals) const;
  void to_coeffs(const cd* vals, int L, int batch, cd* coef) const;
  // Grid-native spectral operations on node values (Nyquist modes filtered).
  void omega_derivative(const cd* vals, int batch, const std::vector<double>& omega, cd* out) const;
  void omega_inverse(const cd* vals, int batch, const std::vector<double>& omega, cd* out) const;
  void partial(const cd* vals, int batch, int dir, cd* out) const;
  void inverse_laplacian(const cd* vals, int batch, cd* out) const;
  void mean(const cd* vals, int batch, cd* out) const;
  void filter(const cd* vals, int batch, int L, cd* out) const;
  // Trigonometric interpolation at arbitrary points (npts x nu angles).
  void interpolate(const cd* vals, int batch, const std::vector<double>& pts, cd* out) const;
  int grid_mode(int k) const { return k < M / 2 ? k : k - M; }

 private:
  void fft(const cd* in, cd* out, int batch, int sign) const;
};

// Uniform x grid with Nx nodes for coefficients |j| <= J.
class XGrid {
 public:
  XGrid() = default;
  XGrid(int J, int Nx);
  int J = 0, Nx = 1;
  void to_grid(const cd* coef, cd* vals) const;
  void to_coeffs(const cd* vals, cd* coef) const;
  // Values at arbitrary points by direct trigonometric summation.
  cd eval(const cd* coef, double x) const;
  double node(int k) const;
};

// Evaluate FourierField on the (phi-node, x-node) tensor grid and back.
std::vector<cd> field_to_grid(const FourierField& u, const PhiGrid& pg, const XGrid& xg);
FourierField grid_to_field(const std::vector<cd>& vals, const PhiGrid& pg, const XGrid& xg, int L, int J,
                           bool zero_mean = false);
// Node values with Fourier coefficients in x: result[p * nj + (j+J)].
std::vector<cd> field_to_nodes(const FourierField& u, const PhiGrid& pg);
FourierField nodes_to_field(const std::vector<cd>& vals, const PhiGrid& pg, int L, int J, bool zero_mean = false);

enum class DiffeoMode { Direct, Transpose, Inverse };
// Composition operators induced by x -> x + beta(phi, x).
FourierField compose_diffeo(const FourierField& u, const FourierField& beta, DiffeoMode mode, int M = 0,
                            int Nx = 0);
// Inverse diffeomorphism on a periodic x grid: solves bt(y) = -beta(y + bt(y)).
std::vector<double> invert_diffeo_grid(const std::vector<cd>& beta_coef, int J, int Nx, double tol, int max_iter);

// Binary layout: int32 nu, L, J, flag; then (re, im) doubles in lexicographic (l, j) order.
void write_binary(const FourierField& u, const std::string& path);
FourierField read_binary(const std::string& path);

}  // namespace kamkdv
