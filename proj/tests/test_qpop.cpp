#include <doctest.h>

#include <random>

#include "kamkdv/qpop.hpp"

using namespace kamkdv;

namespace {

NodeOp random_op(const PhiGrid& pg, const Basis& b, double amp, std::mt19937_64& rng, int L = 2) {
  std::normal_distribution<double> N;
  DecayMatrix A(pg.nu, L, b, b);
  for (auto& blk : A.blocks)
    for (int r = 0; r < b.size(); ++r)
      for (int c = 0; c < b.size(); ++c) blk(r, c) = amp * cd(N(rng), N(rng));
  return NodeOp::from_decay(A, pg);
}

}  // namespace

TEST_SUITE("qpop") {
  TEST_CASE("decay round trip") {
    std::mt19937_64 rng(1);
    PhiGrid pg(1, 12);
    Basis b = full_basis(3);
    NodeOp A = random_op(pg, b, 1.0, rng);
    NodeOp B = NodeOp::from_decay(A.to_decay(5), pg);
    CHECK((A - B).max_abs() < 1e-13);
  }

  TEST_CASE("exponential inverse") {
    std::mt19937_64 rng(2);
    PhiGrid pg(2, 6);
    Basis b = full_basis(2);
    NodeOp A = random_op(pg, b, 0.1, rng, 1);
    NodeOp I = node_exp(A) * node_exp(cd(-1.0) * A);
    CHECK((I - NodeOp::identity(pg, b)).max_abs() < 1e-13);
  }

  TEST_CASE("Lie series equals direct conjugation") {
    std::mt19937_64 rng(3);
    // Small generator so that exp(A) is resolved on the grid.
    PhiGrid pg(1, 32);
    Basis b = full_basis(3);
    std::vector<double> omega{1.3};
    NodeOp M0 = random_op(pg, b, 1.0, rng, 2), A = random_op(pg, b, 0.005, rng, 2);
    LieResult lr = lie_conjugate(M0, A, omega, 1e-15);
    // exp(-A)(D_omega + M0)exp(A) - D_omega = exp(-A) M0 exp(A) + exp(-A) D_omega[exp(A)].
    NodeOp E = node_exp(A), Ei = node_exp(cd(-1.0) * A);
    NodeOp direct = Ei * M0 * E + Ei * E.omega_derivative(omega);
    CHECK((lr.M - direct).max_abs() < 1e-9);
    CHECK(lr.terms > 3);
  }

  TEST_CASE("apply_qp matches the dense operator") {
    std::mt19937_64 rng(4);
    PhiGrid pg(1, 12);
    const int L = 2, J = 4;
    Basis b = normal_basis(J, {});
    NodeOp A = random_op(pg, b, 1.0, rng, 1);
    std::vector<double> omega{0.7};
    FourierField h = random_real_field(1, L, J, rng, 1.0, 0.8, true);
    FourierField y = apply_qp(A, omega, h);
    DecayMatrix D = A.to_decay(1);
    MatC T = toeplitz_dense(D, L, &omega);
    LIndex li(1, L);
    const int nb = b.size();
    VecC x(li.n * nb);
    for (int i = 0; i < li.n; ++i)
      for (int k = 0; k < nb; ++k) x[i * nb + k] = h.at(i, b.modes[k]);
    VecC yd = T * x;
    double e = 0;
    for (int i = 0; i < li.n; ++i)
      for (int k = 0; k < nb; ++k) e = std::max(e, std::abs(yd[i * nb + k] - y.at(i, b.modes[k])));
    CHECK(e < 1e-12);
  }

  TEST_CASE("commutator is antisymmetric") {
    std::mt19937_64 rng(5);
    PhiGrid pg(1, 8);
    Basis b = full_basis(2);
    NodeOp X = random_op(pg, b, 1.0, rng), Y = random_op(pg, b, 1.0, rng);
    CHECK((commutator(X, Y) + commutator(Y, X)).max_abs() < 1e-13);
  }

  TEST_CASE("symbol operator of a constant is diagonal") {
    PhiGrid pg(1, 6);
    Basis b = full_basis(3);
    const int Jc = 2;
    std::vector<cd> c(static_cast<size_t>(pg.P) * (2 * Jc + 1), 0.0);
    for (int p = 0; p < pg.P; ++p) c[static_cast<size_t>(p) * (2 * Jc + 1) + Jc] = 2.0;
    NodeOp S = symbol_op(pg, b, c, Jc, 1);
    NodeOp D = NodeOp::diagonal(pg, b, [](int j) { return cd(0.0, 2.0 * j); });
    CHECK((S - D).max_abs() < 1e-14);
  }
}
