#include <doctest.h>

#include <random>

#include "kamkdv/kamred.hpp"

using namespace kamkdv;

namespace {

// Anti-Hermitian perturbation with exponential decay in l.
NodeOp random_skew(const PhiGrid& pg, const Basis& b, double amp, int LR, std::mt19937_64& rng) {
  std::normal_distribution<double> N;
  DecayMatrix R(pg.nu, LR, b, b);
  for (int i = 0; i < R.li.n; ++i) {
    const int ln = R.li.neg(i);
    if (ln < i) continue;
    const double w = amp * std::exp(-0.7 * R.li.norm_inf(i));
    for (int r = 0; r < b.size(); ++r)
      for (int c = 0; c < b.size(); ++c) {
        cd v = w * cd(N(rng), N(rng));
        R.blocks[i](r, c) += v;
        R.blocks[ln](c, r) -= std::conj(v);
      }
  }
  return NodeOp::from_decay(R, pg);
}

KamOptions opts(double gamma = 1e-3, double tau = 3.0) {
  KamOptions o;
  o.gamma = gamma;
  o.tau = tau;
  return o;
}

}  // namespace

TEST_SUITE("kamred") {
  TEST_CASE("unperturbed operator is already diagonal") {
    PhiGrid pg(1, 16);
    Basis b({-3, -2, 2, 3});
    KamResult K = reduce_to_diagonal(1.1, 0.2, NodeOp(pg, b, b), {1.618}, opts());
    for (int r = 0; r < b.size(); ++r) {
      const int j = b.modes[r];
      CHECK(std::abs(K.spec.mu[r] - cd(0.0, -1.1 * j * j * j + 0.2 * j)) < 1e-15);
    }
    CHECK(K.spec.mu_of(0) == cd(0.0));
    CHECK_THROWS_AS(K.spec.mu_of(7), Error);
  }

  TEST_CASE("planted resonance is reported") {
    PhiGrid pg(1, 16);
    Basis b({1, 2});
    std::mt19937_64 rng(1);
    // omega = 7 makes i omega + mu_2 - mu_1 vanish at l = 1.
    NodeOp R = random_skew(pg, b, 1e-3, 2, rng);
    CHECK_THROWS_WITH_AS(reduce_to_diagonal(1.0, 0.0, R, {7.0}, opts()), doctest::Contains("Melnikov failure"),
                         Error);
  }

  TEST_CASE("quadratic scheme matches dense Floquet exponents") {
    PhiGrid pg(1, 32);
    Basis b({2, 5});
    std::mt19937_64 rng(11);
    NodeOp R = random_skew(pg, b, 1e-4, 6, rng);
    std::vector<double> omega{(1 + std::sqrt(5.0)) / 2};
    KamResult K = reduce_to_diagonal(1.0, 0.3, R, omega, opts());
    CHECK(K.scales >= 1);
    CHECK(K.offdiag.back() < 1e-12);
    CHECK(K.spec.max_real_defect() < 1e-12);
    // Conjugation round trip.
    CHECK((K.Phi * K.Phi_inv - NodeOp::identity(pg, b)).max_abs() < 1e-12);
  }

  TEST_CASE("contraction exponent of a quadratic sequence") {
    std::vector<double> d{1e-2, 1e-4, 1e-8, 1e-16};
    CHECK(contraction_exponent(d) == doctest::Approx(2.0).epsilon(1e-12));
  }

  TEST_CASE("Melnikov margin scales inversely with gamma") {
    Spectrum s;
    s.modes = {-3, -2, 2, 3};
    for (int j : s.modes) {
      s.mu.push_back(cd(0.0, -double(j) * j * j));
      s.r.push_back(0.0);
    }
    std::vector<double> omega{std::sqrt(2.0)};
    auto a = melnikov_check(s, omega, 1e-2, 2.0, 5, 3);
    auto b = melnikov_check(s, omega, 2e-2, 2.0, 5, 3);
    CHECK(a.margin == doctest::Approx(2.0 * b.margin));
    auto c = melnikov_check(s, omega, 1e-2, 2.0, 10, 3);
    CHECK(c.margin <= a.margin);
    CHECK(a.pass == (a.margin >= 1.0));
  }

  TEST_CASE("GMRES solves a small dense system") {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> N;
    const int n = 30;
    MatC A = MatC::Identity(n, n) * 4.0;
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) A(r, c) += 0.3 * cd(N(rng), N(rng)) / std::sqrt(double(n));
    VecC x(n);
    for (auto& v : x) v = cd(N(rng), N(rng));
    VecC bvec = A * x;
    auto res = gmres([&](const VecC& v) { VecC y = A * v; return y; }, [](const VecC& v) { return v; }, bvec, 1e-13,
                     10, 200);
    CHECK(res.converged);
    CHECK((res.x - x).norm() < 1e-10 * x.norm());
  }

  TEST_CASE("chain inverse of L_omega at a trivial torus") {
    SiteSet S({1});
    const double eps = 1e-2;
    Params p = Params::make(eps, 0.1, {1.5}, S);
    Truncation tr;
    tr.nu = 1;
    tr.L = 3;
    tr.J = 12;
    KdVModel m(S, p, NonlinearitySpec::ux5(), tr);
    ApproxInverse ai(m, TorusEmbedding::trivial(1, 3, 12), {0.0});
    QPLinearOperator Lw = assemble_L_omega(m, ai);
    ReductionResult red = reduce_linear_operator(Lw, p.omega, 3, S, p.xi, eps);
    KamOptions ko;
    ko.gamma = p.gamma;
    ko.tau = p.tau;
    KamResult kam = reduce_to_diagonal(red.L6, red.transcript, ko);
    // Reality symmetry of the spectrum.
    for (int j = 1; j <= 12; ++j)
      if (j != 1) CHECK(std::abs(kam.spec.mu_of(j) + kam.spec.mu_of(-j)) < 1e-10);
    LOmegaInverse inv(ai, red, kam, 3, 12);
    std::mt19937_64 rng(3);
    FourierField g = random_real_field(1, 3, 12, rng, 1.0, 0.5, true, S.s);
    FourierField h = inv(g);
    CHECK((ai.apply_L_omega(h) - g).max_abs() < 1e-10);
    CHECK(inv.last_iterations < 20);
  }
}
