#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "kamkdv/decay.hpp"
#include "kamkdv/fourier.hpp"

using namespace kamkdv;

TEST_SUITE("fourier") {
  TEST_CASE("lindex round trip and negation") {
    LIndex li(2, 3);
    CHECK(li.n == 49);
    for (int i = 0; i < li.n; ++i) {
      auto l = li.comps(i);
      CHECK(li.index(l) == i);
      auto ln = li.comps(li.neg(i));
      CHECK(ln[0] == -l[0]);
      CHECK(ln[1] == -l[1]);
    }
    CHECK(li.comps(li.zero()) == std::vector<int>{0, 0});
  }

  TEST_CASE("phi grid coefficient round trip") {
    std::mt19937_64 rng(1);
    PhiGrid pg(2, 10);
    const int L = 4, batch = 3;
    LIndex li(2, L);
    std::normal_distribution<double> N;
    std::vector<cd> c(static_cast<size_t>(li.n) * batch), v(static_cast<size_t>(pg.P) * batch), c2(c.size());
    for (auto& x : c) x = cd(N(rng), N(rng));
    pg.to_nodes(c.data(), L, batch, v.data());
    pg.to_coeffs(v.data(), L, batch, c2.data());
    double e = 0;
    for (size_t k = 0; k < c.size(); ++k) e = std::max(e, std::abs(c[k] - c2[k]));
    CHECK(e < 1e-13);
  }

  TEST_CASE("omega derivative and inverse are spectral") {
    PhiGrid pg(1, 16);
    std::vector<double> omega{1.7};
    std::vector<cd> v(pg.P), d(pg.P), back(pg.P);
    for (int p = 0; p < pg.P; ++p) {
      double t = pg.angles(p)[0];
      v[p] = std::sin(3 * t) + 0.5 * std::cos(t);
    }
    pg.omega_derivative(v.data(), 1, omega, d.data());
    double e = 0;
    for (int p = 0; p < pg.P; ++p) {
      double t = pg.angles(p)[0];
      e = std::max(e, std::abs(d[p] - 1.7 * (3 * std::cos(3 * t) - 0.5 * std::sin(t))));
    }
    CHECK(e < 1e-12);
    pg.omega_inverse(d.data(), 1, omega, back.data());
    e = 0;
    for (int p = 0; p < pg.P; ++p) e = std::max(e, std::abs(back[p] - v[p]));
    CHECK(e < 1e-12);
  }

  TEST_CASE("reality projection is idempotent and exact on real fields") {
    std::mt19937_64 rng(3);
    FourierField u = random_real_field(2, 3, 5, rng, 1.0);
    CHECK(u.reality_defect() < 1e-15);
    FourierField w = u;
    w.at(2, 1) += cd(0.3, 0.1);
    CHECK(w.reality_defect() > 0.1);
    w.enforce_reality();
    CHECK(w.reality_defect() < 1e-15);
    FourierField w2 = w;
    w2.enforce_reality();
    CHECK((w2 - w).max_abs() == 0.0);
  }

  TEST_CASE("dx_pow inverts on zero-mean fields") {
    std::mt19937_64 rng(4);
    FourierField u = random_real_field(1, 2, 6, rng, 1.0);
    FourierField d = dx_pow(dx_pow(u, 3), -3);
    CHECK((d - u).max_abs() < 1e-14);
  }

  TEST_CASE("projections telescope") {
    std::mt19937_64 rng(5);
    std::vector<int> S{1, -1, 3, -3};
    FourierField u = random_real_field(2, 2, 6, rng, 1.0, 0.5, true);
    FourierField a = project(u, Projection::S, S), b = project(u, Projection::SPerp, S);
    CHECK((a + b - u).max_abs() < 1e-15);
  }

  TEST_CASE("toeplitz product matches dense product on the inner box") {
    std::mt19937_64 rng(6);
    std::normal_distribution<double> N;
    Basis b = full_basis(3);
    DecayMatrix A(1, 2, b, b), B(1, 2, b, b);
    for (auto* X : {&A, &B})
      for (auto& blk : X->blocks)
        for (int r = 0; r < b.size(); ++r)
          for (int c = 0; c < b.size(); ++c) blk(r, c) = cd(N(rng), N(rng));
    DecayMatrix C = toeplitz_product(A, B, 4);
    const int Lbox = 8;
    MatC Dc = toeplitz_dense(A, Lbox) * toeplitz_dense(B, Lbox);
    MatC Cd = toeplitz_dense(C, Lbox);
    // Rows with |l| <= Lbox - 2 see every contributing l1 + l2.
    const int n = b.size();
    LIndex box(1, Lbox);
    double e = 0;
    for (int a = 0; a < box.n; ++a) {
      if (box.norm_inf(a) > Lbox - 2) continue;
      e = std::max(e, (Dc.middleRows(a * n, n) - Cd.middleRows(a * n, n)).cwiseAbs().maxCoeff());
    }
    CHECK(e < 1e-12);
  }

  TEST_CASE("decay norm is submultiplicative up to the algebra constant") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> U(-1, 1);
    Basis b = full_basis(4);
    for (int trial = 0; trial < 5; ++trial) {
      DecayMatrix A(1, 2, b, b), B(1, 2, b, b);
      for (auto* X : {&A, &B})
        for (auto& blk : X->blocks)
          for (int r = 0; r < b.size(); ++r)
            for (int c = 0; c < b.size(); ++c) blk(r, c) = cd(U(rng), U(rng)) * std::exp(-std::abs(r - c) * 0.5);
      const double s = 1.5;
      DecayMatrix C = toeplitz_product(A, B, 4);
      // C(s) = sum_{l, j} <l, j>^{-2s} bounds the tame constant.
      double cs = 0;
      for (int l = -20; l <= 20; ++l)
        for (int j = -20; j <= 20; ++j) cs += std::pow(bracket(std::abs(l), j), -2 * s);
      CHECK(decay_norm(C, s) <= 2.0 * std::sqrt(cs) * decay_norm(A, s) * decay_norm(B, s));
    }
  }

  TEST_CASE("diffeomorphism inverse") {
    const int J = 4, Nx = 32;
    std::vector<cd> beta(2 * J + 1, 0.0);
    beta[J + 1] = cd(0.0, -0.05);
    beta[J - 1] = cd(0.0, 0.05);  // beta = 0.1 sin x
    auto bt = invert_diffeo_grid(beta, J, Nx, 1e-14, 200);
    double e = 0;
    for (int k = 0; k < Nx; ++k) {
      double y = 2 * M_PI * k / Nx;
      double x = y + bt[k];
      e = std::max(e, std::abs(x + 0.1 * std::sin(x) - y));
    }
    CHECK(e < 1e-12);
  }

  TEST_CASE("binary field round trip and corruption detection") {
    std::mt19937_64 rng(8);
    FourierField u = random_real_field(2, 2, 3, rng, 1.0);
    auto path = (std::filesystem::temp_directory_path() / "kamkdv_field_test.bin").string();
    write_binary(u, path);
    FourierField v = read_binary(path);
    CHECK((u - v).max_abs() == 0.0);
    std::filesystem::resize_file(path, 40);
    CHECK_THROWS_AS(read_binary(path), Error);
    std::filesystem::remove(path);
  }

  TEST_CASE("sobolev norm weights") {
    FourierField u(1, 3, 3);
    u.set({2}, 1, 1.0);
    CHECK(sobolev_norm(u, 1.0) == doctest::Approx(2.0));
    CHECK(sobolev_norm(u, 0.0) == doctest::Approx(1.0));
  }
}
