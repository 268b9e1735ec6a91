#include <doctest.h>

#include <random>

#include "kamkdv/nashmoser.hpp"

using namespace kamkdv;

namespace {

KdVModel small_model(double eps, int L = 2, int J = 12) {
  SiteSet S({1, 3});
  Params p = Params::make(eps, 0.1, {1.2, 1.7}, S);
  Truncation tr;
  tr.nu = 2;
  tr.L = L;
  tr.J = J;
  return KdVModel(S, p, NonlinearitySpec::ux5(), tr);
}

TorusEmbedding random_torus(int L, int J, double amp, std::mt19937_64& rng) {
  TorusEmbedding i = TorusEmbedding::trivial(2, L, J);
  for (int k = 0; k < 2; ++k) {
    i.Theta[k] = random_real_field(2, L, 0, rng, amp, 0.5, false);
    i.y[k] = random_real_field(2, L, 0, rng, amp, 0.5, false);
  }
  i.z = random_real_field(2, L, J, rng, amp, 0.5, true, {1, -1, 3, -3});
  return i;
}

}  // namespace

TEST_SUITE("hamsys") {
  TEST_CASE("parameter derivation") {
    SiteSet S({1, 3});
    Params p = Params::make(1e-3, 0.1, {1.0, 2.0}, S);
    CHECK(p.b == doctest::Approx(1.05));
    CHECK(p.gamma == doctest::Approx(std::pow(1e-3, 2.1)));
    CHECK(p.tau == doctest::Approx(4.0));
    auto xi = amp_freq_map(p.omega, p.eps, S);
    CHECK(xi[0] == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(xi[1] == doctest::Approx(2.0).epsilon(1e-8));
    CHECK(p.omega[1] == doctest::Approx(27.0 - 6e-6 * 2.0 / 3.0).epsilon(1e-14));
  }

  TEST_CASE("trivial torus is invariant at zero amplitude") {
    KdVModel m = small_model(0.0);
    Residual F = m.eval_F(TorusEmbedding::trivial(2, 2, 12), {0.0, 0.0});
    CHECK(F.norm(m.s0()) == 0.0);
  }

  TEST_CASE("residual at the trivial torus is small") {
    KdVModel m1 = small_model(1e-3), m2 = small_model(5e-4);
    const double f1 = m1.eval_F(TorusEmbedding::trivial(2, 2, 12), {0, 0}).norm(m1.s0());
    const double f2 = m2.eval_F(TorusEmbedding::trivial(2, 2, 12), {0, 0}).norm(m2.s0());
    CHECK(f1 < 1e-3);
    // Leading order eps^{6 - 2b}.
    CHECK(std::log(f1 / f2) / std::log(2.0) > 3.5);
  }

  TEST_CASE("linearization matches finite differences") {
    KdVModel m = small_model(1e-2);
    std::mt19937_64 rng(9);
    TorusEmbedding i = random_torus(2, 12, 1e-3, rng), di = random_torus(2, 12, 1.0, rng);
    std::vector<double> z{1e-4, -2e-4}, dz{0.3, -0.1};
    Residual lin = m.dF(i, di, dz);
    const double h = 1e-6;
    TorusEmbedding ip = i, im = i;
    ip.axpy(h, di);
    im.axpy(-h, di);
    std::vector<double> zp{z[0] + h * dz[0], z[1] + h * dz[1]}, zm{z[0] - h * dz[0], z[1] - h * dz[1]};
    Residual Fp = m.eval_F(ip, zp), Fm = m.eval_F(im, zm);
    double e = 0, scale = 0;
    for (int k = 0; k < 2; ++k) {
      e = std::max(e, (cd(0.5 / h) * (Fp.F1[k] - Fm.F1[k]) - lin.F1[k]).max_abs());
      e = std::max(e, (cd(0.5 / h) * (Fp.F2[k] - Fm.F2[k]) - lin.F2[k]).max_abs());
      scale = std::max(scale, lin.F1[k].max_abs());
    }
    e = std::max(e, (cd(0.5 / h) * (Fp.F3 - Fm.F3) - lin.F3).max_abs());
    CHECK(e < 1e-6 * std::max(1.0, scale));
  }

  TEST_CASE("diophantine check reports the worst offender") {
    auto r = diophantine_check({1.0, std::sqrt(2.0)}, 1e-2, 3.0, 5);
    CHECK(r.ok);
    auto bad = diophantine_check({1.0, 2.0}, 1e-2, 3.0, 5);
    CHECK_FALSE(bad.ok);
    CHECK(bad.worst_value < 1e-12);
  }

  TEST_CASE("d_omega inverse") {
    std::mt19937_64 rng(10);
    FourierField g = random_real_field(2, 3, 4, rng, 1.0, 0.5, false);
    for (int j = -4; j <= 4; ++j) g.at(g.lindex().zero(), j) = 0.0;
    std::vector<double> w{1.0, std::sqrt(2.0)};
    CHECK((d_omega(d_omega_inverse(g, w), w) - g).max_abs() < 1e-13);
    g.at(g.lindex().zero(), 1) = 1.0;
    CHECK_THROWS_AS(d_omega_inverse(g, w), Error);
  }

  TEST_CASE("embedding leaves the chart for negative actions") {
    KdVModel m = small_model(0.5);
    TorusEmbedding i = TorusEmbedding::trivial(2, 2, 12);
    i.y[0].at(i.y[0].lindex().zero(), 0) = -1e6;
    CHECK_THROWS_AS(aa_embed(i, m.params(), m.sites()), Error);
  }
}

TEST_CASE("parallel residual matches the serial reference" * doctest::test_suite("hamsys")) {
  KdVModel m = small_model(1e-2);
  std::mt19937_64 rng(12);
  TorusEmbedding i = random_torus(2, 12, 1e-3, rng);
  m.parallel = false;
  Residual a = m.eval_F(i, {1e-4, 0.0});
  m.parallel = true;
  Residual b = m.eval_F(i, {1e-4, 0.0});
  CHECK((a - b).norm(m.s0()) == 0.0);
}
