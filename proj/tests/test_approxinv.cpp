#include <doctest.h>

#include <memory>
#include <random>

#include "kamkdv/approxinv.hpp"

using namespace kamkdv;

namespace {

struct Setup {
  SiteSet S{{1, 3}};
  Params p;
  Truncation tr;
  std::unique_ptr<KdVModel> m;
  explicit Setup(double eps, int L = 2, int J = 12) {
    p = Params::make(eps, 0.1, {1.3, 1.6}, S);
    tr.nu = 2;
    tr.L = L;
    tr.J = J;
    m = std::make_unique<KdVModel>(S, p, NonlinearitySpec::ux5(), tr);
  }
};

TorusEmbedding random_torus(int L, int J, double amp, std::mt19937_64& rng) {
  TorusEmbedding i = TorusEmbedding::trivial(2, L, J);
  for (int k = 0; k < 2; ++k) {
    i.Theta[k] = random_real_field(2, L, 0, rng, amp, 0.5, false);
    i.y[k] = random_real_field(2, L, 0, rng, amp, 0.5, false);
    i.Theta[k].at(i.Theta[k].lindex().zero(), 0) = 0.0;
  }
  i.z = random_real_field(2, L, J, rng, amp, 0.5, true, {1, -1, 3, -3});
  return i;
}

// Dense L_omega solve on the normal modes.
LinearSolve dense_solver(const ApproxInverse& ai, int L, int J, const Basis& nb) {
  LIndex li(2, L);
  const int n = li.n * nb.size();
  auto pack = [=](const FourierField& f) {
    VecC v(n);
    for (int i = 0; i < li.n; ++i)
      for (int k = 0; k < nb.size(); ++k) v[i * nb.size() + k] = f.at(i, nb.modes[k]);
    return v;
  };
  auto unpack = [=](const VecC& v) {
    FourierField f(2, L, J, true);
    for (int i = 0; i < li.n; ++i)
      for (int k = 0; k < nb.size(); ++k) f.at(i, nb.modes[k]) = v[i * nb.size() + k];
    return f;
  };
  auto A = std::make_shared<MatC>(n, n);
  for (int c = 0; c < n; ++c) {
    VecC e = VecC::Zero(n);
    e[c] = 1.0;
    A->col(c) = pack(ai.apply_L_omega(unpack(e)));
  }
  auto lu = std::make_shared<Eigen::PartialPivLU<MatC>>(*A);
  return [lu, pack, unpack](const FourierField& g) { return unpack(lu->solve(pack(g))); };
}

}  // namespace

TEST_SUITE("approxinv") {
  TEST_CASE("trivial torus needs no isotropic correction") {
    Setup s(1e-3);
    TorusEmbedding i = TorusEmbedding::trivial(2, 2, 12);
    IsotropicData iso = isotropic_correction(*s.m, i);
    for (const auto& r : iso.y_delta) CHECK(r.max_abs() < 1e-14);
  }

  TEST_CASE("pullback two-form matches the direct oracle") {
    Setup s(1e-2);
    std::mt19937_64 rng(1);
    TorusEmbedding i = random_torus(2, 12, 1e-4, rng);
    IsotropicData iso = isotropic_correction(*s.m, i);
    auto W = torus_two_form(*s.m, i);
    double e = 0, scale = 0;
    for (int k = 0; k < 2; ++k)
      for (int j = 0; j < 2; ++j) {
        e = std::max(e, (iso.A[k][j] - W[k][j]).max_abs());
        scale = std::max(scale, W[k][j].max_abs());
      }
    CHECK(scale > 0);
    CHECK(e < 1e-3 * scale + 1e-12);
  }

  TEST_CASE("isotropic torus has vanishing two-form") {
    Setup s(1e-2);
    std::mt19937_64 rng(2);
    TorusEmbedding i = random_torus(2, 12, 1e-4, rng);
    ApproxInverse ai(*s.m, i, {0, 0});
    auto W = torus_two_form(*s.m, ai.i_delta());
    auto W0 = torus_two_form(*s.m, i);
    double e = 0, e0 = 0;
    for (int k = 0; k < 2; ++k)
      for (int j = 0; j < 2; ++j) {
        e = std::max(e, W[k][j].max_abs());
        e0 = std::max(e0, W0[k][j].max_abs());
      }
    CHECK(e < 1e-2 * e0);
  }

  TEST_CASE("K20 is the twist of the normal form") {
    Setup s(1e-3);
    ApproxInverse ai(*s.m, TorusEmbedding::trivial(2, 2, 12), {0, 0});
    const double scale = std::pow(s.p.eps, 2 * s.p.b);
    // Diagonal entries -6 eps^{2b} (the off-diagonal vanishes for distinct sites).
    CHECK(ai.K().K20[0](0, 0).real() / scale == doctest::Approx(-6.0).epsilon(1e-2));
    CHECK(std::abs(ai.K().K20[0](0, 1)) / scale < 1e-2);
  }

  TEST_CASE("mean action equation: eta_hat = -c") {
    // With K11 = 0 and K20 = I the averaged first row gives eta_hat = -c for g = (c, 0, 0).
    Setup s(1e-3);
    ApproxInverse ai(*s.m, TorusEmbedding::trivial(2, 2, 12), {0, 0});
    std::vector<FourierField> g1, g2;
    for (int k = 0; k < 2; ++k) {
      g1.emplace_back(2, 2, 0);
      g2.emplace_back(2, 2, 0);
      g1[k].at(g1[k].lindex().zero(), 0) = 0.1 * (k + 1);
    }
    FourierField g3(2, 2, 12, true);
    auto sol = ai.solve_triangular(g1, g2, g3, dense_solver(ai, 2, 12, s.m->normal()));
    MatC K20 = ai.K().K20[0];
    CHECK(K20.isApprox(K20(0, 0) * MatC::Identity(2, 2), 1e-2));
    for (int k = 0; k < 2; ++k) {
      const cd eh = sol.eta[k].at(sol.eta[k].lindex().zero(), 0);
      CHECK(std::abs(eh * K20(k, k) + 0.1 * (k + 1)) < 1e-3 * 0.1 * (k + 1));
    }
  }

  TEST_CASE("triangular solve round trip") {
    Setup s(1e-3);
    std::mt19937_64 rng(3);
    TorusEmbedding i = random_torus(2, 12, 1e-5, rng);
    ApproxInverse ai(*s.m, i, {0, 0});
    std::vector<FourierField> g1, g2;
    for (int k = 0; k < 2; ++k) {
      g1.push_back(random_real_field(2, 2, 0, rng, 1.0, 0.5, false));
      g2.push_back(random_real_field(2, 2, 0, rng, 1.0, 0.5, false));
    }
    FourierField g3 = random_real_field(2, 2, 12, rng, 1.0, 0.5, true, s.S.s);
    auto sol = ai.solve_triangular(g1, g2, g3, dense_solver(ai, 2, 12, s.m->normal()));
    std::vector<FourierField> h1, h2;
    FourierField h3;
    ai.apply_D(sol, h1, h2, h3);
    double e = (h3 - g3).max_abs();
    for (int k = 0; k < 2; ++k) e = std::max({e, (h1[k] - g1[k]).max_abs(), (h2[k] - g2[k]).max_abs()});
    CHECK(e < 1e-10);
  }

  TEST_CASE("DG inverse round trip") {
    Setup s(1e-3);
    std::mt19937_64 rng(4);
    TorusEmbedding i = random_torus(2, 12, 1e-6, rng);
    ApproxInverse ai(*s.m, i, {0, 0});
    TorusEmbedding v = random_torus(2, 12, 1.0, rng);
    std::vector<FourierField> psi, eta;
    FourierField w;
    ai.DG_inverse(v, psi, eta, w);
    TorusEmbedding back = ai.DG(psi, eta, w);
    back.axpy(-1.0, v);
    CHECK(back.norm(0.0) < 1e-4 * v.norm(0.0));
  }

  TEST_CASE("T0 inverts dF at an exact torus") {
    Setup s(0.0);
    ApproxInverse ai(*s.m, TorusEmbedding::trivial(2, 2, 12), {0, 0});
    std::mt19937_64 rng(5);
    Residual g;
    for (int k = 0; k < 2; ++k) {
      g.F1.push_back(random_real_field(2, 2, 0, rng, 1.0, 0.5, false));
      g.F2.push_back(random_real_field(2, 2, 0, rng, 1.0, 0.5, false));
    }
    g.F3 = random_real_field(2, 2, 12, rng, 1.0, 0.5, true, s.S.s);
    // At eps = 0 the twist vanishes and the mean action equation is degenerate.
    CHECK_THROWS_WITH_AS(ai.apply_T0(g, dense_solver(ai, 2, 12, s.m->normal())),
                         doctest::Contains("frequency-amplitude degeneracy"), Error);
  }
}
