#include <doctest.h>

#include <cmath>
#include <random>

#include "kamkdv/wbnf.hpp"

using namespace kamkdv;

namespace {

// Real zero-mean coordinates u[j + C] with max |u_j| = r.
std::vector<cd> random_coords(int C, double r, std::mt19937_64& rng) {
  std::normal_distribution<double> N;
  std::vector<cd> u(2 * C + 1, 0.0);
  double m = 0;
  for (int j = 1; j <= C; ++j) {
    u[j + C] = cd(N(rng), N(rng)) / double(j);
    m = std::max(m, std::abs(u[j + C]));
  }
  for (int j = 1; j <= C; ++j) {
    u[j + C] *= r / m;
    u[-j + C] = std::conj(u[j + C]);
  }
  return u;
}

cd symplectic(const std::vector<cd>& a, const std::vector<cd>& b, int C) {
  cd s = 0;
  for (int j = -C; j <= C; ++j)
    if (j != 0) s += a[j + C] * b[-j + C] / cd(0.0, j);
  return s;
}

}  // namespace

TEST_SUITE("wbnf") {
  TEST_CASE("cubic homological equation") {
    WeakBNF B(SiteSet({1, 3}), NonlinearitySpec::ux5());
    HomogPoly r = h2_bracket(B.F3);
    r += B.H3.filtered([&](const Mono& m) { return B.in_A3(m); });
    CHECK(r.max_abs() < 1e-14);
    CHECK(B.NF3.filtered([&](const Mono& m) { return B.in_A3(m); }).size() == 0);
  }

  TEST_CASE("generators conserve momentum and are real") {
    WeakBNF B(SiteSet({1, 3}), NonlinearitySpec::ux5());
    for (const HomogPoly* P : {&B.F3, &B.F4, &B.F5, &B.NF4, &B.NF5}) {
      CHECK(P->momentum_defect() == 0.0);
      CHECK(P->reality_defect() < 1e-12);
    }
    CHECK(B.F3.size() > 0);
    CHECK(B.F4.size() > 0);
  }

  TEST_CASE("quartic normal form is resonant") {
    WeakBNF B(SiteSet({1, 3}), NonlinearitySpec::ux5());
    for (const auto& [m, c] : B.NF4.terms()) CHECK_FALSE(B.in_A4(m));
  }

  TEST_CASE("forward and inverse maps compose to the identity") {
    WeakBNF B(SiteSet({1, 3}), NonlinearitySpec::ux5());
    std::mt19937_64 rng(2);
    auto u = random_coords(B.CE, 1e-2, rng);
    auto w = u;
    B.forward(w.data());
    double moved = 0;
    for (int k = 0; k < B.ncoords(); ++k) moved = std::max(moved, std::abs(w[k] - u[k]));
    CHECK(moved > 1e-6);
    B.inverse(w.data());
    double e = 0;
    for (int k = 0; k < B.ncoords(); ++k) e = std::max(e, std::abs(w[k] - u[k]));
    CHECK(e < 1e-13);
  }

  TEST_CASE("Birkhoff map is symplectic") {
    WeakBNF B(SiteSet({1, 3}), NonlinearitySpec::ux5());
    std::mt19937_64 rng(3);
    const int C = B.CE;
    auto u = random_coords(C, 3e-2, rng);
    auto h1 = random_coords(C, 1.0, rng), h2 = random_coords(C, 1.0, rng);
    auto push = [&](const std::vector<cd>& h) {
      std::vector<Dual> x(B.ncoords());
      for (int k = 0; k < B.ncoords(); ++k) x[k] = Dual(u[k], h[k]);
      B.forward(x.data());
      std::vector<cd> d(B.ncoords());
      for (int k = 0; k < B.ncoords(); ++k) d[k] = x[k].b;
      return d;
    };
    const cd before = symplectic(h1, h2, C), after = symplectic(push(h1), push(h2), C);
    CHECK(std::abs(after - before) < 1e-8 * std::abs(before));
  }

  TEST_CASE("normal form cancels through degree five") {
    SiteSet S({1, 3});
    NonlinearitySpec nl = NonlinearitySpec::ux5();
    WeakBNF B(S, nl);
    NonlinearGrid ng(nl, B.CE);
    std::mt19937_64 rng(4);
    auto base = random_coords(B.CE, 1.0, rng);
    std::vector<double> d;
    for (double r : {1e-2, 5e-3}) {
      std::vector<cd> u(B.ncoords()), uw(2 * B.W + 1, 0.0);
      for (int k = 0; k < B.ncoords(); ++k) u[k] = r * base[k];
      for (int j = -B.CE; j <= B.CE; ++j) uw[j + B.W] = u[j + B.CE];
      const cd nf = B.normal_form(uw.data());
      B.forward(u.data());
      d.push_back(std::abs(ng.energy(u.data()) - nf));
    }
    const double slope = std::log(d[0] / d[1]) / std::log(2.0);
    CHECK(slope > 5.5);
  }

  TEST_CASE("richardson defect is below the flow tolerance") {
    WeakBNF B(SiteSet({1, 3}), NonlinearitySpec::ux5());
    std::mt19937_64 rng(5);
    auto u = random_coords(B.CE, 1e-2, rng);
    for (int k : {3, 4, 5}) CHECK(B.richardson_defect(k, u.data()) < defaults::flow_richardson_tol);
  }
}
