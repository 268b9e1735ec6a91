#include <doctest.h>

#include "kamkdv/sites.hpp"

using namespace kamkdv;

TEST_SUITE("sites") {
  TEST_CASE("cube-sum identities on a small range") {
    CHECK(verify_triple_identity(12) == 0);
    CHECK(verify_quadruple_identity(12) == 0);
  }

  TEST_CASE("two sites from one") {
    SiteSet S = generate_sites(2, 1);
    CHECK(S.s_plus == std::vector<int>{1, 3});
    CHECK(check_S1(S));
    CHECK(check_S2(S));
  }

  TEST_CASE("certifier agrees with enumeration") {
    for (int nu = 1; nu <= 3; ++nu) {
      SiteReport r = generate_sites_report(nu, 1, 30);
      CHECK(r.certifier_disagreements == 0);
      CHECK(r.sites.nu() == nu);
      CHECK(check_S1(r.sites));
      CHECK(check_S2(r.sites));
    }
  }

  TEST_CASE("site set with an arithmetic relation is rejected") {
    // 1 + 2 = 3 produces a resonant triple.
    const bool ok = check_S1(SiteSet({1, 2, 3})) && check_S2(SiteSet({1, 2, 3}));
    CHECK_FALSE(ok);
  }

  TEST_CASE("tangential index map") {
    SiteSet S({1, 3});
    auto [i, s] = S.ell(-3);
    CHECK(i == 1);
    CHECK(s == -1);
    CHECK(S.contains(-1));
    CHECK_FALSE(S.contains(2));
  }
}
