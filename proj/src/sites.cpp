#include "kamkdv/sites.hpp"

#include <algorithm>
#include <cstdlib>

#include "kamkdv/types.hpp"

namespace kamkdv {

SiteSet::SiteSet(std::vector<int> plus) : s_plus(std::move(plus)) {
  std::sort(s_plus.begin(), s_plus.end());
  for (size_t k = 0; k < s_plus.size(); ++k) {
    if (s_plus[k] <= 0) throw Error("SiteSet: sites must be positive");
    if (k > 0 && s_plus[k] == s_plus[k - 1]) throw Error("SiteSet: sites must be distinct");
  }
  for (int j : s_plus) s.push_back(j);
  for (int j : s_plus) s.push_back(-j);
  std::sort(s.begin(), s.end());
}

bool SiteSet::contains(int j) const { return std::binary_search(s.begin(), s.end(), j); }

std::pair<int, int> SiteSet::ell(int j) const {
  for (int i = 0; i < nu(); ++i) {
    if (s_plus[i] == j) return {i, 1};
    if (s_plus[i] == -j) return {i, -1};
  }
  return {-1, 0};
}

bool check_S1(const SiteSet& s) {
  for (int a : s.s)
    for (int b : s.s)
      for (int c : s.s)
        if (a + b + c == 0) return false;
  return true;
}

bool check_S2(const SiteSet& s) {
  for (int a : s.s)
    for (int b : s.s)
      for (int c : s.s)
        for (int d : s.s) {
          long long sig = a + b + c + d;
          if (sig == 0) continue;
          long long cube = 1LL * a * a * a + 1LL * b * b * b + 1LL * c * c * c + 1LL * d * d * d;
          if (cube - sig * sig * sig == 0) return false;
        }
  return true;
}

long long verify_triple_identity(int bound) {
  long long fails = 0;
  for (long long a = -bound; a <= bound; ++a)
    for (long long b = -bound; b <= bound; ++b) {
      long long c = -a - b;
      if (std::llabs(c) > bound) continue;
      if (a * a * a + b * b * b + c * c * c != 3 * a * b * c) ++fails;
    }
  return fails;
}

long long verify_quadruple_identity(int bound) {
  long long fails = 0;
  for (long long a = -bound; a <= bound; ++a)
    for (long long b = -bound; b <= bound; ++b)
      for (long long c = -bound; c <= bound; ++c) {
        long long d = -a - b - c;
        if (std::llabs(d) > bound) continue;
        long long lhs = a * a * a + b * b * b + c * c * c + d * d * d;
        if (lhs != -3 * (a + b) * (a + c) * (b + c)) ++fails;
      }
  return fails;
}

bool polynomial_admissible(const std::vector<int>& partial_plus, int x) {
  std::vector<int> Jn;
  for (int j : partial_plus) {
    Jn.push_back(j);
    Jn.push_back(-j);
  }
  for (int j : partial_plus)
    if (j == x) return false;
  const long long X = x;
  // (S1) case (ii): x not a sum of two old elements; case (iii): x not half an old element.
  for (int a : Jn)
    for (int b : Jn)
      if (std::llabs(a + b) == X) return false;
  for (int a : Jn)
    if (2 * X == std::llabs(a)) return false;
  // (S2) case (ii): three old, one new.
  for (long long a : Jn)
    for (long long b : Jn)
      for (long long c : Jn)
        for (int s4 : {-1, 1}) {
          long long t = a + b + c;
          if (t + s4 * X == 0) continue;
          long long p = -3 * t * X * X - 3 * t * t * s4 * X + (a * a * a + b * b * b + c * c * c - t * t * t);
          if (p == 0) return false;
        }
  // case (iii): two old, two new.
  for (long long a : Jn)
    for (long long b : Jn)
      for (int al : {-2, 0, 2}) {
        long long t = a + b;
        if (t + al * X == 0) continue;
        long long q = -3 * al * X * X * X - 3LL * al * al * t * X * X - 3 * t * t * al * X - a * b * t;
        if (q == 0) return false;
      }
  // case (iv): one old, three new.
  for (long long a : Jn)
    for (int al : {-3, -1, 1, 3}) {
      if (a + al * X == 0) continue;
      long long r = (1 - al * al) * X * X - 3 * al * a * X - 3 * a * a;
      if (r == 0) return false;
    }
  // case (v) never excludes.
  return true;
}

SiteReport generate_sites_report(int nu, int start, int crosscheck_bound) {
  if (nu < 1) throw Error("generate_sites: nu must be >= 1");
  if (start < 1) throw Error("generate_sites: start must be positive");
  SiteReport rep;
  std::vector<int> cur{start};
  while (static_cast<int>(cur.size()) < nu) {
    int chosen = -1;
    const int last = cur.back();
    for (int c = last + 1; c < last + 1000000; ++c) {
      ++rep.candidates_checked;
      std::vector<int> trial = cur;
      trial.push_back(c);
      bool poly = polynomial_admissible(cur, c);
      if (chosen < 0 || c <= crosscheck_bound) {
        SiteSet ts(trial);
        bool brute = check_S1(ts) && check_S2(ts);
        if (brute != poly) ++rep.certifier_disagreements;
        if (chosen < 0 && brute) chosen = c;
      }
      if (chosen >= 0 && c >= crosscheck_bound) break;
    }
    if (chosen < 0) throw Error("generate_sites: candidate cap exceeded");
    cur.push_back(chosen);
  }
  rep.sites = SiteSet(cur);
  return rep;
}

SiteSet generate_sites(int nu, int start) { return generate_sites_report(nu, start, 0).sites; }

}  // namespace kamkdv
