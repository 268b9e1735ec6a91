#pragma once

#include <string>
#include <vector>

namespace kamkdv {

struct SiteSet {
  std::vector<int> s_plus;  // sorted distinct positive integers
  std::vector<int> s;       // s_plus together with its negatives
  SiteSet() = default;
  explicit SiteSet(std::vector<int> plus);
  int nu() const { return static_cast<int>(s_plus.size()); }
  int max_site() const { return s_plus.empty() ? 0 : s_plus.back(); }
  bool contains(int j) const;
  // Tangential index of a site: ell(+-jbar_i) = +-e_i, returned as (i, sign).
  std::pair<int, int> ell(int j) const;
};

bool check_S1(const SiteSet& s);
bool check_S2(const SiteSet& s);
// Cube-sum identity checks over all tuples with |j| <= bound; returns number of failures.
long long verify_triple_identity(int bound);
long long verify_quadruple_identity(int bound);

// Polynomial exclusion test: true when adding candidate to a valid partial set keeps (S1)-(S2).
bool polynomial_admissible(const std::vector<int>& partial_plus, int candidate);

struct SiteReport {
  SiteSet sites;
  long long candidates_checked = 0;
  long long certifier_disagreements = 0;
};

// Smallest admissible extension chain starting at `start`; optionally cross-checks every candidate up to
// `crosscheck_bound` with both certifiers.
SiteReport generate_sites_report(int nu, int start, int crosscheck_bound = 0);
SiteSet generate_sites(int nu, int start);

}  // namespace kamkdv
