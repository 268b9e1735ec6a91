#include "kamkdv/poly.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace kamkdv {

double orderings(const Mono& m) {
  double r = std::tgamma(static_cast<double>(m.size()) + 1.0);
  size_t i = 0;
  while (i < m.size()) {
    size_t k = i;
    while (k < m.size() && m[k] == m[i]) ++k;
    r /= std::tgamma(static_cast<double>(k - i) + 1.0);
    i = k;
  }
  return r;
}

void HomogPoly::add(Mono m, cd c) {
  if (static_cast<int>(m.size()) != degree_) throw Error("HomogPoly: degree mismatch");
  std::sort(m.begin(), m.end());
  terms_[m] += c;
}

cd HomogPoly::coeff(Mono m) const {
  std::sort(m.begin(), m.end());
  auto it = terms_.find(m);
  return it == terms_.end() ? cd(0.0) : it->second;
}

cd HomogPoly::sym_coeff(Mono m) const {
  std::sort(m.begin(), m.end());
  return coeff(m) / orderings(m);
}

HomogPoly& HomogPoly::operator+=(const HomogPoly& o) {
  if (o.degree_ != degree_ && !o.terms_.empty()) throw Error("HomogPoly: degree mismatch");
  for (const auto& [m, c] : o.terms_) terms_[m] += c;
  return *this;
}

HomogPoly& HomogPoly::operator-=(const HomogPoly& o) {
  if (o.degree_ != degree_ && !o.terms_.empty()) throw Error("HomogPoly: degree mismatch");
  for (const auto& [m, c] : o.terms_) terms_[m] -= c;
  return *this;
}

HomogPoly HomogPoly::scaled(cd s) const {
  HomogPoly r(degree_);
  for (const auto& [m, c] : terms_) r.terms_[m] = s * c;
  return r;
}

HomogPoly HomogPoly::filtered(const std::function<bool(const Mono&)>& keep) const {
  HomogPoly r(degree_);
  for (const auto& [m, c] : terms_)
    if (keep(m)) r.terms_[m] = c;
  return r;
}

void HomogPoly::prune(double tol) {
  for (auto it = terms_.begin(); it != terms_.end();) {
    if (std::abs(it->second) <= tol)
      it = terms_.erase(it);
    else
      ++it;
  }
}

template <class T> T HomogPoly::eval(const T* u, int W) const {
  T acc(0.0);
  for (const auto& [m, c] : terms_) {
    T p(c);
    bool inside = true;
    for (int j : m) {
      if (std::abs(j) > W) {
        inside = false;
        break;
      }
      p *= u[j + W];
    }
    if (inside) acc += p;
  }
  return acc;
}
template cd HomogPoly::eval<cd>(const cd*, int) const;
template Dual HomogPoly::eval<Dual>(const Dual*, int) const;

double HomogPoly::momentum_defect() const {
  double d = 0;
  for (const auto& [m, c] : terms_)
    if (index_sum(m) != 0) d = std::max(d, std::abs(c));
  return d;
}

double HomogPoly::reality_defect() const {
  double d = 0;
  for (const auto& [m, c] : terms_) {
    Mono n(m.size());
    for (size_t k = 0; k < m.size(); ++k) n[k] = -m[k];
    d = std::max(d, std::abs(coeff(n) - std::conj(c)));
  }
  return d;
}

int HomogPoly::max_index() const {
  int r = 0;
  for (const auto& kv : terms_)
    for (int j : kv.first) r = std::max(r, std::abs(j));
  return r;
}

double HomogPoly::max_abs() const {
  double r = 0;
  for (const auto& kv : terms_) r = std::max(r, std::abs(kv.second));
  return r;
}

namespace {

struct Split {
  int mult;
  Mono rest;
};

// Distinct indices of a monomial with multiplicity and the monomial with one copy removed.
std::vector<std::pair<int, Split>> splits(const Mono& m) {
  std::vector<std::pair<int, Split>> out;
  size_t i = 0;
  while (i < m.size()) {
    size_t k = i;
    while (k < m.size() && m[k] == m[i]) ++k;
    Mono rest;
    rest.reserve(m.size() - 1);
    for (size_t t = 0; t < m.size(); ++t)
      if (t != i) rest.push_back(m[t]);
    out.push_back({m[i], Split{static_cast<int>(k - i), rest}});
    i = k;
  }
  return out;
}

Mono merge(const Mono& a, const Mono& b) {
  Mono r;
  r.reserve(a.size() + b.size());
  std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(r));
  return r;
}

void enumerate_zero_sum(int n, int W, Mono& cur, int lo, long long sum, std::vector<Mono>& out) {
  int left = n - static_cast<int>(cur.size());
  if (left == 0) {
    if (sum == 0) out.push_back(cur);
    return;
  }
  for (int j = lo; j <= W; ++j) {
    if (j == 0) continue;
    // Remaining indices are >= j, so the final sum is at least sum + left * j.
    if (sum + 1LL * left * j > 0) break;
    if (sum + 1LL * j + 1LL * (left - 1) * W < 0) continue;
    cur.push_back(j);
    enumerate_zero_sum(n, W, cur, j, sum + j, out);
    cur.pop_back();
  }
}

std::vector<Mono> zero_sum_monomials(int n, int W) {
  std::vector<Mono> out;
  Mono cur;
  enumerate_zero_sum(n, W, cur, -W, 0, out);
  return out;
}

}  // namespace

HomogPoly poisson_bracket(const HomogPoly& P, const HomogPoly& Q) {
  HomogPoly R(P.degree() + Q.degree() - 2);
  std::unordered_map<int, std::vector<std::pair<const Split*, cd>>> qidx;
  std::vector<std::vector<std::pair<int, Split>>> qsplits;
  qsplits.reserve(Q.size());
  for (const auto& [m, c] : Q.terms()) {
    qsplits.push_back(splits(m));
    for (const auto& s : qsplits.back()) qidx[s.first].push_back({&s.second, c});
  }
  for (const auto& [m, c] : P.terms()) {
    for (const auto& [a, sp] : splits(m)) {
      auto it = qidx.find(-a);
      if (it == qidx.end()) continue;
      for (const auto& [sq, cq] : it->second) {
        cd v = I1 * static_cast<double>(a) * static_cast<double>(sp.mult * sq->mult) * c * cq;
        R.add(merge(sp.rest, sq->rest), v);
      }
    }
  }
  return R;
}

HomogPoly h2_bracket(const HomogPoly& F) {
  HomogPoly R(F.degree());
  for (const auto& [m, c] : F.terms()) R.add(m, -I1 * static_cast<double>(cube_sum(m)) * c);
  return R;
}

HomogPoly cubic_hamiltonian(int W) { return monomial_hamiltonian(1.0, 3, 0, W); }

HomogPoly monomial_hamiltonian(cd c, int p, int q, int W) {
  const int n = p + q;
  HomogPoly H(n);
  for (const Mono& m : zero_sum_monomials(n, W)) {
    // Elementary symmetric polynomial e_q of (i j_k).
    std::vector<cd> e(q + 1, cd(0.0));
    e[0] = 1.0;
    for (int j : m)
      for (int r = q; r >= 1; --r) e[r] += e[r - 1] * (I1 * static_cast<double>(j));
    double binom = std::tgamma(n + 1.0) / (std::tgamma(q + 1.0) * std::tgamma(p + 1.0));
    cd v = c * orderings(m) * e[q] / binom;
    if (v != cd(0.0)) H.add(m, v);
  }
  return H;
}

PolyField::PolyField(const HomogPoly& F, int C_) : C(C_), order(F.degree() - 1) {
  if (order < 0 || order > 7) throw Error("PolyField: unsupported degree");
  for (const auto& [m, c] : F.terms()) {
    for (const auto& [a, sp] : splits(m)) {
      int target = -a;
      if (std::abs(target) > C) throw Error("PolyField: generator support exceeds coordinate window");
      target_.push_back(target + C);
      coef_.push_back(I1 * static_cast<double>(target) * static_cast<double>(sp.mult) * c);
      for (int r : sp.rest) {
        if (std::abs(r) > C) throw Error("PolyField: generator support exceeds coordinate window");
        rest_.push_back(r + C);
      }
    }
  }
  std::vector<double> rows(2 * C + 1, 0.0);
  for (size_t t = 0; t < target_.size(); ++t) rows[target_[t]] += std::abs(coef_[t]);
  for (double v : rows) row_sum_ = std::max(row_sum_, v);
}

double PolyField::lipschitz(double r) const {
  if (order == 0) return 0.0;
  return order * row_sum_ * std::pow(r, order - 1);
}

template <class T> void PolyField::eval(const T* u, T* out) const {
  const size_t n = target_.size();
  for (size_t t = 0; t < n; ++t) {
    const int* r = rest_.data() + t * order;
    T p(coef_[t]);
    for (int k = 0; k < order; ++k) p *= u[r[k]];
    out[target_[t]] += p;
  }
}

template <class T> void PolyField::jvp(const T* u, const T* du, T* out) const {
  const size_t n = target_.size();
  T pre[8], suf[8];
  for (size_t t = 0; t < n; ++t) {
    const int* r = rest_.data() + t * order;
    pre[0] = T(1.0);
    for (int k = 0; k < order; ++k) pre[k + 1] = pre[k] * u[r[k]];
    suf[order] = T(1.0);
    for (int k = order - 1; k >= 0; --k) suf[k] = suf[k + 1] * u[r[k]];
    T acc(0.0);
    for (int k = 0; k < order; ++k) acc += pre[k] * du[r[k]] * suf[k + 1];
    out[target_[t]] += coef_[t] * acc;
  }
}

template void PolyField::eval<cd>(const cd*, cd*) const;
template void PolyField::eval<Dual>(const Dual*, Dual*) const;
template void PolyField::jvp<cd>(const cd*, const cd*, cd*) const;
template void PolyField::jvp<Dual>(const Dual*, const Dual*, Dual*) const;

}  // namespace kamkdv
