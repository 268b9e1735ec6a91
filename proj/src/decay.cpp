#include "kamkdv/decay.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace kamkdv {

Basis::Basis(std::vector<int> m) : modes(std::move(m)) {
  Jmax = 0;
  for (int j : modes) Jmax = std::max(Jmax, std::abs(j));
  pos.assign(2 * Jmax + 1, -1);
  for (int k = 0; k < size(); ++k) pos[modes[k] + Jmax] = k;
}

Basis normal_basis(int J, const std::vector<int>& S) {
  std::vector<int> m;
  for (int j = -J; j <= J; ++j) {
    if (j == 0) continue;
    if (std::find(S.begin(), S.end(), j) != S.end()) continue;
    m.push_back(j);
  }
  return Basis(m);
}

Basis full_basis(int J) { return normal_basis(J, {}); }

DecayMatrix::DecayMatrix(int nu, int L, Basis r, Basis c)
    : li(nu, L), rows(std::move(r)), cols(std::move(c)), blocks(li.n, MatC::Zero(rows.size(), cols.size())) {}

double decay_norm(const DecayMatrix& A, double s) {
  std::map<std::pair<int, int>, double> sup;  // (lidx, dj) -> sup
  for (int li = 0; li < A.li.n; ++li) {
    const MatC& B = A.blocks[li];
    for (int a = 0; a < B.rows(); ++a)
      for (int b = 0; b < B.cols(); ++b) {
        double v = std::abs(B(a, b));
        if (v == 0) continue;
        auto key = std::make_pair(li, A.rows.modes[a] - A.cols.modes[b]);
        auto it = sup.find(key);
        if (it == sup.end())
          sup.emplace(key, v);
        else
          it->second = std::max(it->second, v);
      }
  }
  double acc = 0;
  for (const auto& kv : sup) {
    double w = bracket(A.li.norm_inf(kv.first.first), kv.first.second);
    acc += kv.second * kv.second * std::pow(w, 2 * s);
  }
  return std::sqrt(acc);
}

DecayMatrix multiplication_matrix(const FourierField& p, const Basis& b) {
  DecayMatrix A(p.nu(), p.L(), b, b);
  for (int li = 0; li < p.nl(); ++li)
    for (int r = 0; r < b.size(); ++r)
      for (int c = 0; c < b.size(); ++c) {
        int d = b.modes[r] - b.modes[c];
        if (std::abs(d) <= p.J()) A.blocks[li](r, c) = p.at(li, d);
      }
  return A;
}

DecayMatrix toeplitz_product(const DecayMatrix& A, const DecayMatrix& B, int Lout) {
  DecayMatrix C(A.li.nu, Lout, A.rows, B.cols);
  std::vector<int> l(A.li.nu);
  for (int i = 0; i < A.li.n; ++i) {
    auto l1 = A.li.comps(i);
    for (int k = 0; k < B.li.n; ++k) {
      auto l2 = B.li.comps(k);
      for (int d = 0; d < A.li.nu; ++d) l[d] = l1[d] + l2[d];
      int o = C.li.index(l);
      if (o < 0) continue;
      C.blocks[o] += A.blocks[i] * B.blocks[k];
    }
  }
  return C;
}

MatC toeplitz_dense(const DecayMatrix& A, int Lbox, const std::vector<double>* omega) {
  LIndex box(A.li.nu, Lbox);
  const int nr = A.rows.size(), nc = A.cols.size();
  MatC D = MatC::Zero(static_cast<Eigen::Index>(box.n) * nr, static_cast<Eigen::Index>(box.n) * nc);
  std::vector<int> dl(A.li.nu);
  for (int a = 0; a < box.n; ++a) {
    auto la = box.comps(a);
    for (int b = 0; b < box.n; ++b) {
      auto lb = box.comps(b);
      for (int d = 0; d < A.li.nu; ++d) dl[d] = la[d] - lb[d];
      int k = A.li.index(dl);
      if (k >= 0) D.block(static_cast<Eigen::Index>(a) * nr, static_cast<Eigen::Index>(b) * nc, nr, nc) = A.blocks[k];
    }
    if (omega && nr == nc) {
      double w = 0;
      for (int d = 0; d < A.li.nu; ++d) w += (*omega)[d] * la[d];
      for (int r = 0; r < nr; ++r) D(static_cast<Eigen::Index>(a) * nr + r, static_cast<Eigen::Index>(a) * nr + r) += cd(0.0, w);
    }
  }
  return D;
}

double dense_decay_norm(const MatC& D, int nu, int Lbox, const Basis& b, int Lin, int Jin, double s) {
  LIndex box(nu, Lbox);
  const int n = b.size();
  std::map<std::pair<std::vector<int>, int>, double> sup;
  for (int a = 0; a < box.n; ++a) {
    if (box.norm_inf(a) > Lin) continue;
    auto la = box.comps(a);
    for (int c = 0; c < box.n; ++c) {
      if (box.norm_inf(c) > Lin) continue;
      auto lc = box.comps(c);
      std::vector<int> dl(nu);
      for (int d = 0; d < nu; ++d) dl[d] = la[d] - lc[d];
      for (int r = 0; r < n; ++r) {
        if (std::abs(b.modes[r]) > Jin) continue;
        for (int q = 0; q < n; ++q) {
          if (std::abs(b.modes[q]) > Jin) continue;
          double v = std::abs(D(static_cast<Eigen::Index>(a) * n + r, static_cast<Eigen::Index>(c) * n + q));
          if (v == 0) continue;
          auto key = std::make_pair(dl, b.modes[r] - b.modes[q]);
          auto it = sup.find(key);
          if (it == sup.end())
            sup.emplace(key, v);
          else
            it->second = std::max(it->second, v);
        }
      }
    }
  }
  double acc = 0;
  for (const auto& kv : sup) {
    int linf = 0;
    for (int x : kv.first.first) linf = std::max(linf, std::abs(x));
    acc += kv.second * kv.second * std::pow(bracket(linf, kv.first.second), 2 * s);
  }
  return std::sqrt(acc);
}

}  // namespace kamkdv
