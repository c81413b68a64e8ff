// Shared generators and oracles for the unit and acceptance tests.
#ifndef POGRAD_TEST_SUPPORT_HPP
#define POGRAD_TEST_SUPPORT_HPP

#include "pograd/hard_likelihood.hpp"
#include "pograd/model.hpp"
#include "pograd/samplers.hpp"
#include "pograd/poset.hpp"
#include "pograd/rng.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <functional>
#include <numeric>
#include <random>
#include <vector>

namespace pograd::testing {

// 0 -> 1, 0 -> 2, 1 -> 3, 2 -> 3.
inline BoolMatrix diamond_cover() {
  BoolMatrix g = BoolMatrix::Constant(4, 4, false);
  g(0, 1) = g(0, 2) = g(1, 3) = g(2, 3) = true;
  return g;
}

inline PartialOrder diamond() { return PartialOrder::from_closure(transitive_closure(diamond_cover())); }

inline PartialOrder total_order(int n) {
  BoolMatrix g = BoolMatrix::Constant(n, n, false);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) g(i, j) = true;
  }
  return PartialOrder::from_closure(g);
}

inline ItemSet iota_items(int n) {
  ItemSet s(n);
  std::iota(s.begin(), s.end(), 0);
  return s;
}

inline BoolMatrix random_digraph(int n, double p, Rng& rng) {
  std::bernoulli_distribution coin(p);
  BoolMatrix g = BoolMatrix::Constant(n, n, false);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i != j) g(i, j) = coin(rng);
    }
  }
  return g;
}

// Edges only forward along a random permutation, so the result is acyclic.
inline BoolMatrix random_dag(int n, double p, Rng& rng) {
  ItemSet perm = iota_items(n);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::bernoulli_distribution coin(p);
  BoolMatrix g = BoolMatrix::Constant(n, n, false);
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) g(perm[a], perm[b]) = coin(rng);
  }
  return g;
}

inline PartialOrder random_poset(int n, double p, Rng& rng) {
  return PartialOrder::from_closure(transitive_closure(random_dag(n, p, rng)));
}

inline std::vector<ItemSet> all_permutations(ItemSet items) {
  std::sort(items.begin(), items.end());
  std::vector<ItemSet> out;
  do {
    out.push_back(items);
  } while (std::next_permutation(items.begin(), items.end()));
  return out;
}

// Central finite-difference gradient of f at x.
inline Eigen::VectorXd finite_difference(const std::function<double(const Eigen::VectorXd&)>& f,
                                         const Eigen::VectorXd& x, double h = 1e-5) {
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    xp(i) = x(i) + h;
    const double fp = f(xp);
    xp(i) = x(i) - h;
    const double fm = f(xp);
    xp(i) = x(i);
    g(i) = (fp - fm) / (2.0 * h);
  }
  return g;
}

// max_i |a_i - b_i| / max(1, |b_i|): relative error with an absolute floor
// for near-zero components.
inline double max_relative_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    worst = std::max(worst, std::abs(a(i) - b(i)) / std::max(1.0, std::abs(b(i))));
  }
  return worst;
}

// Embedding whose distinct rows differ by at least `delta` in every
// coordinate, so every pairwise hard margin satisfies |m| >= delta.
inline Eigen::MatrixXd separated_embedding(int n, int d, double delta, Rng& rng) {
  Eigen::MatrixXd u(n, d);
  std::uniform_int_distribution<int> jitter(0, 1);
  for (int k = 0; k < d; ++k) {
    ItemSet perm = iota_items(n);
    std::shuffle(perm.begin(), perm.end(), rng);
    for (int r = 0; r < n; ++r) u(perm[r], k) = delta * (2.0 * r + jitter(rng) * 0.5);
  }
  return u;
}

// Parameters whose embedding Z L_rho^T is exactly u.
inline ModelParams params_for_embedding(const Eigen::MatrixXd& u, double rho = 0.5, double beta = 1.0,
                                        double gamma = 1.0) {
  const Eigen::MatrixXd l = prior_cholesky(rho, static_cast<int>(u.cols()));
  ModelParams p;
  p.z = l.triangularView<Eigen::Lower>().solve(u.transpose()).transpose();
  p.rho = rho;
  p.beta = beta;
  p.gamma = gamma;
  return p;
}

inline DrawSet draws_for_embeddings(const std::vector<Eigen::MatrixXd>& us, double beta = 1.0,
                                    double gamma = 1.0) {
  DrawSet ds;
  for (const auto& u : us) ds.draws.push_back({params_for_embedding(u, 0.5, beta, gamma), 0.0});
  return ds;
}

// Rows (s x, -s x): every pair of items is incomparable.
inline Eigen::MatrixXd antichain_embedding(int n, double spread) {
  Eigen::MatrixXd u(n, 2);
  for (int x = 0; x < n; ++x) u.row(x) << spread * x, -spread * x;
  return u;
}

// Rows (s x, s x): item n-1 first, item 0 last.
inline Eigen::MatrixXd chain_embedding(int n, double spread) {
  Eigen::MatrixXd u(n, 2);
  for (int x = 0; x < n; ++x) u.row(x) << spread * x, spread * x;
  return u;
}

}  // namespace pograd::testing

#endif  // POGRAD_TEST_SUPPORT_HPP
