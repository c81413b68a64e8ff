#ifndef POGRAD_BASELINES_HPP
#define POGRAD_BASELINES_HPP

#include "pograd/hard_likelihood.hpp"
#include "pograd/poset.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <vector>

namespace pograd {

// Pairwise precedence frequencies r(i, j) = before(i, j) / together(i, j).
// Pairs that never co-occur are skipped. Edge i -> j when r(i, j) > theta and
// r(i, j) > r(j, i), weighted |r(i, j) - r(j, i)| for cycle breaking.
PartialOrder majority_fit(Eigen::Index n_items, std::span<const Trace> traces, double theta = 0.5);

// 1 - exp(-sum_{l=1..k} W^l) with a zero diagonal.
Eigen::MatrixXd softdag_reachability(const Eigen::MatrixXd& w, int k_hops);

// tr(sum_{k=0..degree} (W o W)^k / k!) - n.
double notears_penalty(const Eigen::MatrixXd& w, int taylor_degree);
// Gradient of notears_penalty with respect to W.
Eigen::MatrixXd notears_penalty_gradient(const Eigen::MatrixXd& w, int taylor_degree);

struct SoftDagConfig {
  double lambda_l1 = 1e-3;
  double lambda_h = 10.0;
  int k_hops = 0;         // 0 selects min(8, n - 1)
  int taylor_degree = 0;  // 0 selects max(k_hops, 12)
  double adam_lr = 0.05;
  int steps = 400;
  int restarts = 3;
  double init_mean = -2.0;
  double init_sd = 0.1;
  double validation_fraction = 0.2;
  double theta_dag = 0.5;
  std::uint64_t seed = 1;

  int hops(Eigen::Index n) const;
  int degree(Eigen::Index n) const;
  void validate() const;  // ConfigError
};

// Edge logits A (diagonal ignored) and eta_beta = log beta.
struct SoftDagParams {
  Eigen::MatrixXd a;
  double eta_beta = 0.0;

  // sigmoid(A) with a zero diagonal.
  Eigen::MatrixXd w() const;
};

struct SoftDagLoss {
  double value = 0.0;
  Eigen::MatrixXd d_a;  // zero diagonal
  double d_eta_beta = 0.0;
};

// -log p(traces | R_K(W), beta) + lambda_l1 |W|_1 + lambda_h h(W)^2 and its
// gradient.
SoftDagLoss softdag_loss(const SoftDagParams& p, std::span<const Trace> traces,
                         const SoftDagConfig& cfg);

// Mean next-item NLL of the traces under R_K(W).
double softdag_step_nll(const Eigen::MatrixXd& w, double beta, std::span<const Trace> traces,
                        int k_hops);

struct SoftDagResult {
  PartialOrder order;
  Eigen::MatrixXd w;
  double beta = 1.0;
  double val_step_nll = 0.0;
  double lambda_l1 = 0.0;
  double lambda_h = 0.0;
};

// Adam from restarts A ~ N(init_mean, init_sd^2), fit on a seeded 80/20
// split of the traces; the restart with the lowest validation step NLL is
// decoded at theta_dag. Needs at least two traces. Throws NumericalError if
// every restart goes non-finite.
SoftDagResult softdag_fit(Eigen::Index n_items, std::span<const Trace> traces,
                          const SoftDagConfig& cfg);

// softdag_fit over the lambda_l1 x lambda_h grid, keeping the lowest
// validation step NLL. Empty grids fall back to the values in cfg.
SoftDagResult softdag_select(Eigen::Index n_items, std::span<const Trace> traces,
                             const SoftDagConfig& cfg, std::vector<double> lambda_l1_grid = {1e-4, 1e-3, 1e-2},
                             std::vector<double> lambda_h_grid = {1.0, 10.0, 100.0});

}  // namespace pograd

#endif  // POGRAD_BASELINES_HPP
