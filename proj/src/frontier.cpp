#include "pograd/frontier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace pograd {

double frontier_step_logprob(const Eigen::MatrixXd& prec, const Eigen::MatrixXd& log_complement,
                             std::span<const int> remaining, int chosen, double beta) {
  if (std::find(remaining.begin(), remaining.end(), chosen) == remaining.end()) {
    throw std::invalid_argument("frontier_step_logprob: chosen item not in remaining set");
  }
  std::vector<double> score;
  score.reserve(remaining.size());
  double chosen_score = 0.0;
  for (int x : remaining) {
    double phi = 0.0, s = 0.0;
    for (int z : remaining) {
      if (z == x) continue;
      phi += log_complement(z, x);
      s += prec(x, z);
    }
    const double a = phi + beta * std::log1p(s);
    score.push_back(a);
    if (x == chosen) chosen_score = a;
  }
  const double hi = *std::max_element(score.begin(), score.end());
  double denom = 0.0;
  for (double a : score) denom += std::exp(a - hi);
  return chosen_score - hi - std::log(denom);
}

namespace {

// Initial log-frontier weights and successor sums over the whole trace.
void init_state(const Eigen::MatrixXd& prec, const Eigen::MatrixXd& log_complement,
                const std::vector<int>& y, std::vector<double>& phi, std::vector<double>& succ) {
  const std::size_t m = y.size();
  phi.assign(m, 0.0);
  succ.assign(m, 0.0);
  for (std::size_t k = 0; k < m; ++k) {
    for (std::size_t j = 0; j < m; ++j) {
      if (j == k) continue;
      phi[k] += log_complement(y[j], y[k]);
      succ[k] += prec(y[k], y[j]);
    }
  }
}

}  // namespace

std::vector<double> frontier_step_logprobs(const Eigen::MatrixXd& prec,
                                           const Eigen::MatrixXd& log_complement,
                                           const Trace& trace, double beta) {
  const auto& y = trace.order;
  const std::size_t m = y.size();
  std::vector<double> phi, succ, score(m);
  init_state(prec, log_complement, y, phi, succ);
  std::vector<double> out(m);
  for (std::size_t t = 0; t < m; ++t) {
    double hi = -std::numeric_limits<double>::infinity();
    for (std::size_t k = t; k < m; ++k) {
      score[k] = phi[k] + beta * std::log1p(succ[k]);
      hi = std::max(hi, score[k]);
    }
    double denom = 0.0;
    for (std::size_t k = t; k < m; ++k) denom += std::exp(score[k] - hi);
    out[t] = score[t] - hi - std::log(denom);
    for (std::size_t k = t + 1; k < m; ++k) {
      phi[k] -= log_complement(y[t], y[k]);
      succ[k] -= prec(y[k], y[t]);
    }
  }
  return out;
}

double frontier_trace_loglik(const Eigen::MatrixXd& prec, const Eigen::MatrixXd& log_complement,
                             const Trace& trace, double beta) {
  double total = 0.0;
  for (double lp : frontier_step_logprobs(prec, log_complement, trace, beta)) total += lp;
  return total;
}

double accumulate_frontier_gradient(const Eigen::MatrixXd& prec,
                                    const Eigen::MatrixXd& log_complement, const Trace& trace,
                                    double beta, FrontierGradient& grad) {
  const auto& y = trace.order;
  const std::size_t m = y.size();
  if (m <= 1) return 0.0;
  std::vector<double> phi, succ, score(m);
  init_state(prec, log_complement, y, phi, succ);

  // Column t of cum_a holds, for each position k >= t, the running sum over
  // steps t' <= t of dll/da_{t'}(k); cum_b weights the same sums by
  // beta / (1 + S_{t'}(k)).
  Eigen::MatrixXd cum_a = Eigen::MatrixXd::Zero(m, m);
  Eigen::MatrixXd cum_b = Eigen::MatrixXd::Zero(m, m);
  double loglik = 0.0;
  for (std::size_t t = 0; t < m; ++t) {
    double hi = -std::numeric_limits<double>::infinity();
    for (std::size_t k = t; k < m; ++k) {
      score[k] = phi[k] + beta * std::log1p(succ[k]);
      hi = std::max(hi, score[k]);
    }
    double denom = 0.0;
    for (std::size_t k = t; k < m; ++k) denom += std::exp(score[k] - hi);
    const double log_denom = hi + std::log(denom);
    loglik += score[t] - log_denom;

    double expected_q = 0.0;
    for (std::size_t k = t; k < m; ++k) {
      const double p = std::exp(score[k] - log_denom);
      const double c = (k == t ? 1.0 : 0.0) - p;
      const double q = std::log1p(succ[k]);
      expected_q += p * q;
      const double prev_a = t > 0 ? cum_a(k, t - 1) : 0.0;
      const double prev_b = t > 0 ? cum_b(k, t - 1) : 0.0;
      cum_a(k, t) = prev_a + c;
      cum_b(k, t) = prev_b + c * beta / (1.0 + succ[k]);
    }
    grad.d_beta += std::log1p(succ[t]) - expected_q;

    for (std::size_t k = t + 1; k < m; ++k) {
      phi[k] -= log_complement(y[t], y[k]);
      succ[k] -= prec(y[k], y[t]);
    }
  }

  // Both positions are remaining for steps t <= min(i, j).
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      if (i == j) continue;
      const std::size_t s = std::min(i, j);
      grad.d_log_complement(y[i], y[j]) += cum_a(j, s);
      grad.d_prec(y[i], y[j]) += cum_b(i, s);
    }
  }
  return loglik;
}

}  // namespace pograd
