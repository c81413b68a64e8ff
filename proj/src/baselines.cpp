#include "pograd/baselines.hpp"

#include "pograd/errors.hpp"
#include "pograd/frontier.hpp"
#include "pograd/parallel.hpp"
#include "pograd/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>

namespace pograd {

PartialOrder majority_fit(Eigen::Index n_items, std::span<const Trace> traces, double theta) {
  Eigen::MatrixXd together = Eigen::MatrixXd::Zero(n_items, n_items);
  Eigen::MatrixXd before = Eigen::MatrixXd::Zero(n_items, n_items);
  for (const Trace& t : traces) {
    t.validate(n_items);
    for (std::size_t a = 0; a < t.order.size(); ++a) {
      for (std::size_t b = a + 1; b < t.order.size(); ++b) {
        const int i = t.order[a], j = t.order[b];
        together(i, j) += 1.0;
        together(j, i) += 1.0;
        before(i, j) += 1.0;
      }
    }
  }
  WeightedDigraph g;
  g.adjacency = BoolMatrix::Constant(n_items, n_items, false);
  g.weights = Eigen::MatrixXd::Zero(n_items, n_items);
  for (Eigen::Index i = 0; i < n_items; ++i) {
    for (Eigen::Index j = i + 1; j < n_items; ++j) {
      if (together(i, j) == 0.0) continue;
      const double rij = before(i, j) / together(i, j);
      const double rji = before(j, i) / together(j, i);
      if (rij > theta && rij > rji) {
        g.adjacency(i, j) = true;
        g.weights(i, j) = std::abs(rij - rji);
      } else if (rji > theta && rji > rij) {
        g.adjacency(j, i) = true;
        g.weights(j, i) = std::abs(rji - rij);
      }
    }
  }
  return break_cycles_and_close(std::move(g));
}

namespace {

// sum_{l=1..k} W^l.
Eigen::MatrixXd power_sum(const Eigen::MatrixXd& w, int k) {
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(w.rows(), w.cols());
  Eigen::MatrixXd p = Eigen::MatrixXd::Identity(w.rows(), w.cols());
  for (int l = 1; l <= k; ++l) {
    p = p * w;
    s += p;
  }
  return s;
}

// sum_{k=0..degree} B^k / k!.
Eigen::MatrixXd truncated_exp(const Eigen::MatrixXd& b, int degree) {
  Eigen::MatrixXd term = Eigen::MatrixXd::Identity(b.rows(), b.cols());
  Eigen::MatrixXd sum = term;
  for (int k = 1; k <= degree; ++k) {
    term = term * b / static_cast<double>(k);
    sum += term;
  }
  return sum;
}

double sigmoid(double x) { return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); }

// R and log(1 - R) = -S, both with zero diagonals.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> reach_and_log_complement(const Eigen::MatrixXd& w, int k) {
  Eigen::MatrixXd s = power_sum(w, k);
  s.diagonal().setZero();
  Eigen::MatrixXd r = (-s.array()).exp().matrix();
  r = (1.0 - r.array()).matrix();
  r.diagonal().setZero();
  return {std::move(r), -s};
}

}  // namespace

Eigen::MatrixXd softdag_reachability(const Eigen::MatrixXd& w, int k_hops) {
  if (w.rows() != w.cols()) throw std::invalid_argument("softdag_reachability: W must be square");
  return reach_and_log_complement(w, k_hops).first;
}

double notears_penalty(const Eigen::MatrixXd& w, int taylor_degree) {
  const Eigen::MatrixXd b = w.cwiseProduct(w);
  return truncated_exp(b, taylor_degree).trace() - static_cast<double>(w.rows());
}

Eigen::MatrixXd notears_penalty_gradient(const Eigen::MatrixXd& w, int taylor_degree) {
  // d tr(B^k)/dB = k (B^{k-1})^T, so the series loses its top term.
  const Eigen::MatrixXd b = w.cwiseProduct(w);
  return 2.0 * w.cwiseProduct(truncated_exp(b, taylor_degree - 1).transpose());
}

int SoftDagConfig::hops(Eigen::Index n) const {
  if (k_hops > 0) return k_hops;
  return std::max(1, static_cast<int>(std::min<Eigen::Index>(8, n - 1)));
}

int SoftDagConfig::degree(Eigen::Index n) const {
  return taylor_degree > 0 ? taylor_degree : std::max(hops(n), 12);
}

void SoftDagConfig::validate() const {
  if (!(lambda_l1 >= 0.0) || !(lambda_h >= 0.0)) throw ConfigError("softdag: penalties must be >= 0");
  if (k_hops < 0 || taylor_degree < 0) throw ConfigError("softdag: k_hops and taylor_degree must be >= 0");
  if (!(adam_lr > 0.0)) throw ConfigError("softdag: adam_lr must be > 0");
  if (steps < 1 || restarts < 1) throw ConfigError("softdag: steps and restarts must be >= 1");
  if (!(init_sd >= 0.0)) throw ConfigError("softdag: init_sd must be >= 0");
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
    throw ConfigError("softdag: validation_fraction must lie in (0,1)");
  }
  if (!(theta_dag > 0.0 && theta_dag < 1.0)) throw ConfigError("softdag: theta_dag must lie in (0,1)");
}

Eigen::MatrixXd SoftDagParams::w() const {
  Eigen::MatrixXd out = a.unaryExpr([](double v) { return sigmoid(v); });
  out.diagonal().setZero();
  return out;
}

SoftDagLoss softdag_loss(const SoftDagParams& p, std::span<const Trace> traces,
                         const SoftDagConfig& cfg) {
  const Eigen::Index n = p.a.rows();
  const int k = cfg.hops(n);
  const int degree = cfg.degree(n);
  const Eigen::MatrixXd w = p.w();
  const double beta = std::exp(p.eta_beta);
  const auto [r, log_c] = reach_and_log_complement(w, k);

  FrontierGradient g(n);
  double loglik = 0.0;
  for (const Trace& t : traces) loglik += accumulate_frontier_gradient(r, log_c, t, beta, g);

  const double h = notears_penalty(w, degree);
  SoftDagLoss out;
  out.value = -loglik + cfg.lambda_l1 * w.sum() + cfg.lambda_h * h * h;

  // Loss gradient with respect to S = sum W^l, using R = 1 - exp(-S) and
  // log(1 - R) = -S.
  Eigen::MatrixXd d_s = -(g.d_prec.cwiseProduct((1.0 - r.array()).matrix()) - g.d_log_complement);
  d_s.diagonal().setZero();

  // d(W^l) = sum_a W^a dW W^{l-1-a}, so the adjoint is (W^a)^T G (W^{l-1-a})^T.
  std::vector<Eigen::MatrixXd> pw(static_cast<std::size_t>(k));
  pw[0] = Eigen::MatrixXd::Identity(n, n);
  for (int l = 1; l < k; ++l) pw[static_cast<std::size_t>(l)] = pw[static_cast<std::size_t>(l - 1)] * w;
  Eigen::MatrixXd d_w = Eigen::MatrixXd::Zero(n, n);
  for (int l = 1; l <= k; ++l) {
    for (int a = 0; a < l; ++a) {
      d_w += pw[static_cast<std::size_t>(a)].transpose() * d_s * pw[static_cast<std::size_t>(l - 1 - a)].transpose();
    }
  }
  d_w.array() += cfg.lambda_l1;
  d_w += 2.0 * cfg.lambda_h * h * notears_penalty_gradient(w, degree);

  out.d_a = d_w.cwiseProduct(w.cwiseProduct((1.0 - w.array()).matrix()));
  out.d_a.diagonal().setZero();
  out.d_eta_beta = -g.d_beta * beta;
  return out;
}

double softdag_step_nll(const Eigen::MatrixXd& w, double beta, std::span<const Trace> traces,
                        int k_hops) {
  const auto [r, log_c] = reach_and_log_complement(w, k_hops);
  double sum = 0.0;
  long count = 0;
  for (const Trace& t : traces) {
    for (double lp : frontier_step_logprobs(r, log_c, t, beta)) {
      sum -= lp;
      ++count;
    }
  }
  return count > 0 ? sum / static_cast<double>(count) : 0.0;
}

namespace {

struct RestartOutcome {
  SoftDagParams params;
  double val_nll = std::numeric_limits<double>::infinity();
  bool ok = false;
};

RestartOutcome run_adam(Eigen::Index n, std::span<const Trace> train, std::span<const Trace> val,
                        const SoftDagConfig& cfg, Rng& rng) {
  constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  RestartOutcome out;
  SoftDagParams p;
  p.a = (cfg.init_mean + cfg.init_sd * standard_normal_matrix(n, n, rng).array()).matrix();
  p.a.diagonal().setZero();
  Eigen::MatrixXd m_a = Eigen::MatrixXd::Zero(n, n), v_a = Eigen::MatrixXd::Zero(n, n);
  double m_e = 0.0, v_e = 0.0;
  for (int step = 1; step <= cfg.steps; ++step) {
    const SoftDagLoss l = softdag_loss(p, train, cfg);
    if (!std::isfinite(l.value) || !l.d_a.allFinite() || !std::isfinite(l.d_eta_beta)) return out;
    m_a = b1 * m_a + (1 - b1) * l.d_a;
    v_a = b2 * v_a + (1 - b2) * l.d_a.cwiseAbs2();
    m_e = b1 * m_e + (1 - b1) * l.d_eta_beta;
    v_e = b2 * v_e + (1 - b2) * l.d_eta_beta * l.d_eta_beta;
    const double c1 = 1 - std::pow(b1, step), c2 = 1 - std::pow(b2, step);
    p.a.array() -= cfg.adam_lr * (m_a.array() / c1) / ((v_a.array() / c2).sqrt() + eps);
    p.eta_beta -= cfg.adam_lr * (m_e / c1) / (std::sqrt(v_e / c2) + eps);
  }
  out.val_nll = softdag_step_nll(p.w(), std::exp(p.eta_beta), val, cfg.hops(n));
  out.ok = std::isfinite(out.val_nll);
  out.params = std::move(p);
  return out;
}

}  // namespace

SoftDagResult softdag_fit(Eigen::Index n_items, std::span<const Trace> traces,
                          const SoftDagConfig& cfg) {
  cfg.validate();
  if (traces.size() < 2) throw DataError("softdag: need at least two traces for a validation split");
  for (const Trace& t : traces) t.validate(n_items);

  std::vector<std::size_t> idx(traces.size());
  std::iota(idx.begin(), idx.end(), 0);
  Rng split_rng = substream(cfg.seed, 0);
  std::shuffle(idx.begin(), idx.end(), split_rng);
  const auto n_val = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::lround(cfg.validation_fraction * static_cast<double>(traces.size()))), 1,
      traces.size() - 1);
  std::vector<Trace> val, train;
  for (std::size_t i = 0; i < idx.size(); ++i) (i < n_val ? val : train).push_back(traces[idx[i]]);

  std::vector<RestartOutcome> runs(static_cast<std::size_t>(cfg.restarts));
  parallel_for(cfg.restarts, [&](int r) {
    Rng rng = substream(cfg.seed, static_cast<std::uint64_t>(r) + 1);
    runs[static_cast<std::size_t>(r)] = run_adam(n_items, train, val, cfg, rng);
  });
  const RestartOutcome* best = nullptr;
  for (const auto& run : runs) {
    if (run.ok && (!best || run.val_nll < best->val_nll)) best = &run;
  }
  if (!best) throw NumericalError("softdag: every restart produced a non-finite loss");

  SoftDagResult res;
  res.w = best->params.w();
  res.beta = std::exp(best->params.eta_beta);
  res.val_step_nll = best->val_nll;
  res.lambda_l1 = cfg.lambda_l1;
  res.lambda_h = cfg.lambda_h;
  WeightedDigraph g;
  g.adjacency = (res.w.array() > cfg.theta_dag).matrix();
  g.weights = g.adjacency.cast<double>().cwiseProduct(res.w);
  res.order = break_cycles_and_close(std::move(g));
  return res;
}

SoftDagResult softdag_select(Eigen::Index n_items, std::span<const Trace> traces,
                             const SoftDagConfig& cfg, std::vector<double> lambda_l1_grid,
                             std::vector<double> lambda_h_grid) {
  if (lambda_l1_grid.empty()) lambda_l1_grid = {cfg.lambda_l1};
  if (lambda_h_grid.empty()) lambda_h_grid = {cfg.lambda_h};
  std::vector<SoftDagConfig> grid;
  for (double l1 : lambda_l1_grid) {
    for (double lh : lambda_h_grid) {
      SoftDagConfig c = cfg;
      c.lambda_l1 = l1;
      c.lambda_h = lh;
      grid.push_back(c);
    }
  }
  std::vector<std::optional<SoftDagResult>> results(grid.size());
  parallel_for(static_cast<int>(grid.size()), [&](int i) {
    try {
      results[static_cast<std::size_t>(i)] = softdag_fit(n_items, traces, grid[static_cast<std::size_t>(i)]);
    } catch (const NumericalError&) {
      // Leaves the slot empty; other grid points may still succeed.
    }
  });
  const SoftDagResult* best = nullptr;
  for (const auto& r : results) {
    if (r && (!best || r->val_step_nll < best->val_step_nll)) best = &*r;
  }
  if (!best) throw NumericalError("softdag: no grid point produced a finite fit");
  return *best;
}

}  // namespace pograd
