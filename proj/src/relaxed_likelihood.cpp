#include "pograd/relaxed_likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace pograd {

void RelaxConfig::validate() const {
  if (!(tau > 0.0)) throw std::invalid_argument("RelaxConfig: tau must be positive");
  if (!(gamma > 0.0)) throw std::invalid_argument("RelaxConfig: gamma must be positive");
  if (!(beta >= 0.0)) throw std::invalid_argument("RelaxConfig: beta must be nonnegative");
}

SoftPrecedence::SoftPrecedence(const Embedding& e, const RelaxConfig& cfg)
    : SoftPrecedence(e.matrix(), cfg.tau, cfg.gamma) {
  cfg.validate();
}

SoftPrecedence::SoftPrecedence(const Eigen::MatrixXd& u, double tau, double gamma) {
  const Eigen::Index n = u.rows();
  d_ = Eigen::MatrixXd::Zero(n, n);
  log_complement_ = Eigen::MatrixXd::Zero(n, n);
  margin_ = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index z = 0; z < n; ++z) {
    for (Eigen::Index x = 0; x < n; ++x) {
      if (z == x) continue;
      const double m = soft_min((u.row(z) - u.row(x)).transpose(), tau);
      const double t = gamma * m;
      margin_(z, x) = m;
      d_(z, x) = std::min(sigmoid(t), 1.0 - kPrecedenceCeilingGap);
      log_complement_(z, x) = log_sigmoid_complement(t);
    }
  }
}

SoftPrecedence SoftPrecedence::from_scores(Eigen::MatrixXd scores) {
  if (scores.rows() != scores.cols()) {
    throw std::invalid_argument("SoftPrecedence: score matrix must be square");
  }
  SoftPrecedence sp;
  const Eigen::Index n = scores.rows();
  sp.d_ = std::move(scores);
  sp.d_.diagonal().setZero();
  sp.d_ = sp.d_.cwiseMax(0.0).cwiseMin(1.0 - kPrecedenceCeilingGap);
  sp.log_complement_ = (-sp.d_.array()).log1p().matrix();
  sp.margin_ = Eigen::MatrixXd::Constant(n, n, std::numeric_limits<double>::quiet_NaN());
  return sp;
}

SoftPrecedence SoftPrecedence::restricted(std::span<const int> items) const {
  const auto k = static_cast<Eigen::Index>(items.size());
  SoftPrecedence out;
  out.d_.resize(k, k);
  out.log_complement_.resize(k, k);
  out.margin_.resize(k, k);
  for (Eigen::Index a = 0; a < k; ++a) {
    for (Eigen::Index b = 0; b < k; ++b) {
      out.d_(a, b) = d_(items[a], items[b]);
      out.log_complement_(a, b) = log_complement_(items[a], items[b]);
      out.margin_(a, b) = margin_(items[a], items[b]);
    }
  }
  return out;
}

double soft_margin(const Embedding& e, const RelaxConfig& cfg, int z, int x) {
  if (z == x) throw std::invalid_argument("soft_margin: requires distinct items");
  return soft_min((e.row(z) - e.row(x)).transpose(), cfg.tau);
}

SoftPrecedence soft_precedence_matrix(const Embedding& e, const RelaxConfig& cfg) {
  return SoftPrecedence(e, cfg);
}

namespace {

void require_member(std::span<const int> remaining, int x, const char* what) {
  if (std::find(remaining.begin(), remaining.end(), x) == remaining.end()) {
    throw std::invalid_argument(std::string(what) + ": item not in remaining set");
  }
}

}  // namespace

double soft_frontier_weight(const SoftPrecedence& d, std::span<const int> remaining, int x) {
  require_member(remaining, x, "soft_frontier_weight");
  double log_w = 0.0;
  for (int z : remaining) {
    if (z != x) log_w += d.log_complement()(z, x);
  }
  return std::exp(log_w);
}

std::pair<double, double> soft_successor_utility(const SoftPrecedence& d,
                                                 std::span<const int> remaining, int x) {
  require_member(remaining, x, "soft_successor_utility");
  double s = 0.0;
  for (int z : remaining) {
    if (z != x) s += d(x, z);
  }
  return {s, std::log1p(s)};
}

double relaxed_step_prob(const SoftPrecedence& d, std::span<const int> remaining, int chosen,
                         double beta) {
  return std::exp(frontier_step_logprob(d.matrix(), d.log_complement(), remaining, chosen, beta));
}

std::vector<double> relaxed_trace_step_logprobs(const SoftPrecedence& d, const Trace& trace,
                                                double beta) {
  return frontier_step_logprobs(d.matrix(), d.log_complement(), trace, beta);
}

double relaxed_trace_loglik(const SoftPrecedence& d, const Trace& trace, double beta) {
  return frontier_trace_loglik(d.matrix(), d.log_complement(), trace, beta);
}

double relaxed_trace_loglik(const Embedding& e, const RelaxConfig& cfg, const Trace& trace) {
  return relaxed_trace_loglik(SoftPrecedence(e, cfg), trace, cfg.beta);
}

RelaxedGradient relaxed_loglik_gradient(const Eigen::MatrixXd& u, const RelaxConfig& cfg,
                                        std::span<const Trace> traces) {
  const Eigen::Index n = u.rows();
  const Eigen::Index dim = u.cols();
  const SoftPrecedence sp(u, cfg.tau, cfg.gamma);
  FrontierGradient fg(n);
  RelaxedGradient out;
  for (const Trace& tr : traces) {
    out.loglik +=
        accumulate_frontier_gradient(sp.matrix(), sp.log_complement(), tr, cfg.beta, fg);
  }
  out.d_beta = fg.d_beta;
  out.d_u = Eigen::MatrixXd::Zero(n, dim);

  // D = sigmoid(gamma*M): dD/dM = gamma*D*(1-D); d log(1-D)/dM = -gamma*D.
  Eigen::VectorXd delta(dim);
  for (Eigen::Index z = 0; z < n; ++z) {
    for (Eigen::Index x = 0; x < n; ++x) {
      if (z == x) continue;
      const double g_prec = fg.d_prec(z, x);
      const double g_logc = fg.d_log_complement(z, x);
      if (g_prec == 0.0 && g_logc == 0.0) continue;
      const double m = sp.margins()(z, x);
      const double dz = sigmoid(cfg.gamma * m);
      const double dz_c = sigmoid(-cfg.gamma * m);
      const double d_margin_factor = g_prec * dz * dz_c - g_logc * dz;
      out.d_gamma += d_margin_factor * m;
      const double g_margin = cfg.gamma * d_margin_factor;
      delta = (u.row(z) - u.row(x)).transpose();
      const Eigen::VectorXd w = soft_min_weights(delta, cfg.tau);
      out.d_u.row(z) += g_margin * w.transpose();
      out.d_u.row(x) -= g_margin * w.transpose();
    }
  }
  return out;
}

RelaxedGradient relaxed_trace_grad(const Embedding& e, const RelaxConfig& cfg,
                                   const Trace& trace) {
  cfg.validate();
  return relaxed_loglik_gradient(e.matrix(), cfg, std::span<const Trace>(&trace, 1));
}

double separation_margin(const Embedding& e, std::span<const int> remaining) {
  double delta = std::numeric_limits<double>::infinity();
  for (int z : remaining) {
    for (int x : remaining) {
      if (z != x) delta = std::min(delta, std::abs(hard_margin(e, z, x)));
    }
  }
  return delta;
}

double approximation_scale(const Embedding& e, double tau, double gamma,
                           std::span<const int> remaining) {
  const double smear = tau * std::log(static_cast<double>(e.dim()));
  return smear + std::exp(-gamma * (separation_margin(e, remaining) - smear));
}

}  // namespace pograd
