#include "pograd/model.hpp"

#include "pograd/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

namespace pograd {

void PriorConfig::validate() const {
  if (!(a_rho > 0 && b_rho > 0 && a_beta > 0 && b_beta > 0 && a_gamma > 0 && b_gamma > 0)) {
    throw ConfigError("prior: shape and rate parameters must be positive");
  }
  if (d < 1) throw ConfigError("prior: embedding dimension must be >= 1");
  if (!(tau > 0)) throw ConfigError("prior: tau must be positive");
  if (fix_beta && !(*fix_beta >= 0)) throw ConfigError("prior: fixed beta must be >= 0");
  if (fix_gamma && !(*fix_gamma > 0)) throw ConfigError("prior: fixed gamma must be > 0");
}

ParamLayout::ParamLayout(Eigen::Index n, const PriorConfig& cfg)
    : n_items(n), d(cfg.d), free_beta(!cfg.fix_beta), free_gamma(!cfg.fix_gamma) {}

ParamLayout ParamLayout::for_vector(Eigen::Index size, const PriorConfig& cfg) {
  const Eigen::Index scalars = ParamLayout(0, cfg).size();
  if (cfg.d < 1 || size < scalars || (size - scalars) % cfg.d != 0) {
    throw std::invalid_argument("parameter vector length " + std::to_string(size) +
                                " does not match the prior layout");
  }
  return ParamLayout((size - scalars) / cfg.d, cfg);
}

namespace {

// Cholesky of the equicorrelation matrix with forward-mode derivative in rho.
void equicorrelation_cholesky(double rho, int d, Eigen::MatrixXd& l, Eigen::MatrixXd* dl) {
  if (!(rho > 0.0 && rho < 1.0)) {
    throw std::invalid_argument("prior_cholesky: rho must lie in (0,1)");
  }
  if (d < 1) throw std::invalid_argument("prior_cholesky: d must be >= 1");
  l = Eigen::MatrixXd::Zero(d, d);
  Eigen::MatrixXd dlocal = Eigen::MatrixXd::Zero(d, d);
  for (int j = 0; j < d; ++j) {
    double s = 1.0, ds = 0.0;
    for (int k = 0; k < j; ++k) {
      s -= l(j, k) * l(j, k);
      ds -= 2.0 * l(j, k) * dlocal(j, k);
    }
    l(j, j) = std::sqrt(s);
    dlocal(j, j) = ds / (2.0 * l(j, j));
    for (int i = j + 1; i < d; ++i) {
      double t = rho, dt = 1.0;
      for (int k = 0; k < j; ++k) {
        t -= l(i, k) * l(j, k);
        dt -= dlocal(i, k) * l(j, k) + l(i, k) * dlocal(j, k);
      }
      l(i, j) = t / l(j, j);
      dlocal(i, j) = (dt - l(i, j) * dlocal(j, j)) / l(j, j);
    }
  }
  if (dl) *dl = std::move(dlocal);
}

double logit(double p) { return std::log(p) - std::log1p(-p); }

void check_finite(const LogDensityGradient& out, const ParamLayout& layout) {
  if (!std::isfinite(out.logp)) {
    throw NumericalError("relaxed log posterior is not finite");
  }
  for (Eigen::Index i = 0; i < out.grad.size(); ++i) {
    if (std::isfinite(out.grad(i))) continue;
    std::string where;
    if (i < layout.z_size()) {
      where = "z[" + std::to_string(i / layout.d) + "," + std::to_string(i % layout.d) + "]";
    } else if (i == layout.rho_index()) {
      where = "eta_rho";
    } else if (layout.free_beta && i == layout.beta_index()) {
      where = "eta_beta";
    } else {
      where = "eta_gamma";
    }
    throw NumericalError("non-finite gradient at coordinate " + std::to_string(i) + " (" +
                         where + ")");
  }
}

}  // namespace

Eigen::MatrixXd prior_cholesky(double rho, int d) {
  Eigen::MatrixXd l;
  equicorrelation_cholesky(rho, d, l, nullptr);
  return l;
}

Eigen::MatrixXd prior_cholesky_derivative(double rho, int d) {
  Eigen::MatrixXd l, dl;
  equicorrelation_cholesky(rho, d, l, &dl);
  return dl;
}

Embedding to_embedding(const ModelParams& p) {
  const Eigen::MatrixXd l = prior_cholesky(p.rho, static_cast<int>(p.z.cols()));
  return Embedding(p.z * l.transpose());
}

Transformed transform(const Eigen::VectorXd& w, Eigen::Index n_items, const PriorConfig& cfg) {
  const ParamLayout layout(n_items, cfg);
  if (w.size() != layout.size()) {
    throw std::invalid_argument("transform: parameter vector has length " +
                                std::to_string(w.size()) + ", expected " +
                                std::to_string(layout.size()));
  }
  Transformed out;
  auto& p = out.params;
  p.z = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      w.data(), n_items, cfg.d);
  const double eta_rho = w(layout.rho_index());
  // sigmoid rounds to exactly 0 or 1 far in the tails; keep rho interior.
  p.rho = std::clamp(sigmoid(eta_rho), std::numeric_limits<double>::min(), std::nextafter(1.0, 0.0));
  // log rho + log(1 - rho), formed from eta to stay finite in the tails.
  out.log_jacobian = log_sigmoid_complement(-eta_rho) + log_sigmoid_complement(eta_rho);
  if (layout.free_beta) {
    const double eta = w(layout.beta_index());
    p.beta = std::exp(eta);
    out.log_jacobian += eta;
  } else {
    p.beta = *cfg.fix_beta;
  }
  if (layout.free_gamma) {
    const double eta = w(layout.gamma_index());
    p.gamma = std::exp(eta);
    out.log_jacobian += eta;
  } else {
    p.gamma = *cfg.fix_gamma;
  }
  return out;
}

Eigen::VectorXd inverse_transform(const ModelParams& p, const PriorConfig& cfg) {
  const ParamLayout layout(p.z.rows(), cfg);
  Eigen::VectorXd w(layout.size());
  for (Eigen::Index x = 0; x < p.z.rows(); ++x) {
    for (Eigen::Index k = 0; k < p.z.cols(); ++k) w(x * layout.d + k) = p.z(x, k);
  }
  w(layout.rho_index()) = logit(p.rho);
  if (layout.free_beta) w(layout.beta_index()) = std::log(p.beta);
  if (layout.free_gamma) w(layout.gamma_index()) = std::log(p.gamma);
  return w;
}

// (s - 1) * log(x) with the s == 1 case exact at the boundary x == 0.
double power_term(double s, double log_x) { return s == 1.0 ? 0.0 : (s - 1.0) * log_x; }

double log_beta_density(double x, double a, double b) {
  return power_term(a, std::log(x)) + power_term(b, std::log1p(-x)) -
         (std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b));
}

double log_gamma_density(double x, double shape, double rate) {
  return shape * std::log(rate) - std::lgamma(shape) + power_term(shape, std::log(x)) - rate * x;
}

double log_prior(const ModelParams& p, const PriorConfig& cfg, bool include_gamma) {
  const double log_norm = -0.5 * std::log(2.0 * std::numbers::pi);
  double lp = -0.5 * p.z.squaredNorm() + log_norm * static_cast<double>(p.z.size());
  lp += log_beta_density(p.rho, cfg.a_rho, cfg.b_rho);
  if (!cfg.fix_beta) lp += log_gamma_density(p.beta, cfg.a_beta, cfg.b_beta);
  if (include_gamma && !cfg.fix_gamma) lp += log_gamma_density(p.gamma, cfg.a_gamma, cfg.b_gamma);
  return lp;
}

double relaxed_log_joint(const ModelParams& p, std::span<const Trace> traces,
                         const PriorConfig& cfg) {
  const Embedding e = to_embedding(p);
  const SoftPrecedence sp(e.matrix(), cfg.tau, p.gamma);
  double lp = log_prior(p, cfg);
  for (const Trace& tr : traces) lp += relaxed_trace_loglik(sp, tr, p.beta);
  return lp;
}

LogDensityGradient relaxed_log_posterior(const Eigen::VectorXd& w, std::span<const Trace> traces,
                                         const PriorConfig& cfg) {
  const Eigen::Index d = cfg.d;
  const ParamLayout layout = ParamLayout::for_vector(w.size(), cfg);
  const Transformed tr = transform(w, layout.n_items, cfg);
  const ModelParams& p = tr.params;

  Eigen::MatrixXd l, dl;
  equicorrelation_cholesky(p.rho, static_cast<int>(d), l, &dl);
  const Eigen::MatrixXd u = p.z * l.transpose();

  const RelaxConfig rc{cfg.tau, p.gamma, p.beta};
  const RelaxedGradient rg = relaxed_loglik_gradient(u, rc, traces);

  LogDensityGradient out;
  out.logp = log_prior(p, cfg) + rg.loglik + tr.log_jacobian;
  out.grad.resize(layout.size());

  const Eigen::MatrixXd gz = -p.z + rg.d_u * l;
  for (Eigen::Index x = 0; x < layout.n_items; ++x) {
    for (Eigen::Index k = 0; k < d; ++k) out.grad(x * d + k) = gz(x, k);
  }

  const double d_rho_lik = (rg.d_u.array() * (p.z * dl.transpose()).array()).sum();
  const double d_rho_prior = (cfg.a_rho - 1.0) / p.rho - (cfg.b_rho - 1.0) / (1.0 - p.rho);
  out.grad(layout.rho_index()) =
      (d_rho_lik + d_rho_prior) * p.rho * (1.0 - p.rho) + (1.0 - 2.0 * p.rho);

  // d/d eta of [lik + log Gamma(x) + eta] with x = exp(eta).
  if (layout.free_beta) {
    out.grad(layout.beta_index()) = rg.d_beta * p.beta + cfg.a_beta - cfg.b_beta * p.beta;
  }
  if (layout.free_gamma) {
    out.grad(layout.gamma_index()) = rg.d_gamma * p.gamma + cfg.a_gamma - cfg.b_gamma * p.gamma;
  }
  check_finite(out, layout);
  return out;
}

double hard_log_posterior(const ModelParams& p, std::span<const Trace> traces,
                          const PriorConfig& cfg) {
  const PartialOrder po = induced_order(to_embedding(p));
  const double beta = cfg.fix_beta ? *cfg.fix_beta : p.beta;
  double lp = log_prior(p, cfg, /*include_gamma=*/false);
  for (const Trace& tr : traces) {
    const double ll = hard_trace_loglik(po, tr, beta);
    if (is_log_zero(ll)) return kLogZero;
    lp += ll;
  }
  return lp;
}

ModelParams sample_prior(Eigen::Index n_items, const PriorConfig& cfg, Rng& rng) {
  ModelParams p;
  p.z = standard_normal_matrix(n_items, cfg.d, rng);
  std::gamma_distribution<double> ga(cfg.a_rho, 1.0), gb(cfg.b_rho, 1.0);
  const double x = ga(rng), y = gb(rng);
  p.rho = x / (x + y);
  p.rho = std::clamp(p.rho, 1e-12, 1.0 - 1e-12);
  if (cfg.fix_beta) {
    p.beta = *cfg.fix_beta;
  } else {
    std::gamma_distribution<double> g(cfg.a_beta, 1.0 / cfg.b_beta);
    p.beta = g(rng);
  }
  if (cfg.fix_gamma) {
    p.gamma = *cfg.fix_gamma;
  } else {
    std::gamma_distribution<double> g(cfg.a_gamma, 1.0 / cfg.b_gamma);
    p.gamma = g(rng);
  }
  return p;
}

}  // namespace pograd
