#ifndef POGRAD_MODEL_HPP
#define POGRAD_MODEL_HPP

#include "pograd/hard_likelihood.hpp"
#include "pograd/relaxed_likelihood.hpp"
#include "pograd/rng.hpp"

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <vector>

namespace pograd {

/// Hyperpriors rho ~ Beta(a_rho, b_rho), beta ~ Gamma(a_beta, b_beta),
/// gamma ~ Gamma(a_gamma, b_gamma) (shape/rate), embedding dimension and the
/// fixed soft-min temperature. A fixed beta or gamma drops that coordinate
/// (and its prior and Jacobian term) from the unconstrained vector.
struct PriorConfig {
  double a_rho = 2.0;
  double b_rho = 2.0;
  double a_beta = 1.0;
  double b_beta = 1.0;
  double a_gamma = 2.0;
  double b_gamma = 1.0;
  int d = 4;
  double tau = 0.3;
  std::optional<double> fix_beta;
  std::optional<double> fix_gamma;

  void validate() const;
};

struct ModelParams {
  Eigen::MatrixXd z;  // n_items x d, non-centred coordinates
  double rho = 0.5;
  double beta = 1.0;
  double gamma = 1.0;
};

/// Positions of the blocks of w = (vec(Z), eta_rho, eta_beta, eta_gamma).
/// vec(Z) is row-major: z(x, k) lives at x*d + k.
struct ParamLayout {
  Eigen::Index n_items = 0;
  Eigen::Index d = 0;
  bool free_beta = true;
  bool free_gamma = true;

  ParamLayout(Eigen::Index n_items, const PriorConfig& cfg);
  // Infers n_items from the length of w. Throws on a mismatch.
  static ParamLayout for_vector(Eigen::Index size, const PriorConfig& cfg);

  Eigen::Index z_size() const { return n_items * d; }
  Eigen::Index rho_index() const { return z_size(); }
  Eigen::Index beta_index() const { return z_size() + 1; }
  Eigen::Index gamma_index() const { return z_size() + (free_beta ? 2 : 1); }
  Eigen::Index size() const { return z_size() + 1 + (free_beta ? 1 : 0) + (free_gamma ? 1 : 0); }
};

// Cholesky factor of the equicorrelation matrix (1-rho) I + rho 11^T.
// Throws std::invalid_argument for rho outside (0,1).
Eigen::MatrixXd prior_cholesky(double rho, int d);
// Entrywise derivative of prior_cholesky with respect to rho.
Eigen::MatrixXd prior_cholesky_derivative(double rho, int d);

// U = Z L_rho^T.
Embedding to_embedding(const ModelParams& p);

struct Transformed {
  ModelParams params;
  double log_jacobian = 0.0;
};

Transformed transform(const Eigen::VectorXd& w, Eigen::Index n_items, const PriorConfig& cfg);
Eigen::VectorXd inverse_transform(const ModelParams& p, const PriorConfig& cfg);

double log_beta_density(double x, double a, double b);
double log_gamma_density(double x, double shape, double rate);

// Log prior of (Z, rho, beta[, gamma]) in constrained coordinates; free
// scalars only.
double log_prior(const ModelParams& p, const PriorConfig& cfg, bool include_gamma = true);

// Constrained relaxed log joint (prior + relaxed likelihood), no Jacobian.
double relaxed_log_joint(const ModelParams& p, std::span<const Trace> traces,
                         const PriorConfig& cfg);

struct LogDensityGradient {
  double logp = 0.0;
  Eigen::VectorXd grad;
};

// Relaxed log posterior in unconstrained coordinates, including the
// log-Jacobian, with its exact gradient. Throws NumericalError naming the
// first non-finite coordinate.
LogDensityGradient relaxed_log_posterior(const Eigen::VectorXd& w, std::span<const Trace> traces,
                                         const PriorConfig& cfg);

// Hard log posterior (prior over Z, rho, beta plus hard likelihood of h_U);
// kLogZero if any trace is infeasible.
double hard_log_posterior(const ModelParams& p, std::span<const Trace> traces,
                          const PriorConfig& cfg);

// Standard-normal Z plus rho, beta, gamma drawn from their priors (fixed
// values respected).
ModelParams sample_prior(Eigen::Index n_items, const PriorConfig& cfg, Rng& rng);

}  // namespace pograd

#endif  // POGRAD_MODEL_HPP
