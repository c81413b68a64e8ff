#ifndef POGRAD_SAMPLERS_HPP
#define POGRAD_SAMPLERS_HPP

#include "pograd/model.hpp"
#include "pograd/rng.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace pograd {

// Log density on an unconstrained vector. When `grad` is non-null it must be
// filled with the gradient. May throw; samplers treat a throw like a
// non-finite value.
using LogDensityFn = std::function<double(const Eigen::VectorXd& w, Eigen::VectorXd* grad)>;

struct Draw {
  ModelParams params;
  double logp = 0.0;
};

struct DrawSetMeta {
  std::string method;
  std::uint64_t seed = 0;
  double seconds = 0.0;
  double tau = 0.0;
  int chains = 1;
  // Acceptance rate per iteration block (samplers) or the ELBO at each
  // evaluation (variational fit).
  std::vector<double> trail;
  double acceptance_rate = 0.0;
  double step_size = 0.0;
  int divergences = 0;
  bool converged = true;
};

/// Posterior draws of the model parameters, ordered by chain then iteration.
struct DrawSet {
  std::vector<Draw> draws;
  DrawSetMeta meta;

  std::size_t size() const { return draws.size(); }
  bool empty() const { return draws.empty(); }
  Eigen::Index n_items() const { return draws.empty() ? 0 : draws.front().params.z.rows(); }
  Eigen::Index dim() const { return draws.empty() ? 0 : draws.front().params.z.cols(); }
  // Throws std::invalid_argument if draws disagree in shape.
  void validate() const;
};

// ---------------------------------------------------------------------------
// Hamiltonian Monte Carlo

struct HmcConfig {
  int warmup_iters = 500;
  int sampling_iters = 500;
  double target_accept = 0.9;
  int max_leapfrog_steps = 64;
  double init_step_size = 0.1;
  std::uint64_t seed = 1;
  int chains = 4;

  void validate() const;  // ConfigError
};

struct PhasePoint {
  Eigen::VectorXd q;
  Eigen::VectorXd p;
  double logp = 0.0;
  Eigen::VectorXd grad;
};

// Unit-mass Hamiltonian -logp + |p|^2 / 2.
inline double hamiltonian(const PhasePoint& z) { return -z.logp + 0.5 * z.p.squaredNorm(); }

// `steps` leapfrog steps of size eps. Returns false (leaving z partially
// updated) when the density throws or becomes non-finite.
bool leapfrog(const LogDensityFn& f, PhasePoint& z, double eps, int steps);

/// Step-size adaptation by dual averaging toward a target acceptance rate.
class DualAveraging {
 public:
  DualAveraging(double initial_step, double target_accept);
  // Feeds the acceptance statistic of one iteration; returns the next step.
  double update(double accept_prob);
  // Averaged step size used after warmup.
  double final_step() const;

 private:
  double mu_, target_;
  double h_bar_ = 0.0, log_eps_, log_eps_bar_ = 0.0;
  int t_ = 0;
};

struct ChainResult {
  std::vector<Eigen::VectorXd> samples;
  std::vector<double> logp;
  std::vector<double> trail;
  double acceptance_rate = 0.0;
  double step_size = 0.0;
  int divergences = 0;  // after warmup
};

// One HMC chain from `init`: dual averaging over warmup, frozen step size
// afterwards, trajectory length drawn uniformly from 1..max_leapfrog_steps.
// Divergent iterations (energy error above 1000 or a failed evaluation) are
// rejected; more than half divergent throws NumericalError.
ChainResult hmc_chain(const LogDensityFn& f, const Eigen::VectorXd& init, const HmcConfig& cfg,
                      Rng& rng);

// ---------------------------------------------------------------------------
// Random-walk Metropolis

/// A proposal block: each move perturbs one coordinate group, drawn uniformly
/// from `groups`, with independent normal steps of size `scale`.
struct MhBlock {
  std::string name;
  std::vector<std::vector<Eigen::Index>> groups;
  double scale = 0.5;
};

struct MhConfig {
  long iters = 200000;
  double burn_in_fraction = 0.5;
  int max_draws = 5000;
  // Scale tuning pre-run: rounds of tune_iters moves, doubling or halving each
  // block's scale until its acceptance lies in [accept_lo, accept_hi].
  int tune_rounds = 12;
  int tune_iters = 2000;
  double accept_lo = 0.2;
  double accept_hi = 0.4;
  double scale_z = 0.5;
  double scale_rho = 0.3;
  double scale_beta = 0.3;
  int init_retries = 1000;
  std::uint64_t seed = 1;
  int chains = 4;

  void validate() const;  // ConfigError
};

// Random-walk Metropolis over blocks chosen uniformly per move. Retains
// evenly spaced post-burn-in states, at most max_draws. `blocks` scales are
// used as given; see tune_mh_scales.
ChainResult random_walk_mh(const std::function<double(const Eigen::VectorXd&)>& logp,
                           const Eigen::VectorXd& init, const std::vector<MhBlock>& blocks,
                           const MhConfig& cfg, Rng& rng);

// Adjusts block scales in place by the doubling/halving pre-run. Returns the
// state reached, used to start the main run.
Eigen::VectorXd tune_mh_scales(const std::function<double(const Eigen::VectorXd&)>& logp,
                               const Eigen::VectorXd& init, std::vector<MhBlock>& blocks,
                               const MhConfig& cfg, Rng& rng);

// ---------------------------------------------------------------------------
// Full-rank Gaussian variational inference

struct AdviConfig {
  int iters = 10000;
  int mc_samples_grad = 1;
  int mc_samples_elbo = 100;
  int eval_every = 100;
  // Used when adapt_learning_rate is false; otherwise the best of
  // {100, 10, 1, 0.1, 0.01} after adapt_iters steps each.
  double learning_rate = 1.0;
  bool adapt_learning_rate = true;
  int adapt_iters = 50;
  double tol_rel_obj = 0.01;
  int n_output_draws = 1000;
  int max_retries = 4;
  std::uint64_t seed = 1;

  void validate() const;  // ConfigError
};

struct GaussianApprox {
  Eigen::VectorXd mu;
  Eigen::MatrixXd l;  // lower-triangular Cholesky factor of the covariance
};

// Entropy of N(mu, L L^T).
double gaussian_entropy(const Eigen::MatrixXd& l);

// Monte Carlo ELBO E_q[log p(w)] + H[q] with reparameterized draws.
double elbo_estimate(const LogDensityFn& f, const GaussianApprox& q, int n_samples, Rng& rng);

struct ElboGradient {
  Eigen::VectorXd d_mu;
  Eigen::MatrixXd d_l;  // lower-triangular
};

// Reparameterization gradient of the ELBO in (mu, L) from n_samples draws.
// Throws NumericalError on a non-finite draw.
ElboGradient elbo_gradient_estimate(const LogDensityFn& f, const GaussianApprox& q, int n_samples,
                                    Rng& rng);

struct AdviResult {
  GaussianApprox q;
  std::vector<double> elbo_trail;
  int iterations = 0;
  double learning_rate = 0.0;
  bool converged = false;
};

// Stochastic gradient ascent on the ELBO with the adaGrad-style schedule
// eta * k^(-1/2 + 1e-16) / (1 + sqrt(s_k)), s_k = 0.1 g_k^2 + 0.9 s_{k-1}.
// Stops when the mean or median relative ELBO change over the recent window
// falls below tol_rel_obj. Non-finite values restart the fit with a tenfold
// smaller learning rate, up to max_retries; then NumericalError.
AdviResult advi(const LogDensityFn& f, const Eigen::VectorXd& init_mu, const AdviConfig& cfg,
                Rng& rng);

// ---------------------------------------------------------------------------
// Model-level samplers

// Relaxed posterior target in unconstrained coordinates.
LogDensityFn relaxed_target(std::span<const Trace> traces, const PriorConfig& cfg);

DrawSet hmc_sample(Eigen::Index n_items, std::span<const Trace> traces, const PriorConfig& cfg,
                   const HmcConfig& hmc);

DrawSet advi_fit(Eigen::Index n_items, std::span<const Trace> traces, const PriorConfig& cfg,
                 const AdviConfig& advi_cfg);

// Random-walk Metropolis on the hard posterior, with blocks (one z row),
// logit rho and log beta (when free). gamma plays no part in the hard model
// and is reported at its prior mean. Throws NumericalError when no feasible
// start is found.
DrawSet hard_mh_sample(Eigen::Index n_items, std::span<const Trace> traces,
                       const PriorConfig& cfg, const MhConfig& mh);

}  // namespace pograd

#endif  // POGRAD_SAMPLERS_HPP
