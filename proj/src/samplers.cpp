#include "pograd/samplers.hpp"

#include "pograd/errors.hpp"
#include "pograd/parallel.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace pograd {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// Evaluates f, mapping throws and NaN to -inf.
double safe_eval(const LogDensityFn& f, const Eigen::VectorXd& w, Eigen::VectorXd* grad) {
  try {
    const double v = f(w, grad);
    if (!std::isfinite(v)) return kNegInf;
    if (grad && !grad->allFinite()) return kNegInf;
    return v;
  } catch (const std::exception&) {
    return kNegInf;
  }
}

double safe_eval(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& w) {
  try {
    const double v = f(w);
    return std::isnan(v) ? kNegInf : v;
  } catch (const std::exception&) {
    return kNegInf;
  }
}

Eigen::VectorXd uniform_init(Eigen::Index n, Rng& rng) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  Eigen::VectorXd w(n);
  for (Eigen::Index i = 0; i < n; ++i) w(i) = u(rng);
  return w;
}

// Uniform(-2, 2) starting point with a finite density, as in common
// probabilistic programming defaults.
Eigen::VectorXd finite_start(const LogDensityFn& f, Eigen::Index n, Rng& rng) {
  for (int attempt = 0; attempt < 100; ++attempt) {
    Eigen::VectorXd w = uniform_init(n, rng);
    Eigen::VectorXd g;
    if (std::isfinite(safe_eval(f, w, &g))) return w;
  }
  throw NumericalError("no initial point with finite log density after 100 attempts");
}

// Largest power-of-two rescaling of eps that crosses acceptance 0.5 for a
// single leapfrog step.
double reasonable_step(const LogDensityFn& f, const PhasePoint& start, double eps) {
  const double h0 = hamiltonian(start);
  auto accept = [&](double e) {
    PhasePoint z = start;
    if (!leapfrog(f, z, e, 1)) return 0.0;
    const double h = hamiltonian(z);
    return std::isfinite(h) ? std::min(1.0, std::exp(h0 - h)) : 0.0;
  };
  const double direction = accept(eps) > 0.5 ? 1.0 : -1.0;
  for (int k = 0; k < 50; ++k) {
    const double a = accept(eps);
    if (direction > 0 ? !(a > 0.5) : !(a < 0.5)) break;
    eps *= std::pow(2.0, direction);
  }
  return eps;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

void DrawSet::validate() const {
  for (const Draw& d : draws) {
    if (d.params.z.rows() != n_items() || d.params.z.cols() != dim()) {
      throw std::invalid_argument("DrawSet: draws have inconsistent shapes");
    }
  }
}

void HmcConfig::validate() const {
  if (warmup_iters < 1 || sampling_iters < 1) throw ConfigError("hmc: iteration counts must be > 0");
  if (!(target_accept > 0.0 && target_accept < 1.0)) {
    throw ConfigError("hmc: target_accept must lie in (0,1)");
  }
  if (max_leapfrog_steps < 1) throw ConfigError("hmc: max_leapfrog_steps must be > 0");
  if (!(init_step_size > 0.0)) throw ConfigError("hmc: init_step_size must be positive");
  if (chains < 1) throw ConfigError("hmc: chains must be > 0");
}

void MhConfig::validate() const {
  if (iters < 2) throw ConfigError("mh: iters must be >= 2");
  if (!(burn_in_fraction >= 0.0 && burn_in_fraction < 1.0)) {
    throw ConfigError("mh: burn_in_fraction must lie in [0,1)");
  }
  if (max_draws < 1 || tune_rounds < 0 || tune_iters < 1 || chains < 1 || init_retries < 1) {
    throw ConfigError("mh: counts must be positive");
  }
  if (!(scale_z > 0 && scale_rho > 0 && scale_beta > 0)) {
    throw ConfigError("mh: proposal scales must be positive");
  }
  if (!(0.0 < accept_lo && accept_lo < accept_hi && accept_hi < 1.0)) {
    throw ConfigError("mh: acceptance band must satisfy 0 < lo < hi < 1");
  }
}

void AdviConfig::validate() const {
  if (iters < 1 || mc_samples_grad < 1 || mc_samples_elbo < 1 || eval_every < 1 ||
      n_output_draws < 1 || adapt_iters < 1 || max_retries < 0) {
    throw ConfigError("advi: counts must be positive");
  }
  if (!(learning_rate > 0.0)) throw ConfigError("advi: learning_rate must be positive");
  if (!(tol_rel_obj > 0.0)) throw ConfigError("advi: tol_rel_obj must be positive");
}

// ---------------------------------------------------------------------------

bool leapfrog(const LogDensityFn& f, PhasePoint& z, double eps, int steps) {
  for (int s = 0; s < steps; ++s) {
    z.p += 0.5 * eps * z.grad;
    z.q += eps * z.p;
    z.logp = safe_eval(f, z.q, &z.grad);
    if (!std::isfinite(z.logp)) return false;
    z.p += 0.5 * eps * z.grad;
  }
  return true;
}

DualAveraging::DualAveraging(double initial_step, double target_accept)
    : mu_(std::log(10.0 * initial_step)), target_(target_accept), log_eps_(std::log(initial_step)) {}

double DualAveraging::update(double accept_prob) {
  constexpr double kGamma = 0.05, kT0 = 10.0, kKappa = 0.75;
  ++t_;
  const double eta = 1.0 / (t_ + kT0);
  h_bar_ = (1.0 - eta) * h_bar_ + eta * (target_ - accept_prob);
  log_eps_ = mu_ - std::sqrt(static_cast<double>(t_)) / kGamma * h_bar_;
  const double w = std::pow(static_cast<double>(t_), -kKappa);
  log_eps_bar_ = w * log_eps_ + (1.0 - w) * log_eps_bar_;
  return std::exp(log_eps_);
}

double DualAveraging::final_step() const { return std::exp(t_ > 0 ? log_eps_bar_ : log_eps_); }

ChainResult hmc_chain(const LogDensityFn& f, const Eigen::VectorXd& init, const HmcConfig& cfg,
                      Rng& rng) {
  cfg.validate();
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::uniform_int_distribution<int> length(1, cfg.max_leapfrog_steps);

  PhasePoint cur;
  cur.q = init;
  cur.logp = safe_eval(f, cur.q, &cur.grad);
  if (!std::isfinite(cur.logp)) throw NumericalError("hmc: initial point has non-finite log density");

  const Eigen::Index n = init.size();
  auto draw_momentum = [&] {
    Eigen::VectorXd p(n);
    for (Eigen::Index i = 0; i < n; ++i) p(i) = normal(rng);
    return p;
  };

  cur.p = draw_momentum();
  double eps = reasonable_step(f, cur, cfg.init_step_size);
  DualAveraging adapt(eps, cfg.target_accept);

  ChainResult out;
  const int total = cfg.warmup_iters + cfg.sampling_iters;
  double accept_sum = 0.0, block_sum = 0.0;
  constexpr int kTrailBlock = 50;
  for (int it = 0; it < total; ++it) {
    const bool warmup = it < cfg.warmup_iters;
    cur.p = draw_momentum();
    const double h0 = hamiltonian(cur);
    PhasePoint prop = cur;
    const bool ok = leapfrog(f, prop, eps, length(rng));
    double accept_prob = 0.0;
    bool divergent = !ok;
    if (ok) {
      const double err = hamiltonian(prop) - h0;
      if (!std::isfinite(err) || err > 1000.0) {
        divergent = true;
      } else {
        accept_prob = std::min(1.0, std::exp(-err));
      }
    }
    if (divergent) {
      if (!warmup) ++out.divergences;
    } else if (unif(rng) < accept_prob) {
      cur = std::move(prop);
    }
    block_sum += accept_prob;
    if ((it + 1) % kTrailBlock == 0) {
      out.trail.push_back(block_sum / kTrailBlock);
      block_sum = 0.0;
    }
    if (warmup) {
      eps = adapt.update(accept_prob);
      if (it + 1 == cfg.warmup_iters) eps = adapt.final_step();
    } else {
      accept_sum += accept_prob;
      out.samples.push_back(cur.q);
      out.logp.push_back(cur.logp);
    }
  }
  out.acceptance_rate = accept_sum / cfg.sampling_iters;
  out.step_size = eps;
  if (2 * out.divergences > cfg.sampling_iters) {
    throw NumericalError("hmc: " + std::to_string(out.divergences) + " of " +
                         std::to_string(cfg.sampling_iters) +
                         " iterations diverged; target too stiff, reduce tau/increase gamma prior mass");
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

struct MhState {
  Eigen::VectorXd x;
  double lp;
};

// One Metropolis move with a uniformly chosen block. Returns (block, accepted).
std::pair<std::size_t, bool> mh_move(const std::function<double(const Eigen::VectorXd&)>& logp,
                                     MhState& s, const std::vector<MhBlock>& blocks, Rng& rng) {
  std::uniform_int_distribution<std::size_t> pick_block(0, blocks.size() - 1);
  const std::size_t b = pick_block(rng);
  const MhBlock& block = blocks[b];
  std::uniform_int_distribution<std::size_t> pick_group(0, block.groups.size() - 1);
  const auto& group = block.groups[pick_group(rng)];
  std::normal_distribution<double> normal(0.0, block.scale);
  Eigen::VectorXd prop = s.x;
  for (Eigen::Index i : group) prop(i) += normal(rng);
  const double lp = safe_eval(logp, prop);
  const double log_u = std::log(std::uniform_real_distribution<double>(0.0, 1.0)(rng));
  if (lp != kNegInf && log_u < lp - s.lp) {
    s.x = std::move(prop);
    s.lp = lp;
    return {b, true};
  }
  return {b, false};
}

void check_blocks(const std::vector<MhBlock>& blocks) {
  if (blocks.empty()) throw std::invalid_argument("mh: no proposal blocks");
  for (const auto& b : blocks) {
    if (b.groups.empty() || !(b.scale > 0.0)) {
      throw std::invalid_argument("mh: block '" + b.name + "' is empty or has a bad scale");
    }
  }
}

}  // namespace

Eigen::VectorXd tune_mh_scales(const std::function<double(const Eigen::VectorXd&)>& logp,
                               const Eigen::VectorXd& init, std::vector<MhBlock>& blocks,
                               const MhConfig& cfg, Rng& rng) {
  check_blocks(blocks);
  MhState s{init, safe_eval(logp, init)};
  if (s.lp == kNegInf) throw NumericalError("mh: initial state has zero posterior density");
  for (int round = 0; round < cfg.tune_rounds; ++round) {
    std::vector<int> tried(blocks.size(), 0), accepted(blocks.size(), 0);
    for (int it = 0; it < cfg.tune_iters; ++it) {
      const auto [b, acc] = mh_move(logp, s, blocks, rng);
      ++tried[b];
      accepted[b] += acc;
    }
    bool settled = true;
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      if (tried[b] == 0) continue;
      const double rate = static_cast<double>(accepted[b]) / tried[b];
      if (rate < cfg.accept_lo) {
        blocks[b].scale *= 0.5;
        settled = false;
      } else if (rate > cfg.accept_hi) {
        blocks[b].scale *= 2.0;
        settled = false;
      }
    }
    if (settled) break;
  }
  return s.x;
}

ChainResult random_walk_mh(const std::function<double(const Eigen::VectorXd&)>& logp,
                           const Eigen::VectorXd& init, const std::vector<MhBlock>& blocks,
                           const MhConfig& cfg, Rng& rng) {
  cfg.validate();
  check_blocks(blocks);
  MhState s{init, safe_eval(logp, init)};
  if (s.lp == kNegInf) throw NumericalError("mh: initial state has zero posterior density");

  const long burn = static_cast<long>(std::floor(cfg.iters * cfg.burn_in_fraction));
  const long kept = cfg.iters - burn;
  const long thin = std::max<long>(1, (kept + cfg.max_draws - 1) / cfg.max_draws);
  const long trail_block = std::max<long>(1, cfg.iters / 100);

  ChainResult out;
  long accepted = 0, block_accepted = 0;
  for (long it = 0; it < cfg.iters; ++it) {
    const bool acc = mh_move(logp, s, blocks, rng).second;
    accepted += acc;
    block_accepted += acc;
    if ((it + 1) % trail_block == 0) {
      out.trail.push_back(static_cast<double>(block_accepted) / trail_block);
      block_accepted = 0;
    }
    if (it >= burn && (it - burn + 1) % thin == 0) {
      out.samples.push_back(s.x);
      out.logp.push_back(s.lp);
    }
  }
  out.acceptance_rate = static_cast<double>(accepted) / cfg.iters;
  return out;
}

// ---------------------------------------------------------------------------

double gaussian_entropy(const Eigen::MatrixXd& l) {
  const double n = static_cast<double>(l.rows());
  return 0.5 * n * (1.0 + std::log(2.0 * std::numbers::pi)) +
         l.diagonal().array().abs().log().sum();
}

double elbo_estimate(const LogDensityFn& f, const GaussianApprox& q, int n_samples, Rng& rng) {
  const Eigen::Index n = q.mu.size();
  double total = 0.0;
  for (int s = 0; s < n_samples; ++s) {
    const Eigen::VectorXd w = q.mu + q.l.triangularView<Eigen::Lower>() * standard_normal_vector(n, rng);
    const double v = f(w, nullptr);
    if (!std::isfinite(v)) throw NumericalError("advi: non-finite log density in ELBO estimate");
    total += v;
  }
  return total / n_samples + gaussian_entropy(q.l);
}

ElboGradient elbo_gradient_estimate(const LogDensityFn& f, const GaussianApprox& q, int n_samples,
                                    Rng& rng) {
  const Eigen::Index n = q.mu.size();
  ElboGradient g{Eigen::VectorXd::Zero(n), Eigen::MatrixXd::Zero(n, n)};
  Eigen::VectorXd grad;
  for (int s = 0; s < n_samples; ++s) {
    const Eigen::VectorXd eps = standard_normal_vector(n, rng);
    const Eigen::VectorXd w = q.mu + q.l.triangularView<Eigen::Lower>() * eps;
    const double v = f(w, &grad);
    if (!std::isfinite(v) || !grad.allFinite()) {
      throw NumericalError("advi: non-finite gradient of the log density");
    }
    g.d_mu += grad;
    g.d_l += grad * eps.transpose();
  }
  g.d_mu /= n_samples;
  g.d_l /= n_samples;
  g.d_l = g.d_l.triangularView<Eigen::Lower>();
  g.d_l.diagonal() += q.l.diagonal().cwiseInverse();
  return g;
}

namespace {

struct AdviRun {
  GaussianApprox q;
  std::vector<double> trail;
  int iterations = 0;
  bool converged = false;
};

// Ascent from (init, I); throws NumericalError on non-finite values. Without
// check_convergence runs exactly `iters` steps and records no ELBO trail.
AdviRun advi_ascend(const LogDensityFn& f, const Eigen::VectorXd& init, double eta, int iters,
                    const AdviConfig& cfg, bool check_convergence, Rng& rng) {
  const Eigen::Index n = init.size();
  AdviRun run;
  run.q = {init, Eigen::MatrixXd::Identity(n, n)};
  Eigen::VectorXd s_mu = Eigen::VectorXd::Zero(n);
  Eigen::MatrixXd s_l = Eigen::MatrixXd::Zero(n, n);
  const std::size_t window = static_cast<std::size_t>(
      std::max(0.1 * cfg.iters / cfg.eval_every, 2.0));
  std::vector<double> rel_changes;
  double elbo_prev = check_convergence ? elbo_estimate(f, run.q, cfg.mc_samples_elbo, rng) : 0.0;
  if (check_convergence) run.trail.push_back(elbo_prev);

  for (int k = 1; k <= iters; ++k) {
    const ElboGradient g = elbo_gradient_estimate(f, run.q, cfg.mc_samples_grad, rng);
    if (k == 1) {
      s_mu = g.d_mu.cwiseAbs2();
      s_l = g.d_l.cwiseAbs2();
    } else {
      s_mu = 0.1 * g.d_mu.cwiseAbs2() + 0.9 * s_mu;
      s_l = 0.1 * g.d_l.cwiseAbs2() + 0.9 * s_l;
    }
    const double base = eta * std::pow(static_cast<double>(k), -0.5 + 1e-16);
    run.q.mu.array() += base * g.d_mu.array() / (1.0 + s_mu.array().sqrt());
    run.q.l.array() += base * g.d_l.array() / (1.0 + s_l.array().sqrt());
    if (!run.q.mu.allFinite() || !run.q.l.allFinite()) {
      throw NumericalError("advi: variational parameters became non-finite");
    }
    run.iterations = k;
    if (check_convergence && k % cfg.eval_every == 0) {
      const double elbo = elbo_estimate(f, run.q, cfg.mc_samples_elbo, rng);
      run.trail.push_back(elbo);
      rel_changes.push_back(std::abs((elbo - elbo_prev) / elbo));
      if (rel_changes.size() > window) rel_changes.erase(rel_changes.begin());
      elbo_prev = elbo;
      const double mean =
          std::accumulate(rel_changes.begin(), rel_changes.end(), 0.0) / rel_changes.size();
      if (mean < cfg.tol_rel_obj || median(rel_changes) < cfg.tol_rel_obj) {
        run.converged = true;
        break;
      }
    }
  }
  return run;
}

}  // namespace

AdviResult advi(const LogDensityFn& f, const Eigen::VectorXd& init_mu, const AdviConfig& cfg,
                Rng& rng) {
  cfg.validate();
  double eta = cfg.learning_rate;
  if (cfg.adapt_learning_rate) {
    double best = -std::numeric_limits<double>::infinity();
    bool found = false;
    for (double candidate : {100.0, 10.0, 1.0, 0.1, 0.01}) {
      try {
        const AdviRun trial = advi_ascend(f, init_mu, candidate, cfg.adapt_iters, cfg, false, rng);
        const double elbo = elbo_estimate(f, trial.q, cfg.mc_samples_elbo, rng);
        if (elbo > best) {
          best = elbo;
          eta = candidate;
          found = true;
        }
      } catch (const NumericalError&) {
      }
    }
    if (!found) eta = 0.01;
  }
  for (int attempt = 0; attempt <= cfg.max_retries; ++attempt) {
    try {
      AdviRun run = advi_ascend(f, init_mu, eta, cfg.iters, cfg, true, rng);
      AdviResult out;
      out.q = std::move(run.q);
      out.elbo_trail = std::move(run.trail);
      out.iterations = run.iterations;
      out.learning_rate = eta;
      out.converged = run.converged;
      return out;
    } catch (const NumericalError&) {
      eta /= 10.0;
    }
  }
  throw NumericalError("advi: ELBO stayed non-finite after " + std::to_string(cfg.max_retries) +
                       " learning-rate reductions");
}

// ---------------------------------------------------------------------------

LogDensityFn relaxed_target(std::span<const Trace> traces, const PriorConfig& cfg) {
  std::vector<Trace> owned(traces.begin(), traces.end());
  return [owned = std::move(owned), cfg](const Eigen::VectorXd& w, Eigen::VectorXd* grad) {
    LogDensityGradient lg = relaxed_log_posterior(w, owned, cfg);
    if (grad) *grad = std::move(lg.grad);
    return lg.logp;
  };
}

namespace {

void check_traces(Eigen::Index n_items, std::span<const Trace> traces) {
  for (const Trace& t : traces) t.validate(n_items);
}

DrawSet merge_chains(const std::vector<ChainResult>& chains, Eigen::Index n_items,
                     const PriorConfig& cfg, const std::string& method, std::uint64_t seed) {
  DrawSet ds;
  ds.meta.method = method;
  ds.meta.seed = seed;
  ds.meta.tau = cfg.tau;
  ds.meta.chains = static_cast<int>(chains.size());
  double accept = 0.0, step = 0.0;
  for (const ChainResult& c : chains) {
    for (std::size_t i = 0; i < c.samples.size(); ++i) {
      ds.draws.push_back({transform(c.samples[i], n_items, cfg).params, c.logp[i]});
    }
    ds.meta.trail.insert(ds.meta.trail.end(), c.trail.begin(), c.trail.end());
    ds.meta.divergences += c.divergences;
    accept += c.acceptance_rate;
    step += c.step_size;
  }
  ds.meta.acceptance_rate = accept / chains.size();
  ds.meta.step_size = step / chains.size();
  return ds;
}

}  // namespace

DrawSet hmc_sample(Eigen::Index n_items, std::span<const Trace> traces, const PriorConfig& cfg,
                   const HmcConfig& hmc) {
  cfg.validate();
  hmc.validate();
  check_traces(n_items, traces);
  const auto start = std::chrono::steady_clock::now();
  const LogDensityFn f = relaxed_target(traces, cfg);
  const Eigen::Index dim = ParamLayout(n_items, cfg).size();
  std::vector<ChainResult> chains(static_cast<std::size_t>(hmc.chains));
  parallel_for(hmc.chains, [&](int c) {
    Rng rng = substream(hmc.seed, static_cast<std::uint64_t>(c));
    const Eigen::VectorXd init = finite_start(f, dim, rng);
    chains[static_cast<std::size_t>(c)] = hmc_chain(f, init, hmc, rng);
  });
  DrawSet ds = merge_chains(chains, n_items, cfg, "relaxed_hmc", hmc.seed);
  ds.meta.seconds = seconds_since(start);
  return ds;
}

DrawSet advi_fit(Eigen::Index n_items, std::span<const Trace> traces, const PriorConfig& cfg,
                 const AdviConfig& advi_cfg) {
  cfg.validate();
  advi_cfg.validate();
  check_traces(n_items, traces);
  const auto start = std::chrono::steady_clock::now();
  const LogDensityFn f = relaxed_target(traces, cfg);
  Rng rng = substream(advi_cfg.seed, 0);
  const Eigen::VectorXd init = finite_start(f, ParamLayout(n_items, cfg).size(), rng);
  const AdviResult fit = advi(f, init, advi_cfg, rng);

  DrawSet ds;
  ds.meta.method = "fullrank_vi";
  ds.meta.seed = advi_cfg.seed;
  ds.meta.tau = cfg.tau;
  ds.meta.trail = fit.elbo_trail;
  ds.meta.step_size = fit.learning_rate;
  ds.meta.converged = fit.converged;
  const Eigen::Index n = fit.q.mu.size();
  int rejected = 0;
  while (static_cast<int>(ds.draws.size()) < advi_cfg.n_output_draws) {
    const Eigen::VectorXd w =
        fit.q.mu + fit.q.l.triangularView<Eigen::Lower>() * standard_normal_vector(n, rng);
    const double lp = safe_eval(f, w, nullptr);
    if (!std::isfinite(lp)) {
      if (++rejected > 10 * advi_cfg.n_output_draws) {
        throw NumericalError("advi: fitted approximation puts most mass on non-finite densities");
      }
      continue;
    }
    ds.draws.push_back({transform(w, n_items, cfg).params, lp});
  }
  ds.meta.seconds = seconds_since(start);
  return ds;
}

namespace {

// Z for the antichain embedding u_x = (x, -x, 0, ...), which makes every pair
// incomparable and hence every trace feasible.
Eigen::VectorXd antichain_start(Eigen::Index n_items, const PriorConfig& cfg) {
  ModelParams p;
  p.rho = 0.5;
  p.beta = cfg.fix_beta ? *cfg.fix_beta : 1.0;
  p.gamma = *cfg.fix_gamma;
  Eigen::MatrixXd u = Eigen::MatrixXd::Zero(n_items, cfg.d);
  for (Eigen::Index x = 0; x < n_items; ++x) {
    u(x, 0) = static_cast<double>(x);
    u(x, 1) = -static_cast<double>(x);
  }
  const Eigen::MatrixXd l = prior_cholesky(p.rho, cfg.d);
  p.z = l.triangularView<Eigen::Lower>().solve(u.transpose()).transpose();
  return inverse_transform(p, cfg);
}

}  // namespace

DrawSet hard_mh_sample(Eigen::Index n_items, std::span<const Trace> traces,
                       const PriorConfig& cfg, const MhConfig& mh) {
  cfg.validate();
  mh.validate();
  check_traces(n_items, traces);
  const auto start = std::chrono::steady_clock::now();

  PriorConfig hard_cfg = cfg;
  if (!hard_cfg.fix_gamma) hard_cfg.fix_gamma = cfg.a_gamma / cfg.b_gamma;
  const ParamLayout layout(n_items, hard_cfg);
  const std::vector<Trace> owned(traces.begin(), traces.end());
  const std::function<double(const Eigen::VectorXd&)> target = [&](const Eigen::VectorXd& w) {
    const Transformed t = transform(w, n_items, hard_cfg);
    const double lp = hard_log_posterior(t.params, owned, hard_cfg);
    return is_log_zero(lp) ? lp : lp + t.log_jacobian;
  };

  std::vector<MhBlock> blocks;
  MhBlock rows{"z_row", {}, mh.scale_z};
  for (Eigen::Index x = 0; x < n_items; ++x) {
    std::vector<Eigen::Index> g(static_cast<std::size_t>(cfg.d));
    std::iota(g.begin(), g.end(), x * cfg.d);
    rows.groups.push_back(std::move(g));
  }
  if (!rows.groups.empty()) blocks.push_back(std::move(rows));
  blocks.push_back({"eta_rho", {{layout.rho_index()}}, mh.scale_rho});
  if (layout.free_beta) blocks.push_back({"eta_beta", {{layout.beta_index()}}, mh.scale_beta});

  std::vector<ChainResult> chains(static_cast<std::size_t>(mh.chains));
  parallel_for(mh.chains, [&](int c) {
    Rng rng = substream(mh.seed, static_cast<std::uint64_t>(c));
    Eigen::VectorXd init;
    for (int attempt = 0; attempt < mh.init_retries && init.size() == 0; ++attempt) {
      const Eigen::VectorXd w = inverse_transform(sample_prior(n_items, hard_cfg, rng), hard_cfg);
      if (safe_eval(target, w) != kNegInf) init = w;
    }
    if (init.size() == 0 && cfg.d >= 2) {
      const Eigen::VectorXd w = antichain_start(n_items, hard_cfg);
      if (safe_eval(target, w) != kNegInf) init = w;
    }
    if (init.size() == 0) {
      throw NumericalError("hard_mh: no feasible initial embedding found after " +
                           std::to_string(mh.init_retries) + " prior draws");
    }
    std::vector<MhBlock> tuned = blocks;
    init = tune_mh_scales(target, init, tuned, mh, rng);
    chains[static_cast<std::size_t>(c)] = random_walk_mh(target, init, tuned, mh, rng);
  });

  DrawSet ds = merge_chains(chains, n_items, hard_cfg, "hard_mcmc", mh.seed);
  ds.meta.tau = 0.0;
  ds.meta.seconds = seconds_since(start);
  return ds;
}

}  // namespace pograd
