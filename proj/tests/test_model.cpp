#include "pograd/errors.hpp"
#include "pograd/model.hpp"

#include "test_support.hpp"

#include <doctest.h>

#include <cmath>

using namespace pograd;
using namespace pograd::testing;

namespace {

// Two-sample Kolmogorov-Smirnov p-value from the asymptotic distribution.
double ks_two_sample_pvalue(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double stat = 0.0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= v) ++i;
    while (j < b.size() && b[j] <= v) ++j;
    stat = std::max(stat, std::abs(static_cast<double>(i) / a.size() - static_cast<double>(j) / b.size()));
  }
  const double ne = static_cast<double>(a.size()) * b.size() / (a.size() + b.size());
  const double lambda = (std::sqrt(ne) + 0.12 + 0.11 / std::sqrt(ne)) * stat;
  double p = 0.0;
  for (int k = 1; k <= 100; ++k) {
    p += 2.0 * (k % 2 ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
  }
  return std::clamp(p, 0.0, 1.0);
}

double trapezoid(const std::function<double(double)>& f, double lo, double hi, int steps) {
  const double h = (hi - lo) / steps;
  double s = 0.5 * (f(lo) + f(hi));
  for (int k = 1; k < steps; ++k) s += f(lo + k * h);
  return s * h;
}

Eigen::VectorXd random_w(const ParamLayout& layout, Rng& rng, double scale = 1.0) {
  Eigen::VectorXd w = scale * standard_normal_vector(layout.size(), rng);
  return w;
}

std::vector<Trace> random_traces(int n, int count, Rng& rng) {
  std::vector<Trace> out;
  for (int k = 0; k < count; ++k) {
    ItemSet order = iota_items(n);
    std::shuffle(order.begin(), order.end(), rng);
    order.resize(std::uniform_int_distribution<int>(2, n)(rng));
    ItemSet cs = order;
    std::sort(cs.begin(), cs.end());
    out.push_back(Trace{cs, order});
  }
  return out;
}

}  // namespace

TEST_CASE("prior config validation") {
  PriorConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.a_rho = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = PriorConfig{};
  cfg.d = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = PriorConfig{};
  cfg.tau = -1.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("prior cholesky examples") {
  Eigen::Matrix2d expected;
  expected << 1.0, 0.0, 0.9, std::sqrt(0.19);
  CHECK((prior_cholesky(0.9, 2) - expected).norm() < 1e-14);
  CHECK((prior_cholesky(1e-12, 4) - Eigen::MatrixXd::Identity(4, 4)).norm() < 1e-6);
  CHECK(prior_cholesky(0.3, 1)(0, 0) == 1.0);
  CHECK_THROWS_AS(prior_cholesky(0.0, 2), std::invalid_argument);
  CHECK_THROWS_AS(prior_cholesky(1.0, 2), std::invalid_argument);

  for (double rho : {0.05, 0.5, 0.9, 0.99}) {
    for (int d = 1; d <= 6; ++d) {
      const Eigen::MatrixXd l = prior_cholesky(rho, d);
      Eigen::MatrixXd sigma = Eigen::MatrixXd::Constant(d, d, rho);
      sigma.diagonal().setOnes();
      CHECK((l * l.transpose() - sigma).cwiseAbs().maxCoeff() < 1e-12);
      CHECK(l.isLowerTriangular());
    }
  }
}

TEST_CASE("cholesky derivative matches finite differences") {
  for (double rho : {0.1, 0.4, 0.7, 0.95}) {
    for (int d = 1; d <= 6; ++d) {
      const double h = 1e-6;
      const Eigen::MatrixXd fd = (prior_cholesky(rho + h, d) - prior_cholesky(rho - h, d)) / (2 * h);
      const Eigen::MatrixXd an = prior_cholesky_derivative(rho, d);
      for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) {
          CHECK(std::abs(an(i, j) - fd(i, j)) <= 1e-6 * std::max(1.0, std::abs(fd(i, j))));
        }
      }
    }
  }
}

TEST_CASE("to_embedding examples") {
  Rng rng(51);
  ModelParams p;
  p.z = standard_normal_matrix(4, 3, rng);
  p.rho = 1e-12;
  CHECK((to_embedding(p).matrix() - p.z).norm() < 1e-6);
  p.z.setZero();
  p.rho = 0.7;
  CHECK(to_embedding(p).matrix().isZero());
}

TEST_CASE("embedding rows have the equicorrelation covariance") {
  Rng rng(152);
  const int n = 100000, d = 3;
  const double rho = 0.6;
  ModelParams p;
  p.z = standard_normal_matrix(n, d, rng);
  p.rho = rho;
  const Eigen::MatrixXd u = to_embedding(p).matrix();
  const Eigen::MatrixXd cov = u.transpose() * u / n;
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      const double target = i == j ? 1.0 : rho;
      const double se = std::sqrt((1.0 + target * target) / n);
      CHECK(std::abs(cov(i, j) - target) < 3.0 * se);
    }
  }
}

TEST_CASE("transform examples") {
  PriorConfig cfg;
  cfg.d = 2;
  const ParamLayout layout(3, cfg);
  REQUIRE(layout.size() == 9);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(layout.size());
  const Transformed t = transform(w, 3, cfg);
  CHECK(t.params.rho == 0.5);
  CHECK(t.params.beta == 1.0);
  CHECK(t.params.gamma == 1.0);
  CHECK(t.log_jacobian == doctest::Approx(std::log(0.25)));

  w(layout.beta_index()) = 0.7;
  w(layout.gamma_index()) = -0.2;
  CHECK(transform(w, 3, cfg).log_jacobian == doctest::Approx(std::log(0.25) + 0.5));

  // Row-major placement of Z.
  w(1 * 2 + 0) = 4.0;
  CHECK(transform(w, 3, cfg).params.z(1, 0) == 4.0);

  cfg.fix_beta = 0.0;
  const ParamLayout fixed(3, cfg);
  CHECK(fixed.size() == 8);
  CHECK(fixed.gamma_index() == 7);
  Eigen::VectorXd wf = Eigen::VectorXd::Zero(8);
  wf(7) = 0.4;
  const Transformed tf = transform(wf, 3, cfg);
  CHECK(tf.params.beta == 0.0);
  CHECK(tf.log_jacobian == doctest::Approx(std::log(0.25) + 0.4));
  CHECK_THROWS_AS(transform(Eigen::VectorXd::Zero(9), 3, cfg), std::invalid_argument);
}

TEST_CASE("transform round trip") {
  Rng rng(53);
  for (int trial = 0; trial < 200; ++trial) {
    PriorConfig cfg;
    cfg.d = std::uniform_int_distribution<int>(1, 4)(rng);
    if (trial % 3 == 0) cfg.fix_beta = 0.0;
    if (trial % 4 == 0) cfg.fix_gamma = 5.0;
    const int n = std::uniform_int_distribution<int>(1, 6)(rng);
    const Eigen::VectorXd w = random_w(ParamLayout(n, cfg), rng, 3.0);
    const Eigen::VectorXd back = inverse_transform(transform(w, n, cfg).params, cfg);
    CHECK((back - w).cwiseAbs().maxCoeff() < 1e-12 * std::max(1.0, w.cwiseAbs().maxCoeff()) * 10);
  }
}

TEST_CASE("log posterior with zero traces is prior plus Jacobian") {
  Rng rng(54);
  PriorConfig cfg;
  cfg.d = 2;
  const ParamLayout layout(4, cfg);
  const Eigen::VectorXd w = random_w(layout, rng);
  const std::vector<Trace> none;
  const LogDensityGradient lg = relaxed_log_posterior(w, none, cfg);
  const Transformed t = transform(w, 4, cfg);
  CHECK(lg.logp == doctest::Approx(log_prior(t.params, cfg) + t.log_jacobian).epsilon(1e-12));
  const Eigen::VectorXd fd = finite_difference(
      [&](const Eigen::VectorXd& v) { return relaxed_log_posterior(v, none, cfg).logp; }, w);
  CHECK(max_relative_error(lg.grad, fd) <= 1e-6);
}

TEST_CASE("duplicated traces add their likelihood exactly") {
  Rng rng(55);
  PriorConfig cfg;
  cfg.d = 2;
  const Eigen::VectorXd w = random_w(ParamLayout(5, cfg), rng);
  const std::vector<Trace> none;
  const std::vector<Trace> one{Trace::of({3, 1, 4, 0})};
  const std::vector<Trace> two{Trace::of({3, 1, 4, 0}), Trace::of({3, 1, 4, 0})};
  const double p0 = relaxed_log_posterior(w, none, cfg).logp;
  const double p1 = relaxed_log_posterior(w, one, cfg).logp;
  const double p2 = relaxed_log_posterior(w, two, cfg).logp;
  CHECK(p2 - p0 == doctest::Approx(2.0 * (p1 - p0)).epsilon(1e-12));
}

TEST_CASE("property: relaxed log posterior gradient matches finite differences") {
  Rng rng(56);
  for (int trial = 0; trial < 30; ++trial) {
    PriorConfig cfg;
    cfg.d = 2;
    cfg.tau = std::uniform_real_distribution<double>(0.1, 1.0)(rng);
    if (trial % 5 == 4) cfg.fix_beta = 0.0;
    const auto traces = random_traces(5, 3, rng);
    const Eigen::VectorXd w = random_w(ParamLayout(5, cfg), rng);
    const LogDensityGradient lg = relaxed_log_posterior(w, traces, cfg);
    const Eigen::VectorXd fd = finite_difference(
        [&](const Eigen::VectorXd& v) { return relaxed_log_posterior(v, traces, cfg).logp; }, w);
    CHECK(max_relative_error(lg.grad, fd) <= 1e-4);
  }
}

TEST_CASE("property: relaxed log posterior stays finite") {
  Rng rng(57);
  PriorConfig cfg;
  cfg.d = 3;
  cfg.tau = 0.05;
  for (int trial = 0; trial < 200; ++trial) {
    const auto traces = random_traces(6, 4, rng);
    const Eigen::VectorXd w = random_w(ParamLayout(6, cfg), rng, 4.0);
    const LogDensityGradient lg = relaxed_log_posterior(w, traces, cfg);
    CHECK(std::isfinite(lg.logp));
    CHECK(lg.grad.allFinite());
  }
}

TEST_CASE("hard log posterior examples") {
  PriorConfig cfg;
  cfg.d = 2;
  ModelParams p;
  p.z.resize(4, 2);
  p.z << 3.0, 3.0, 2.0, 1.0, 1.0, 2.0, 0.0, 0.0;
  p.rho = 1e-9;
  p.beta = 0.0;
  cfg.fix_beta = 0.0;
  const double prior = log_prior(p, cfg, false);
  const std::vector<Trace> ok{Trace::of({0, 2, 1, 3})};
  CHECK(hard_log_posterior(p, ok, cfg) == doctest::Approx(prior + std::log(0.5)));
  const std::vector<Trace> bad{Trace::of({0, 2, 1, 3}), Trace::of({3, 2, 1, 0})};
  CHECK(is_log_zero(hard_log_posterior(p, bad, cfg)));
}

TEST_CASE("hard and relaxed likelihoods agree in the sharp regime") {
  Rng rng(58);
  PriorConfig cfg;
  cfg.d = 3;
  cfg.tau = 0.005;
  cfg.fix_gamma = 200.0;
  for (int trial = 0; trial < 50; ++trial) {
    ModelParams p;
    p.rho = 0.3;
    p.beta = 0.8;
    p.gamma = 200.0;
    // Separate U, then pull back to Z through the Cholesky factor.
    const Eigen::MatrixXd u = separated_embedding(6, 3, 0.2, rng);
    const Eigen::MatrixXd l = prior_cholesky(p.rho, 3);
    p.z = l.triangularView<Eigen::Lower>().solve(u.transpose()).transpose();
    const PartialOrder po = induced_order(to_embedding(p));
    const auto exts = enumerate_linear_extensions(po, iota_items(6));
    const ItemSet& ext = exts[std::uniform_int_distribution<std::size_t>(0, exts.size() - 1)(rng)];
    const std::vector<Trace> traces{Trace::of(ext)};
    const double hard = hard_log_posterior(p, traces, cfg) - log_prior(p, cfg, false);
    const double relaxed = relaxed_log_joint(p, traces, cfg) - log_prior(p, cfg);
    CHECK(std::abs(hard - relaxed) < 1e-3);
  }
}

TEST_CASE("Jacobian: slice integrals agree in both coordinate systems") {
  PriorConfig cfg;
  cfg.d = 2;
  Rng rng(59);
  const std::vector<Trace> traces{Trace::of({1, 0})};
  const ParamLayout layout(2, cfg);
  const Eigen::VectorXd w0 = random_w(layout, rng, 0.5);
  const Transformed base = transform(w0, 2, cfg);

  SUBCASE("beta") {
    const double in_w = trapezoid(
        [&](double eta) {
          Eigen::VectorXd w = w0;
          w(layout.beta_index()) = eta;
          return std::exp(relaxed_log_posterior(w, traces, cfg).logp);
        },
        -25.0, 5.0, 30000);
    const double in_beta = trapezoid(
        [&](double beta) {
          ModelParams p = base.params;
          p.beta = beta;
          const double lj = base.log_jacobian - std::log(base.params.beta);
          return std::exp(relaxed_log_joint(p, traces, cfg) + lj);
        },
        0.0, 150.0, 300000);
    CHECK(in_w == doctest::Approx(in_beta).epsilon(1e-3));
  }
  SUBCASE("rho") {
    const double in_w = trapezoid(
        [&](double eta) {
          Eigen::VectorXd w = w0;
          w(layout.rho_index()) = eta;
          return std::exp(relaxed_log_posterior(w, traces, cfg).logp);
        },
        -40.0, 40.0, 40000);
    const double rho0 = base.params.rho;
    const double rest = base.log_jacobian - std::log(rho0) - std::log1p(-rho0);
    const double in_rho = trapezoid(
        [&](double rho) {
          if (rho <= 0.0 || rho >= 1.0) return 0.0;
          ModelParams p = base.params;
          p.rho = rho;
          return std::exp(relaxed_log_joint(p, traces, cfg) + rest);
        },
        0.0, 1.0, 40000);
    CHECK(in_w == doctest::Approx(in_rho).epsilon(1e-3));
  }
}

TEST_CASE("marginal consistency of precedence entries under the prior") {
  PriorConfig cfg;
  cfg.d = 3;
  Rng rng(60);
  const int samples = 10000;
  std::vector<double> big01, small01, big20, small20;
  for (int s = 0; s < samples; ++s) {
    const ModelParams pb = sample_prior(6, cfg, rng);
    const SoftPrecedence db(to_embedding(pb).matrix(), cfg.tau, pb.gamma);
    const ItemSet subset{0, 1, 2};
    const SoftPrecedence rb = db.restricted(subset);
    big01.push_back(rb(0, 1));
    big20.push_back(rb(2, 0));
    const ModelParams ps = sample_prior(3, cfg, rng);
    const SoftPrecedence ds(to_embedding(ps).matrix(), cfg.tau, ps.gamma);
    small01.push_back(ds(0, 1));
    small20.push_back(ds(2, 0));
  }
  CHECK(ks_two_sample_pvalue(big01, small01) > 0.01);
  CHECK(ks_two_sample_pvalue(big20, small20) > 0.01);
}

TEST_CASE("non-finite inputs are reported with their coordinate") {
  PriorConfig cfg;
  cfg.d = 2;
  Eigen::VectorXd w = Eigen::VectorXd::Zero(ParamLayout(3, cfg).size());
  w(3) = std::numeric_limits<double>::infinity();
  const std::vector<Trace> traces{Trace::of({0, 1, 2})};
  CHECK_THROWS_AS(relaxed_log_posterior(w, traces, cfg), std::exception);
}
