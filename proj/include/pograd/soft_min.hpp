#ifndef POGRAD_SOFT_MIN_HPP
#define POGRAD_SOFT_MIN_HPP

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

namespace pograd {

// -tau * log sum_k exp(-a_k / tau), shifted by min(a) so no term overflows.
// Lies in [min(a) - tau*log(d), min(a)].
template <typename Derived>
typename Derived::Scalar soft_min(const Eigen::MatrixBase<Derived>& a,
                                  typename Derived::Scalar tau) {
  using Scalar = typename Derived::Scalar;
  if (a.size() == 0) throw std::invalid_argument("soft_min: empty vector");
  if (!(tau > Scalar(0))) throw std::invalid_argument("soft_min: tau must be positive");
  const Scalar lo = a.minCoeff();
  const Scalar s = (-(a.array() - lo) / tau).exp().sum();
  return lo - tau * std::log(s);
}

// d soft_min / d a_k: softmax of -a/tau. Sums to one.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> soft_min_weights(
    const Eigen::MatrixBase<Derived>& a, typename Derived::Scalar tau) {
  using Scalar = typename Derived::Scalar;
  const Scalar lo = a.minCoeff();
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> w = (-(a.array() - lo) / tau).exp().matrix();
  w /= w.sum();
  return w;
}

template <typename Scalar>
Scalar sigmoid(Scalar t) {
  if (t >= Scalar(0)) return Scalar(1) / (Scalar(1) + std::exp(-t));
  const Scalar e = std::exp(t);
  return e / (Scalar(1) + e);
}

// log(1 - sigmoid(t)) = -softplus(t), without forming 1 - sigmoid(t).
template <typename Scalar>
Scalar log_sigmoid_complement(Scalar t) {
  if (t > Scalar(0)) return -t - std::log1p(std::exp(-t));
  return -std::log1p(std::exp(t));
}

// log(mean(exp(v))) with max shift. Returns -inf when every entry is -inf.
template <typename Derived>
typename Derived::Scalar log_mean_exp(const Eigen::MatrixBase<Derived>& v) {
  using Scalar = typename Derived::Scalar;
  const Scalar hi = v.maxCoeff();
  if (!std::isfinite(hi)) return hi;
  return hi + std::log((v.array() - hi).exp().sum() / Scalar(v.size()));
}

}  // namespace pograd

#endif  // POGRAD_SOFT_MIN_HPP
