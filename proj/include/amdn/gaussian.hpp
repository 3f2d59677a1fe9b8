#pragma once

// Univariate Gaussian action heads: squashing of raw network outputs, negative
// log-likelihood, closed-form KL divergence, and their analytic derivatives.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "amdn/nnet.hpp"
#include "amdn/types.hpp"

namespace amdn {

inline constexpr double kVarianceFloor = 1e-6;

template <typename Scalar>
struct GaussParamsT {
  Scalar mu = Scalar(0);
  Scalar var = Scalar(1);

  friend bool operator==(const GaussParamsT&, const GaussParamsT&) = default;
};
using GaussParams = GaussParamsT<double>;

/// Safe (expert) and unsafe (collision) action distributions for one state.
template <typename Scalar>
struct AmdnOutputT {
  GaussParamsT<Scalar> safe;
  GaussParamsT<Scalar> unsafe;
};
using AmdnOutput = AmdnOutputT<double>;

/// Partial derivatives with respect to (mu, var) of some scalar loss.
template <typename Scalar>
struct GaussGradT {
  Scalar d_mu = Scalar(0);
  Scalar d_var = Scalar(0);
};
using GaussGrad = GaussGradT<double>;

/// tanh mean, NNeLU variance with a floor.
template <typename Scalar>
GaussParamsT<Scalar> squash_gaussian(Scalar raw_mu, Scalar raw_var) {
  return {std::tanh(raw_mu),
          std::max(activate(Activation::kNnelu, raw_var), Scalar(kVarianceFloor))};
}

/// Chain rule from (d_mu, d_var) back to the two raw outputs of one head pair.
/// The floor is a hard clamp: when engaged the variance gradient is zero.
template <typename Scalar>
GaussGradT<Scalar> unsquash_grad(Scalar raw_mu, Scalar raw_var, const GaussGradT<Scalar>& g) {
  const Scalar nnelu = activate(Activation::kNnelu, raw_var);
  const Scalar dvar_draw =
      nnelu > Scalar(kVarianceFloor) ? activate_derivative(Activation::kNnelu, raw_var) : Scalar(0);
  return {g.d_mu * activate_derivative(Activation::kTanh, raw_mu), g.d_var * dvar_draw};
}

/// Raw order is (mu_safe, var_safe, mu_unsafe, var_unsafe).
template <typename Derived>
auto squash_heads(const Eigen::MatrixBase<Derived>& raw) {
  using Scalar = typename Derived::Scalar;
  if (raw.size() != 4) throw std::invalid_argument("squash_heads: expected 4 raw outputs");
  return AmdnOutputT<Scalar>{squash_gaussian(raw(0), raw(1)), squash_gaussian(raw(2), raw(3))};
}

template <typename Scalar>
Scalar nll(const GaussParamsT<Scalar>& g, Scalar a_hat) {
  const Scalar diff = a_hat - g.mu;
  return Scalar(0.5) * std::log(Scalar(2) * std::numbers::pi_v<Scalar> * g.var) +
         diff * diff / (Scalar(2) * g.var);
}

template <typename Scalar>
GaussGradT<Scalar> nll_grads(const GaussParamsT<Scalar>& g, Scalar a_hat) {
  const Scalar diff = a_hat - g.mu;
  return {(g.mu - a_hat) / g.var,
          Scalar(1) / (Scalar(2) * g.var) - diff * diff / (Scalar(2) * g.var * g.var)};
}

/// D_KL(p || q) for univariate Gaussians, closed form.
template <typename Scalar>
Scalar kl_gauss(const GaussParamsT<Scalar>& p, const GaussParamsT<Scalar>& q) {
  const Scalar diff = p.mu - q.mu;
  return Scalar(0.5) * std::log(q.var / p.var) + (p.var + diff * diff) / (Scalar(2) * q.var) -
         Scalar(0.5);
}

/// Gradient of D_KL(p || q) with respect to p only; q is held constant.
template <typename Scalar>
GaussGradT<Scalar> kl_grads_p(const GaussParamsT<Scalar>& p, const GaussParamsT<Scalar>& q) {
  return {(p.mu - q.mu) / q.var, Scalar(1) / (Scalar(2) * q.var) - Scalar(1) / (Scalar(2) * p.var)};
}

/// Unclipped draw from N(mu, var).
template <typename Scalar>
Scalar sample_unclipped(const GaussParamsT<Scalar>& g, Rng& rng) {
  std::normal_distribution<Scalar> dist(g.mu, std::sqrt(g.var));
  return dist(rng);
}

/// Draw from N(mu, var), clipped to the pedal range [-1, 1].
template <typename Scalar>
Scalar sample(const GaussParamsT<Scalar>& g, Rng& rng) {
  return std::clamp(sample_unclipped(g, rng), Scalar(-1), Scalar(1));
}

}  // namespace amdn
