#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "amdn/gaussian.hpp"
#include "fd.hpp"

using namespace amdn;

namespace {

// E_p[ln p(x) - ln q(x)] by sampling.
double monte_carlo_kl(const GaussParams& p, const GaussParams& q, int n, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> normal(p.mu, std::sqrt(p.var));
  auto log_density = [](const GaussParams& g, double x) {
    return -0.5 * std::log(2.0 * std::numbers::pi * g.var) - (x - g.mu) * (x - g.mu) / (2.0 * g.var);
  };
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = normal(rng);
    total += log_density(p, x) - log_density(q, x);
  }
  return total / n;
}

}  // namespace

TEST(Gaussian, SquashZeroRaw) {
  const auto out = squash_heads(Eigen::Vector4d::Zero().eval());
  EXPECT_EQ(out.safe.mu, 0.0);
  EXPECT_EQ(out.safe.var, 1.0);
  EXPECT_EQ(out.unsafe.mu, 0.0);
  EXPECT_EQ(out.unsafe.var, 1.0);
}

TEST(Gaussian, SquashSaturationAndFloor) {
  const auto out = squash_heads(Eigen::Vector4d(10.0, -40.0, -10.0, 3.0).eval());
  EXPECT_LT(out.safe.mu, 1.0);
  EXPECT_NEAR(out.safe.mu, 0.99999999587769273, 1e-15);
  EXPECT_EQ(out.safe.var, kVarianceFloor);
  EXPECT_GT(out.unsafe.mu, -1.0);
  EXPECT_EQ(out.unsafe.var, 4.0);
}

TEST(Gaussian, SquashRejectsWrongArity) {
  EXPECT_THROW(squash_heads(Eigen::Vector3d::Zero().eval()), std::invalid_argument);
}

TEST(Gaussian, NllSpotValues) {
  EXPECT_NEAR(nll(GaussParams{0.0, 1.0}, 0.0), 0.918939, 1e-6);
  EXPECT_NEAR(nll(GaussParams{0.0, 1.0}, 1.0), 1.418939, 1e-6);
}

TEST(Gaussian, NllMinimisedAtLabel) {
  const double a = 0.37;
  const double at = nll(GaussParams{a, 0.2}, a);
  for (double mu = -1.0; mu <= 1.0; mu += 0.05) {
    EXPECT_GE(nll(GaussParams{mu, 0.2}, a), at);
  }
  EXPECT_DOUBLE_EQ(at, 0.5 * std::log(2.0 * std::numbers::pi * 0.2));
}

TEST(Gaussian, NllGradSpotValues) {
  const auto g = nll_grads(GaussParams{0.0, 1.0}, 1.0);
  EXPECT_DOUBLE_EQ(g.d_mu, -1.0);
  EXPECT_DOUBLE_EQ(g.d_var, 0.0);
  EXPECT_EQ(nll_grads(GaussParams{0.4, 0.3}, 0.4).d_mu, 0.0);
}

TEST(Gaussian, NllGradsMatchFiniteDifferences) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> mu_d(-0.95, 0.95), var_d(0.01, 4.0), a_d(-1.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    GaussParams g{mu_d(rng), var_d(rng)};
    const double a = a_d(rng);
    const auto analytic = nll_grads(g, a);
    const double d_mu = fd::central_difference([&] { return nll(g, a); }, g.mu, 1e-6);
    const double d_var = fd::central_difference([&] { return nll(g, a); }, g.var, 1e-7);
    EXPECT_TRUE(fd::gradients_agree(analytic.d_mu, d_mu, 1e-6, 1e-9)) << analytic.d_mu << " " << d_mu;
    EXPECT_TRUE(fd::gradients_agree(analytic.d_var, d_var, 1e-6, 1e-9)) << analytic.d_var << " " << d_var;
  }
}

TEST(Gaussian, KlSpotValues) {
  EXPECT_EQ(kl_gauss(GaussParams{0.3, 0.5}, GaussParams{0.3, 0.5}), 0.0);
  EXPECT_NEAR(kl_gauss(GaussParams{0.0, 1.0}, GaussParams{1.0, 1.0}), 0.5, 1e-12);
  EXPECT_NEAR(kl_gauss(GaussParams{0.0, 1.0}, GaussParams{0.0, 4.0}), std::log(2.0) + 0.125 - 0.5, 1e-12);
  EXPECT_NEAR(kl_gauss(GaussParams{0.0, 1.0}, GaussParams{0.0, 4.0}), 0.318147, 1e-6);
}

TEST(Gaussian, KlNonNegativeAndZeroOnlyOnEquality) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> mu_d(-1.0, 1.0), var_d(1e-3, 4.0);
  for (int i = 0; i < 2000; ++i) {
    const GaussParams p{mu_d(rng), var_d(rng)};
    const GaussParams q{mu_d(rng), var_d(rng)};
    EXPECT_GT(kl_gauss(p, q), 0.0);
    EXPECT_NEAR(kl_gauss(p, p), 0.0, 1e-12);
  }
}

TEST(Gaussian, KlGradSpotValues) {
  const auto same = kl_grads_p(GaussParams{0.2, 0.7}, GaussParams{0.2, 0.7});
  EXPECT_EQ(same.d_mu, 0.0);
  EXPECT_EQ(same.d_var, 0.0);
  const auto g = kl_grads_p(GaussParams{0.0, 1.0}, GaussParams{1.0, 1.0});
  EXPECT_DOUBLE_EQ(g.d_mu, -1.0);
  EXPECT_DOUBLE_EQ(g.d_var, 0.0);
}

TEST(Gaussian, KlGradsMatchFiniteDifferences) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> mu_d(-0.95, 0.95), var_d(0.01, 4.0);
  for (int i = 0; i < 200; ++i) {
    GaussParams p{mu_d(rng), var_d(rng)};
    const GaussParams q{mu_d(rng), var_d(rng)};
    const auto analytic = kl_grads_p(p, q);
    const double d_mu = fd::central_difference([&] { return kl_gauss(p, q); }, p.mu, 1e-6);
    const double d_var = fd::central_difference([&] { return kl_gauss(p, q); }, p.var, 1e-7);
    EXPECT_TRUE(fd::gradients_agree(analytic.d_mu, d_mu, 1e-6, 1e-9));
    EXPECT_TRUE(fd::gradients_agree(analytic.d_var, d_var, 1e-6, 1e-9));
  }
}

TEST(Gaussian, KlMatchesMonteCarlo) {
  const GaussParams pairs[][2] = {{{0.0, 1.0}, {1.0, 1.0}},
                                  {{0.5, 0.04}, {-0.5, 2.0}},
                                  {{-0.8, 3.0}, {0.2, 0.5}}};
  for (const auto& [p, q] : pairs) {
    const double exact = kl_gauss(p, q);
    const double mc = monte_carlo_kl(p, q, 1'000'000, 17);
    EXPECT_LT(std::abs(mc - exact) / exact, 0.01) << exact << " vs " << mc;
  }
}

TEST(Gaussian, UnsquashGradMatchesFiniteDifferences) {
  const GaussParams target{0.1, 0.3};
  for (double r_mu : {-1.5, 0.2, 0.9}) {
    for (double r_var : {-2.0, -0.3, 0.8}) {
      auto loss = [&](double m, double v) { return kl_gauss(squash_gaussian(m, v), target); };
      const GaussParams g = squash_gaussian(r_mu, r_var);
      const auto raw = unsquash_grad(r_mu, r_var, kl_grads_p(g, target));
      double m = r_mu, v = r_var;
      EXPECT_TRUE(fd::gradients_agree(raw.d_mu, fd::central_difference([&] { return loss(m, v); }, m, 1e-6), 1e-6, 1e-9));
      EXPECT_TRUE(fd::gradients_agree(raw.d_var, fd::central_difference([&] { return loss(m, v); }, v, 1e-6), 1e-6, 1e-9));
    }
  }
}

TEST(Gaussian, UnsquashZeroVarianceGradAtFloor) {
  const auto g = unsquash_grad(0.0, -40.0, GaussGrad{1.0, 1.0});
  EXPECT_EQ(g.d_var, 0.0);
  EXPECT_EQ(g.d_mu, 1.0);
}

TEST(Gaussian, SampleAtFloorStaysNearMean) {
  Rng rng(1);
  const GaussParams g{0.25, kVarianceFloor};
  int outside = 0;
  for (int i = 0; i < 100000; ++i) {
    if (std::abs(sample(g, rng) - g.mu) >= 0.01) ++outside;
  }
  EXPECT_LT(outside, 100);
}

TEST(Gaussian, SampleMeanMatches) {
  Rng rng(2);
  const GaussParams g{0.3, 0.01};
  double total = 0.0;
  const int n = 1'000'000;
  for (int i = 0; i < n; ++i) total += sample(g, rng);
  EXPECT_NEAR(total / n, 0.3, 0.001);
}

TEST(Gaussian, SamplesAreClipped) {
  Rng rng(3);
  const GaussParams g{0.9, 4.0};
  for (int i = 0; i < 10000; ++i) {
    const double a = sample(g, rng);
    EXPECT_GE(a, -1.0);
    EXPECT_LE(a, 1.0);
  }
}
