#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "test_support.hpp"
#include "varinfer/distributions.hpp"
#include "varinfer/errors.hpp"
#include "varinfer/rng.hpp"

using namespace varinfer;

namespace {
const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);
}

TEST(Rng, SameSeedSameStream) {
  Rng a(1234), b(1234);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(a.next_u64(), b.next_u64());
  Rng c(1234), d(1234);
  for (int i = 0; i < 100; ++i) ASSERT_EQ(c.normal(), d.normal());
}

TEST(Rng, StreamIsFunctionOfSeedAndCounter) {
  // First draw of seed 0 is the SplitMix64 output for state 0x9E3779B97F4A7C15.
  Rng r(0);
  EXPECT_EQ(r.next_u64(), 0xE220A8397B1DCDAFULL);
  EXPECT_EQ(r.counter(), 1u);
}

TEST(Rng, UniformRangeAndSplitIndependence) {
  Rng r(7);
  for (int i = 0; i < 10000; ++i) {
    const double u = r.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
  Rng parent(7);
  Rng child = parent.split();
  EXPECT_NE(child.next_u64(), parent.next_u64());
}

TEST(Rng, BelowIsInRange) {
  Rng r(3);
  for (std::uint64_t n : {1ULL, 2ULL, 3ULL, 7ULL, 1000ULL}) {
    for (int i = 0; i < 1000; ++i) ASSERT_LT(r.below(n), n);
  }
}

TEST(GaussianLogpdf, Examples) {
  EXPECT_NEAR(gaussian_logpdf(0.0, GaussianParams::scalar(0, 1)), -kHalfLog2Pi, 1e-15);
  EXPECT_NEAR(gaussian_logpdf(1.0, GaussianParams::scalar(0, 1)), -kHalfLog2Pi - 0.5, 1e-15);
  EXPECT_NEAR(gaussian_logpdf(1.0, GaussianParams::scalar(0, 1)), -1.4189, 5e-5);
  const std::vector<double> x{0.0, 0.0};
  EXPECT_NEAR(gaussian_logpdf(x, GaussianParams::standard(2)), -std::log(2.0 * std::numbers::pi), 1e-14);
}

TEST(GaussianLogpdf, Errors) {
  const std::vector<double> x{0.0, 1.0};
  EXPECT_THROW(gaussian_logpdf(x, GaussianParams::scalar(0, 1)), ArgumentError);
  EXPECT_THROW(GaussianParams::scalar(0, 0), ArgumentError);
  EXPECT_THROW(GaussianParams::scalar(0, -1), ArgumentError);
  EXPECT_THROW(GaussianParams({0.0}, {1.0, 1.0}), ArgumentError);
}

TEST(GaussianLogpdf, IntegratesToOne) {
  for (const auto [mean, var] : {std::pair{0.0, 1.0}, {3.0, 0.25}, {-2.0, 9.0}}) {
    const auto p = GaussianParams::scalar(mean, var);
    const double sd = std::sqrt(var);
    const double total = varinfer::testing::integrate(
        [&](double x) { return std::exp(gaussian_logpdf(x, p)); }, mean - 10 * sd, mean + 10 * sd);
    EXPECT_NEAR(total, 1.0, 1e-6);
  }
}

TEST(SampleGaussian, DegenerateAndDeterministic) {
  Rng r(1);
  const auto tight = GaussianParams::scalar(5.0, 1e-12);
  for (int i = 0; i < 100; ++i) EXPECT_NEAR(sample_gaussian(r, tight)[0], 5.0, 1e-5);

  Rng a(99), b(99);
  EXPECT_EQ(sample_gaussian(a, GaussianParams::standard(3)), sample_gaussian(b, GaussianParams::standard(3)));
}

TEST(SampleGaussian, MomentsOfLargeSample) {
  Rng r(2024);
  const auto p = GaussianParams::scalar(2.0, 4.0);
  const int n = 100000;
  double sum = 0.0, sum_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double v = sample_gaussian(r, p)[0];
    sum += v;
    sum_sq += v * v;
  }
  const double mean = sum / n;
  const double var = sum_sq / n - mean * mean;
  EXPECT_NEAR(mean, 2.0, 0.02);
  EXPECT_NEAR(var, 4.0, 0.1);
}

TEST(SampleCategorical, Examples) {
  Rng r(5);
  const CategoricalParams one({1.0});
  const CategoricalParams middle({0.0, 1.0, 0.0});
  for (int i = 0; i < 200; ++i) {
    EXPECT_EQ(sample_categorical(r, one), 0u);
    EXPECT_EQ(sample_categorical(r, middle), 1u);
  }
  EXPECT_THROW(CategoricalParams({}), ArgumentError);
}

TEST(SampleCategorical, UniformFrequencies) {
  Rng r(11);
  const auto p = CategoricalParams::uniform(3);
  std::vector<int> counts(3, 0);
  const int n = 30000;
  for (int i = 0; i < n; ++i) ++counts[sample_categorical(r, p)];
  for (int c : counts) EXPECT_NEAR(static_cast<double>(c) / n, 1.0 / 3.0, 0.01);
}

TEST(CategoricalParams, Validation) {
  EXPECT_THROW(CategoricalParams({0.5, 0.6}), ArgumentError);
  EXPECT_THROW(CategoricalParams({-0.1, 1.1}), ArgumentError);
  const auto p = CategoricalParams::from_weights(std::vector<double>{1.0, 3.0});
  EXPECT_DOUBLE_EQ(p[0], 0.25);
}

TEST(MixtureLogpdf, Examples) {
  const MixtureParams single({1.0}, {GaussianParams::scalar(0.7, 2.0)});
  EXPECT_NEAR(mixture_logpdf(0.3, single), gaussian_logpdf(0.3, GaussianParams::scalar(0.7, 2.0)), 1e-15);

  const MixtureParams duplicate({0.5, 0.5}, {GaussianParams::scalar(0, 1), GaussianParams::scalar(0, 1)});
  EXPECT_NEAR(mixture_logpdf(0.0, duplicate), -kHalfLog2Pi, 1e-15);

  // Two-term sum evaluated directly: 0.5 N(0; -3, 1) + 0.5 N(0; 3, 1) = N(0; 3, 1).
  const MixtureParams split({0.5, 0.5}, {GaussianParams::scalar(-3, 1), GaussianParams::scalar(3, 1)});
  const double direct = std::log(0.5 * varinfer::testing::normal_pdf(0.0, -3, 1) +
                                 0.5 * varinfer::testing::normal_pdf(0.0, 3, 1));
  EXPECT_NEAR(direct, -5.418938533204673, 1e-12);
  EXPECT_NEAR(mixture_logpdf(0.0, split), direct, 1e-13);
}

TEST(MixtureLogpdf, LogSumExpBounds) {
  Rng r(17);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t k = 1 + r.below(5);
    std::vector<double> w(k);
    std::vector<GaussianParams> comps;
    for (std::size_t j = 0; j < k; ++j) {
      w[j] = 0.05 + r.uniform();
      comps.push_back(GaussianParams::scalar(10 * r.uniform() - 5, 0.1 + 3 * r.uniform()));
    }
    const auto weights = CategoricalParams::from_weights(w);
    const MixtureParams m(weights.probs(), comps);
    const double x = 20 * r.uniform() - 10;
    double max_w = 0.0, min_lp = 1e300, max_term = -1e300;
    for (std::size_t j = 0; j < k; ++j) {
      max_w = std::max(max_w, weights[j]);
      min_lp = std::min(min_lp, gaussian_logpdf(x, comps[j]));
      max_term = std::max(max_term, std::log(weights[j]) + gaussian_logpdf(x, comps[j]));
    }
    const double lp = mixture_logpdf(x, m);
    EXPECT_GE(lp, std::log(max_w) + min_lp - std::log(static_cast<double>(k)));
    EXPECT_GE(lp, max_term - 1e-12);
    EXPECT_LE(lp, max_term + std::log(static_cast<double>(k)) + 1e-12);
  }
}

TEST(MixtureScore, MatchesFiniteDifference) {
  const MixtureParams m({0.3, 0.7}, {GaussianParams::scalar(-1, 0.5), GaussianParams::scalar(2, 2)});
  for (double x : {-3.0, -0.5, 0.4, 1.7, 5.0}) {
    const double h = 1e-6;
    const double fd = (mixture_logpdf(x + h, m) - mixture_logpdf(x - h, m)) / (2 * h);
    EXPECT_NEAR(mixture_score(x, m), fd, 1e-7);
  }
}

TEST(Entropy, Examples) {
  EXPECT_EQ(entropy_discrete(CategoricalParams({1.0, 0.0})), 0.0);
  EXPECT_NEAR(entropy_discrete(CategoricalParams({0.5, 0.5})), std::log(2.0), 1e-15);
  EXPECT_NEAR(entropy_discrete(CategoricalParams({0.9, 0.1})), -(0.9 * std::log(0.9) + 0.1 * std::log(0.1)),
              1e-15);
  EXPECT_NEAR(entropy_discrete(CategoricalParams({0.9, 0.1})), 0.3251, 5e-5);
}

TEST(Entropy, BoundedByLogK) {
  Rng r(8);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t k = 1 + r.below(10);
    std::vector<double> w(k);
    for (double& v : w) v = r.uniform() + 1e-3;
    const auto p = CategoricalParams::from_weights(w);
    const double h = entropy_discrete(p);
    EXPECT_GE(h, 0.0);
    EXPECT_LE(h, std::log(static_cast<double>(k)) + 1e-12);
  }
}
