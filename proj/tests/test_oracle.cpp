#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "test_support.hpp"
#include "varinfer/distributions.hpp"
#include "varinfer/errors.hpp"
#include "varinfer/oracle.hpp"

using namespace varinfer;

namespace {

DiscreteJoint random_joint(Rng& r, std::size_t nz, std::size_t nx) {
  std::vector<double> t(nz * nx);
  double total = 0.0;
  for (double& v : t) {
    v = r.uniform() + 1e-3;
    total += v;
  }
  for (double& v : t) v /= total;
  return DiscreteJoint(nz, nx, t);
}

CategoricalParams random_q(Rng& r, std::size_t n) {
  std::vector<double> w(n);
  for (double& v : w) v = r.uniform() + 1e-3;
  return CategoricalParams::from_weights(w);
}

}  // namespace

TEST(ExactPosterior, IndependentJointGivesPrior) {
  const std::vector<double> prior{0.2, 0.5, 0.3};
  const std::vector<double> g{0.6, 0.4};
  std::vector<double> t;
  for (double pz : prior)
    for (double px : g) t.push_back(pz * px);
  const DiscreteJoint j(3, 2, t);
  for (std::size_t x = 0; x < 2; ++x) {
    const auto post = exact_posterior(j, x).posterior;
    for (std::size_t z = 0; z < 3; ++z) EXPECT_NEAR(post[z], prior[z], 1e-15);
  }
}

TEST(ExactPosterior, ColumnNormalization) {
  const DiscreteJoint j(2, 2, {0.4, 0.1, 0.2, 0.3});
  const auto [post, log_ev] = exact_posterior(j, 0);
  EXPECT_NEAR(post[0], 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(post[1], 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(log_ev, std::log(0.6), 1e-15);
}

TEST(ExactPosterior, DiagonalIsOneHot) {
  const DiscreteJoint j(3, 3, {0.2, 0, 0, 0, 0.5, 0, 0, 0, 0.3});
  for (std::size_t x = 0; x < 3; ++x) {
    const auto post = exact_posterior(j, x).posterior;
    for (std::size_t z = 0; z < 3; ++z) EXPECT_EQ(post[z], z == x ? 1.0 : 0.0);
  }
}

TEST(ExactPosterior, ZeroEvidenceAndValidation) {
  const DiscreteJoint j(2, 2, {0.5, 0.0, 0.5, 0.0});
  EXPECT_THROW(exact_posterior(j, 1), EvidenceZeroError);
  EXPECT_THROW(DiscreteJoint(2, 2, {0.5, 0.5, 0.5, 0.5}), ArgumentError);
  EXPECT_THROW(DiscreteJoint(2, 2, {1.0, 0.0, 0.0}), ArgumentError);
  EXPECT_THROW(DiscreteJoint(1001, 1000, std::vector<double>(1001 * 1000, 1.0 / (1001 * 1000))),
               UnsupportedSizeError);
}

TEST(ElboKlIdentity, ExactPosteriorGivesZeroKl) {
  const DiscreteJoint j(2, 2, {0.4, 0.1, 0.2, 0.3});
  const auto post = exact_posterior(j, 0).posterior;
  const auto r = elbo_kl_identity(j, 0, post);
  EXPECT_NEAR(r.kl, 0.0, 1e-15);
  EXPECT_NEAR(r.elbo, r.log_evidence, 1e-15);
}

TEST(ElboKlIdentity, HalfHalfEnumeration) {
  const DiscreteJoint j(2, 2, {0.4, 0.1, 0.2, 0.3});
  const auto r = elbo_kl_identity(j, 0, CategoricalParams({0.5, 0.5}));
  // Both sides enumerated by hand.
  const double elbo = 0.5 * (std::log(0.4) - std::log(0.5)) + 0.5 * (std::log(0.2) - std::log(0.5));
  const double kl = 0.5 * std::log(0.5 / (2.0 / 3.0)) + 0.5 * std::log(0.5 / (1.0 / 3.0));
  EXPECT_NEAR(r.elbo, elbo, 1e-15);
  EXPECT_NEAR(r.kl, kl, 1e-15);
  EXPECT_NEAR(r.elbo + r.kl, std::log(0.6), 1e-12);
}

TEST(ElboKlIdentity, ZeroForcingSentinel) {
  const DiscreteJoint j(2, 2, {0.5, 0.2, 0.0, 0.3});
  const auto r = elbo_kl_identity(j, 0, CategoricalParams({0.0, 1.0}));
  EXPECT_TRUE(is_infinite_kl(r.kl));
  EXPECT_EQ(r.elbo, -std::numeric_limits<double>::infinity());
}

TEST(ElboKlIdentity, RandomModelsSatisfyIdentityAndGibbs) {
  Rng r(314);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t nz = 2 + r.below(6);
    const std::size_t nx = 1 + r.below(5);
    const auto j = random_joint(r, nz, nx);
    const std::size_t x = r.below(nx);
    const auto q = random_q(r, nz);
    const auto res = elbo_kl_identity(j, x, q);
    EXPECT_NEAR(res.elbo + res.kl, res.log_evidence, 1e-10);
    EXPECT_GE(res.kl, -1e-15);
    EXPECT_LE(res.elbo, res.log_evidence + 1e-12);
  }
}

TEST(ConjugateEvidence, SmallPriorLimit) {
  const std::vector<double> data{0.3, -1.2, 2.0};
  double direct = 0.0;
  for (double v : data) direct += gaussian_logpdf(v, GaussianParams::scalar(0, 1));
  EXPECT_NEAR(conjugate_log_evidence(ConjugateModel(1e-12), data), direct, 1e-9);
}

TEST(ConjugateEvidence, SinglePoint) {
  const std::vector<double> data{0.0};
  EXPECT_NEAR(conjugate_log_evidence(ConjugateModel(1.0), data), -0.5 * std::log(4 * std::numbers::pi), 1e-15);
  EXPECT_NEAR(conjugate_log_evidence(ConjugateModel(1.0), data), -1.2655, 5e-5);
}

TEST(ConjugateEvidence, MatchesQuadratureOverMean) {
  using varinfer::testing::normal_pdf;
  for (const auto& data : {std::vector<double>{1.0, -1.0}, std::vector<double>{0.5, 2.5, 1.0}}) {
    for (double s2 : {0.5, 1.0, 4.0}) {
      const double evidence = varinfer::testing::integrate(
          [&](double mu) {
            double p = normal_pdf(mu, 0.0, s2);
            for (double v : data) p *= normal_pdf(v, mu, 1.0);
            return p;
          },
          -40.0, 40.0);
      EXPECT_NEAR(conjugate_log_evidence(ConjugateModel(s2), data), std::log(evidence), 1e-8);
    }
  }
}

TEST(ConjugateElbo, PosteriorAttainsEvidence) {
  const std::vector<double> data{0.0};
  const ConjugateModel model(1.0);
  EXPECT_NEAR(conjugate_elbo(model, data, GaussianParams::scalar(0.0, 0.5)), -1.2655, 5e-5);
  EXPECT_NEAR(conjugate_elbo(model, data, GaussianParams::scalar(0.0, 0.5)), conjugate_log_evidence(model, data),
              1e-10);

  const std::vector<double> more{1.3, -0.2, 0.7, 2.2};
  const ConjugateModel wide(3.0);
  const auto post = conjugate_posterior(wide, more);
  EXPECT_NEAR(conjugate_elbo(wide, more, post), conjugate_log_evidence(wide, more), 1e-10);

  const auto shifted = GaussianParams::scalar(post.mean()[0] + 1.0, post.var()[0]);
  EXPECT_LT(conjugate_elbo(wide, more, shifted), conjugate_elbo(wide, more, post));
}

TEST(ConjugateElbo, MatchesQuadratureDefinition) {
  using varinfer::testing::normal_pdf;
  const std::vector<double> data{0.4, -0.9, 1.5};
  const ConjugateModel model(2.0);
  const double qm = 0.3, qv = 0.4;
  const double elbo = varinfer::testing::integrate(
      [&](double mu) {
        const double q = normal_pdf(mu, qm, qv);
        double log_joint = std::log(normal_pdf(mu, 0.0, 2.0));
        for (double v : data) log_joint += std::log(normal_pdf(v, mu, 1.0));
        return q * (log_joint - std::log(q));
      },
      qm - 12 * std::sqrt(qv), qm + 12 * std::sqrt(qv));
  EXPECT_NEAR(conjugate_elbo(model, data, GaussianParams::scalar(qm, qv)), elbo, 1e-9);
}

TEST(ConjugateElbo, LowerBoundsEvidenceForRandomQ) {
  Rng r(77);
  for (int trial = 0; trial < 200; ++trial) {
    const ConjugateModel model(0.1 + 10 * r.uniform());
    std::vector<double> data(1 + r.below(20));
    for (double& v : data) v = 4 * r.normal();
    const auto q = GaussianParams::scalar(10 * r.uniform() - 5, 0.01 + 5 * r.uniform());
    EXPECT_LE(conjugate_elbo(model, data, q), conjugate_log_evidence(model, data));
  }
}
