#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "test_support.hpp"
#include "varinfer/distributions.hpp"
#include "varinfer/divergence.hpp"
#include "varinfer/quadrature.hpp"

using namespace varinfer;
namespace vt = varinfer::testing;

namespace {

MixtureParams bimodal() {
  return MixtureParams({0.5, 0.5}, {GaussianParams::scalar(-3, 1), GaussianParams::scalar(3, 1)});
}

const std::vector<vt::Component> kBimodal{{0.5, -3.0, 1.0}, {0.5, 3.0, 1.0}};

}  // namespace

TEST(KlDiscrete, Examples) {
  EXPECT_EQ(kl_discrete(CategoricalParams({0.5, 0.5}), CategoricalParams({0.5, 0.5})), 0.0);
  EXPECT_NEAR(kl_discrete(CategoricalParams({1.0, 0.0}), CategoricalParams({0.5, 0.5})), std::log(2.0), 1e-15);
  EXPECT_TRUE(is_infinite_kl(kl_discrete(CategoricalParams({0.5, 0.5}), CategoricalParams({1.0, 0.0}))));
  EXPECT_THROW(kl_discrete(CategoricalParams({0.5, 0.5}), CategoricalParams({0.2, 0.3, 0.5})), ArgumentError);
}

TEST(KlDiscrete, AsymmetryWitness) {
  const CategoricalParams p({0.8, 0.2});
  const CategoricalParams q({0.2, 0.8});
  // This mirrored pair is symmetric under relabeling, so both directions agree.
  const double pq = kl_discrete(p, q);
  const double qp = kl_discrete(q, p);
  EXPECT_NEAR(pq, 0.6 * std::log(4.0), 1e-14);
  EXPECT_NEAR(qp, 0.6 * std::log(4.0), 1e-14);

  const CategoricalParams a({0.9, 0.1});
  const CategoricalParams b({0.5, 0.5});
  EXPECT_GT(std::abs(kl_discrete(a, b) - kl_discrete(b, a)), 1e-3);
}

TEST(KlDiscrete, EqualsCrossEntropyMinusEntropyAndNonNegative) {
  Rng r(11);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + r.below(8);
    std::vector<double> wp(n), wq(n);
    for (std::size_t i = 0; i < n; ++i) {
      wp[i] = r.uniform() < 0.2 ? 0.0 : r.uniform();
      wq[i] = r.uniform() + 1e-3;
    }
    wp[0] += 0.1;
    const auto p = CategoricalParams::from_weights(wp);
    const auto q = CategoricalParams::from_weights(wq);
    const double kl = kl_discrete(p, q);
    EXPECT_GE(kl, 0.0);
    EXPECT_NEAR(kl, cross_entropy_discrete(p, q) - entropy_discrete(p), 1e-12);
    EXPECT_EQ(kl_discrete(p, p), 0.0);
  }
}

TEST(KlGaussian, Examples) {
  const auto std1 = GaussianParams::scalar(0, 1);
  EXPECT_EQ(kl_gaussian(std1, std1), 0.0);
  EXPECT_NEAR(kl_gaussian(GaussianParams::scalar(1, 1), std1), 0.5, 1e-15);
  EXPECT_NEAR(kl_gaussian(GaussianParams::scalar(1, 1), std1), vt::reverse_kl_by_quadrature(1, 1, {{1.0, 0, 1}}),
              1e-8);
  const double e = std::numbers::e;
  EXPECT_NEAR(kl_gaussian(GaussianParams::scalar(0, e), std1), vt::reverse_kl_by_quadrature(0, e, {{1.0, 0, 1}}),
              1e-8);
  EXPECT_NEAR(kl_gaussian(GaussianParams::scalar(0, e), std1), (e - 2.0) / 2.0, 1e-15);
  EXPECT_THROW(kl_gaussian(std1, GaussianParams::standard(2)), ArgumentError);
}

TEST(KlGaussian, MatchesQuadratureOnRandomPairs) {
  Rng r(5);
  for (int trial = 0; trial < 50; ++trial) {
    const double pm = 4 * r.uniform() - 2, pv = 0.2 + 3 * r.uniform();
    const double qm = 4 * r.uniform() - 2, qv = 0.2 + 3 * r.uniform();
    const double kl = kl_gaussian(GaussianParams::scalar(pm, pv), GaussianParams::scalar(qm, qv));
    EXPECT_GE(kl, 0.0);
    EXPECT_NEAR(kl, vt::reverse_kl_by_quadrature(pm, pv, {{1.0, qm, qv}}), 1e-8);
  }
}

TEST(KlGaussian, StandardNormalReductionIsSumOverDims) {
  const GaussianParams p({0.5, -1.0, 2.0}, {0.3, 1.7, 0.9});
  double expected = 0.0;
  for (std::size_t d = 0; d < 3; ++d) {
    const double mu = p.mean()[d], v = p.var()[d];
    expected += -0.5 * (1 + std::log(v) - mu * mu - v);
  }
  EXPECT_NEAR(kl_gaussian(p, GaussianParams::standard(3)), expected, 1e-14);
}

TEST(KlReverseMc, SelfDivergenceIsZero) {
  Rng r(1);
  const auto q = GaussianParams::scalar(0.4, 2.0);
  const auto est = kl_reverse_mc(r, q, [&](std::span<const double> z) { return gaussian_logpdf(z, q); }, 1000);
  EXPECT_LE(std::abs(est.value), 3 * est.std_error + 1e-15);
  EXPECT_EQ(est.n_samples, 1000u);
}

TEST(KlReverseMc, ShiftedGaussian) {
  Rng r(2);
  const auto p = GaussianParams::scalar(0, 1);
  const auto est = kl_reverse_mc(r, GaussianParams::scalar(1, 1),
                                 [&](std::span<const double> z) { return gaussian_logpdf(z, p); }, 100000);
  EXPECT_GT(est.std_error, 0.0);
  EXPECT_LE(std::abs(est.value - 0.5), 3 * est.std_error);
}

TEST(KlReverseMc, BimodalTargetMatchesQuadrature) {
  Rng r(3);
  const auto m = bimodal();
  const auto est = kl_reverse_mc(r, GaussianParams::scalar(0, 1),
                                 [&](std::span<const double> z) { return mixture_logpdf(z[0], m); }, 1000000);
  const double oracle = vt::reverse_kl_by_quadrature(0, 1, kBimodal);
  EXPECT_LE(std::abs(est.value - oracle), 3 * est.std_error);
}

TEST(KlReverseMc, StdErrorShrinksAsInverseRootN) {
  const auto m = bimodal();
  const auto log_p = [&](std::span<const double> z) { return mixture_logpdf(z[0], m); };
  double prev = 0.0;
  for (std::size_t n : {1000u, 10000u, 100000u}) {
    Rng r(100 + n);
    const auto est = kl_reverse_mc(r, GaussianParams::scalar(0.5, 1.5), log_p, n);
    if (prev > 0.0) {
      const double ratio = prev / est.std_error;
      EXPECT_GT(ratio, std::sqrt(10.0) / 2.0);
      EXPECT_LT(ratio, std::sqrt(10.0) * 2.0);
    }
    prev = est.std_error;
  }
}

TEST(KlReverseMc, ErrorsAndSentinel) {
  Rng r(4);
  const auto q = GaussianParams::scalar(0, 1);
  EXPECT_THROW(kl_reverse_mc(r, q, [](std::span<const double>) { return 0.0; }, 1), ArgumentError);
  const auto est = kl_reverse_mc(
      r, q, [](std::span<const double>) { return -std::numeric_limits<double>::infinity(); }, 10);
  EXPECT_TRUE(is_infinite_kl(est.value));
}

TEST(MProjection, Examples) {
  const auto single = m_projection(MixtureParams({1.0}, {GaussianParams::scalar(0.7, 2.5)}));
  EXPECT_NEAR(single.mean()[0], 0.7, 1e-15);
  EXPECT_NEAR(single.var()[0], 2.5, 1e-14);

  const auto b = m_projection(bimodal());
  EXPECT_NEAR(b.mean()[0], 0.0, 1e-12);
  EXPECT_NEAR(b.var()[0], 10.0, 1e-9);

  const auto nested = m_projection(MixtureParams({0.5, 0.5}, {GaussianParams::scalar(0, 1), GaussianParams::scalar(0, 4)}));
  EXPECT_NEAR(nested.mean()[0], 0.0, 1e-15);
  EXPECT_NEAR(nested.var()[0], 2.5, 1e-14);
}

TEST(MProjection, GridSearchOverForwardKlAgrees) {
  for (const auto& comps : {kBimodal, std::vector<vt::Component>{{0.5, 0.0, 1.0}, {0.5, 0.0, 4.0}}}) {
    double best = std::numeric_limits<double>::infinity(), best_m = 0, best_v = 0;
    for (double mean = -1.0; mean <= 1.0 + 1e-9; mean += 0.25) {
      for (double var = 0.5; var <= 14.0 + 1e-9; var += 0.25) {
        const double ce = vt::forward_cross_entropy(comps, mean, var);
        if (ce < best) {
          best = ce;
          best_m = mean;
          best_v = var;
        }
      }
    }
    std::vector<double> w;
    std::vector<GaussianParams> g;
    for (const auto& c : comps) {
      w.push_back(c.weight);
      g.push_back(GaussianParams::scalar(c.mean, c.var));
    }
    const auto fit = m_projection(MixtureParams(w, g));
    EXPECT_NEAR(fit.mean()[0], best_m, 0.125 + 1e-12);
    EXPECT_NEAR(fit.var()[0], best_v, 0.125 + 1e-12);
    EXPECT_LE(vt::forward_cross_entropy(comps, fit.mean()[0], fit.var()[0]), best + 1e-12);
  }
}

TEST(GaussHermite, IntegratesPolynomialMoments) {
  for (std::size_t n : {5u, 20u, 512u}) {
    const auto rule = n == 512 ? gauss_hermite_512() : gauss_hermite(n);
    ASSERT_EQ(rule.nodes.size(), n);
    // int x^{2k} exp(-x^2) dx = Gamma(k + 1/2)
    for (int k = 0; k < 5 && 2 * k < static_cast<int>(2 * n); ++k) {
      double acc = 0.0, odd = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        acc += rule.weights[i] * std::pow(rule.nodes[i], 2 * k);
        odd += rule.weights[i] * std::pow(rule.nodes[i], 2 * k + 1);
      }
      EXPECT_NEAR(acc, std::tgamma(k + 0.5), 1e-11 * std::tgamma(k + 0.5)) << "n=" << n << " k=" << k;
      EXPECT_NEAR(odd, 0.0, 1e-10);
    }
  }
}

TEST(ReverseKlQuadrature, MatchesAdaptiveQuadrature) {
  // log p has complex poles near the real axis; at var = 4 the fixed 512-node
  // rule is good to a few 1e-7, far tighter for narrow q.
  const auto m = bimodal();
  for (double mean : {-3.0, -1.0, 0.0, 0.5, 2.8}) {
    for (double var : {0.3, 1.0, 4.0}) {
      EXPECT_NEAR(reverse_kl_quadrature(GaussianParams::scalar(mean, var), m),
                  vt::reverse_kl_by_quadrature(mean, var, kBimodal), var < 2.0 ? 1e-8 : 1e-6);
    }
  }
}

TEST(ForwardKlQuadrature, MatchesAdaptiveQuadrature) {
  const auto m = bimodal();
  for (double mean : {-1.0, 0.0, 2.5}) {
    for (double var : {1.0, 10.0}) {
      const double entropy = -vt::integrate([&](double z) { return vt::mixture_pdf(z, kBimodal) * vt::mixture_logpdf(z, kBimodal); },
                                            -30.0, 30.0);
      const double oracle = vt::forward_cross_entropy(kBimodal, mean, var) - entropy;
      EXPECT_NEAR(forward_kl_quadrature(m, GaussianParams::scalar(mean, var)), oracle, 1e-8);
    }
  }
  const MixtureParams single({1.0}, {GaussianParams::scalar(0.5, 2.0)});
  EXPECT_NEAR(forward_kl_quadrature(single, GaussianParams::scalar(0, 1)),
              kl_gaussian(GaussianParams::scalar(0.5, 2.0), GaussianParams::scalar(0, 1)), 1e-12);
}

TEST(ReverseKlQuadrature, GradientMatchesFiniteDifferences) {
  const auto m = bimodal();
  const double h = 1e-5;
  for (double mean : {-2.0, 0.3, 2.5}) {
    for (double lv : {-1.0, 0.0, 1.2}) {
      const auto g = reverse_kl_quadrature_grad(GaussianParams::scalar(mean, std::exp(lv)), m);
      const auto f = [&](double a, double b) { return reverse_kl_quadrature(GaussianParams::scalar(a, std::exp(b)), m); };
      EXPECT_NEAR(g.d_mean, (f(mean + h, lv) - f(mean - h, lv)) / (2 * h), 1e-6);
      EXPECT_NEAR(g.d_log_var, (f(mean, lv + h) - f(mean, lv - h)) / (2 * h), 1e-6);
      EXPECT_NEAR(g.value, f(mean, lv), 1e-14);
    }
  }
}

TEST(IProjection, SingleGaussianTarget) {
  const MixtureParams target({1.0}, {GaussianParams::scalar(1.5, 0.7)});
  const auto init = GaussianParams::scalar(-1, 3);
  const auto fit = i_projection(target, init);
  EXPECT_LT(kl_gaussian(fit, target.components()[0]), 1e-6);
  EXPECT_LE(reverse_kl_quadrature(fit, target), reverse_kl_quadrature(init, target));
}

TEST(IProjection, LocksOntoNearestMode) {
  const auto m = bimodal();
  // Grid search over (mean, log var) for the basin minimum on the positive side.
  double best = std::numeric_limits<double>::infinity(), best_m = 0.0;
  for (double mean = 0.5; mean <= 5.0; mean += 0.05) {
    for (double lv = -2.0; lv <= 2.0; lv += 0.05) {
      const double v = vt::reverse_kl_by_quadrature(mean, std::exp(lv), kBimodal);
      if (v < best) {
        best = v;
        best_m = mean;
      }
    }
  }
  EXPECT_NEAR(best_m, 3.0, 0.5);

  const auto init_pos = GaussianParams::scalar(2, 1);
  const auto pos = i_projection(m, init_pos);
  EXPECT_NEAR(pos.mean()[0], 3.0, 0.5);
  EXPECT_NEAR(pos.mean()[0], best_m, 0.1);
  EXPECT_LT(pos.var()[0], 2.0);
  EXPECT_LE(reverse_kl_quadrature(pos, m), reverse_kl_quadrature(init_pos, m));
  EXPECT_LE(reverse_kl_quadrature(pos, m), best + 1e-9);

  const auto neg = i_projection(m, GaussianParams::scalar(-2, 1));
  EXPECT_NEAR(neg.mean()[0], -3.0, 0.5);
  EXPECT_NEAR(neg.mean()[0], -pos.mean()[0], 1e-9);
  EXPECT_NEAR(neg.var()[0], pos.var()[0], 1e-9);
}

TEST(IProjection, ModeSeekingVersusModeCovering) {
  const auto m = bimodal();
  const auto i_fit = i_projection(m, GaussianParams::scalar(2, 1));
  const auto m_fit = m_projection(m);
  EXPECT_GE(std::abs(i_fit.mean()[0]), 2.5);
  EXPECT_LE(std::abs(i_fit.mean()[0]), 3.5);
  EXPECT_NEAR(m_fit.mean()[0], 0.0, 1e-12);
  EXPECT_NEAR(m_fit.var()[0], 10.0, 1e-9);
  // Each fit wins on its own objective.
  EXPECT_LT(reverse_kl_quadrature(i_fit, m), reverse_kl_quadrature(m_fit, m));
  EXPECT_LT(vt::forward_cross_entropy(kBimodal, m_fit.mean()[0], m_fit.var()[0]),
            vt::forward_cross_entropy(kBimodal, i_fit.mean()[0], i_fit.var()[0]));
}

TEST(IProjection, Validation) {
  const auto m = bimodal();
  EXPECT_THROW(i_projection(m, GaussianParams::scalar(0, 1), {0, 0.05}), ArgumentError);
  EXPECT_THROW(i_projection(m, GaussianParams::scalar(0, 1), {10, 0.0}), ArgumentError);
  try {
    i_projection(m, GaussianParams::scalar(0.5, 1), {50, 1e6});
    FAIL() << "expected divergence";
  } catch (const OptimizationError& e) {
    EXPECT_TRUE(std::isfinite(e.last_finite().mean()[0]));
  }
}
