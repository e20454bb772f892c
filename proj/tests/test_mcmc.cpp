#include <gtest/gtest.h>

#include <numeric>
#include <random>

#include "bdml/dml.hpp"
#include "bdml/mcmc.hpp"
#include "oracles.hpp"
#include "plr_fixture.hpp"

using namespace bdml;

namespace {

ScoreComponents known_nuisance_components(std::size_t n, double beta, std::uint64_t seed) {
  const auto s = oracle::simulate_plr(n, beta, seed);
  return build_score_components(s.obs, s.truth);
}

McmcConfig chain_config(std::uint64_t seed, std::size_t draws = 5000) {
  McmcConfig cfg;
  cfg.draws = draws;
  cfg.burn_in = 1000;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST(Summarize, ConstantChain) {
  const auto s = summarize({1.0, 1.0, 1.0});
  EXPECT_DOUBLE_EQ(s.mean, 1.0);
  EXPECT_DOUBLE_EQ(s.lo, 1.0);
  EXPECT_DOUBLE_EQ(s.hi, 1.0);
  EXPECT_DOUBLE_EQ(s.sd, 0.0);
  EXPECT_THROW(summarize({}), DataError);
}

TEST(Summarize, IntegerQuantiles) {
  std::vector<double> c(100);
  std::iota(c.begin(), c.end(), 1.0);
  const auto s = summarize(c);
  EXPECT_NEAR(s.lo, oracle::type7_quantile(c, 0.025), 1e-12);
  EXPECT_NEAR(s.hi, oracle::type7_quantile(c, 0.975), 1e-12);
  EXPECT_NEAR(s.lo, 3.475, 1e-12);
  EXPECT_NEAR(s.hi, 97.525, 1e-12);
  EXPECT_DOUBLE_EQ(s.mean, 50.5);
}

TEST(Summarize, NormalDrawsMatchNormalQuantiles) {
  std::mt19937_64 rng(99);
  std::normal_distribution<double> z;
  std::vector<double> c(100000);
  for (auto& v : c) v = z(rng);
  const auto s = summarize(c);
  EXPECT_NEAR(s.lo, -1.959964, 0.03);
  EXPECT_NEAR(s.hi, 1.959964, 0.03);
  EXPECT_NEAR(s.sd, 1.0, 0.01);
}

TEST(EffectiveSampleSize, IndependentAndAutoregressive) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> z;
  std::vector<double> iid(20000), ar(20000);
  double prev = 0.0;
  for (std::size_t i = 0; i < iid.size(); ++i) {
    iid[i] = z(rng);
    prev = 0.9 * prev + z(rng);
    ar[i] = prev;
  }
  EXPECT_NEAR(effective_sample_size(iid) / 20000.0, 1.0, 0.15);
  const double expected = 20000.0 * 0.1 / 1.9;
  EXPECT_NEAR(effective_sample_size(ar) / expected, 1.0, 0.25);
}

TEST(LogPosterior, ConstantLikelihoodLeavesPrior) {
  ScoreComponents sc;
  sc.a = Vector::Zero(5);
  sc.b = Vector::Zero(5);
  const PriorSpec prior{1.0, 2.0};
  for (const auto& div : {DivergenceSpec::el(), DivergenceSpec::etel(), DivergenceSpec::hd()}) {
    const double l0 = log_posterior(sc, 0.3, div, prior);
    const double l1 = log_posterior(sc, -2.0, div, prior);
    EXPECT_DOUBLE_EQ(l0 - l1, prior.log_density(0.3) - prior.log_density(-2.0));
  }
}

TEST(LogPosterior, InfeasibleIsNegativeInfinity) {
  ScoreComponents sc;
  sc.a = Vector::LinSpaced(4, 1.0, 4.0);
  sc.b = Vector::Ones(4);
  EXPECT_EQ(log_posterior(sc, 0.0, DivergenceSpec::el(), PriorSpec{}), kNegInf);
  EXPECT_EQ(log_posterior(sc, 5.0, DivergenceSpec::el(), PriorSpec{}), kNegInf);
  EXPECT_GT(log_posterior(sc, 2.5, DivergenceSpec::el(), PriorSpec{}), kNegInf);
}

TEST(LogPosterior, WorkedElExample) {
  ScoreComponents sc;
  sc.a = Vector(3);
  sc.a << -1.0, 1.0, 2.0;
  sc.b = Vector::Zero(3);
  const PriorSpec prior{0.5, 4.0};
  EXPECT_NEAR(log_posterior(sc, 1.5, DivergenceSpec::el(), prior),
              prior.log_density(1.5) - 3.712011906152761, 1e-10);
}

TEST(RunChain, ConstantLikelihoodSamplesPrior) {
  ScoreComponents sc;
  sc.a = Vector::Zero(20);
  sc.b = Vector::Zero(20);
  const auto draws = run_chain(sc, DivergenceSpec::el(), PriorSpec{1.0, 2.0}, chain_config(3));
  ASSERT_EQ(draws.chain.size(), 5000u);
  const double ess = effective_sample_size(draws.chain);
  EXPECT_NEAR(draws.mean, 1.0, 3.0 * std::sqrt(2.0 / ess));
  EXPECT_NEAR(draws.sd, std::sqrt(2.0), 0.2);
}

TEST(RunChain, DegeneratePriorDominates) {
  const auto sc = known_nuisance_components(200, 0.5, 8);
  const auto draws = run_chain(sc, DivergenceSpec::el(), PriorSpec{1.0, 1e-8}, chain_config(4));
  EXPECT_NEAR(draws.mean, 1.0, 1e-2);
}

TEST(RunChain, FlatPriorPosteriorNearDmlEstimate) {
  const auto sc = known_nuisance_components(500, 1.0, 12);
  const double beta_hat = dml_point(sc);
  for (const auto& div : {DivergenceSpec::el(), DivergenceSpec::etel(), DivergenceSpec::hd()}) {
    const auto draws = run_chain(sc, div, PriorSpec{0.0, 1e4}, chain_config(5));
    EXPECT_NEAR(draws.mean, beta_hat, 2.0 * draws.sd) << div.name();
    EXPECT_GE(draws.acceptance_rate, 0.2) << div.name();
    EXPECT_LE(draws.acceptance_rate, 0.7) << div.name();
    EXPECT_LE(draws.lo, draws.hi);
    for (double b : draws.chain) {
      ASSERT_GT(log_posterior(sc, b, div, PriorSpec{0.0, 1e4}), kNegInf);
    }
  }
}

TEST(RunChain, PriorScaleBarelyMovesPosteriorAtModerateN) {
  const auto sc = known_nuisance_components(500, 1.0, 13);
  const auto a = run_chain(sc, DivergenceSpec::etel(), PriorSpec{0.0, 1.0}, chain_config(6));
  const auto b = run_chain(sc, DivergenceSpec::etel(), PriorSpec{0.0, 1e6}, chain_config(6));
  EXPECT_LT(std::abs(a.mean - b.mean), a.sd);
}

TEST(RunChain, SeededDeterminism) {
  const auto sc = known_nuisance_components(100, 1.0, 14);
  const auto a = run_chain(sc, DivergenceSpec::hd(), PriorSpec{}, chain_config(9, 500));
  const auto b = run_chain(sc, DivergenceSpec::hd(), PriorSpec{}, chain_config(9, 500));
  EXPECT_EQ(a.chain, b.chain);
  const auto c = run_chain(sc, DivergenceSpec::hd(), PriorSpec{}, chain_config(10, 500));
  EXPECT_NE(a.chain, c.chain);
}

TEST(RunChain, InfeasibleStartIsRepairedOrReported) {
  const auto sc = known_nuisance_components(100, 1.0, 15);
  auto cfg = chain_config(1, 200);
  cfg.initial_beta = 1e3;
  const auto draws = run_chain(sc, DivergenceSpec::el(), PriorSpec{}, cfg);
  EXPECT_GT(log_posterior(sc, draws.initial_beta, DivergenceSpec::el(), PriorSpec{}), kNegInf);

  ScoreComponents never;
  never.a = Vector::Ones(6);
  never.b = Vector::Zero(6);
  EXPECT_THROW(run_chain(never, DivergenceSpec::el(), PriorSpec{}, cfg), NumericalError);
}

TEST(RunChain, RejectsBadConfig) {
  const auto sc = known_nuisance_components(50, 1.0, 16);
  auto cfg = chain_config(1, 0);
  EXPECT_THROW(run_chain(sc, DivergenceSpec::el(), PriorSpec{}, cfg), ConfigError);
  EXPECT_THROW(run_chain(sc, DivergenceSpec::el(), PriorSpec{0.0, 0.0}, chain_config(1)),
               ConfigError);
}
