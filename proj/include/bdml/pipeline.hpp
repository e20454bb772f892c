#pragma once

#include <cstdint>
#include <utility>

#include "bdml/crossfit.hpp"
#include "bdml/dml.hpp"
#include "bdml/gel.hpp"
#include "bdml/learner.hpp"
#include "bdml/mcmc.hpp"
#include "bdml/random.hpp"
#include "bdml/score.hpp"

namespace bdml {

/// Everything between the data and the posterior: fold count, learner
/// hyperparameters, prior and sampler settings.
struct PipelineSettings {
  std::size_t folds = 2;
  PriorSpec prior;
  McmcConfig mcmc;
  learners::LassoSettings lasso;
  learners::ForestSettings forest;
  learners::MlpSettings mlp;
};

inline std::pair<LearnerSpec, LearnerSpec> configured_specs(const ObservationSet& obs,
                                                            LearnerFamily pi_family,
                                                            LearnerFamily g_family,
                                                            const PipelineSettings& cfg,
                                                            std::uint64_t seed) {
  LearnerSpec spi = nuisance_specs(obs, pi_family, seed).first;
  LearnerSpec sg = nuisance_specs(obs, g_family, seed).second;
  for (auto* s : {&spi, &sg}) {
    s->lasso = cfg.lasso;
    s->forest = cfg.forest;
    s->mlp = cfg.mlp;
  }
  return {spi, sg};
}

/// Cross-fitted partialling-out score components. Folds and learners draw
/// their seeds from `seed`.
inline ScoreComponents crossfit_score(const ObservationSet& obs, LearnerFamily pi_family,
                                      LearnerFamily g_family, const PipelineSettings& cfg,
                                      std::uint64_t seed) {
  const auto folds = make_folds(obs.n(), cfg.folds, derive_seed(seed, 0, 21));
  const auto [spi, sg] = configured_specs(obs, pi_family, g_family, cfg, derive_seed(seed, 0, 22));
  return build_score_components(obs, crossfit_nuisance(obs, folds, spi, sg));
}

inline ScoreComponents crossfit_score(const ObservationSet& obs, LearnerFamily family,
                                      const PipelineSettings& cfg, std::uint64_t seed) {
  return crossfit_score(obs, family, family, cfg, seed);
}

/// Posterior under `div` with the chain seeded by `seed`.
inline PosteriorDraws sample_posterior(const ScoreComponents& sc, const DivergenceSpec& div,
                                       const PipelineSettings& cfg, std::uint64_t seed) {
  McmcConfig mc = cfg.mcmc;
  mc.seed = seed;
  return run_chain(sc, div, cfg.prior, mc);
}

}  // namespace bdml
