#pragma once

#include "bdml/benchmark.hpp"
#include "bdml/crossfit.hpp"
#include "bdml/dml.hpp"
#include "bdml/error.hpp"
#include "bdml/gel.hpp"
#include "bdml/io/borough.hpp"
#include "bdml/io/config.hpp"
#include "bdml/io/csv.hpp"
#include "bdml/learner.hpp"
#include "bdml/mcmc.hpp"
#include "bdml/parallel.hpp"
#include "bdml/pipeline.hpp"
#include "bdml/random.hpp"
#include "bdml/scenario.hpp"
#include "bdml/score.hpp"
#include "bdml/validity.hpp"
