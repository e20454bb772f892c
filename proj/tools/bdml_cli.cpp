// Command-line driver: application fits, simulation benchmarks, calibration
// checks, the splitting demonstration and a GEL weight inspector.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "bdml/bdml.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using bdml::io::ConfigMap;
using bdml::io::format_number;

namespace {

// ---------------------------------------------------------------------------
// Settings resolution

struct FlagSet {
  std::map<std::string, std::string> values;
  std::string config_path;
  bool timing = false;
};

void add_flag(CLI::App* cmd, FlagSet& flags, const std::string& key, const std::string& help) {
  std::string name = "--" + key;
  for (char& c : name) {
    if (c == '_') c = '-';
  }
  cmd->add_option_function<std::string>(
      name, [&flags, key](const std::string& v) { flags.values[key] = v; }, help);
}

ConfigMap resolve(const FlagSet& flags, const std::set<std::string>& known) {
  ConfigMap cfg = flags.config_path.empty() ? ConfigMap{} : ConfigMap::load(flags.config_path);
  for (const auto& [k, v] : flags.values) cfg.set(k, v);
  cfg.require_known(known);
  return cfg;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = bdml::io::detail::trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<bdml::DivergenceSpec> divergences_from(const std::string& s) {
  if (s == "all") return {bdml::DivergenceSpec::el(), bdml::DivergenceSpec::etel(),
                          bdml::DivergenceSpec::hd()};
  std::vector<bdml::DivergenceSpec> out;
  for (const auto& item : split_list(s)) out.push_back(bdml::parse_divergence(item));
  if (out.empty()) throw bdml::ConfigError("no divergence given");
  return out;
}

std::vector<bdml::LearnerFamily> families_from(const std::string& s) {
  if (s == "all") return {bdml::LearnerFamily::Lasso, bdml::LearnerFamily::RandomForest,
                          bdml::LearnerFamily::NeuralNet};
  std::vector<bdml::LearnerFamily> out;
  for (const auto& item : split_list(s)) out.push_back(bdml::parse_family(item));
  if (out.empty()) throw bdml::ConfigError("no learner given");
  return out;
}

std::size_t to_size(std::uint64_t v) { return static_cast<std::size_t>(v); }

bdml::PipelineSettings pipeline_from(const ConfigMap& cfg, double prior_mean, double prior_var,
                                     std::size_t draws, std::size_t burn_in) {
  bdml::PipelineSettings p;
  p.folds = to_size(cfg.get_count("folds", 2));
  p.prior.mean = cfg.get_double("prior_mean", prior_mean);
  p.prior.variance = cfg.get_double("prior_var", prior_var);
  p.prior.validate();
  p.mcmc.draws = to_size(cfg.get_count("draws", draws));
  p.mcmc.burn_in = to_size(cfg.get_count("burn_in", burn_in));
  if (p.mcmc.draws < 1) throw bdml::ConfigError("draws must be at least 1");
  if (cfg.has("step_scale")) p.mcmc.step_scale = cfg.get_double("step_scale", 0.0);
  if (cfg.has("initial_beta")) p.mcmc.initial_beta = cfg.get_double("initial_beta", 0.0);
  p.lasso.cv_folds = static_cast<int>(cfg.get_count("lasso_cv_folds", 5));
  p.forest.trees = static_cast<int>(cfg.get_count("forest_trees", 500));
  p.forest.min_leaf = static_cast<int>(cfg.get_count("forest_min_leaf", 5));
  p.mlp.hidden = static_cast<int>(cfg.get_count("nn_hidden", 16));
  p.mlp.epochs = static_cast<int>(cfg.get_count("nn_epochs", 2000));
  p.mlp.learning_rate = cfg.get_double("nn_learning_rate", 1e-2);
  return p;
}

json pipeline_json(const bdml::PipelineSettings& p) {
  json j;
  j["folds"] = p.folds;
  j["prior_mean"] = p.prior.mean;
  j["prior_var"] = p.prior.variance;
  j["draws"] = p.mcmc.draws;
  j["burn_in"] = p.mcmc.burn_in;
  j["step_scale"] = p.mcmc.step_scale ? json(*p.mcmc.step_scale) : json("auto");
  j["initial_beta"] = p.mcmc.initial_beta ? json(*p.mcmc.initial_beta) : json("auto");
  j["lasso_cv_folds"] = p.lasso.cv_folds;
  j["forest_trees"] = p.forest.trees;
  j["forest_min_leaf"] = p.forest.min_leaf;
  j["nn_hidden"] = p.mlp.hidden;
  j["nn_epochs"] = p.mlp.epochs;
  j["nn_learning_rate"] = p.mlp.learning_rate;
  return j;
}

const std::set<std::string> kPipelineKeys{
    "folds",          "prior_mean",     "prior_var",  "draws",     "burn_in",
    "step_scale",     "initial_beta",   "lasso_cv_folds", "forest_trees", "forest_min_leaf",
    "nn_hidden",      "nn_epochs",      "nn_learning_rate"};

std::set<std::string> with_pipeline(std::set<std::string> keys) {
  keys.insert(kPipelineKeys.begin(), kPipelineKeys.end());
  keys.insert({"seed", "out"});
  return keys;
}

void add_pipeline_flags(CLI::App* cmd, FlagSet& flags) {
  add_flag(cmd, flags, "seed", "master random seed");
  add_flag(cmd, flags, "out", "output directory");
  add_flag(cmd, flags, "folds", "cross-fitting folds");
  add_flag(cmd, flags, "draws", "posterior draws kept after burn-in");
  add_flag(cmd, flags, "burn_in", "burn-in iterations");
  add_flag(cmd, flags, "prior_mean", "Gaussian prior mean");
  add_flag(cmd, flags, "prior_var", "Gaussian prior variance");
}

bdml::ScenarioSpec scenario_from(const ConfigMap& cfg, const std::string& fallback) {
  bdml::ScenarioSpec s = bdml::ScenarioSpec::make(bdml::parse_scenario(cfg.get("scenario", fallback)));
  s.n = to_size(cfg.get_count("n", s.n));
  s.p = to_size(cfg.get_count("p", s.p));
  s.rho = cfg.get_double("rho", s.rho);
  s.beta_true = cfg.get_double("beta_true", s.beta_true);
  s.validate();
  return s;
}

json scenario_json(const bdml::ScenarioSpec& s) {
  return {{"scenario", bdml::scenario_name(s.kind)}, {"n", s.n}, {"p", s.p}, {"rho", s.rho},
          {"beta_true", s.beta_true}};
}

// ---------------------------------------------------------------------------
// Output

class Output {
 public:
  explicit Output(std::string dir) : dir_(std::move(dir)) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw bdml::ConfigError("cannot create output directory '" + dir_ + "'");
  }

  void write(const std::string& name, const std::string& content) const {
    bdml::io::write_file((fs::path(dir_) / name).string(), content);
  }

  std::string path(const std::string& name) const { return (fs::path(dir_) / name).string(); }

 private:
  std::string dir_;
};

std::string jsonl(const std::vector<json>& lines) {
  std::string out;
  for (const auto& l : lines) out += l.dump() + "\n";
  return out;
}

std::string fixed(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string histogram_csv(const std::vector<bdml::HistogramBin>& bins) {
  bdml::io::CsvWriter w({"bin_left", "bin_right", "count"});
  for (const auto& b : bins) {
    w.row({format_number(b.left), format_number(b.right), std::to_string(b.count)});
  }
  return w.str();
}

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

// ---------------------------------------------------------------------------
// fit

int cmd_fit(const FlagSet& flags) {
  const ConfigMap cfg = resolve(flags, with_pipeline({"data", "lambda", "learner_pi", "learner_g",
                                                      "save_chains"}));
  const std::string data = cfg.get("data", "");
  if (data.empty()) throw bdml::ConfigError("fit needs a data file (--data or data = ...)");
  const std::uint64_t seed = cfg.get_count("seed", 1);
  const auto pipeline = pipeline_from(cfg, 0.0, 2.0, 10000, 1000);
  const auto divs = divergences_from(cfg.get("lambda", "etel"));
  const std::string lp = cfg.get("learner_pi", "rf");
  const std::string lg = cfg.get("learner_g", lp);
  // "all" on either side runs every family, using it for both nuisances.
  std::vector<std::pair<bdml::LearnerFamily, bdml::LearnerFamily>> learners;
  if (lp == "all" || lg == "all") {
    for (auto f : families_from("all")) learners.emplace_back(f, f);
  } else {
    learners.emplace_back(bdml::parse_family(lp), bdml::parse_family(lg));
  }
  const bool save_chains = cfg.get_flag("save_chains", false);
  const Output out(cfg.get("out", "bdml_out"));

  const auto table = bdml::io::load_borough_csv(data);
  const auto obs = table.observations();

  json config = pipeline_json(pipeline);
  config["command"] = "fit";
  config["data"] = data;
  config["seed"] = seed;
  config["lambda"] = cfg.get("lambda", "etel");
  config["learner_pi"] = lp;
  config["learner_g"] = lg;
  config["n"] = obs.n();
  config["p"] = obs.p();
  std::vector<json> lines{json{{"type", "config"}, {"config", config}}};

  struct Cell {
    std::string div, lpi, lg;
    bdml::PosteriorDraws post;
    double ess = 0.0;
    bdml::DmlEstimate dml;
  };
  std::vector<Cell> cells;
  for (std::size_t l = 0; l < learners.size(); ++l) {
    const auto [fpi, fg] = learners[l];
    const auto sc = bdml::crossfit_score(obs, fpi, fg, pipeline, bdml::derive_seed(seed, 1, l));
    const auto dml = bdml::dml_estimate(sc);
    for (std::size_t d = 0; d < divs.size(); ++d) {
      Cell c;
      c.div = divs[d].name();
      c.lpi = bdml::family_name(fpi);
      c.lg = bdml::family_name(fg);
      c.post = bdml::sample_posterior(sc, divs[d], pipeline,
                                      bdml::derive_seed(seed, 2, l * divs.size() + d));
      c.ess = bdml::effective_sample_size(c.post.chain);
      c.dml = dml;
      cells.push_back(std::move(c));
    }
  }

  std::ostringstream txt;
  txt << "Bayesian DML fit\n";
  txt << "data: " << data << " (n=" << obs.n() << ", confounders=" << obs.p() << ")\n";
  txt << "seed: " << seed << "\n";
  txt << "prior: N(" << format_number(pipeline.prior.mean) << ", "
      << format_number(pipeline.prior.variance) << ")  folds: " << pipeline.folds
      << "  draws: " << pipeline.mcmc.draws << "  burn-in: " << pipeline.mcmc.burn_in << "\n\n";
  bdml::io::CsvWriter csv({"divergence", "learner_pi", "learner_g", "posterior_mean", "lo95",
                           "hi95", "posterior_sd", "acceptance_rate", "ess", "dml_beta",
                           "dml_se", "dml_lo95", "dml_hi95"});
  for (const auto& c : cells) {
    txt << c.div << " | pi: " << c.lpi << ", g: " << c.lg << "\n"
        << "  posterior mean " << fixed(c.post.mean) << "  95% CrI (" << fixed(c.post.lo) << ", "
        << fixed(c.post.hi) << ")  sd " << fixed(c.post.sd) << "\n"
        << "  acceptance " << fixed(c.post.acceptance_rate, 3) << "  ESS "
        << fixed(c.ess, 1) << "\n"
        << "  DML estimate " << fixed(c.dml.beta_hat) << "  se " << fixed(c.dml.se)
        << "  95% CI (" << fixed(c.dml.lo) << ", " << fixed(c.dml.hi) << ")\n";
    csv.row({c.div, c.lpi, c.lg, format_number(c.post.mean), format_number(c.post.lo),
             format_number(c.post.hi), format_number(c.post.sd),
             format_number(c.post.acceptance_rate), format_number(c.ess),
             format_number(c.dml.beta_hat), format_number(c.dml.se), format_number(c.dml.lo),
             format_number(c.dml.hi)});
    lines.push_back({{"type", "estimate"},
                     {"divergence", c.div},
                     {"learner_pi", c.lpi},
                     {"learner_g", c.lg},
                     {"posterior_mean", c.post.mean},
                     {"lo95", c.post.lo},
                     {"hi95", c.post.hi},
                     {"posterior_sd", c.post.sd},
                     {"acceptance_rate", c.post.acceptance_rate},
                     {"ess", c.ess},
                     {"dml", {{"beta", c.dml.beta_hat}, {"se", c.dml.se}, {"lo95", c.dml.lo},
                              {"hi95", c.dml.hi}}}});
  }

  // Divergence-by-learner grid of "mean (lo, hi)".
  std::vector<std::string> col_names;
  for (const auto& [fpi, fg] : learners) {
    col_names.push_back(fpi == fg ? bdml::family_name(fpi)
                                  : bdml::family_name(fpi) + "/" + bdml::family_name(fg));
  }
  txt << "\nPosterior mean (95% credible interval)\n";
  txt << "      ";
  for (const auto& c : col_names) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%-26s", c.c_str());
    txt << buf;
  }
  txt << "\n";
  for (std::size_t d = 0; d < divs.size(); ++d) {
    char head[16];
    std::snprintf(head, sizeof head, "%-6s", divs[d].name().c_str());
    txt << head;
    for (std::size_t l = 0; l < learners.size(); ++l) {
      const auto& c = cells[l * divs.size() + d];
      const std::string s = fixed(c.post.mean, 2) + " (" + fixed(c.post.lo, 2) + ", " +
                            fixed(c.post.hi, 2) + ")";
      char buf[64];
      std::snprintf(buf, sizeof buf, "%-26s", s.c_str());
      txt << buf;
    }
    txt << "\n";
  }
  const std::string note =
      "Note: published estimates for the London borough analysis were computed from the "
      "original stop-and-search data, which is not distributed with this tool; results on other "
      "data (including the bundled synthetic table) are not expected to reproduce them.";
  txt << "\n" << note << "\n";
  txt << "\nresolved config: " << config.dump() << "\n";
  lines.push_back({{"type", "note"}, {"text", note}});

  out.write("fit_report.txt", txt.str());
  out.write("fit_report.jsonl", jsonl(lines));
  out.write("fit_table.csv", csv.str());
  if (save_chains) {
    bdml::io::CsvWriter chains({"divergence", "learner_pi", "learner_g", "draw", "beta"});
    for (const auto& c : cells) {
      for (std::size_t i = 0; i < c.post.chain.size(); ++i) {
        chains.row({c.div, c.lpi, c.lg, std::to_string(i + 1), format_number(c.post.chain[i])});
      }
    }
    out.write("fit_chains.csv", chains.str());
  }
  std::cout << txt.str();
  return 0;
}

// ---------------------------------------------------------------------------
// simulate

std::vector<bdml::MethodSpec> methods_from(const ConfigMap& cfg) {
  std::vector<bdml::MethodSpec> out;
  if (cfg.has("methods")) {
    for (const auto& item : split_list(cfg.get("methods", ""))) {
      const auto colon = item.find(':');
      if (colon == std::string::npos) {
        throw bdml::ConfigError("method '" + item + "' must look like divergence:learner");
      }
      const std::string head = lower(item.substr(0, colon));
      const auto family = bdml::parse_family(item.substr(colon + 1));
      if (head == "dml") {
        out.push_back(bdml::MethodSpec::dml(family));
      } else {
        out.push_back(bdml::MethodSpec::bayes(bdml::parse_divergence(head), family));
      }
    }
  } else {
    const auto families = families_from(cfg.get("learner", "lasso"));
    for (auto f : families) {
      for (const auto& d : divergences_from(cfg.get("lambda", "all"))) {
        out.push_back(bdml::MethodSpec::bayes(d, f));
      }
      out.push_back(bdml::MethodSpec::dml(f));
    }
  }
  if (out.empty()) throw bdml::ConfigError("no methods requested");
  return out;
}

int cmd_simulate(const FlagSet& flags) {
  const ConfigMap cfg = resolve(flags, with_pipeline({"scenario", "n", "p", "rho", "beta_true",
                                                      "methods", "lambda", "learner",
                                                      "replicates", "timing"}));
  const auto scenario = scenario_from(cfg, "continuous");
  const bool informative = scenario.kind == bdml::ScenarioKind::ContinuousExposure;
  const auto pipeline = pipeline_from(cfg, informative ? 1.0 : 0.0, informative ? 2.0 : 1e4,
                                      5000, 1000);
  const auto methods = methods_from(cfg);
  const std::size_t replicates = to_size(cfg.get_count("replicates", 200));
  const std::uint64_t seed = cfg.get_count("seed", 1);
  const bool timing = flags.timing || cfg.get_flag("timing", false);
  const Output out(cfg.get("out", "bdml_out"));

  json config = pipeline_json(pipeline);
  config.update(scenario_json(scenario));
  config["command"] = "simulate";
  config["seed"] = seed;
  config["replicates"] = replicates;
  std::vector<std::string> labels;
  for (const auto& m : methods) labels.push_back(m.label());
  config["methods"] = labels;

  const auto rows = bdml::run_benchmark(scenario, methods, replicates, seed, pipeline);

  bdml::io::CsvWriter csv({"method", "bias", "rmse", "coverage", "replicates", "runtime_seconds"});
  std::vector<json> lines{json{{"type", "config"}, {"config", config}}};
  std::ostringstream txt;
  txt << "Simulation benchmark: " << bdml::scenario_name(scenario.kind) << " (n=" << scenario.n
      << ", p=" << scenario.p << ", rho=" << format_number(scenario.rho)
      << ", beta=" << format_number(scenario.beta_true) << ")\n";
  txt << "replicates: " << replicates << "  seed: " << seed << "\n\n";
  txt << "method                      bias     rmse  coverage\n";
  for (const auto& r : rows) {
    const std::string runtime = timing ? format_number(r.runtime_seconds) : "NA";
    csv.row({r.method, format_number(r.bias), format_number(r.rmse), format_number(r.coverage),
             std::to_string(r.replicates), runtime});
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-24s %8.4f %8.4f %9.1f\n", r.method.c_str(), r.bias, r.rmse,
                  r.coverage);
    txt << buf;
    json row{{"type", "metrics"},     {"method", r.method},         {"bias", r.bias},
             {"rmse", r.rmse},        {"coverage", r.coverage},     {"replicates", r.replicates},
             {"failures", r.failures}};
    if (timing) row["runtime_seconds"] = r.runtime_seconds;
    lines.push_back(row);
  }
  if (!rows.empty() && rows.front().failures > 0) {
    txt << "\nfailed replicates (excluded): " << rows.front().failures << "\n";
  }
  txt << "\nresolved config: " << config.dump() << "\n";
  out.write("metrics.csv", csv.str());
  out.write("simulate_report.txt", txt.str());
  out.write("simulate_report.jsonl", jsonl(lines));
  std::cout << txt.str();
  return 0;
}

// ---------------------------------------------------------------------------
// validate

int cmd_validate(const FlagSet& flags) {
  const ConfigMap cfg = resolve(flags, with_pipeline({"scenario", "n", "p", "rho", "lambda",
                                                      "learner", "pipeline", "replicates",
                                                      "variance_scale", "exponent", "bins"}));
  bdml::SbcSettings sbc;
  sbc.scenario = scenario_from(cfg, "split-demo");
  sbc.settings = pipeline_from(cfg, 1.0, 2.0, 5000, 1000);
  sbc.m = to_size(cfg.get_count("replicates", 200));
  sbc.divergence = bdml::parse_divergence(cfg.get("lambda", "el"));
  sbc.pipeline = bdml::parse_sbc_pipeline(cfg.get("pipeline", "split"));
  sbc.learner = bdml::parse_family(cfg.get("learner", "lasso"));
  sbc.variance_scale = cfg.get_double("variance_scale", 1.0);
  sbc.exponent = cfg.get_double("exponent", 1.0 / 3.0);
  sbc.seed = cfg.get_count("seed", 1);
  const std::size_t bins = to_size(cfg.get_count("bins", 20));
  const Output out(cfg.get("out", "bdml_out"));

  json config = pipeline_json(sbc.settings);
  config.update(scenario_json(sbc.scenario));
  config["command"] = "validate";
  config["seed"] = sbc.seed;
  config["replicates"] = sbc.m;
  config["lambda"] = sbc.divergence.name();
  config["pipeline"] = bdml::sbc_pipeline_name(sbc.pipeline);
  config["learner"] = bdml::family_name(sbc.learner);
  config["variance_scale"] = sbc.variance_scale;
  config["exponent"] = sbc.exponent;
  config["bins"] = bins;

  const auto rep = bdml::run_sbc(sbc);

  bdml::io::CsvWriter values({"replicate", "beta", "h"});
  for (std::size_t k = 0; k < rep.h_values.size(); ++k) {
    values.row({std::to_string(k + 1), format_number(rep.beta_draws[k]),
                format_number(rep.h_values[k])});
  }
  std::ostringstream txt;
  txt << "Posterior calibration check (" << sbc.divergence.name() << ", "
      << bdml::sbc_pipeline_name(sbc.pipeline) << " pipeline)\n";
  txt << "replicates used: " << rep.m << "  failed: " << rep.failures << "  seed: " << sbc.seed
      << "\n";
  txt << "prior: N(" << format_number(sbc.settings.prior.mean) << ", "
      << format_number(sbc.settings.prior.variance) << ")\n";
  txt << "KS statistic: " << format_number(rep.ks_statistic)
      << "  p-value: " << format_number(rep.ks_p_value) << "\n";
  txt << "\nresolved config: " << config.dump() << "\n";
  std::vector<json> lines{json{{"type", "config"}, {"config", config}},
                          json{{"type", "validity"},
                               {"m", rep.m},
                               {"failures", rep.failures},
                               {"ks_statistic", rep.ks_statistic},
                               {"ks_p_value", rep.ks_p_value}}};
  out.write("validity_report.txt", txt.str());
  out.write("validity_report.jsonl", jsonl(lines));
  out.write("h_values.csv", values.str());
  out.write("h_histogram.csv", histogram_csv(bdml::histogram(rep.h_values, bins, 0.0, 1.0)));
  std::cout << txt.str();
  return 0;
}

// ---------------------------------------------------------------------------
// split-demo

int cmd_split_demo(const FlagSet& flags) {
  const ConfigMap cfg = resolve(flags, with_pipeline({"n", "p", "beta_true", "lambda",
                                                      "replicates", "exponent", "bins"}));
  bdml::SplitDemoSettings demo;
  demo.scenario = bdml::ScenarioSpec::split_demo();
  demo.scenario.n = to_size(cfg.get_count("n", demo.scenario.n));
  demo.scenario.p = to_size(cfg.get_count("p", demo.scenario.p));
  demo.scenario.beta_true = cfg.get_double("beta_true", demo.scenario.beta_true);
  demo.scenario.validate();
  demo.replicates = to_size(cfg.get_count("replicates", 1000));
  demo.exponent = cfg.get_double("exponent", 1.0 / 3.0);
  demo.divergences = divergences_from(cfg.get("lambda", "all"));
  demo.pipeline = pipeline_from(cfg, 0.0, 1e4, 2000, 500);
  demo.seed = cfg.get_count("seed", 1);
  const std::size_t bins = to_size(cfg.get_count("bins", 40));
  const Output out(cfg.get("out", "bdml_out"));

  json config = pipeline_json(demo.pipeline);
  config.update(scenario_json(demo.scenario));
  config["command"] = "split-demo";
  config["seed"] = demo.seed;
  config["replicates"] = demo.replicates;
  config["exponent"] = demo.exponent;
  config["bins"] = bins;

  const auto rep = bdml::run_split_demo(demo);

  bdml::io::CsvWriter summary({"method", "mean_full", "mean_split", "replicates"});
  bdml::io::CsvWriter values({"method", "replicate", "standardized_full", "standardized_split"});
  std::vector<json> lines{json{{"type", "config"}, {"config", config}}};
  std::ostringstream txt;
  txt << "Full-sample versus split-sample nuisance contamination\n";
  txt << "n=" << demo.scenario.n << "  replicates used: " << rep.replicates
      << "  failed: " << rep.failures << "  seed: " << demo.seed << "\n\n";
  txt << "method   mean standardized error (full)   (split)\n";
  for (const auto& m : rep.methods) {
    summary.row({m.method, format_number(m.mean_full), format_number(m.mean_split),
                 std::to_string(rep.replicates)});
    for (std::size_t r = 0; r < m.standardized_full.size(); ++r) {
      values.row({m.method, std::to_string(r + 1), format_number(m.standardized_full[r]),
                  format_number(m.standardized_split[r])});
    }
    char buf[128];
    std::snprintf(buf, sizeof buf, "%-8s %30.4f %9.4f\n", m.method.c_str(), m.mean_full,
                  m.mean_split);
    txt << buf;
    lines.push_back({{"type", "split_demo"},
                     {"method", m.method},
                     {"mean_full", m.mean_full},
                     {"mean_split", m.mean_split},
                     {"replicates", rep.replicates}});
    const std::string tag = lower(m.method);
    out.write("hist_" + tag + "_full.csv",
              histogram_csv(bdml::histogram(m.standardized_full, bins, -5.0, 5.0)));
    out.write("hist_" + tag + "_split.csv",
              histogram_csv(bdml::histogram(m.standardized_split, bins, -5.0, 5.0)));
  }
  txt << "\nresolved config: " << config.dump() << "\n";
  out.write("split_demo.csv", summary.str());
  out.write("split_demo_values.csv", values.str());
  out.write("split_demo_report.txt", txt.str());
  out.write("split_demo_report.jsonl", jsonl(lines));
  std::cout << txt.str();
  return 0;
}

// ---------------------------------------------------------------------------
// gel-debug

int cmd_gel_debug(const FlagSet& flags) {
  const ConfigMap cfg = resolve(flags, {"psi", "data", "column", "lambda", "out"});
  std::vector<double> psi;
  if (cfg.has("psi")) {
    for (const auto& item : split_list(cfg.get("psi", ""))) {
      psi.push_back(bdml::io::parse_number(item, "psi"));
    }
  } else if (cfg.has("data")) {
    const auto t = bdml::io::read_csv(cfg.get("data", ""));
    const std::string col = cfg.get("column", "psi");
    auto j = t.column(col);
    if (j < 0 && t.header.size() == 1) j = 0;
    if (j < 0) throw bdml::DataError("no '" + col + "' column in " + cfg.get("data", ""));
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      psi.push_back(bdml::io::parse_number(t.rows[r][static_cast<std::size_t>(j)],
                                           "row " + std::to_string(r + 2)));
    }
  } else {
    throw bdml::ConfigError("gel-debug needs --psi v1,v2,... or --data file.csv");
  }
  if (psi.empty()) throw bdml::DataError("empty moment vector");
  const bdml::Vector v = Eigen::Map<const bdml::Vector>(psi.data(), static_cast<Eigen::Index>(psi.size()));

  std::ostringstream txt;
  std::vector<json> lines;
  for (const auto& div : divergences_from(cfg.get("lambda", "all"))) {
    const auto sol = bdml::solve_weights(v, div);
    txt << div.name() << " (lambda=" << format_number(div.lambda) << ")\n";
    txt << "  weights:";
    for (double w : sol.weights) txt << " " << format_number(w);
    txt << "\n";
    if (sol.s) txt << "  s = " << format_number(*sol.s) << "\n";
    txt << "  t = " << format_number(sol.t) << "\n";
    txt << "  log profile likelihood = " << format_number(sol.log_profile) << "\n";
    txt << "  |sum p - 1| = " << format_number(sol.sum_residual)
        << "  |sum p psi| = " << format_number(sol.moment_residual)
        << "  iterations = " << sol.iterations << "\n";
    json line{{"divergence", div.name()},
              {"lambda", div.lambda},
              {"weights", std::vector<double>(sol.weights.begin(), sol.weights.end())},
              {"t", sol.t},
              {"log_profile", sol.log_profile},
              {"sum_residual", sol.sum_residual},
              {"moment_residual", sol.moment_residual}};
    if (sol.s) line["s"] = *sol.s;
    lines.push_back(line);
  }
  if (cfg.has("out")) {
    const Output out(cfg.get("out", ""));
    out.write("gel_debug.txt", txt.str());
    out.write("gel_debug.jsonl", jsonl(lines));
  }
  std::cout << txt.str();
  return 0;
}

// ---------------------------------------------------------------------------
// di

int cmd_di(const FlagSet& flags) {
  const ConfigMap cfg = resolve(flags, {"data", "rate_column", "name_column", "city_rate", "out"});
  const std::string path = cfg.get("data", "");
  if (path.empty()) throw bdml::ConfigError("di needs --data rates.csv");
  const auto t = bdml::io::read_csv(path);
  const std::string rate_col = cfg.get("rate_column", "rate");
  const std::string name_col = cfg.get("name_column", "borough");
  const auto rj = t.column(rate_col);
  const auto nj = t.column(name_col);
  if (rj < 0) throw bdml::DataError(path + ": no '" + rate_col + "' column");
  std::vector<double> rates;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    rates.push_back(bdml::io::parse_number(t.rows[r][static_cast<std::size_t>(rj)],
                                           path + ": row " + std::to_string(r + 2)));
  }
  if (rates.empty()) throw bdml::DataError(path + ": no data rows");
  double city = 0.0;
  for (double r : rates) city += r / static_cast<double>(rates.size());
  city = cfg.get_double("city_rate", city);
  bdml::io::CsvWriter w({name_col, rate_col, "di"});
  for (std::size_t r = 0; r < rates.size(); ++r) {
    const std::string name = nj >= 0 ? t.rows[r][static_cast<std::size_t>(nj)] : std::to_string(r + 1);
    w.row({name, format_number(rates[r]),
           format_number(bdml::disproportionality_index(rates[r], city))});
  }
  if (cfg.has("out")) {
    const Output out(cfg.get("out", ""));
    out.write("di.csv", w.str());
  }
  std::cout << w.str();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian double machine learning with generalized empirical likelihood"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "bdml 0.1.0");

  FlagSet flags;
  std::map<std::string, std::function<int(const FlagSet&)>> handlers;
  auto sub = [&](const std::string& name, const std::string& help,
                 std::function<int(const FlagSet&)> fn) {
    CLI::App* c = app.add_subcommand(name, help);
    c->add_option("--config", flags.config_path, "key = value settings file")
        ->check(CLI::ExistingFile);
    handlers[name] = std::move(fn);
    return c;
  };

  CLI::App* fit = sub("fit", "posterior for a borough-level table", cmd_fit);
  add_pipeline_flags(fit, flags);
  add_flag(fit, flags, "data", "borough CSV (columns di, treatment, confounders)");
  add_flag(fit, flags, "lambda", "divergence: el, etel, hd, a number, a list, or all");
  add_flag(fit, flags, "learner_pi", "propensity learner: lasso, rf, nn or all");
  add_flag(fit, flags, "learner_g", "outcome learner: lasso, rf, nn or all");

  CLI::App* sim = sub("simulate", "bias / RMSE / coverage benchmark", cmd_simulate);
  add_pipeline_flags(sim, flags);
  add_flag(sim, flags, "scenario", "binary, continuous or split-demo");
  add_flag(sim, flags, "replicates", "Monte-Carlo replicates");
  add_flag(sim, flags, "methods", "comma list of divergence:learner or dml:learner");
  add_flag(sim, flags, "lambda", "divergences when --methods is absent");
  add_flag(sim, flags, "learner", "learner families when --methods is absent");
  add_flag(sim, flags, "n", "sample size");
  add_flag(sim, flags, "p", "covariate count");
  sim->add_flag("--timing", flags.timing, "record wall-clock runtime in metrics.csv");

  CLI::App* val = sub("validate", "simulation-based calibration with a KS test", cmd_validate);
  add_pipeline_flags(val, flags);
  add_flag(val, flags, "replicates", "calibration replicates m");
  add_flag(val, flags, "lambda", "divergence");
  add_flag(val, flags, "pipeline", "split, crossfit or zero-score");
  add_flag(val, flags, "scenario", "data design for the crossfit pipeline");
  add_flag(val, flags, "learner", "learner family for the crossfit pipeline");
  add_flag(val, flags, "variance_scale", "shrink posterior draws (negative control)");

  CLI::App* split = sub("split-demo", "full-sample vs split-sample contamination", cmd_split_demo);
  add_pipeline_flags(split, flags);
  add_flag(split, flags, "replicates", "Monte-Carlo replicates");
  add_flag(split, flags, "lambda", "divergences (default all)");
  add_flag(split, flags, "n", "sample size");
  add_flag(split, flags, "exponent", "contamination scale n^-exponent; negative disables");

  CLI::App* gel = sub("gel-debug", "solve GEL weights for a moment vector", cmd_gel_debug);
  add_flag(gel, flags, "psi", "comma-separated moment values");
  add_flag(gel, flags, "data", "CSV with a psi column");
  add_flag(gel, flags, "lambda", "divergence (default all)");
  add_flag(gel, flags, "out", "output directory");

  CLI::App* di = sub("di", "disproportionality index from rate columns", cmd_di);
  add_flag(di, flags, "data", "CSV with a rate column");
  add_flag(di, flags, "rate_column", "rate column name (default rate)");
  add_flag(di, flags, "name_column", "label column name (default borough)");
  add_flag(di, flags, "city_rate", "city-wide rate (default: mean of rates)");
  add_flag(di, flags, "out", "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return static_cast<int>(bdml::ErrorKind::Config);
  }

  for (const auto& [name, fn] : handlers) {
    if (!app.got_subcommand(name)) continue;
    try {
      return fn(flags);
    } catch (const bdml::Error& e) {
      std::cerr << "bdml " << name << ": " << e.what() << "\n";
      return e.exit_code();
    } catch (const std::exception& e) {
      std::cerr << "bdml " << name << ": " << e.what() << "\n";
      return 1;
    }
  }
  return 1;
}
