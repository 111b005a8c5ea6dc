#include <iostream>

#include <CLI11.hpp>

#include "experiment.hpp"

int main(int argc, char** argv) {
  using sqmean::experiment::ExperimentConfig;
  using sqmean::experiment::OutputFormat;

  CLI::App app{"Mean estimation under statistical-query access: experiments and checks"};
  app.require_subcommand(1);

  ExperimentConfig config;
  double t2_bound = 0.0;
  std::size_t dim = 0;
  std::size_t budget = 0;
  std::string format = "csv";

  struct Added {
    CLI::App* app;
    CLI::Option* t2;
    CLI::Option* dim;
    CLI::Option* budget;
  };
  std::vector<Added> subs;
  auto add = [&](const char* name, const char* help) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--norm", config.norm, "lp:<p>, linf, topk:<k>, schatten:<p>:<d>, gauge:<name>");
    sub->add_option("--instance", config.instance,
                    "distribution JSON file, type2:{...}, schatten:{...} or random:{\"d\":..,\"n\":..}");
    sub->add_option("--oracle", config.oracle, "stat:<tau|auto>:<mode> or vstat:<t>:<mode>")->capture_default_str();
    sub->add_option("--estimator", config.estimator, "auto, linf, l2, symmetric, schatten")->capture_default_str();
    sub->add_option("--eps", config.eps, "target accuracy in (0,1)")->capture_default_str();
    auto* t2 = sub->add_option("--t2-bound", t2_bound, "upper bound on the type-2 constant");
    sub->add_option("--seed", config.seed, "base seed")->capture_default_str();
    sub->add_option("--reps", config.reps, "repetitions")->capture_default_str();
    sub->add_option("--out", config.out, "output path, - for stdout")->capture_default_str();
    sub->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
    sub->add_option("--trials", config.trials, "random probes per check")->capture_default_str();
    auto* d = sub->add_option("--dim", dim, "dimension");
    auto* b = sub->add_option("--budget", budget, "oracle query budget per run");
    sub->add_option("--taus", config.taus, "comma-separated tolerance sweep")->delimiter(',');
    sub->add_option("--threads", config.threads, "worker threads, 0 for all cores")->capture_default_str();
    subs.push_back({sub, t2, d, b});
  };
  add("estimate", "run a mean estimator on an instance and report realized errors");
  add("hardness", "sweep the oracle tolerance on a hard family and report success rates");
  add("verify", "check norm axioms and the ring geometry on random probes");
  add("bench", "time the estimators on random instances");

  CLI11_PARSE(app, argc, argv);

  for (const auto& s : subs) {
    if (!s.app->parsed()) continue;
    config.command = s.app->get_name();
    if (s.t2->count()) config.t2_bound = t2_bound;
    if (s.dim->count()) config.dim = dim;
    if (s.budget->count()) config.budget = budget;
  }
  config.format = format == "json" ? OutputFormat::Json : OutputFormat::Csv;
  return sqmean::experiment::run(config, std::cerr);
}
