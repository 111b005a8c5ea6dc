#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <sqmean/sqmean.hpp>

namespace sqmean::experiment {

/// Malformed flags, descriptors or files. Maps to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class OutputFormat { Csv, Json };

struct ExperimentConfig {
  std::string command;
  std::string norm;  // empty: implied by the instance
  std::string instance;
  std::string oracle = "stat:auto:honest";
  std::string estimator = "auto";
  double eps = 0.1;
  std::optional<double> t2_bound;
  std::uint64_t seed = 1;
  std::size_t reps = 1;
  std::string out = "-";
  OutputFormat format = OutputFormat::Csv;
  std::size_t trials = 1000;
  std::optional<std::size_t> dim;
  std::optional<std::size_t> budget;
  std::vector<double> taus;  // hardness sweep; empty: default grid
  std::size_t threads = 0;   // 0: hardware concurrency, capped by SQ_MEANEST_THREADS

  /// Throws ConfigError on eps outside (0,1), reps == 0, trials == 0 and
  /// the like.
  void validate() const;
};

using Cell = std::variant<std::int64_t, double, std::string, bool>;

struct Table {
  std::vector<std::pair<std::string, std::string>> meta;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
  /// Free-form diagnostics for stderr (verify failures, degenerate sweeps).
  std::vector<std::string> messages;
  int exit_code = 0;
};

/// `#`-prefixed key=value header followed by a plain CSV body.
void write_csv(std::ostream& out, const Table& table);
/// {"meta": {...}, "rows": [{column: value, ...}, ...]}
void write_json(std::ostream& out, const Table& table);

enum class PerturbationKind { Honest, Adversarial, Empirical, Exact };

/// `stat:<tau|auto>:<mode>` or `vstat:<t>:<mode>`, mode one of `honest`,
/// `adversarial[:<sign>]`, `empirical:<n>`, `exact`.
struct OracleSpec {
  bool stat = true;
  std::optional<double> level;  // tau or t; empty for auto
  PerturbationKind mode = PerturbationKind::Honest;
  double sign = 1.0;
  std::size_t samples = 1000;

  Perturbation perturbation(std::uint64_t seed) const;
  OracleKind kind(double auto_tau) const;
};
OracleSpec parse_oracle(const std::string& spec);

/// One realization of an instance: the distribution and, when known, its mean.
struct InstanceDraw {
  Distribution dist;
  std::optional<Vector> truth;
};

/// Parsed instance descriptor. Descriptors with random parts (missing z,
/// missing a/b, random point sets) are re-drawn per repetition seed.
struct InstanceSpec {
  std::string kind;  // file, type2, schatten, random
  std::size_t dim = 0;
  std::string implied_norm;
  std::optional<double> eps0;
  /// `ball` bounds generated point sets and is checked against file supports.
  std::function<InstanceDraw(std::uint64_t seed, const Norm* ball)> draw;
};
InstanceSpec parse_instance(const std::string& descriptor);

/// Built-in upper bound on T2 used when --t2-bound is absent.
double default_t2_bound(const Norm& norm);

/// Worker count: config.threads or the hardware, capped by SQ_MEANEST_THREADS.
std::size_t worker_count(std::size_t requested, std::size_t jobs);

/// Runs f(0..n-1) on up to `workers` threads.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& f);

Table run_estimate(const ExperimentConfig& config);
Table run_hardness(const ExperimentConfig& config);
Table run_verify(const ExperimentConfig& config);
Table run_bench(const ExperimentConfig& config);

/// Dispatches on config.command, writes the table to config.out and returns
/// the process exit code. Config errors are reported and mapped to 2.
int run(const ExperimentConfig& config, std::ostream& err);

}  // namespace sqmean::experiment
