#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <variant>
#include <vector>

#include "sqmean/distribution.hpp"

namespace sqmean {

/// A statistical query h: R^d -> R.
///
/// A query may additionally declare that it coincides with an affine form
/// <a, x> + c on the support of the distribution it is asked against. The
/// oracle then computes E[h] exactly from the mean of a sampler-backed
/// distribution instead of falling back to Monte Carlo.
class Query {
 public:
  explicit Query(PointFn fn) : fn_(std::move(fn)) {}

  static Query affine(Vector coeffs, double offset = 0.0);
  /// General point function declared equal to <coeffs, x> + offset on the support.
  static Query affine_on_support(PointFn fn, Vector coeffs, double offset = 0.0);
  static Query constant(double c);

  double operator()(const Vector& x) const { return fn_(x); }
  const PointFn& fn() const { return fn_; }
  const std::optional<Vector>& affine_coeffs() const { return coeffs_; }
  double affine_offset() const { return offset_; }

 private:
  PointFn fn_;
  std::optional<Vector> coeffs_;
  double offset_ = 0.0;
};

struct Stat {
  double tau = 0.0;
};
struct Vstat {
  double t = 0.0;
};
using OracleKind = std::variant<Stat, Vstat>;

/// Uniform error in [-tau, tau].
struct HonestRandom {
  std::uint64_t seed = 0;
};
/// Empirical mean of `samples` draws, clamped into the contract interval.
struct Empirical {
  std::size_t samples = 1000;
  std::uint64_t seed = 0;
};
/// Error of exactly sign * tau. `choose`, when set, receives the query index
/// and the exact expectation and returns the sign for that query.
struct AdversarialSign {
  double sign = 1.0;
  std::function<double(std::size_t query_id, double p)> choose;
};
/// Zero error; the tolerance is still reported and used by callers.
struct ExactAnswers {};

using Perturbation = std::variant<HonestRandom, Empirical, AdversarialSign, ExactAnswers>;

struct QueryRecord {
  std::size_t id = 0;
  std::optional<double> p_exact;  // empty when p was estimated by Monte Carlo
  double value = 0.0;
  double tau = 0.0;
};

struct SessionOptions {
  std::optional<std::size_t> budget;
  /// Clamp every answer into the query range ([-1,1] for STAT, [0,1] for VSTAT).
  bool clamp_to_range = false;
};

/// max{1/t, sqrt(p(1-p)/t)}.
double vstat_tolerance(double p, double t);

/// Number of draws so that a mean of a [lo, hi]-valued function is within
/// `accuracy` with probability >= 1 - delta (two-sided Hoeffding).
std::size_t hoeffding_samples(double range_width, double accuracy, double delta);

/// STAT/VSTAT simulator over a Distribution with query accounting.
///
/// Expectations are exact for explicit distributions, for samplers with an
/// expectation function, and for affine queries on samplers with a known
/// mean. Otherwise they are estimated with enough draws that the Monte-Carlo
/// error stays below tau/10 with probability 1 - 1e-6.
class OracleSession {
 public:
  OracleSession(Distribution dist, OracleKind kind, Perturbation perturbation,
                SessionOptions options = {});

  /// STAT only; h must map the support into [-1, 1].
  double stat_query(const Query& h);
  /// VSTAT only; h must map the support into [0, 1].
  double vstat_query(const Query& h);
  /// Dispatches on the oracle kind.
  double query(const Query& h);

  std::size_t query_count() const { return log_.size(); }
  std::optional<std::size_t> remaining() const;
  const std::vector<QueryRecord>& log() const { return log_; }

  const Distribution& distribution() const { return dist_; }
  const OracleKind& kind() const { return kind_; }
  bool is_stat() const { return std::holds_alternative<Stat>(kind_); }
  /// STAT: tau. VSTAT: the p-independent floor 1/t.
  double tolerance() const;

 private:
  struct Expectation {
    double value = 0.0;
    bool exact = false;
  };

  double answer(const Query& h, double lo, double hi);
  Expectation expectation(const Query& h, double lo, double hi, double accuracy);
  double empirical_mean(const Query& h, std::size_t samples, double lo, double hi);

  Distribution dist_;
  OracleKind kind_;
  Perturbation perturbation_;
  SessionOptions options_;
  Rng rng_;
  std::vector<QueryRecord> log_;
};

std::size_t query_count(const OracleSession& session);

/// Largest |v - p| / tau over logged queries with exact p (0 if none).
double max_contract_ratio(const OracleSession& session);

/// CSV rows `query_id,p_exact,v,tau` with `null` for Monte-Carlo rows.
void write_query_log_csv(std::ostream& out, const OracleSession& session);

}  // namespace sqmean
