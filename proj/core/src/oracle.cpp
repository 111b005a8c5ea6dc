#include "sqmean/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

namespace sqmean {
namespace {

constexpr double kRangeSlack = 1e-12;
constexpr double kMonteCarloDelta = 1e-6;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

double checked(double value, double lo, double hi) {
  if (!(value >= lo - kRangeSlack && value <= hi + kRangeSlack)) {
    throw QueryRangeError("query value " + std::to_string(value) + " outside [" + std::to_string(lo) + ", " +
                          std::to_string(hi) + "]");
  }
  return value;
}

std::uint64_t perturbation_seed(const Perturbation& p) {
  return std::visit(Overloaded{[](const HonestRandom& h) { return h.seed; },
                               [](const Empirical& e) { return e.seed; },
                               [](const AdversarialSign&) { return std::uint64_t{0}; },
                               [](const ExactAnswers&) { return std::uint64_t{0}; }},
                    p);
}

}  // namespace

Query Query::affine(Vector coeffs, double offset) {
  Vector a = coeffs;
  Query q([a = std::move(a), offset](const Vector& x) { return a.dot(x) + offset; });
  q.coeffs_ = std::move(coeffs);
  q.offset_ = offset;
  return q;
}

Query Query::affine_on_support(PointFn fn, Vector coeffs, double offset) {
  Query q(std::move(fn));
  q.coeffs_ = std::move(coeffs);
  q.offset_ = offset;
  return q;
}

Query Query::constant(double c) {
  Query q([c](const Vector&) { return c; });
  q.offset_ = c;
  return q;
}

double vstat_tolerance(double p, double t) {
  const double var = std::max(0.0, p * (1.0 - p));
  return std::max(1.0 / t, std::sqrt(var / t));
}

std::size_t hoeffding_samples(double range_width, double accuracy, double delta) {
  if (!(accuracy > 0.0) || !(delta > 0.0 && delta < 1.0)) {
    throw std::invalid_argument("hoeffding_samples: accuracy and delta must be positive");
  }
  const double n = range_width * range_width * std::log(2.0 / delta) / (2.0 * accuracy * accuracy);
  return static_cast<std::size_t>(std::ceil(n));
}

OracleSession::OracleSession(Distribution dist, OracleKind kind, Perturbation perturbation, SessionOptions options)
    : dist_(std::move(dist)),
      kind_(kind),
      perturbation_(std::move(perturbation)),
      options_(options),
      rng_(perturbation_seed(perturbation_)) {
  std::visit(Overloaded{[](const Stat& s) {
                          if (!(s.tau > 0.0)) throw std::invalid_argument("STAT tolerance must be positive");
                        },
                        [](const Vstat& v) {
                          if (!(v.t > 0.0)) throw std::invalid_argument("VSTAT sample size must be positive");
                        }},
             kind_);
  if (const auto* e = std::get_if<Empirical>(&perturbation_); e && e->samples == 0) {
    throw std::invalid_argument("Empirical perturbation needs at least one sample");
  }
}

double OracleSession::stat_query(const Query& h) {
  if (!is_stat()) throw std::logic_error("stat_query on a VSTAT session");
  return answer(h, -1.0, 1.0);
}

double OracleSession::vstat_query(const Query& h) {
  if (is_stat()) throw std::logic_error("vstat_query on a STAT session");
  return answer(h, 0.0, 1.0);
}

double OracleSession::query(const Query& h) { return is_stat() ? stat_query(h) : vstat_query(h); }

std::optional<std::size_t> OracleSession::remaining() const {
  if (!options_.budget) return std::nullopt;
  return *options_.budget - std::min(*options_.budget, log_.size());
}

double OracleSession::tolerance() const {
  return std::visit(Overloaded{[](const Stat& s) { return s.tau; }, [](const Vstat& v) { return 1.0 / v.t; }},
                    kind_);
}

double OracleSession::answer(const Query& h, double lo, double hi) {
  if (options_.budget && log_.size() >= *options_.budget) {
    throw BudgetExhausted("oracle budget of " + std::to_string(*options_.budget) + " queries exhausted");
  }
  const Expectation p = expectation(h, lo, hi, tolerance() / 10.0);
  const double tau =
      std::visit(Overloaded{[](const Stat& s) { return s.tau; },
                            [&p](const Vstat& v) { return vstat_tolerance(p.value, v.t); }},
                 kind_);
  const std::size_t id = log_.size();

  double v = std::visit(
      Overloaded{[&](const HonestRandom&) {
                   return p.value + std::uniform_real_distribution<double>(-tau, tau)(rng_);
                 },
                 [&](const Empirical& e) {
                   return std::clamp(empirical_mean(h, e.samples, lo, hi), p.value - tau, p.value + tau);
                 },
                 [&](const AdversarialSign& a) {
                   const double s = a.choose ? a.choose(id, p.value) : a.sign;
                   return p.value + std::copysign(tau, s);
                 },
                 [&](const ExactAnswers&) { return p.value; }},
      perturbation_);
  // p + tau can round to a point slightly farther than tau from p.
  while (std::abs(v - p.value) > tau) v = std::nextafter(v, p.value);
  if (options_.clamp_to_range) v = std::clamp(v, lo, hi);

  log_.push_back(QueryRecord{id, p.exact ? std::optional<double>(p.value) : std::nullopt, v, tau});
  return v;
}

OracleSession::Expectation OracleSession::expectation(const Query& h, double lo, double hi, double accuracy) {
  if (dist_.is_explicit()) {
    const auto support = dist_.support();
    const auto weights = dist_.weights();
    double acc = 0.0;
    for (std::size_t i = 0; i < support.size(); ++i) acc += weights[i] * checked(h(support[i]), lo, hi);
    return {acc, true};
  }
  if (h.affine_coeffs() && dist_.has_exact_mean()) {
    return {h.affine_coeffs()->dot(dist_.exact_mean()) + h.affine_offset(), true};
  }
  if (dist_.has_exact_expectation()) {
    return {dist_.expectation([&](const Vector& x) { return checked(h(x), lo, hi); }), true};
  }
  return {empirical_mean(h, hoeffding_samples(hi - lo, accuracy, kMonteCarloDelta), lo, hi), false};
}

double OracleSession::empirical_mean(const Query& h, std::size_t samples, double lo, double hi) {
  double acc = 0.0;
  for (std::size_t i = 0; i < samples; ++i) acc += checked(h(dist_.draw(rng_)), lo, hi);
  return acc / static_cast<double>(samples);
}

std::size_t query_count(const OracleSession& session) { return session.query_count(); }

double max_contract_ratio(const OracleSession& session) {
  double worst = 0.0;
  for (const auto& r : session.log()) {
    if (r.p_exact) worst = std::max(worst, std::abs(r.value - *r.p_exact) / r.tau);
  }
  return worst;
}

void write_query_log_csv(std::ostream& out, const OracleSession& session) {
  const auto old_precision = out.precision(17);
  out << "query_id,p_exact,v,tau\n";
  for (const auto& r : session.log()) {
    out << r.id << ',';
    if (r.p_exact) {
      out << *r.p_exact;
    } else {
      out << "null";
    }
    out << ',' << r.value << ',' << r.tau << '\n';
  }
  out.precision(old_precision);
}

}  // namespace sqmean
