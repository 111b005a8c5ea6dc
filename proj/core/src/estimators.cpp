#include "sqmean/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sqmean/linalg.hpp"

namespace sqmean {
namespace {

void require_stat(const OracleSession& session, double eps, const char* who) {
  if (!session.is_stat()) throw std::invalid_argument(std::string(who) + ": requires a STAT session");
  if (!(eps > 0.0)) throw std::invalid_argument(std::string(who) + ": eps must be positive");
  if (session.tolerance() > eps * (1.0 + 1e-12)) {
    throw std::invalid_argument(std::string(who) + ": oracle tolerance " + std::to_string(session.tolerance()) +
                                " exceeds eps " + std::to_string(eps));
  }
}

void require_budget(const OracleSession& session, std::size_t needed, const char* who) {
  const auto left = session.remaining();
  if (left && *left < needed) {
    throw BudgetExhausted(std::string(who) + ": needs " + std::to_string(needed) + " queries, " +
                          std::to_string(*left) + " left");
  }
}

void require_dim(const OracleSession& session, std::size_t d, const char* who) {
  if (session.distribution().dim() != d) {
    throw std::invalid_argument(std::string(who) + ": distribution dimension " +
                                std::to_string(session.distribution().dim()) + " != " + std::to_string(d));
  }
}

}  // namespace

bool in_ring(double value, int j) {
  const double a = std::abs(value);
  return a > std::ldexp(1.0, -j - 1) && a <= std::ldexp(1.0, -j);
}

Vector ring_restrict(const Vector& w, int j) {
  Vector out = Vector::Zero(w.size());
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    if (in_ring(w(i), j)) out(i) = w(i);
  }
  return out;
}

PointTransform PointTransform::identity() { return PointTransform{}; }

PointTransform PointTransform::scaled(double factor) {
  PointTransform t;
  t.factor_ = factor;
  return t;
}

PointTransform PointTransform::ring(int j, double factor) {
  if (j < 0) throw std::invalid_argument("PointTransform::ring: negative ring index");
  PointTransform t;
  t.factor_ = factor;
  t.ring_ = j;
  return t;
}

Vector PointTransform::operator()(const Vector& x) const {
  if (ring_) return factor_ * ring_restrict(x, *ring_);
  return factor_ * x;
}

double PointTransform::coordinate(const Vector& x, std::size_t i) const {
  const double v = x(static_cast<Eigen::Index>(i));
  if (ring_ && !in_ring(v, *ring_)) return 0.0;
  return factor_ * v;
}

std::optional<double> PointTransform::linear_factor() const {
  if (ring_) return std::nullopt;
  return factor_;
}

double rotation_beta(std::size_t d) {
  return kRotationScale * std::sqrt(log2_dim(d) / static_cast<double>(d));
}

double l2_error_radius(std::size_t d, double tau) {
  return rotation_beta(d) * std::sqrt(static_cast<double>(d)) * tau;
}

Vector estimate_mean_linf(OracleSession& session, std::size_t d, double eps, const PointTransform& transform) {
  require_stat(session, eps, "estimate_mean_linf");
  require_dim(session, d, "estimate_mean_linf");
  require_budget(session, d, "estimate_mean_linf");

  Vector out(static_cast<Eigen::Index>(d));
  const auto factor = transform.linear_factor();
  for (std::size_t i = 0; i < d; ++i) {
    PointFn fn = [&transform, i](const Vector& x) { return transform.coordinate(x, i); };
    const Query h = factor ? Query::affine_on_support(
                                 std::move(fn), *factor * Vector::Unit(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(i)))
                           : Query(std::move(fn));
    out(static_cast<Eigen::Index>(i)) = session.stat_query(h);
  }
  return out;
}

Vector estimate_mean_l2(OracleSession& session, const Matrix& rotation, double eps, const PointTransform& transform) {
  const auto d = static_cast<std::size_t>(rotation.rows());
  if (rotation.cols() != rotation.rows()) throw std::invalid_argument("estimate_mean_l2: rotation must be square");
  require_stat(session, eps, "estimate_mean_l2");
  require_dim(session, d, "estimate_mean_l2");
  require_budget(session, d, "estimate_mean_l2");

  const double beta = rotation_beta(d);
  const auto factor = transform.linear_factor();
  // On the unit l2 ball |(Qx)_i| <= 1, so for beta >= 1 the clip is inactive
  // and the query is exactly linear there.
  const bool linear = factor.has_value() && beta >= 1.0;

  Vector responses(static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < d; ++i) {
    const Vector row = rotation.row(static_cast<Eigen::Index>(i)).transpose();
    PointFn fn;
    if (factor) {
      fn = [row, beta, f = *factor](const Vector& x) { return std::clamp(f * row.dot(x) / beta, -1.0, 1.0); };
    } else {
      fn = [row, beta, &transform](const Vector& x) { return std::clamp(row.dot(transform(x)) / beta, -1.0, 1.0); };
    }
    const Query h = linear ? Query::affine_on_support(std::move(fn), (*factor / beta) * row) : Query(std::move(fn));
    responses(static_cast<Eigen::Index>(i)) = session.stat_query(h);
  }
  return beta * (rotation.transpose() * responses);
}

Vector estimate_mean_l2(OracleSession& session, std::size_t d, double eps, std::uint64_t seed,
                        const PointTransform& transform) {
  require_dim(session, d, "estimate_mean_l2");
  return estimate_mean_l2(session, random_orthogonal(d, seed), eps, transform);
}

Vector reconcile(const Vector& w_inf, const Vector& w_2, double r_inf, double r_2) {
  if (w_inf.size() != w_2.size()) throw std::invalid_argument("reconcile: size mismatch");
  if (!(r_inf >= 0.0) || !(r_2 >= 0.0)) throw std::invalid_argument("reconcile: radii must be nonnegative");
  Vector out(w_2.size());
  for (Eigen::Index i = 0; i < w_2.size(); ++i) out(i) = std::clamp(w_2(i), w_inf(i) - r_inf, w_inf(i) + r_inf);
  const double gap = (out - w_2).norm();
  if (gap > r_2 * (1.0 + 1e-9) + 1e-15) {
    throw OracleContractViolation("reconcile: l_inf box and l2 ball are disjoint (distance " + std::to_string(gap) +
                                  " > radius " + std::to_string(r_2) + ")");
  }
  return out;
}

std::size_t EstimateReport::active_rings() const {
  return static_cast<std::size_t>(
      std::count_if(per_ring.begin(), per_ring.end(), [](const RingEstimate& r) { return !r.skipped; }));
}

int ring_cutoff(std::size_t d, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("ring_cutoff: eps must be positive");
  return static_cast<int>(std::ceil(2.0 * std::log2(static_cast<double>(d) / eps)));
}

double symmetric_gamma(std::size_t d, double eps, double t2_bound) {
  const double log_ratio = std::max(1.0, std::log2(static_cast<double>(d) / eps));
  return 1.0 / (36.0 * t2_bound * log2_dim(d) * log_ratio);
}

double symmetric_tolerance(std::size_t d, double eps, double t2_bound) {
  return eps * symmetric_gamma(d, eps, t2_bound);
}

std::size_t symmetric_query_count(std::size_t d, double eps) {
  return static_cast<std::size_t>(ring_cutoff(d, eps) + 1) * (2 * d + 1);
}

EstimateReport estimate_mean_symmetric(OracleSession& session, const Norm& norm, std::size_t d, double eps,
                                       const SymmetricOptions& options) {
  if (!norm.is_symmetric_kind()) throw std::invalid_argument("estimate_mean_symmetric: norm is not symmetric");
  if (!norm.trusted() && !options.allow_unvalidated) {
    throw ValidationError("estimate_mean_symmetric: norm '" + norm.name() + "' has not passed validation");
  }
  if (norm.dim() != d) throw std::invalid_argument("estimate_mean_symmetric: norm dimension mismatch");
  if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("estimate_mean_symmetric: eps must lie in (0, 1)");
  if (!(options.t2_bound > 0.0)) throw std::invalid_argument("estimate_mean_symmetric: T2 bound must be positive");
  if (!session.is_stat()) throw std::invalid_argument("estimate_mean_symmetric: requires a STAT session");
  require_dim(session, d, "estimate_mean_symmetric");

  const int cutoff = ring_cutoff(d, eps);
  require_budget(session, symmetric_query_count(d, eps), "estimate_mean_symmetric");

  EstimateReport report;
  report.gamma = symmetric_gamma(d, eps, options.t2_bound);
  report.alpha = session.tolerance();
  report.estimate = Vector::Zero(static_cast<Eigen::Index>(d));
  const std::size_t start = session.query_count();
  const double alpha = session.tolerance();
  const Matrix rotation = random_orthogonal(d, mix_seed(options.seed, 0));

  for (int j = 0; j <= cutoff; ++j) {
    RingEstimate ring;
    ring.j = j;
    const double level = std::ldexp(1.0, -j);
    ring.m = m_X(norm, level);

    const Query occupied([j](const Vector& x) {
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        if (in_ring(x(i), j)) return 1.0;
      }
      return 0.0;
    });
    ring.mass_estimate = session.stat_query(occupied);

    if (ring.mass_estimate <= 0.0 || ring.m <= 0.0) {
      ring.skipped = true;
      ring.w_inf = ring.w_2 = ring.w_reconciled = Vector::Zero(static_cast<Eigen::Index>(d));
    } else {
      ring.w_inf = level * estimate_mean_linf(session, d, alpha, PointTransform::ring(j, 1.0 / level));
      ring.w_2 = 2.0 * ring.m * estimate_mean_l2(session, rotation, alpha, PointTransform::ring(j, 0.5 / ring.m));
      ring.w_reconciled = reconcile(ring.w_inf, ring.w_2, alpha * level, 2.0 * ring.m * l2_error_radius(d, alpha));
      report.estimate += ring.w_reconciled;
    }
    report.per_ring.push_back(std::move(ring));
  }
  report.queries_used = session.query_count() - start;
  return report;
}

Matrix estimate_mean_schatten(OracleSession& session, std::size_t d, double p, double eps, std::uint64_t seed) {
  if (!(p >= 2.0)) throw std::invalid_argument("estimate_mean_schatten: p must be >= 2");
  const std::size_t dim = d * d;
  require_dim(session, dim, "estimate_mean_schatten");
  const double exponent = std::isinf(p) ? 0.5 : 0.5 - 1.0 / p;
  const double spread = std::pow(static_cast<double>(d), exponent);
  const Vector w = spread * estimate_mean_l2(session, dim, eps, seed, PointTransform::scaled(1.0 / spread));
  return to_matrix(w, d);
}

void record_errors(EstimateReport& report, const Vector& truth, const Norm& norm) {
  const Vector diff = report.estimate - truth;
  report.errors_realized["X"] = norm(diff);
  report.errors_realized["l2"] = diff.norm();
  report.errors_realized["linf"] = diff.size() ? diff.cwiseAbs().maxCoeff() : 0.0;
}

}  // namespace sqmean
