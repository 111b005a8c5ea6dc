#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sqmean/norms.hpp"
#include "sqmean/oracle.hpp"

namespace sqmean {

/// Keeps w_i exactly when |w_i| is in (2^{-j-1}, 2^{-j}].
Vector ring_restrict(const Vector& w, int j);
bool in_ring(double value, int j);

/// Point map composed into every query of a sub-estimator, so that queries
/// against D realize queries against the image distribution.
class PointTransform {
 public:
  static PointTransform identity();
  /// x -> factor * x.
  static PointTransform scaled(double factor);
  /// x -> factor * R_j(x).
  static PointTransform ring(int j, double factor);

  Vector operator()(const Vector& x) const;
  /// Coordinate i of the image.
  double coordinate(const Vector& x, std::size_t i) const;
  /// Set when the map is a pure scaling.
  std::optional<double> linear_factor() const;
  double factor() const { return factor_; }
  std::optional<int> ring_index() const { return ring_; }

 private:
  double factor_ = 1.0;
  std::optional<int> ring_;
};

/// Query scaling constant of the random-rotation estimator.
inline constexpr double kRotationScale = 4.0;

/// beta = C0 * sqrt(log2(d) / d).
double rotation_beta(std::size_t d);

/// Worst-case l2 error of estimate_mean_l2 under STAT(tau) when no query
/// clips: beta * sqrt(d) * tau = C0 * sqrt(log2 d) * tau.
double l2_error_radius(std::size_t d, double tau);

/// One STAT query per coordinate. Requires a STAT session with tau <= eps
/// and budget for d queries; the result is within tau of the mean in l_inf.
Vector estimate_mean_linf(OracleSession& session, std::size_t d, double eps,
                          const PointTransform& transform = PointTransform::identity());

/// Random-rotation estimator for distributions on the unit l2 ball:
/// queries h_i(x) = clip((Qx)_i / beta) and returns beta * Q^T v.
Vector estimate_mean_l2(OracleSession& session, std::size_t d, double eps, std::uint64_t seed,
                        const PointTransform& transform = PointTransform::identity());

/// Same with a caller-supplied orthogonal matrix.
Vector estimate_mean_l2(OracleSession& session, const Matrix& rotation, double eps,
                        const PointTransform& transform = PointTransform::identity());

/// l2 projection of w_2 onto the box B_inf(w_inf, r_inf), i.e. coordinate-wise
/// clamping. Throws OracleContractViolation when the projection is farther
/// than r_2 from w_2, which certifies that the two balls are disjoint.
Vector reconcile(const Vector& w_inf, const Vector& w_2, double r_inf, double r_2);

struct RingEstimate {
  int j = 0;
  bool skipped = false;
  double mass_estimate = 0.0;
  double m = 0.0;
  Vector w_inf;
  Vector w_2;
  Vector w_reconciled;
};

struct EstimateReport {
  Vector estimate;
  std::vector<RingEstimate> per_ring;
  std::size_t queries_used = 0;
  double gamma = 0.0;
  double alpha = 0.0;
  std::map<std::string, double> errors_realized;

  std::size_t active_rings() const;
};

struct SymmetricOptions {
  double t2_bound = 1.0;
  std::uint64_t seed = 0;
  /// Run on a norm that was neither built in nor certified.
  bool allow_unvalidated = false;
};

/// Largest ring index, ceil(2 log2(d / eps)).
int ring_cutoff(std::size_t d, double eps);

/// 1 / (36 * T2 * log2 d * log2(d / eps)).
double symmetric_gamma(std::size_t d, double eps, double t2_bound);

/// Oracle tolerance eps * gamma at which the symmetric estimator is run.
double symmetric_tolerance(std::size_t d, double eps, double t2_bound);

/// Number of oracle calls made by estimate_mean_symmetric when no ring is skipped.
std::size_t symmetric_query_count(std::size_t d, double eps);

/// Level-ring mean estimator for symmetric norms. For every ring j it spends
/// one mass query, then runs the l_inf estimator on D_j / 2^{-j} and the l2
/// estimator on D_j / (2 m_X(2^{-j})), reconciles the two and sums.
EstimateReport estimate_mean_symmetric(OracleSession& session, const Norm& norm, std::size_t d,
                                       double eps, const SymmetricOptions& options);

/// Identity embedding of S_p into l2^{d x d}: rescales by d^{1/2 - 1/p} and
/// runs the rotation estimator in dimension d^2. Requires p >= 2.
Matrix estimate_mean_schatten(OracleSession& session, std::size_t d, double p, double eps,
                              std::uint64_t seed);

/// Fills errors_realized with the X, l2 and l_inf errors against `truth`.
void record_errors(EstimateReport& report, const Vector& truth, const Norm& norm);

}  // namespace sqmean
