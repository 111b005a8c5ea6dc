#pragma once

#include <vector>

#include "sqmean/distribution.hpp"
#include "sqmean/norms.hpp"

namespace sqmean {

struct LevelBucket {
  int j = 0;
  std::vector<std::size_t> indices;
  /// |B_j| leading coordinates equal to t 2^{-j}, the rest zero.
  Vector flat;
};

/// Buckets B_j = {i : t 2^{-j-1} < |x_i| <= t 2^{-j}} for j = 0..ceil(2 log2 d).
/// Throws std::invalid_argument if ||x||_inf > t.
std::vector<LevelBucket> level_decompose(const Vector& x, double t);

/// Outcome of ||x||_X <= T2 * 3 log2 d for one conforming x.
struct InterpolationCheck {
  double t = 1.0;
  double t2_bound = 1.0;
  Vector x;
  double lhs = 0.0;
  double rhs = 0.0;
  bool passed = false;
};

/// Throws std::invalid_argument unless ||x||_inf <= t and ||x||_2 <= m_X(t).
InterpolationCheck check_interpolation(const Norm& norm, double t, double t2_bound, const Vector& x);

/// Gaussian, clamped to the t-box, rescaled to l2 norm u * m_X(t) with u
/// uniform in (0,1], clamped again. Always conforming.
Vector sample_conforming(const Norm& norm, double t, Rng& rng);

struct RingInclusionReport {
  int j = 0;
  std::size_t samples = 0;
  double m = 0.0;
  /// max ||x||_2 / m_X(2^{-j}) over sampled ring points of B_X.
  double max_l2_ratio = 0.0;
  /// max ||x||_X / (3 T2 log2 d) over sampled points of m B_l2 cap 2^{-j} B_inf.
  double max_norm_ratio = 0.0;
  bool l2_inclusion = false;
  bool norm_inclusion = false;
  bool passed() const { return l2_inclusion && norm_inclusion; }
};

/// Radius, in units of m_X(2^{-j}), that ring points are checked against.
/// The estimator rescales ring distributions by 2 m_X(2^{-j}).
inline constexpr double kRingRadiusFactor = 2.0;

/// Samples ring points of B_X (including lower-edge extremes) and checks
/// ||x||_2 <= 2 m_X(2^{-j}); samples the body m B_l2 cap 2^{-j} B_inf and
/// checks ||x||_X <= 3 T2 log2 d.
RingInclusionReport check_ring_inclusion(const Norm& norm, int j, double t2_bound,
                                         std::size_t samples, std::uint64_t seed);

inline constexpr std::size_t kMaxDiscriminationSupport = 22;
inline constexpr std::size_t kMaxDiscriminationFamily = 20;

/// kappa_2(D, family) over explicit distributions sharing D's support, by
/// enumerating sign patterns of the family.
double discrimination_norm_exact(const Distribution& reference, const std::vector<Distribution>& family);

/// Average |E_D h - E_D' h| over the family for a given h.
double discrimination_objective(const Distribution& reference, const std::vector<Distribution>& family,
                                const Vector& h);

/// Best objective over `samples_h` random h normalized to ||h||_D = 1; a lower
/// bound on the exact value.
double discrimination_norm_mc(const Distribution& reference, const std::vector<Distribution>& family,
                              std::size_t samples_h, std::uint64_t seed);

}  // namespace sqmean
