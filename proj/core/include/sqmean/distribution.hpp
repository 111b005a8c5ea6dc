#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "sqmean/common.hpp"
#include "sqmean/norms.hpp"

namespace sqmean {

using Rng = std::mt19937_64;

/// Point evaluation of a query function.
using PointFn = std::function<double(const Vector&)>;

/// Draws one point of a sampler-backed distribution.
using SampleFn = std::function<Vector(Rng&)>;

/// Exact expectation of an arbitrary point function, for samplers small
/// enough to enumerate.
using ExpectationFn = std::function<double(const PointFn&)>;

/// Finite-support weighted point set, or a seeded sampler with optional
/// exact capabilities. Cheap to copy; the payload is shared and immutable.
class Distribution {
 public:
  /// Weights must be nonnegative and sum to 1 within 1e-12. When `ball` is
  /// given every support point must satisfy ||x||_ball <= 1 + 1e-9.
  static Distribution from_points(std::vector<Vector> support, std::vector<double> weights,
                                  std::optional<Norm> ball = std::nullopt);
  static Distribution uniform(std::vector<Vector> support, std::optional<Norm> ball = std::nullopt);
  static Distribution point_mass(Vector x, std::optional<Norm> ball = std::nullopt);

  static Distribution from_sampler(std::size_t dim, SampleFn draw,
                                   std::optional<Vector> exact_mean = std::nullopt,
                                   ExpectationFn expectation = {},
                                   std::optional<Norm> ball = std::nullopt);

  bool is_explicit() const { return explicit_ != nullptr; }
  std::size_t dim() const { return dim_; }
  const std::optional<Norm>& ball_norm() const { return ball_; }

  /// Explicit mode only.
  std::span<const Vector> support() const;
  std::span<const double> weights() const;

  bool has_exact_mean() const;
  /// Weighted sum for explicit distributions, the stored mean for samplers.
  /// Throws std::logic_error for a sampler without exact capability.
  Vector exact_mean() const;

  /// True when E[f] is computable exactly for every point function f.
  bool has_exact_expectation() const;
  /// Throws std::logic_error when !has_exact_expectation().
  double expectation(const PointFn& f) const;

  Vector draw(Rng& rng) const;

  /// Image under a point map: support points are transformed (explicit) or
  /// the sampler is wrapped. Exact capabilities of samplers are dropped.
  Distribution mapped(const std::function<Vector(const Vector&)>& map) const;

 private:
  struct ExplicitData {
    std::vector<Vector> support;
    std::vector<double> weights;
    std::vector<double> cumulative;
  };
  struct SamplerData {
    SampleFn draw;
    std::optional<Vector> mean;
    ExpectationFn expectation;
  };

  std::size_t dim_ = 0;
  std::optional<Norm> ball_;
  std::shared_ptr<const ExplicitData> explicit_;
  std::shared_ptr<const SamplerData> sampler_;
};

Vector exact_mean(const Distribution& dist);

}  // namespace sqmean
