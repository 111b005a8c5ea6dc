#include "sqmean/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace sqmean {

Distribution Distribution::from_points(std::vector<Vector> support, std::vector<double> weights,
                                       std::optional<Norm> ball) {
  if (support.empty()) throw std::invalid_argument("Distribution: empty support");
  if (support.size() != weights.size()) throw std::invalid_argument("Distribution: support/weights size mismatch");
  const std::size_t dim = static_cast<std::size_t>(support.front().size());
  if (dim == 0) throw std::invalid_argument("Distribution: zero dimension");

  double total = 0.0;
  for (std::size_t i = 0; i < support.size(); ++i) {
    if (static_cast<std::size_t>(support[i].size()) != dim) {
      throw std::invalid_argument("Distribution: support point " + std::to_string(i) + " has wrong dimension");
    }
    if (!support[i].allFinite()) throw std::invalid_argument("Distribution: non-finite support point");
    if (!(weights[i] >= 0.0) || !std::isfinite(weights[i])) {
      throw std::invalid_argument("Distribution: weights must be finite and nonnegative");
    }
    total += weights[i];
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw std::invalid_argument("Distribution: weights sum to " + std::to_string(total) + ", not 1");
  }
  if (ball) {
    if (ball->dim() != dim) throw std::invalid_argument("Distribution: ball norm dimension mismatch");
    for (std::size_t i = 0; i < support.size(); ++i) {
      if ((*ball)(support[i]) > 1.0 + 1e-9) {
        throw std::invalid_argument("Distribution: support point " + std::to_string(i) + " lies outside the unit ball of " +
                                    ball->name());
      }
    }
  }

  auto data = std::make_shared<ExplicitData>();
  data->support = std::move(support);
  data->weights = std::move(weights);
  data->cumulative.resize(data->weights.size());
  std::partial_sum(data->weights.begin(), data->weights.end(), data->cumulative.begin());

  Distribution d;
  d.dim_ = dim;
  d.ball_ = std::move(ball);
  d.explicit_ = std::move(data);
  return d;
}

Distribution Distribution::uniform(std::vector<Vector> support, std::optional<Norm> ball) {
  if (support.empty()) throw std::invalid_argument("Distribution: empty support");
  std::vector<double> weights(support.size(), 1.0 / static_cast<double>(support.size()));
  return from_points(std::move(support), std::move(weights), std::move(ball));
}

Distribution Distribution::point_mass(Vector x, std::optional<Norm> ball) {
  return from_points({std::move(x)}, {1.0}, std::move(ball));
}

Distribution Distribution::from_sampler(std::size_t dim, SampleFn draw, std::optional<Vector> exact_mean,
                                        ExpectationFn expectation, std::optional<Norm> ball) {
  if (dim == 0) throw std::invalid_argument("Distribution: zero dimension");
  if (!draw) throw std::invalid_argument("Distribution: empty sampler");
  if (exact_mean && static_cast<std::size_t>(exact_mean->size()) != dim) {
    throw std::invalid_argument("Distribution: exact mean has wrong dimension");
  }
  auto data = std::make_shared<SamplerData>();
  data->draw = std::move(draw);
  data->mean = std::move(exact_mean);
  data->expectation = std::move(expectation);

  Distribution d;
  d.dim_ = dim;
  d.ball_ = std::move(ball);
  d.sampler_ = std::move(data);
  return d;
}

std::span<const Vector> Distribution::support() const {
  if (!explicit_) throw std::logic_error("Distribution::support: sampler-backed distribution");
  return explicit_->support;
}

std::span<const double> Distribution::weights() const {
  if (!explicit_) throw std::logic_error("Distribution::weights: sampler-backed distribution");
  return explicit_->weights;
}

bool Distribution::has_exact_mean() const {
  return explicit_ || (sampler_ && (sampler_->mean || sampler_->expectation));
}

Vector Distribution::exact_mean() const {
  if (explicit_) {
    Vector mean = Vector::Zero(static_cast<Eigen::Index>(dim_));
    for (std::size_t i = 0; i < explicit_->support.size(); ++i) {
      mean += explicit_->weights[i] * explicit_->support[i];
    }
    return mean;
  }
  if (sampler_->mean) return *sampler_->mean;
  if (sampler_->expectation) {
    Vector mean(static_cast<Eigen::Index>(dim_));
    for (Eigen::Index i = 0; i < mean.size(); ++i) {
      mean(i) = sampler_->expectation([i](const Vector& x) { return x(i); });
    }
    return mean;
  }
  throw std::logic_error("exact_mean: sampler has no exact-expectation capability");
}

bool Distribution::has_exact_expectation() const {
  return explicit_ || (sampler_ && sampler_->expectation);
}

double Distribution::expectation(const PointFn& f) const {
  if (explicit_) {
    double acc = 0.0;
    for (std::size_t i = 0; i < explicit_->support.size(); ++i) acc += explicit_->weights[i] * f(explicit_->support[i]);
    return acc;
  }
  if (sampler_->expectation) return sampler_->expectation(f);
  throw std::logic_error("expectation: sampler has no exact-expectation capability");
}

Vector Distribution::draw(Rng& rng) const {
  if (sampler_) return sampler_->draw(rng);
  const double u = std::uniform_real_distribution<double>(0.0, explicit_->cumulative.back())(rng);
  auto it = std::upper_bound(explicit_->cumulative.begin(), explicit_->cumulative.end(), u);
  if (it == explicit_->cumulative.end()) --it;
  return explicit_->support[static_cast<std::size_t>(it - explicit_->cumulative.begin())];
}

Distribution Distribution::mapped(const std::function<Vector(const Vector&)>& map) const {
  if (explicit_) {
    std::vector<Vector> points;
    points.reserve(explicit_->support.size());
    for (const auto& x : explicit_->support) points.push_back(map(x));
    return from_points(std::move(points), explicit_->weights);
  }
  auto inner = sampler_;
  const auto probe = map(Vector::Zero(static_cast<Eigen::Index>(dim_)));
  return from_sampler(static_cast<std::size_t>(probe.size()),
                      [inner, map](Rng& rng) { return map(inner->draw(rng)); });
}

Vector exact_mean(const Distribution& dist) { return dist.exact_mean(); }

}  // namespace sqmean
