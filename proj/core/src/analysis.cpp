#include "sqmean/analysis.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <string>

namespace sqmean {
namespace {

constexpr double kSlack = 1e-12;

struct FamilyDeltas {
  std::vector<double> base;                // p_D(omega)
  std::vector<std::vector<double>> delta;  // (p_k - p_D) / p_D per member
};

FamilyDeltas family_deltas(const Distribution& reference, const std::vector<Distribution>& family) {
  if (!reference.is_explicit()) throw std::invalid_argument("discrimination norm: reference must be explicit");
  if (family.empty()) throw std::invalid_argument("discrimination norm: empty family");
  const auto support = reference.support();
  FamilyDeltas out;
  out.base.assign(reference.weights().begin(), reference.weights().end());
  for (double p : out.base) {
    if (!(p > 0.0)) throw std::invalid_argument("discrimination norm: reference must have full support");
  }
  for (const auto& member : family) {
    if (!member.is_explicit()) throw std::invalid_argument("discrimination norm: family members must be explicit");
    const auto ms = member.support();
    if (ms.size() != support.size()) throw std::invalid_argument("discrimination norm: supports differ in size");
    for (std::size_t i = 0; i < ms.size(); ++i) {
      if (ms[i].size() != support[i].size() || (ms[i] - support[i]).cwiseAbs().maxCoeff() > kSlack) {
        throw std::invalid_argument("discrimination norm: family member has a different support");
      }
    }
    std::vector<double> d(ms.size());
    const auto mw = member.weights();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = (mw[i] - out.base[i]) / out.base[i];
    out.delta.push_back(std::move(d));
  }
  return out;
}

double objective(const FamilyDeltas& fd, const Vector& h) {
  double acc = 0.0;
  for (const auto& delta : fd.delta) {
    double gap = 0.0;
    for (std::size_t w = 0; w < delta.size(); ++w) gap += fd.base[w] * delta[w] * h(static_cast<Eigen::Index>(w));
    acc += std::abs(gap);
  }
  return acc / static_cast<double>(fd.delta.size());
}

double weighted_norm(const std::vector<double>& base, const std::vector<double>& v) {
  double acc = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) acc += base[i] * v[i] * v[i];
  return std::sqrt(acc);
}

}  // namespace

std::vector<LevelBucket> level_decompose(const Vector& x, double t) {
  if (!(t > 0.0)) throw std::invalid_argument("level_decompose: t must be positive");
  if (x.size() > 0 && x.cwiseAbs().maxCoeff() > t * (1.0 + kSlack)) {
    throw std::invalid_argument("level_decompose: ||x||_inf exceeds t");
  }
  const auto d = static_cast<std::size_t>(x.size());
  const int last = d > 1 ? static_cast<int>(std::ceil(2.0 * std::log2(static_cast<double>(d)))) : 0;
  std::vector<LevelBucket> buckets;
  for (int j = 0; j <= last; ++j) {
    LevelBucket b;
    b.j = j;
    const double hi = t * std::ldexp(1.0, -j);
    const double lo = hi / 2.0;
    for (std::size_t i = 0; i < d; ++i) {
      const double a = std::abs(x(static_cast<Eigen::Index>(i)));
      if (a > lo && a <= hi) b.indices.push_back(i);
    }
    // The top bucket also takes entries a hair above t.
    if (j == 0) {
      for (std::size_t i = 0; i < d; ++i) {
        const double a = std::abs(x(static_cast<Eigen::Index>(i)));
        if (a > hi) b.indices.push_back(i);
      }
      std::sort(b.indices.begin(), b.indices.end());
    }
    b.flat = Vector::Zero(x.size());
    b.flat.head(static_cast<Eigen::Index>(b.indices.size())).setConstant(hi);
    buckets.push_back(std::move(b));
  }
  return buckets;
}

InterpolationCheck check_interpolation(const Norm& norm, double t, double t2_bound, const Vector& x) {
  if (!(t2_bound > 0.0)) throw std::invalid_argument("check_interpolation: T2 bound must be positive");
  const double m = m_X(norm, t);
  if (x.cwiseAbs().maxCoeff() > t * (1.0 + kSlack)) {
    throw std::invalid_argument("check_interpolation: ||x||_inf exceeds t");
  }
  if (x.norm() > m * (1.0 + kSlack)) throw std::invalid_argument("check_interpolation: ||x||_2 exceeds m_X(t)");
  InterpolationCheck c;
  c.t = t;
  c.t2_bound = t2_bound;
  c.x = x;
  c.lhs = norm(x);
  c.rhs = t2_bound * 3.0 * log2_dim(norm.dim());
  c.passed = c.lhs <= c.rhs;
  return c;
}

Vector sample_conforming(const Norm& norm, double t, Rng& rng) {
  const double m = m_X(norm, t);
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto d = static_cast<Eigen::Index>(norm.dim());
  Vector x(d);
  for (auto& e : x) e = gauss(rng);
  x = x.cwiseMax(-t).cwiseMin(t);
  const double u = 1.0 - unit(rng);  // (0, 1]
  const double len = x.norm();
  if (len > 0.0) x *= u * m / len;
  return x.cwiseMax(-t).cwiseMin(t);
}

RingInclusionReport check_ring_inclusion(const Norm& norm, int j, double t2_bound, std::size_t samples,
                                         std::uint64_t seed) {
  if (j < 0) throw std::invalid_argument("check_ring_inclusion: negative ring index");
  if (!norm.is_symmetric_kind()) throw std::invalid_argument("check_ring_inclusion: norm is not symmetric");
  RingInclusionReport report;
  report.j = j;
  report.samples = samples;
  const double t = std::ldexp(1.0, -j);
  report.m = m_X(norm, t);

  Rng rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::bernoulli_distribution coin(0.5);
  const std::size_t d = norm.dim();
  std::vector<std::size_t> positions(d);
  std::iota(positions.begin(), positions.end(), std::size_t{0});

  for (std::size_t s = 0; s < samples; ++s) {
    std::shuffle(positions.begin(), positions.end(), rng);
    const std::size_t k = 1 + static_cast<std::size_t>(unit(rng) * static_cast<double>(d)) % d;
    const bool lower_edge = s % 2 == 1;
    std::vector<double> values(k);
    for (auto& v : values) {
      // Magnitudes in (t/2, t]; odd samples hug the lower edge where the
      // most coordinates fit.
      const double frac = lower_edge ? 1e-6 * (1.0 - unit(rng)) : 1.0 - unit(rng);
      v = (coin(rng) ? 1.0 : -1.0) * (0.5 * t + 0.5 * t * frac);
    }
    auto build = [&](std::size_t count) {
      Vector x = Vector::Zero(static_cast<Eigen::Index>(d));
      for (std::size_t i = 0; i < count; ++i) x(static_cast<Eigen::Index>(positions[i])) = values[i];
      return x;
    };
    // Largest prefix inside B_X; membership is monotone in the prefix length.
    std::size_t lo = 1;
    std::size_t hi = k;
    if (norm(build(hi)) > 1.0) {
      while (hi - lo > 1) {
        const std::size_t mid = lo + (hi - lo) / 2;
        if (norm(build(mid)) <= 1.0) {
          lo = mid;
        } else {
          hi = mid;
        }
      }
      hi = lo;
    }
    const Vector x = build(hi);
    if (norm(x) > 1.0) continue;
    report.max_l2_ratio = std::max(report.max_l2_ratio, x.norm() / report.m);
  }

  const double bound = 3.0 * t2_bound * log2_dim(d);
  for (std::size_t s = 0; s < samples; ++s) {
    const Vector x = sample_conforming(norm, t, rng);
    report.max_norm_ratio = std::max(report.max_norm_ratio, norm(x) / bound);
  }
  report.l2_inclusion = report.max_l2_ratio <= kRingRadiusFactor * (1.0 + 1e-9);
  report.norm_inclusion = report.max_norm_ratio <= 1.0 + kSlack;
  return report;
}

double discrimination_norm_exact(const Distribution& reference, const std::vector<Distribution>& family) {
  if (family.size() > kMaxDiscriminationFamily) {
    throw std::invalid_argument("discrimination_norm_exact: family larger than " +
                                std::to_string(kMaxDiscriminationFamily));
  }
  if (reference.is_explicit() && reference.support().size() > kMaxDiscriminationSupport) {
    throw std::invalid_argument("discrimination_norm_exact: support larger than " +
                                std::to_string(kMaxDiscriminationSupport));
  }
  const auto fd = family_deltas(reference, family);
  const std::size_t k = fd.delta.size();
  const std::size_t omega = fd.base.size();
  const double inv_k = 1.0 / static_cast<double>(k);

  // s_0 = +1 is pinned; the objective is even in s.
  std::vector<int> signs(k, 1);
  auto combine = [&] {
    std::vector<double> v(omega, 0.0);
    for (std::size_t m = 0; m < k; ++m) {
      for (std::size_t w = 0; w < omega; ++w) v[w] += signs[m] * fd.delta[m][w] * inv_k;
    }
    return v;
  };
  std::vector<double> v = combine();
  double best = weighted_norm(fd.base, v);
  const std::uint64_t patterns = std::uint64_t{1} << (k - 1);
  for (std::uint64_t step = 1; step < patterns; ++step) {
    const std::size_t flip = 1 + static_cast<std::size_t>(std::countr_zero(step));
    signs[flip] = -signs[flip];
    if (step % 1024 == 0) {
      v = combine();
    } else {
      for (std::size_t w = 0; w < omega; ++w) v[w] += 2.0 * signs[flip] * fd.delta[flip][w] * inv_k;
    }
    best = std::max(best, weighted_norm(fd.base, v));
  }
  return best;
}

double discrimination_objective(const Distribution& reference, const std::vector<Distribution>& family,
                                const Vector& h) {
  const auto fd = family_deltas(reference, family);
  if (static_cast<std::size_t>(h.size()) != fd.base.size()) {
    throw std::invalid_argument("discrimination_objective: h has wrong length");
  }
  return objective(fd, h);
}

double discrimination_norm_mc(const Distribution& reference, const std::vector<Distribution>& family,
                              std::size_t samples_h, std::uint64_t seed) {
  const auto fd = family_deltas(reference, family);
  Rng rng(seed);
  std::normal_distribution<double> gauss;
  const auto omega = static_cast<Eigen::Index>(fd.base.size());
  double best = 0.0;
  for (std::size_t s = 0; s < samples_h; ++s) {
    Vector h(omega);
    for (auto& e : h) e = gauss(rng);
    double norm_sq = 0.0;
    for (Eigen::Index w = 0; w < omega; ++w) norm_sq += fd.base[static_cast<std::size_t>(w)] * h(w) * h(w);
    if (!(norm_sq > 0.0)) continue;
    h /= std::sqrt(norm_sq);
    best = std::max(best, objective(fd, h));
  }
  return best;
}

}  // namespace sqmean
