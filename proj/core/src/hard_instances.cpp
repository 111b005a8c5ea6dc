#include "sqmean/hard_instances.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <string>

namespace sqmean {
namespace {

constexpr std::uint64_t kResyncPeriod = 1024;

double square(double x) { return x * x; }

void check_signs(const std::vector<int>& z, std::size_t n, const char* who) {
  if (z.size() != n) throw std::invalid_argument(std::string(who) + ": sign vector has wrong length");
  for (int s : z) {
    if (s != 1 && s != -1) throw std::invalid_argument(std::string(who) + ": sign entries must be +-1");
  }
}

T2Estimate exact_t2(const Norm& norm, const std::vector<Vector>& x, double denom) {
  const std::size_t n = x.size();
  if (n > kMaxExactSigns) {
    throw std::invalid_argument("t2_hat: exact mode supports at most " + std::to_string(kMaxExactSigns) + " vectors");
  }
  // eps_1 is pinned to +1; ||-v|| = ||v|| covers the other half.
  const std::uint64_t patterns = std::uint64_t{1} << (n - 1);
  std::vector<int> signs(n, 1);
  auto resync = [&] {
    Vector s = Vector::Zero(x.front().size());
    for (std::size_t i = 0; i < n; ++i) s += signs[i] * x[i];
    return s;
  };
  Vector sum = resync();
  double acc = square(norm(sum));
  for (std::uint64_t k = 1; k < patterns; ++k) {
    // Gray code: step k flips the sign of vector 1 + ctz(k).
    const std::size_t flip = 1 + static_cast<std::size_t>(std::countr_zero(k));
    signs[flip] = -signs[flip];
    if (k % kResyncPeriod == 0) {
      sum = resync();
    } else {
      sum += 2.0 * signs[flip] * x[flip];
    }
    acc += square(norm(sum));
  }
  T2Estimate out;
  out.mean_square = acc / static_cast<double>(patterns);
  out.value = std::sqrt(out.mean_square) / denom;
  return out;
}

T2Estimate monte_carlo_t2(const Norm& norm, const std::vector<Vector>& x, double denom, const MonteCarloSigns& mc) {
  if (mc.samples < 2) throw std::invalid_argument("t2_hat: Monte-Carlo mode needs at least 2 samples");
  Rng rng(mc.seed);
  std::bernoulli_distribution coin(0.5);
  double sum = 0.0;
  double sum_sq = 0.0;
  for (std::size_t s = 0; s < mc.samples; ++s) {
    Vector v = Vector::Zero(x.front().size());
    for (const auto& xi : x) {
      if (coin(rng)) {
        v += xi;
      } else {
        v -= xi;
      }
    }
    const double q = square(norm(v));
    sum += q;
    sum_sq += q * q;
  }
  const auto n = static_cast<double>(mc.samples);
  T2Estimate out;
  out.mean_square = sum / n;
  const double var = std::max(0.0, (sum_sq - n * out.mean_square * out.mean_square) / (n - 1.0));
  out.value = std::sqrt(out.mean_square) / denom;
  out.std_error = out.mean_square > 0.0 ? std::sqrt(var / n) / (2.0 * std::sqrt(out.mean_square) * denom) : 0.0;
  return out;
}

SignMode default_mode(std::size_t n, std::uint64_t seed) {
  if (n <= kMaxExactSigns) return ExactSigns{};
  return MonteCarloSigns{20000, seed};
}

double schatten_root(std::size_t d, double p) {
  return std::isinf(p) ? 1.0 : std::pow(static_cast<double>(d), 1.0 / p);
}

std::vector<std::size_t> random_permutation(std::size_t d, Rng& rng) {
  std::vector<std::size_t> pi(d);
  std::iota(pi.begin(), pi.end(), std::size_t{0});
  std::shuffle(pi.begin(), pi.end(), rng);
  return pi;
}

/// Sum over all (pi, z) of weight(pi, z) * f(y(pi, z)).
template <class Weight>
double enumerate_schatten(std::size_t d, double p, const PointFn& f, Weight weight) {
  std::vector<std::size_t> pi(d);
  std::iota(pi.begin(), pi.end(), std::size_t{0});
  std::vector<int> z(d);
  double acc = 0.0;
  do {
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << d); ++mask) {
      for (std::size_t i = 0; i < d; ++i) z[i] = (mask >> i) & 1U ? -1 : 1;
      acc += weight(pi, z) * f(schatten_matrix(pi, z, p));
    }
  } while (std::next_permutation(pi.begin(), pi.end()));
  return acc;
}

}  // namespace

T2Estimate t2_estimate(const Norm& norm, const std::vector<Vector>& vectors, const SignMode& mode) {
  if (vectors.empty()) throw std::invalid_argument("t2_hat: need at least one vector");
  double denom_sq = 0.0;
  for (const auto& x : vectors) denom_sq += square(norm(x));
  if (!(denom_sq > 0.0)) throw std::invalid_argument("t2_hat: all vectors are zero");
  const double denom = std::sqrt(denom_sq);
  if (std::holds_alternative<ExactSigns>(mode)) return exact_t2(norm, vectors, denom);
  return monte_carlo_t2(norm, vectors, denom, std::get<MonteCarloSigns>(mode));
}

double t2_hat(const Norm& norm, const std::vector<Vector>& vectors, const SignMode& mode) {
  return t2_estimate(norm, vectors, mode).value;
}

Type2Witness make_witness(const Norm& norm, std::vector<Vector> vectors, std::optional<SignMode> mode) {
  if (vectors.empty()) throw std::invalid_argument("make_witness: degenerate witness (n = 0)");
  Type2Witness w{.vectors = {}, .norm = norm, .t2 = 0.0, .l1X = 0.0, .l2X = 0.0};
  double l2sq = 0.0;
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    const double v = norm(vectors[i]);
    if (v < 1.0 - 1e-12 || v > 2.0 + 1e-9) {
      throw std::invalid_argument("make_witness: ||x_" + std::to_string(i) + "|| = " + std::to_string(v) +
                                  " outside [1, 2]");
    }
    w.l1X += v;
    l2sq += v * v;
  }
  w.l2X = std::sqrt(l2sq);
  w.t2 = t2_hat(norm, vectors, mode ? *mode : default_mode(vectors.size(), 0));
  w.vectors = std::move(vectors);
  return w;
}

Type2Witness basis_witness_lp(std::size_t d, double p, std::uint64_t seed) {
  if (!(p >= 1.0 && p < 2.0)) throw std::invalid_argument("basis_witness_lp: p must lie in [1, 2)");
  std::vector<Vector> basis;
  basis.reserve(d);
  for (std::size_t i = 0; i < d; ++i) {
    basis.push_back(Vector::Unit(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(i)));
  }
  return make_witness(Norm::lp(d, p), std::move(basis), default_mode(d, seed));
}

Type2Witness random_search_witness(const Norm& norm, std::size_t n, std::size_t iterations, std::uint64_t seed) {
  if (n == 0 || iterations == 0) throw std::invalid_argument("random_search_witness: n and iterations must be positive");
  Rng rng(seed);
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> scale(1.0, 2.0);
  std::optional<Type2Witness> best;
  for (std::size_t it = 0; it < iterations; ++it) {
    std::vector<Vector> candidate;
    for (std::size_t i = 0; i < n; ++i) {
      Vector v(static_cast<Eigen::Index>(norm.dim()));
      for (auto& e : v) e = gauss(rng);
      const double nv = norm(v);
      if (nv == 0.0) v = Vector::Unit(v.size(), 0);
      candidate.push_back(v * (scale(rng) / norm(v)));
    }
    auto w = make_witness(norm, std::move(candidate), default_mode(n, mix_seed(seed, it)));
    if (!best || w.t2 > best->t2) best = std::move(w);
  }
  return *best;
}

Distribution build_reference(const Type2Witness& w) {
  if (w.vectors.empty()) throw std::invalid_argument("build_reference: degenerate witness (n = 0)");
  std::vector<Vector> support;
  std::vector<double> weights;
  for (const auto& x : w.vectors) {
    const double nx = w.norm(x);
    const Vector unit = x / nx;
    support.push_back(unit);
    support.push_back(-unit);
    weights.push_back(nx / (2.0 * w.l1X));
    weights.push_back(nx / (2.0 * w.l1X));
  }
  return Distribution::from_points(std::move(support), std::move(weights), w.norm);
}

double max_perturbation(const Type2Witness& w) { return w.t2 * w.l2X / w.l1X; }

Distribution build_perturbed(const Type2Witness& w, const std::vector<int>& z, double eps0) {
  if (w.vectors.empty()) throw std::invalid_argument("build_perturbed: degenerate witness (n = 0)");
  check_signs(z, w.size(), "build_perturbed");
  if (!(eps0 >= 0.0)) throw std::invalid_argument("build_perturbed: eps0 must be nonnegative");
  const double tilt = eps0 * w.l1X / (w.t2 * w.l2X);
  if (tilt > 1.0 + 1e-12) {
    throw std::invalid_argument("build_perturbed: eps0 = " + std::to_string(eps0) + " exceeds t2 * l2X / l1X = " +
                                std::to_string(max_perturbation(w)) + " (negative probability)");
  }
  std::vector<Vector> support;
  std::vector<double> weights;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double nx = w.norm(w.vectors[i]);
    const Vector unit = w.vectors[i] / nx;
    const double base = nx / w.l1X;
    support.push_back(unit);
    support.push_back(-unit);
    weights.push_back(std::max(0.0, base * (0.5 + 0.5 * z[i] * tilt)));
    weights.push_back(std::max(0.0, base * (0.5 - 0.5 * z[i] * tilt)));
  }
  return Distribution::from_points(std::move(support), std::move(weights), w.norm);
}

Vector analytic_mean_perturbed(const Type2Witness& w, const std::vector<int>& z, double eps0) {
  check_signs(z, w.size(), "analytic_mean_perturbed");
  Vector sum = Vector::Zero(static_cast<Eigen::Index>(w.norm.dim()));
  for (std::size_t i = 0; i < w.size(); ++i) sum += z[i] * w.vectors[i];
  return (eps0 / (w.t2 * w.l2X)) * sum;
}

double SchattenInstanceParams::root() const { return schatten_root(d, p); }

double SchattenInstanceParams::bias() const { return 0.5 * (1.0 + eps0 * root()); }

void SchattenInstanceParams::validate() const {
  if (d == 0) throw std::invalid_argument("schatten instance: d must be positive");
  if (!(p >= 1.0)) throw std::invalid_argument("schatten instance: p must be >= 1");
  if (!(eps0 >= 0.0)) throw std::invalid_argument("schatten instance: eps0 must be nonnegative");
  if (eps0 > gamma0 / root() * (1.0 + 1e-12)) {
    throw std::invalid_argument("schatten instance: eps0 = " + std::to_string(eps0) + " exceeds gamma0 * d^{-1/p} = " +
                                std::to_string(gamma0 / root()));
  }
  const double b = bias();
  if (!(b >= 0.5 && b <= 1.0)) throw std::invalid_argument("schatten instance: bias outside [1/2, 1]");
  if (a) check_signs(*a, d, "schatten instance (a)");
  if (this->b) check_signs(*this->b, d, "schatten instance (b)");
}

Vector schatten_matrix(const std::vector<std::size_t>& pi, const std::vector<int>& z, double p) {
  const std::size_t d = pi.size();
  if (z.size() != d) throw std::invalid_argument("schatten_matrix: size mismatch");
  const double root = schatten_root(d, p);
  Vector y = Vector::Zero(static_cast<Eigen::Index>(d * d));
  for (std::size_t i = 0; i < d; ++i) y(static_cast<Eigen::Index>(i * d + pi[i])) = z[i] / root;
  return y;
}

Distribution schatten_reference(const SchattenInstanceParams& params) {
  if (params.a || params.b) throw std::invalid_argument("schatten_reference: sign vectors a, b must be absent");
  if (params.d == 0 || !(params.p >= 1.0)) throw std::invalid_argument("schatten_reference: need d >= 1 and p >= 1");
  const std::size_t d = params.d;
  const double p = params.p;
  SampleFn draw = [d, p](Rng& rng) {
    const auto pi = random_permutation(d, rng);
    return schatten_matrix(pi, random_signs(d, rng), p);
  };
  ExpectationFn expectation;
  if (d <= kMaxSchattenEnumeration) {
    const double total = std::tgamma(static_cast<double>(d) + 1.0) * std::ldexp(1.0, static_cast<int>(d));
    expectation = [d, p, total](const PointFn& f) {
      return enumerate_schatten(d, p, f, [total](const auto&, const auto&) { return 1.0 / total; });
    };
  }
  return Distribution::from_sampler(d * d, std::move(draw), Vector::Zero(static_cast<Eigen::Index>(d * d)),
                                    std::move(expectation), Norm::schatten(d, p));
}

Distribution schatten_perturbed(const SchattenInstanceParams& params) {
  params.validate();
  if (!params.a || !params.b) throw std::invalid_argument("schatten_perturbed: sign vectors a, b are required");
  const std::size_t d = params.d;
  const double p = params.p;
  const double bias = params.bias();
  const std::vector<int> a = *params.a;
  const std::vector<int> b = *params.b;

  SampleFn draw = [d, p, bias, a, b](Rng& rng) {
    const auto pi = random_permutation(d, rng);
    std::bernoulli_distribution agree(bias);
    std::vector<int> z(d);
    for (std::size_t i = 0; i < d; ++i) {
      const int target = a[i] * b[pi[i]];
      z[i] = agree(rng) ? target : -target;
    }
    return schatten_matrix(pi, z, p);
  };
  ExpectationFn expectation;
  if (d <= kMaxSchattenEnumeration) {
    const double perms = std::tgamma(static_cast<double>(d) + 1.0);
    expectation = [d, p, bias, a, b, perms](const PointFn& f) {
      return enumerate_schatten(d, p, f, [&](const std::vector<std::size_t>& pi, const std::vector<int>& z) {
        double w = 1.0 / perms;
        for (std::size_t i = 0; i < d; ++i) w *= (z[i] == a[i] * b[pi[i]]) ? bias : 1.0 - bias;
        return w;
      });
    };
  }
  return Distribution::from_sampler(d * d, std::move(draw), flatten(schatten_analytic_mean(params)),
                                    std::move(expectation), Norm::schatten(d, p));
}

Matrix schatten_analytic_mean(const SchattenInstanceParams& params) {
  if (!params.a || !params.b) throw std::invalid_argument("schatten_analytic_mean: sign vectors a, b are required");
  check_signs(*params.a, params.d, "schatten_analytic_mean (a)");
  check_signs(*params.b, params.d, "schatten_analytic_mean (b)");
  Matrix m(params.d, params.d);
  const double scale = params.eps0 / static_cast<double>(params.d);
  for (std::size_t i = 0; i < params.d; ++i) {
    for (std::size_t j = 0; j < params.d; ++j) m(i, j) = scale * (*params.a)[i] * (*params.b)[j];
  }
  return m;
}

std::vector<int> random_signs(std::size_t n, Rng& rng) {
  std::bernoulli_distribution coin(0.5);
  std::vector<int> z(n);
  for (auto& s : z) s = coin(rng) ? 1 : -1;
  return z;
}

}  // namespace sqmean
