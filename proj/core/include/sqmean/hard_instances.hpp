#pragma once

#include <optional>
#include <variant>
#include <vector>

#include "sqmean/distribution.hpp"
#include "sqmean/norms.hpp"

namespace sqmean {

/// Full enumeration of 2^{n-1} sign patterns (n <= 20).
struct ExactSigns {};
/// Average over `samples` uniformly random sign patterns.
struct MonteCarloSigns {
  std::size_t samples = 10000;
  std::uint64_t seed = 0;
};
using SignMode = std::variant<ExactSigns, MonteCarloSigns>;

inline constexpr std::size_t kMaxExactSigns = 20;

struct T2Estimate {
  double value = 0.0;
  /// Standard error (delta method); zero in exact mode.
  double std_error = 0.0;
  /// E ||sum eps_i x_i||^2.
  double mean_square = 0.0;
};

/// (E ||sum eps_i x_i||_X^2)^{1/2} / (sum ||x_i||_X^2)^{1/2}.
T2Estimate t2_estimate(const Norm& norm, const std::vector<Vector>& vectors, const SignMode& mode);
double t2_hat(const Norm& norm, const std::vector<Vector>& vectors, const SignMode& mode);

/// Vectors x_1..x_n with 1 <= ||x_i||_X <= 2 and their measured type-2 ratio.
struct Type2Witness {
  std::vector<Vector> vectors;
  Norm norm;
  double t2 = 0.0;
  double l1X = 0.0;
  double l2X = 0.0;

  std::size_t size() const { return vectors.size(); }
};

/// Validates the norm bounds and computes t2 (exact for n <= 20 unless a
/// Monte-Carlo mode is requested) and the L_1(X), L_2(X) norms.
Type2Witness make_witness(const Norm& norm, std::vector<Vector> vectors,
                          std::optional<SignMode> mode = std::nullopt);

/// Standard basis of l_p^d, 1 <= p < 2.
Type2Witness basis_witness_lp(std::size_t d, double p, std::uint64_t seed = 0);

/// Best of `iterations` random n-vector candidates (norms uniform in [1,2])
/// by exact t2.
Type2Witness random_search_witness(const Norm& norm, std::size_t n, std::size_t iterations,
                                   std::uint64_t seed);

/// Uniform on {+-x_hat_i} with Pr[+-x_hat_i] = ||x_i|| / (2 ||x||_{L_1(X)}).
Distribution build_reference(const Type2Witness& w);

/// Largest admissible eps0, t2 * l2X / l1X.
double max_perturbation(const Type2Witness& w);

/// D_z: the reference weights tilted by z_i eps0 l1X / (2 t2 l2X).
Distribution build_perturbed(const Type2Witness& w, const std::vector<int>& z, double eps0);

/// eps0 / (t2 ||x||_{L_2(X)}) * sum z_i x_i.
Vector analytic_mean_perturbed(const Type2Witness& w, const std::vector<int>& z, double eps0);

struct SchattenInstanceParams {
  std::size_t d = 2;
  double p = 2.0;
  double eps0 = 0.0;
  double gamma0 = 0.1;
  std::optional<std::vector<int>> a;
  std::optional<std::vector<int>> b;

  /// d^{1/p}, 1 for p = inf.
  double root() const;
  /// Pr[z_i = a_i b_{pi(i)}] = (1 + eps0 d^{1/p}) / 2.
  double bias() const;
  /// Throws std::invalid_argument unless eps0 <= gamma0 d^{-1/p} and the
  /// sign vectors (when present) have length d with entries +-1.
  void validate() const;
};

/// Largest side for which full (pi, z) enumeration is offered.
inline constexpr std::size_t kMaxSchattenEnumeration = 6;

/// y(pi, z) with entries z_i / d^{1/p} at (i, pi(i)), row-major.
Vector schatten_matrix(const std::vector<std::size_t>& pi, const std::vector<int>& z, double p);

/// Sampler over uniformly random pi and z; exact mean 0.
Distribution schatten_reference(const SchattenInstanceParams& params);

/// Sampler with Pr[z_i = a_i b_{pi(i)}] = bias(); exact mean (eps0/d) a b^T.
Distribution schatten_perturbed(const SchattenInstanceParams& params);

/// (eps0 / d) a b^T as a matrix.
Matrix schatten_analytic_mean(const SchattenInstanceParams& params);

std::vector<int> random_signs(std::size_t n, Rng& rng);

}  // namespace sqmean
