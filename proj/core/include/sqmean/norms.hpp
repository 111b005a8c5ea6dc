#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sqmean/common.hpp"

namespace sqmean {

enum class NormKind { Lp, SymmetricGauge, SchattenP };

/// Raw gauge on R^d. It is rescaled on construction so that the resulting
/// norm satisfies ||e_1|| = 1.
using GaugeFn = std::function<double(const Vector&)>;

struct ValidationReport;

/// An evaluatable norm on R^d: l_p, a symmetric gauge, or Schatten-p on
/// d x d matrices stored row-major as d^2-vectors. Immutable; copies share
/// the gauge callable.
class Norm {
 public:
  /// p = +infinity gives the max norm.
  static Norm lp(std::size_t dim, double p);
  static Norm linf(std::size_t dim);
  /// Schatten-p on side x side matrices; dim() is side^2.
  static Norm schatten(std::size_t side, double p);
  /// Sum of the k largest absolute coordinates. Built in, hence trusted.
  static Norm top_k(std::size_t dim, std::size_t k);
  /// User gauge. Untrusted until certified by a passing validation report.
  static Norm gauge(std::size_t dim, std::string name, GaugeFn raw);

  double operator()(const Vector& v) const;

  NormKind kind() const { return kind_; }
  std::size_t dim() const { return dim_; }
  double p() const { return p_; }
  std::size_t side() const { return side_; }
  double e1_scale() const { return e1_scale_; }
  const std::string& name() const { return name_; }

  /// Lp and gauges are permutation/sign invariant by contract; Schatten is not.
  bool is_symmetric_kind() const { return kind_ != NormKind::SchattenP; }
  bool trusted() const { return trusted_; }

  /// Copy marked trusted. Throws ValidationError unless the report passed
  /// and was produced for a norm with the same name and dimension.
  Norm certified(const ValidationReport& report) const;

 private:
  Norm() = default;

  NormKind kind_ = NormKind::Lp;
  std::size_t dim_ = 0;
  double p_ = 2.0;
  std::size_t side_ = 0;
  double e1_scale_ = 1.0;
  std::string name_;
  bool trusted_ = true;
  std::shared_ptr<const GaugeFn> gauge_;
};

/// ||v||_X including the normalization factor. Throws std::invalid_argument
/// on dimension mismatch or non-finite entries.
double eval_norm(const Norm& norm, const Vector& v);

/// Norm of the vector with k leading coordinates equal to t.
double flat_norm(const Norm& norm, double t, std::size_t k);

/// Largest k such that the k-fold flat vector of value t lies in the unit
/// ball (accepting evaluations up to 1 + 1e-12).
std::size_t ell_X(const Norm& norm, double t);

/// t * sqrt(ell_X(t)).
double m_X(const Norm& norm, double t);

struct LevelProfile {
  double t = 1.0;
  std::size_t ell = 0;
  double m = 0.0;
};

LevelProfile level_profile(const Norm& norm, double t);

/// Worst relative violations of the symmetric-norm axioms over random probes.
struct ValidationReport {
  std::string norm_name;
  std::size_t dim = 0;
  std::size_t trials = 0;
  double permutation = 0.0;
  double sign = 0.0;
  double homogeneity = 0.0;
  double triangle = 0.0;
  double zero = 0.0;
  bool passed = false;

  static constexpr double kTolerance = 1e-8;

  /// Names of the violated invariants, empty when passed.
  std::vector<std::string> failures() const;
};

ValidationReport validate_symmetric(const Norm& norm, std::size_t trials, std::uint64_t seed);

/// Factory for a registered gauge of a given dimension.
using GaugeFactory = std::function<GaugeFn(std::size_t dim)>;

void register_gauge(std::string name, GaugeFactory factory);
std::vector<std::string> registered_gauges();

/// Parses `lp:<p>`, `linf`, `schatten:<p>:<d>`, `topk:<k>`, `gauge:<name>`.
/// `dim` is required for everything but Schatten, where it is optional and
/// must equal d^2 when given. p accepts `inf`.
Norm parse_norm(std::string_view spec, std::optional<std::size_t> dim);

}  // namespace sqmean
