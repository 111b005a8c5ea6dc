#include "sqmean/norms.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <random>

#include "sqmean/linalg.hpp"

namespace sqmean {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_p(double p, const char* what) {
  if (!(p >= 1.0)) throw std::invalid_argument(std::string(what) + ": p must be >= 1");
}

double lp_value(const Vector& v, double p) {
  if (v.size() == 0) return 0.0;
  if (std::isinf(p)) return v.cwiseAbs().maxCoeff();
  if (p == 1.0) return v.cwiseAbs().sum();
  if (p == 2.0) return v.norm();
  const double scale = v.cwiseAbs().maxCoeff();
  if (scale == 0.0) return 0.0;
  double acc = 0.0;
  for (double x : v) acc += std::pow(std::abs(x) / scale, p);
  return scale * std::pow(acc, 1.0 / p);
}

double top_k_value(const Vector& v, std::size_t k) {
  std::vector<double> a(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) a[i] = std::abs(v(i));
  k = std::min(k, a.size());
  std::nth_element(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(k) - (k > 0 ? 1 : 0), a.end(),
                   std::greater<>());
  double sum = 0.0;
  for (std::size_t i = 0; i < k; ++i) sum += a[i];
  return sum;
}

struct Registry {
  std::mutex mutex;
  std::map<std::string, GaugeFactory> factories;
};

Registry& registry() {
  static Registry* r = [] {
    auto* reg = new Registry;
    reg->factories["linf-l2-max"] = [](std::size_t) {
      return GaugeFn([](const Vector& x) { return std::max(x.cwiseAbs().maxCoeff(), 0.5 * x.norm()); });
    };
    reg->factories["l1-linf-sum"] = [](std::size_t) {
      return GaugeFn([](const Vector& x) { return x.cwiseAbs().sum() + x.cwiseAbs().maxCoeff(); });
    };
    reg->factories["topk-half"] = [](std::size_t dim) {
      const std::size_t k = (dim + 1) / 2;
      return GaugeFn([k](const Vector& x) { return top_k_value(x, k); });
    };
    // Not symmetric: the first coordinate is singled out.
    reg->factories["asym-first"] = [](std::size_t) {
      return GaugeFn([](const Vector& x) { return x(0) + x.norm(); });
    };
    return reg;
  }();
  return *r;
}

double parse_real(std::string_view s, const char* what) {
  if (s == "inf" || s == "infinity" || s == "Inf") return kInf;
  double value = 0.0;
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw std::invalid_argument(std::string("parse_norm: bad ") + what + " '" + std::string(s) + "'");
  }
  return value;
}

std::size_t parse_count(std::string_view s, const char* what) {
  std::size_t value = 0;
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, value);
  if (ec != std::errc() || ptr != end || value == 0) {
    throw std::invalid_argument(std::string("parse_norm: bad ") + what + " '" + std::string(s) + "'");
  }
  return value;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    parts.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

std::string p_label(double p) {
  if (std::isinf(p)) return "inf";
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), p);
  return std::string(buf, ptr);
}

}  // namespace

Norm Norm::lp(std::size_t dim, double p) {
  if (dim == 0) throw std::invalid_argument("Norm::lp: dimension must be positive");
  require_p(p, "Norm::lp");
  Norm n;
  n.kind_ = NormKind::Lp;
  n.dim_ = dim;
  n.p_ = p;
  n.name_ = std::isinf(p) ? "linf" : "lp:" + p_label(p);
  return n;
}

Norm Norm::linf(std::size_t dim) { return lp(dim, kInf); }

Norm Norm::schatten(std::size_t side, double p) {
  if (side == 0) throw std::invalid_argument("Norm::schatten: side must be positive");
  require_p(p, "Norm::schatten");
  Norm n;
  n.kind_ = NormKind::SchattenP;
  n.dim_ = side * side;
  n.side_ = side;
  n.p_ = p;
  n.name_ = "schatten:" + p_label(p) + ":" + std::to_string(side);
  return n;
}

Norm Norm::top_k(std::size_t dim, std::size_t k) {
  if (k == 0) throw std::invalid_argument("Norm::top_k: k must be positive");
  Norm n = gauge(dim, "topk:" + std::to_string(k), [k](const Vector& x) { return top_k_value(x, k); });
  n.trusted_ = true;
  return n;
}

Norm Norm::gauge(std::size_t dim, std::string name, GaugeFn raw) {
  if (dim == 0) throw std::invalid_argument("Norm::gauge: dimension must be positive");
  if (!raw) throw std::invalid_argument("Norm::gauge: empty gauge");
  Norm n;
  n.kind_ = NormKind::SymmetricGauge;
  n.dim_ = dim;
  n.name_ = std::move(name);
  n.trusted_ = false;
  n.gauge_ = std::make_shared<const GaugeFn>(std::move(raw));
  const double e1 = (*n.gauge_)(Vector::Unit(static_cast<Eigen::Index>(dim), 0));
  if (!(e1 > 0.0) || !std::isfinite(e1)) {
    throw std::invalid_argument("Norm::gauge: gauge of e_1 must be positive and finite");
  }
  n.e1_scale_ = 1.0 / e1;
  return n;
}

double Norm::operator()(const Vector& v) const {
  if (static_cast<std::size_t>(v.size()) != dim_) {
    throw std::invalid_argument("eval_norm: dimension mismatch (" + std::to_string(v.size()) + " vs " +
                                std::to_string(dim_) + ")");
  }
  if (!v.allFinite()) throw std::invalid_argument("eval_norm: non-finite entry");
  switch (kind_) {
    case NormKind::Lp:
      return lp_value(v, p_);
    case NormKind::SymmetricGauge:
      return e1_scale_ * (*gauge_)(v);
    case NormKind::SchattenP:
      return lp_value(singular_values(to_matrix(v, side_)), p_);
  }
  return 0.0;
}

Norm Norm::certified(const ValidationReport& report) const {
  if (!report.passed) throw ValidationError("norm '" + name_ + "' failed symmetric validation");
  if (report.norm_name != name_ || report.dim != dim_) {
    throw ValidationError("validation report was produced for a different norm");
  }
  Norm n = *this;
  n.trusted_ = true;
  return n;
}

double eval_norm(const Norm& norm, const Vector& v) { return norm(v); }

double flat_norm(const Norm& norm, double t, std::size_t k) {
  Vector v = Vector::Zero(static_cast<Eigen::Index>(norm.dim()));
  v.head(static_cast<Eigen::Index>(k)).setConstant(t);
  return norm(v);
}

std::size_t ell_X(const Norm& norm, double t) {
  if (!(t > 0.0 && t <= 1.0)) throw std::invalid_argument("ell_X: t must lie in (0, 1]");
  if (!norm.is_symmetric_kind()) throw std::invalid_argument("ell_X: norm is not a symmetric kind");
  constexpr double kAccept = 1.0 + 1e-12;
  // The flat norm is nondecreasing in k, so the accepted k form a prefix.
  std::size_t lo = 0;
  std::size_t hi = norm.dim();
  if (flat_norm(norm, t, hi) <= kAccept) return hi;
  while (hi - lo > 1) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (flat_norm(norm, t, mid) <= kAccept) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo;
}

double m_X(const Norm& norm, double t) {
  return t * std::sqrt(static_cast<double>(ell_X(norm, t)));
}

LevelProfile level_profile(const Norm& norm, double t) {
  LevelProfile profile;
  profile.t = t;
  profile.ell = ell_X(norm, t);
  profile.m = t * std::sqrt(static_cast<double>(profile.ell));
  return profile;
}

std::vector<std::string> ValidationReport::failures() const {
  std::vector<std::string> out;
  if (!(zero <= kTolerance)) out.emplace_back("zero");
  if (!(permutation <= kTolerance)) out.emplace_back("permutation");
  if (!(sign <= kTolerance)) out.emplace_back("sign");
  if (!(homogeneity <= kTolerance)) out.emplace_back("homogeneity");
  if (!(triangle <= kTolerance)) out.emplace_back("triangle");
  return out;
}

ValidationReport validate_symmetric(const Norm& norm, std::size_t trials, std::uint64_t seed) {
  ValidationReport report;
  report.norm_name = norm.name();
  report.dim = norm.dim();
  report.trials = trials;

  const auto d = static_cast<Eigen::Index>(norm.dim());
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::bernoulli_distribution coin(0.5);

  auto safe_eval = [&](const Vector& v) {
    const double value = norm(v);
    return std::isfinite(value) ? value : kInf;
  };
  auto rel = [](double diff, double scale) {
    return std::abs(diff) / std::max(scale, std::numeric_limits<double>::min());
  };
  auto probe = [&] {
    Vector v(d);
    const double magnitude = std::exp(4.0 * (unit(rng) - 0.5));
    for (Eigen::Index i = 0; i < d; ++i) v(i) = gauss(rng) * magnitude;
    // Sparse probes hit the symmetric-norm corners (few large coordinates).
    if (coin(rng)) {
      for (Eigen::Index i = 0; i < d; ++i) {
        if (unit(rng) < 0.7) v(i) = 0.0;
      }
    }
    return v;
  };

  report.zero = std::abs(safe_eval(Vector::Zero(d)));

  std::vector<Eigen::Index> perm(d);
  for (std::size_t trial = 0; trial < trials; ++trial) {
    const Vector x = probe();
    const Vector y = probe();
    const double fx = safe_eval(x);
    const double fy = safe_eval(y);

    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Vector px(d);
    for (Eigen::Index i = 0; i < d; ++i) px(i) = x(perm[i]);
    report.permutation = std::max(report.permutation, rel(safe_eval(px) - fx, fx));

    Vector sx = x;
    for (Eigen::Index i = 0; i < d; ++i) {
      if (coin(rng)) sx(i) = -sx(i);
    }
    report.sign = std::max(report.sign, rel(safe_eval(sx) - fx, fx));

    const double alpha = gauss(rng) * std::exp(2.0 * (unit(rng) - 0.5));
    const Vector ax = alpha * x;
    report.homogeneity =
        std::max(report.homogeneity, rel(safe_eval(ax) - std::abs(alpha) * fx, std::abs(alpha) * fx));

    const double excess = safe_eval(x + y) - fx - fy;
    report.triangle = std::max(report.triangle, excess > 0.0 ? rel(excess, fx + fy) : 0.0);
  }

  report.passed = report.failures().empty();
  return report;
}

void register_gauge(std::string name, GaugeFactory factory) {
  auto& reg = registry();
  std::lock_guard lock(reg.mutex);
  reg.factories[std::move(name)] = std::move(factory);
}

std::vector<std::string> registered_gauges() {
  auto& reg = registry();
  std::lock_guard lock(reg.mutex);
  std::vector<std::string> names;
  for (const auto& [name, factory] : reg.factories) names.push_back(name);
  return names;
}

Norm parse_norm(std::string_view spec, std::optional<std::size_t> dim) {
  const auto parts = split(spec, ':');
  const std::string_view head = parts.front();
  auto need_dim = [&]() -> std::size_t {
    if (!dim || *dim == 0) throw std::invalid_argument("parse_norm: '" + std::string(spec) + "' needs a dimension");
    return *dim;
  };

  if (head == "linf" && parts.size() == 1) return Norm::linf(need_dim());
  if (head == "lp" && parts.size() == 2) return Norm::lp(need_dim(), parse_real(parts[1], "p"));
  if (head == "topk" && parts.size() == 2) return Norm::top_k(need_dim(), parse_count(parts[1], "k"));
  if (head == "schatten" && parts.size() == 3) {
    const double p = parse_real(parts[1], "p");
    const std::size_t side = parse_count(parts[2], "side");
    if (dim && *dim != 0 && *dim != side * side) {
      throw std::invalid_argument("parse_norm: schatten side^2 does not match dimension " + std::to_string(*dim));
    }
    return Norm::schatten(side, p);
  }
  if (head == "gauge" && parts.size() == 2) {
    const std::string name(parts[1]);
    GaugeFactory factory;
    {
      auto& reg = registry();
      std::lock_guard lock(reg.mutex);
      const auto it = reg.factories.find(name);
      if (it == reg.factories.end()) throw std::invalid_argument("parse_norm: unknown gauge '" + name + "'");
      factory = it->second;
    }
    const std::size_t d = need_dim();
    return Norm::gauge(d, "gauge:" + name, factory(d));
  }
  throw std::invalid_argument("parse_norm: unrecognized norm spec '" + std::string(spec) + "'");
}

}  // namespace sqmean
