#include "experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <numeric>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace sqmean::experiment {
namespace {

using nlohmann::json;

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_real(const std::string& s, const std::string& what) {
  if (s == "inf") return std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) {
    throw ConfigError(what + ": '" + s + "' is not a number");
  }
  return v;
}

std::size_t parse_count(const std::string& s, const std::string& what) {
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) {
    throw ConfigError(what + ": '" + s + "' is not a nonnegative integer");
  }
  return v;
}

std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string cell_text(const Cell& c) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::int64_t>) {
          return std::to_string(v);
        } else if constexpr (std::is_same_v<T, double>) {
          return format_real(v);
        } else if constexpr (std::is_same_v<T, bool>) {
          return v ? "true" : "false";
        } else {
          if (v.find_first_of(",\"\n") == std::string::npos) return v;
          std::string q = "\"";
          for (char ch : v) {
            if (ch == '"') q += '"';
            q += ch;
          }
          return q + "\"";
        }
      },
      c);
}

json cell_json(const Cell& c) {
  return std::visit(
      [](const auto& v) -> json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, double>) {
          if (!std::isfinite(v)) return nullptr;
        }
        return v;
      },
      c);
}

json parse_descriptor_json(const std::string& body, const std::string& kind) {
  try {
    auto j = json::parse(body);
    if (!j.is_object()) throw ConfigError(kind + " descriptor must be a JSON object");
    return j;
  } catch (const json::exception& e) {
    throw ConfigError(kind + " descriptor: " + e.what());
  }
}

std::vector<int> sign_vector(const json& j, std::size_t n, const std::string& what) {
  if (!j.is_array() || j.size() != n) throw ConfigError(what + " must be an array of " + std::to_string(n) + " signs");
  std::vector<int> out;
  for (const auto& e : j) {
    if (!e.is_number_integer() || (e.get<int>() != 1 && e.get<int>() != -1)) {
      throw ConfigError(what + " entries must be +1 or -1");
    }
    out.push_back(e.get<int>());
  }
  return out;
}

double json_real(const json& j, const std::string& what) {
  if (j.is_string()) return parse_real(j.get<std::string>(), what);
  if (!j.is_number()) throw ConfigError(what + " must be a number");
  return j.get<double>();
}

Distribution random_explicit(const Norm* ball, std::size_t d, std::size_t n, Rng& rng) {
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::exponential_distribution<double> expo(1.0);
  std::vector<Vector> support;
  std::vector<double> weights;
  for (std::size_t i = 0; i < n; ++i) {
    Vector x(static_cast<Eigen::Index>(d));
    for (auto& e : x) e = gauss(rng);
    // Half of the points are sparse so that low rings get populated.
    if (unit(rng) < 0.5) {
      const auto keep = 1 + static_cast<std::size_t>(unit(rng) * static_cast<double>(d)) % d;
      for (std::size_t k = keep; k < d; ++k) x(static_cast<Eigen::Index>(k)) = 0.0;
    }
    const double len = ball ? (*ball)(x) : x.norm();
    if (len > 0.0) x *= (1.0 - unit(rng)) / len;
    support.push_back(std::move(x));
    weights.push_back(expo(rng) + 1e-3);
  }
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  for (auto& w : weights) w /= total;
  return Distribution::from_points(std::move(support), std::move(weights));
}

Type2Witness witness_from(const json& w) {
  if (w.is_string()) {
    const auto s = w.get<std::string>();
    if (s.rfind("basis:", 0) == 0) {
      const auto parts = split(s, ':');
      if (parts.size() != 3) throw ConfigError("witness 'basis:<p>:<n>' expected, got '" + s + "'");
      const double p = parse_real(parts[1], "witness p");
      const auto n = parse_count(parts[2], "witness n");
      if (!(p >= 1.0 && p < 2.0) || n == 0) throw ConfigError("basis witness needs 1 <= p < 2 and n >= 1");
      return basis_witness_lp(n, p);
    }
    if (!std::filesystem::exists(s)) throw ConfigError("witness file '" + s + "' not found");
    const auto file = load_witness(s);
    return make_witness(parse_norm(file.norm, file.vectors.front().size()), file.vectors);
  }
  if (w.is_object()) {
    std::istringstream in(w.dump());
    const auto file = read_witness_json(in);
    return make_witness(parse_norm(file.norm, file.vectors.front().size()), file.vectors);
  }
  throw ConfigError("type2 'witness' must be 'basis:<p>:<n>', a file path or an inline object");
}

std::string witness_norm_spec(const Type2Witness& w) {
  const auto& n = w.norm;
  if (n.kind() == NormKind::Lp) return std::isinf(n.p()) ? "linf" : "lp:" + format_real(n.p());
  return n.name();
}

enum class Estimator { Linf, L2, Symmetric, Schatten };

std::string estimator_name(Estimator e) {
  switch (e) {
    case Estimator::Linf:
      return "linf";
    case Estimator::L2:
      return "l2";
    case Estimator::Symmetric:
      return "symmetric";
    case Estimator::Schatten:
      return "schatten";
  }
  return "?";
}

Estimator choose_estimator(const std::string& requested, const Norm& norm) {
  if (requested == "auto") {
    if (norm.kind() == NormKind::SchattenP) return choose_estimator("schatten", norm);
    if (norm.kind() == NormKind::Lp && std::isinf(norm.p())) return Estimator::Linf;
    if (norm.kind() == NormKind::Lp && norm.p() == 2.0) return Estimator::L2;
    return Estimator::Symmetric;
  }
  if (requested == "linf") return Estimator::Linf;
  if (requested == "l2") return Estimator::L2;
  if (requested == "symmetric") {
    if (!norm.is_symmetric_kind()) throw ConfigError("symmetric estimator needs a symmetric norm");
    return Estimator::Symmetric;
  }
  if (requested == "schatten") {
    if (norm.kind() != NormKind::SchattenP) throw ConfigError("schatten estimator needs a schatten:<p>:<d> norm");
    if (!(norm.p() >= 2.0)) throw ConfigError("schatten estimator needs p >= 2");
    return Estimator::Schatten;
  }
  throw ConfigError("unknown estimator '" + requested + "' (auto, linf, l2, symmetric, schatten)");
}

double schatten_spread(const Norm& norm) {
  const double exponent = std::isinf(norm.p()) ? 0.5 : 0.5 - 1.0 / norm.p();
  return std::pow(static_cast<double>(norm.side()), exponent);
}

double auto_tolerance(Estimator e, const Norm& norm, double eps, double t2) {
  const std::size_t d = norm.dim();
  switch (e) {
    case Estimator::Linf:
      return eps;
    case Estimator::L2:
      return eps / l2_error_radius(d, 1.0);
    case Estimator::Symmetric:
      return symmetric_tolerance(d, eps, t2);
    case Estimator::Schatten:
      return eps / (10.0 * schatten_spread(norm));
  }
  return eps;
}

struct Outcome {
  Vector estimate;
  std::size_t queries = 0;
  std::size_t active_rings = 0;
  std::string ring_mask;
};

Outcome run_estimator(Estimator e, OracleSession& session, const Norm& norm, double eps, double t2,
                      std::uint64_t seed) {
  const std::size_t d = norm.dim();
  const double tau = session.tolerance();
  Outcome out;
  const std::size_t before = session.query_count();
  switch (e) {
    case Estimator::Linf:
      out.estimate = estimate_mean_linf(session, d, tau);
      break;
    case Estimator::L2:
      out.estimate = estimate_mean_l2(session, d, tau, seed);
      break;
    case Estimator::Schatten:
      out.estimate = flatten(estimate_mean_schatten(session, norm.side(), norm.p(), tau, seed));
      break;
    case Estimator::Symmetric: {
      const auto report = estimate_mean_symmetric(session, norm, d, eps, SymmetricOptions{t2, seed, false});
      out.estimate = report.estimate;
      out.active_rings = report.active_rings();
      for (const auto& r : report.per_ring) out.ring_mask += r.skipped ? '0' : '1';
      break;
    }
  }
  out.queries = session.query_count() - before;
  return out;
}

struct Setup {
  InstanceSpec instance;
  Norm norm;
  Estimator estimator;
  double t2 = 1.0;
};

Norm resolve_norm(const ExperimentConfig& config, const InstanceSpec& instance) {
  const std::string spec = config.norm.empty() ? instance.implied_norm : config.norm;
  if (spec.empty()) throw ConfigError("--norm is required for instance kind '" + instance.kind + "'");
  if (config.dim && *config.dim != instance.dim) {
    throw ConfigError("--dim " + std::to_string(*config.dim) + " does not match the instance dimension " +
                      std::to_string(instance.dim));
  }
  Norm norm = [&] {
    try {
      return parse_norm(spec, instance.dim);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }();
  if (norm.dim() != instance.dim) {
    throw ConfigError("norm '" + spec + "' has dimension " + std::to_string(norm.dim()) + ", instance has " +
                      std::to_string(instance.dim));
  }
  if (!norm.trusted()) norm = norm.certified(validate_symmetric(norm, 200, 0));
  return norm;
}

Setup make_setup(const ExperimentConfig& config) {
  auto instance = parse_instance(config.instance);
  Norm norm = resolve_norm(config, instance);
  const Estimator e = choose_estimator(config.estimator, norm);
  const double t2 = config.t2_bound.value_or(default_t2_bound(norm));
  return Setup{std::move(instance), norm, e, t2};
}

std::vector<std::pair<std::string, std::string>> base_meta(const ExperimentConfig& c) {
  return {{"command", c.command},
          {"norm", c.norm},
          {"instance", c.instance},
          {"oracle", c.oracle},
          {"estimator", c.estimator},
          {"eps", format_real(c.eps)},
          {"t2_bound", c.t2_bound ? format_real(*c.t2_bound) : "auto"},
          {"seed", std::to_string(c.seed)},
          {"reps", std::to_string(c.reps)}};
}

void run_reps(std::size_t jobs, std::size_t threads, const std::function<void(std::size_t)>& body) {
  std::vector<std::exception_ptr> errors(jobs);
  parallel_for(jobs, worker_count(threads, jobs), [&](std::size_t i) {
    try {
      body(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  });
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

void check_in_ball(const Distribution& dist, const Norm& ball) {
  for (const auto& x : dist.support()) {
    if (ball(x) > 1.0 + 1e-9) {
      throw ConfigError("instance support point has norm " + format_real(ball(x)) + " > 1 in " + ball.name());
    }
  }
}

}  // namespace

void ExperimentConfig::validate() const {
  if (!(eps > 0.0 && eps < 1.0)) throw ConfigError("--eps must lie in (0, 1)");
  if (reps == 0) throw ConfigError("--reps must be at least 1");
  if (trials == 0) throw ConfigError("--trials must be at least 1");
  if (t2_bound && !(*t2_bound > 0.0)) throw ConfigError("--t2-bound must be positive");
  if (budget && *budget == 0) throw ConfigError("--budget must be at least 1");
  for (double t : taus) {
    if (!(t > 0.0)) throw ConfigError("--taus entries must be positive");
  }
}

void write_csv(std::ostream& out, const Table& table) {
  for (const auto& [key, value] : table.meta) out << "# " << key << '=' << value << '\n';
  for (std::size_t i = 0; i < table.columns.size(); ++i) out << (i ? "," : "") << table.columns[i];
  out << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << cell_text(row[i]);
    out << '\n';
  }
}

void write_json(std::ostream& out, const Table& table) {
  json j;
  j["meta"] = json::object();
  for (const auto& [key, value] : table.meta) j["meta"][key] = value;
  j["rows"] = json::array();
  for (const auto& row : table.rows) {
    json r = json::object();
    for (std::size_t i = 0; i < row.size(); ++i) r[table.columns[i]] = cell_json(row[i]);
    j["rows"].push_back(std::move(r));
  }
  out << j.dump(2) << '\n';
}

Perturbation OracleSpec::perturbation(std::uint64_t seed) const {
  switch (mode) {
    case PerturbationKind::Honest:
      return HonestRandom{seed};
    case PerturbationKind::Adversarial:
      return AdversarialSign{sign, {}};
    case PerturbationKind::Empirical:
      return Empirical{samples, seed};
    case PerturbationKind::Exact:
      return ExactAnswers{};
  }
  return ExactAnswers{};
}

OracleKind OracleSpec::kind(double auto_tau) const {
  const double v = level.value_or(auto_tau);
  if (stat) return Stat{v};
  return Vstat{v};
}

OracleSpec parse_oracle(const std::string& spec) {
  const auto parts = split(spec, ':');
  if (parts.size() < 3) throw ConfigError("oracle spec '" + spec + "': expected <stat|vstat>:<level|auto>:<mode>");
  OracleSpec o;
  if (parts[0] == "stat") {
    o.stat = true;
  } else if (parts[0] == "vstat") {
    o.stat = false;
  } else {
    throw ConfigError("oracle kind must be stat or vstat, got '" + parts[0] + "'");
  }
  if (parts[1] != "auto") {
    o.level = parse_real(parts[1], "oracle level");
    if (!(*o.level > 0.0) || !std::isfinite(*o.level)) throw ConfigError("oracle level must be positive");
  }
  const std::string& mode = parts[2];
  const std::size_t extra = parts.size() - 3;
  if (mode == "honest" && extra == 0) {
    o.mode = PerturbationKind::Honest;
  } else if (mode == "exact" && extra == 0) {
    o.mode = PerturbationKind::Exact;
  } else if (mode == "adversarial" && extra <= 1) {
    o.mode = PerturbationKind::Adversarial;
    if (extra == 1) {
      o.sign = parse_real(parts[3], "adversarial sign");
      if (o.sign != 1.0 && o.sign != -1.0) throw ConfigError("adversarial sign must be 1 or -1");
    }
  } else if (mode == "empirical" && extra == 1) {
    o.mode = PerturbationKind::Empirical;
    o.samples = parse_count(parts[3], "empirical samples");
    if (o.samples == 0) throw ConfigError("empirical samples must be positive");
  } else {
    throw ConfigError("unknown oracle mode in '" + spec + "' (honest, adversarial[:-1], empirical:<n>, exact)");
  }
  return o;
}

InstanceSpec parse_instance(const std::string& descriptor) {
  if (descriptor.empty()) throw ConfigError("--instance is required");
  InstanceSpec spec;
  const auto colon = descriptor.find(':');
  const std::string head = colon == std::string::npos ? "" : descriptor.substr(0, colon);

  if (head == "type2") {
    const json j = parse_descriptor_json(descriptor.substr(colon + 1), "type2");
    if (!j.contains("witness")) throw ConfigError("type2 descriptor needs 'witness'");
    if (!j.contains("eps0")) throw ConfigError("type2 descriptor needs 'eps0'");
    const Type2Witness w = [&] {
      try {
        return witness_from(j.at("witness"));
      } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("type2 witness: ") + e.what());
      }
    }();
    const double eps0 = json_real(j.at("eps0"), "eps0");
    if (!(eps0 >= 0.0) || eps0 > max_perturbation(w) * (1.0 + 1e-12)) {
      throw ConfigError("type2 eps0 must lie in [0, " + format_real(max_perturbation(w)) + "]");
    }
    std::optional<std::vector<int>> z;
    if (j.contains("z")) z = sign_vector(j.at("z"), w.size(), "type2 'z'");
    spec.kind = "type2";
    spec.dim = w.norm.dim();
    spec.implied_norm = witness_norm_spec(w);
    spec.eps0 = eps0;
    spec.draw = [w, z, eps0](std::uint64_t seed, const Norm*) {
      Rng rng(seed);
      const auto signs = z ? *z : random_signs(w.size(), rng);
      return InstanceDraw{build_perturbed(w, signs, eps0), analytic_mean_perturbed(w, signs, eps0)};
    };
    return spec;
  }

  if (head == "schatten") {
    const json j = parse_descriptor_json(descriptor.substr(colon + 1), "schatten");
    SchattenInstanceParams params;
    try {
      params.d = j.at("d").get<std::size_t>();
      params.p = json_real(j.at("p"), "p");
      params.eps0 = json_real(j.at("eps0"), "eps0");
      if (j.contains("gamma0")) params.gamma0 = json_real(j.at("gamma0"), "gamma0");
    } catch (const json::exception& e) {
      throw ConfigError(std::string("schatten descriptor needs d, p, eps0: ") + e.what());
    }
    if (params.d == 0) throw ConfigError("schatten d must be positive");
    if (j.contains("a")) params.a = sign_vector(j.at("a"), params.d, "schatten 'a'");
    if (j.contains("b")) params.b = sign_vector(j.at("b"), params.d, "schatten 'b'");
    SchattenInstanceParams probe = params;
    if (!probe.a) probe.a = std::vector<int>(params.d, 1);
    if (!probe.b) probe.b = std::vector<int>(params.d, 1);
    try {
      probe.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("schatten descriptor: ") + e.what());
    }
    spec.kind = "schatten";
    spec.dim = params.d * params.d;
    spec.implied_norm =
        "schatten:" + (std::isinf(params.p) ? std::string("inf") : format_real(params.p)) + ":" + std::to_string(params.d);
    spec.eps0 = params.eps0;
    spec.draw = [params](std::uint64_t seed, const Norm*) {
      Rng rng(seed);
      SchattenInstanceParams p = params;
      if (!p.a) p.a = random_signs(p.d, rng);
      if (!p.b) p.b = random_signs(p.d, rng);
      return InstanceDraw{schatten_perturbed(p), flatten(schatten_analytic_mean(p))};
    };
    return spec;
  }

  if (head == "random") {
    const json j = parse_descriptor_json(descriptor.substr(colon + 1), "random");
    std::size_t d = 0;
    std::size_t n = 0;
    try {
      d = j.at("d").get<std::size_t>();
      n = j.contains("n") ? j.at("n").get<std::size_t>() : 16;
    } catch (const json::exception& e) {
      throw ConfigError(std::string("random descriptor needs d: ") + e.what());
    }
    if (d == 0 || n == 0) throw ConfigError("random descriptor needs d >= 1 and n >= 1");
    spec.kind = "random";
    spec.dim = d;
    spec.draw = [d, n](std::uint64_t seed, const Norm* ball) {
      Rng rng(seed);
      Distribution dist = random_explicit(ball, d, n, rng);
      Vector mean = dist.exact_mean();
      return InstanceDraw{std::move(dist), std::move(mean)};
    };
    return spec;
  }

  const std::string path = head == "file" ? descriptor.substr(colon + 1) : descriptor;
  if (!std::filesystem::exists(path)) throw ConfigError("instance file '" + path + "' not found");
  Distribution dist = [&] {
    try {
      return load_distribution(path);
    } catch (const std::exception& e) {
      throw ConfigError(e.what());
    }
  }();
  spec.kind = "file";
  spec.dim = dist.dim();
  spec.draw = [dist](std::uint64_t, const Norm* ball) {
    if (ball) check_in_ball(dist, *ball);
    return InstanceDraw{dist, dist.exact_mean()};
  };
  return spec;
}

double default_t2_bound(const Norm& norm) {
  const auto d = static_cast<double>(norm.dim());
  if (norm.kind() == NormKind::Lp) {
    const double p = norm.p();
    if (std::isinf(p)) return std::sqrt(6.0 * log2_dim(norm.dim()));
    if (p < 2.0) return std::pow(d, 1.0 / p - 0.5);
    return std::min(std::sqrt(p - 1.0), std::sqrt(6.0 * log2_dim(norm.dim())));
  }
  if (norm.kind() == NormKind::SchattenP) {
    const double p = norm.p();
    if (std::isinf(p) || p > 2.0 * std::log(d)) return std::sqrt(6.0 * log2_dim(norm.dim()));
    return p >= 2.0 ? std::sqrt(p - 1.0) : std::pow(static_cast<double>(norm.side()), 1.0 / p - 0.5);
  }
  return std::sqrt(6.0 * log2_dim(norm.dim()));
}

std::size_t worker_count(std::size_t requested, std::size_t jobs) {
  std::size_t n = requested ? requested : std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("SQ_MEANEST_THREADS"); env && *env) {
    const auto cap = parse_count(env, "SQ_MEANEST_THREADS");
    if (cap == 0) throw ConfigError("SQ_MEANEST_THREADS must be at least 1");
    n = std::min(n, cap);
  }
  return std::max<std::size_t>(1, std::min(n, jobs));
}

void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& f) {
  if (workers <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) f(i);
    });
  }
  for (auto& t : pool) t.join();
}

Table run_estimate(const ExperimentConfig& config) {
  config.validate();
  const Setup s = make_setup(config);
  const OracleSpec oracle = parse_oracle(config.oracle);
  if (!oracle.stat) throw ConfigError("the estimators need a stat oracle");
  const double tau = oracle.level.value_or(auto_tolerance(s.estimator, s.norm, config.eps, s.t2));

  Table table;
  table.meta = base_meta(config);
  table.meta.emplace_back("resolved_norm", s.norm.name());
  table.meta.emplace_back("resolved_estimator", estimator_name(s.estimator));
  table.meta.emplace_back("tau", format_real(tau));
  table.meta.emplace_back("t2_used", format_real(s.t2));
  table.columns = {"rep",     "seed",         "estimator", "tau",      "queries_used", "active_rings",
                   "ring_mask", "error_X", "error_l2", "error_linf", "within_eps"};
  table.rows.resize(config.reps);

  run_reps(config.reps, config.threads, [&](std::size_t rep) {
    const std::uint64_t seed = mix_seed(config.seed, rep);
    const InstanceDraw draw = s.instance.draw(mix_seed(seed, 1), &s.norm);
    OracleSession session(draw.dist, oracle.kind(tau), oracle.perturbation(mix_seed(seed, 2)),
                          SessionOptions{config.budget, false});
    const Outcome out = run_estimator(s.estimator, session, s.norm, config.eps, s.t2, mix_seed(seed, 3));
    const double nan = std::numeric_limits<double>::quiet_NaN();
    double ex = nan, e2 = nan, einf = nan;
    if (draw.truth) {
      const Vector diff = out.estimate - *draw.truth;
      ex = s.norm(diff);
      e2 = diff.norm();
      einf = diff.cwiseAbs().maxCoeff();
    }
    table.rows[rep] = {static_cast<std::int64_t>(rep),
                       std::to_string(seed),
                       estimator_name(s.estimator),
                       tau,
                       static_cast<std::int64_t>(out.queries),
                       static_cast<std::int64_t>(out.active_rings),
                       out.ring_mask,
                       ex,
                       e2,
                       einf,
                       draw.truth ? Cell(ex <= config.eps) : Cell(std::string("unknown"))};
  });
  return table;
}

Table run_hardness(const ExperimentConfig& config) {
  config.validate();
  const Setup s = make_setup(config);
  if (s.instance.kind != "type2" && s.instance.kind != "schatten") {
    throw ConfigError("hardness needs a type2:{...} or schatten:{...} instance");
  }
  const OracleSpec oracle = parse_oracle(config.oracle);
  if (!oracle.stat) throw ConfigError("the estimators need a stat oracle");
  const double eps0 = *s.instance.eps0;

  std::vector<double> taus = config.taus;
  if (taus.empty()) {
    const double top = eps0 > 0.0 ? eps0 : config.eps;
    for (int k = 0; k <= 8; ++k) taus.push_back(std::ldexp(top, -k));
  }

  Table table;
  table.meta = base_meta(config);
  table.meta.emplace_back("resolved_norm", s.norm.name());
  table.meta.emplace_back("resolved_estimator", estimator_name(s.estimator));
  table.meta.emplace_back("eps0", format_real(eps0));
  table.meta.emplace_back("success_radius", format_real(eps0 / 2.0));
  table.columns = {"tau", "reps", "successes", "success_rate", "mean_error_X", "max_error_X", "degenerate"};

  if (eps0 == 0.0) {
    table.meta.emplace_back("degenerate", "true");
    table.messages.push_back("warning: eps0 = 0 makes every family member equal to the reference; success is undefined");
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (double tau : taus) {
      table.rows.push_back({tau, static_cast<std::int64_t>(config.reps), static_cast<std::int64_t>(0), nan, nan, nan,
                            true});
    }
    return table;
  }

  // Ring cutoff of the symmetric estimator; the others only need tau.
  const double ring_eps = std::min(eps0, 0.5);
  const std::size_t jobs = taus.size() * config.reps;
  std::vector<double> errors(jobs);
  run_reps(jobs, config.threads, [&](std::size_t job) {
    const std::size_t ti = job / config.reps;
    const std::size_t rep = job % config.reps;
    // The instance and the oracle noise are shared across the sweep.
    const std::uint64_t seed = mix_seed(config.seed, rep);
    const InstanceDraw draw = s.instance.draw(mix_seed(seed, 1), &s.norm);
    OracleSession session(draw.dist, Stat{taus[ti]}, oracle.perturbation(mix_seed(seed, 2)),
                          SessionOptions{config.budget, false});
    try {
      const Outcome out = run_estimator(s.estimator, session, s.norm, ring_eps, s.t2, mix_seed(seed, 3));
      errors[job] = s.norm(out.estimate - *draw.truth);
    } catch (const OracleContractViolation&) {
      errors[job] = std::numeric_limits<double>::infinity();
    }
  });

  for (std::size_t ti = 0; ti < taus.size(); ++ti) {
    std::size_t wins = 0;
    double sum = 0.0;
    double worst = 0.0;
    for (std::size_t rep = 0; rep < config.reps; ++rep) {
      const double e = errors[ti * config.reps + rep];
      if (e <= eps0 / 2.0) ++wins;
      sum += e;
      worst = std::max(worst, e);
    }
    table.rows.push_back({taus[ti], static_cast<std::int64_t>(config.reps), static_cast<std::int64_t>(wins),
                          static_cast<double>(wins) / static_cast<double>(config.reps),
                          sum / static_cast<double>(config.reps), worst, false});
  }
  return table;
}

Table run_verify(const ExperimentConfig& config) {
  config.validate();
  const std::size_t d = config.dim.value_or(64);
  std::vector<std::string> specs;
  if (config.norm.empty()) {
    specs = {"lp:2", "lp:4", "linf", "topk:4"};
  } else {
    specs = {config.norm};
  }

  Table table;
  table.meta = base_meta(config);
  table.meta.emplace_back("dim", std::to_string(d));
  table.meta.emplace_back("trials", std::to_string(config.trials));
  table.columns = {"norm", "check", "param", "value", "bound", "passed"};
  auto record = [&](const std::string& norm, const std::string& check, const std::string& param, double value,
                    double bound, bool passed, const std::string& detail = {}) {
    table.rows.push_back({norm, check, param, value, bound, passed});
    if (!passed) {
      table.exit_code = 1;
      table.messages.push_back("invariant failed: " + norm + " " + check + (param.empty() ? "" : "[" + param + "]") +
                               (detail.empty() ? "" : ": " + detail));
    }
  };

  for (const auto& spec : specs) {
    const Norm norm = [&] {
      try {
        return parse_norm(spec, d);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
      }
    }();
    if (!norm.is_symmetric_kind()) throw ConfigError("verify checks symmetric norms; '" + spec + "' is not one");
    const double t2 = config.t2_bound.value_or(default_t2_bound(norm));
    const std::uint64_t seed = mix_seed(config.seed, std::hash<std::string>{}(spec));

    const auto v = validate_symmetric(norm, config.trials, seed);
    const double worst = std::max({v.permutation, v.sign, v.homogeneity, v.triangle, v.zero});
    std::string names;
    for (const auto& f : v.failures()) names += (names.empty() ? "" : ", ") + f;
    record(spec, "symmetric_axioms", "", worst, ValidationReport::kTolerance, v.passed, names);
    if (!v.passed) continue;

    Rng rng(mix_seed(seed, 1));
    for (double t : {1.0, 0.25, 1.0 / 16.0}) {
      double ratio = 0.0;
      bool ok = true;
      for (std::size_t i = 0; i < config.trials; ++i) {
        const auto c = check_interpolation(norm, t, t2, sample_conforming(norm, t, rng));
        ratio = std::max(ratio, c.lhs / c.rhs);
        ok = ok && c.passed;
      }
      record(spec, "interpolation", "t=" + format_real(t), ratio, 1.0, ok);
    }

    for (int j = 0; j <= 3; ++j) {
      const auto r = check_ring_inclusion(norm, j, t2, config.trials, mix_seed(seed, 10 + j));
      record(spec, "ring_l2_radius", "j=" + std::to_string(j), r.max_l2_ratio, kRingRadiusFactor, r.l2_inclusion);
      record(spec, "ring_norm_bound", "j=" + std::to_string(j), r.max_norm_ratio, 1.0, r.norm_inclusion);
    }

    std::size_t bad = 0;
    std::normal_distribution<double> gauss;
    const int last = d > 1 ? static_cast<int>(std::ceil(2.0 * std::log2(static_cast<double>(d)))) : 0;
    for (std::size_t i = 0; i < config.trials; ++i) {
      Vector x(static_cast<Eigen::Index>(d));
      for (auto& e : x) e = gauss(rng) * std::exp2(-std::abs(gauss(rng)) * 4.0);
      const double t = x.cwiseAbs().maxCoeff();
      if (!(t > 0.0)) continue;
      std::vector<int> owner(d, -1);
      for (const auto& b : level_decompose(x, t)) {
        double restricted = 0.0;
        for (auto idx : b.indices) {
          if (owner[idx] >= 0) ++bad;
          owner[idx] = b.j;
          restricted += x(static_cast<Eigen::Index>(idx)) * x(static_cast<Eigen::Index>(idx));
        }
        if (b.flat.norm() + 1e-12 < std::sqrt(restricted)) ++bad;
      }
      const double floor = t * std::ldexp(1.0, -last - 1);
      for (std::size_t k = 0; k < d; ++k) {
        const bool big = std::abs(x(static_cast<Eigen::Index>(k))) > floor;
        if (big != (owner[k] >= 0)) ++bad;
      }
    }
    record(spec, "level_partition", "", static_cast<double>(bad), 0.0, bad == 0);

    const auto w = random_search_witness(norm, 8, std::min<std::size_t>(config.trials, 200), mix_seed(seed, 2));
    record(spec, "t2_witness_below_bound", "n=8", w.t2, t2, w.t2 <= t2 * (1.0 + 1e-12));
  }
  return table;
}

Table run_bench(const ExperimentConfig& config) {
  config.validate();
  const OracleSpec oracle = parse_oracle(config.oracle);
  if (!oracle.stat) throw ConfigError("the estimators need a stat oracle");
  std::vector<std::size_t> dims = config.dim ? std::vector<std::size_t>{*config.dim} : std::vector<std::size_t>{16, 64, 256};

  Table table;
  table.meta = base_meta(config);
  // error_native is measured where each estimator's guarantee lives: l_inf, l2 or X.
  table.columns = {"estimator", "dim", "tau", "queries", "error_X", "error_native", "median_ms"};
  for (std::size_t d : dims) {
    const Norm norm = [&] {
      try {
        return parse_norm(config.norm.empty() ? "lp:4" : config.norm, d);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
      }
    }();
    const Norm checked = norm.trusted() ? norm : norm.certified(validate_symmetric(norm, 200, 0));
    const double t2 = config.t2_bound.value_or(default_t2_bound(checked));
    for (Estimator e : {Estimator::Linf, Estimator::L2, Estimator::Symmetric}) {
      if (e == Estimator::Symmetric && !checked.is_symmetric_kind()) continue;
      const double tau = oracle.level.value_or(auto_tolerance(e, checked, config.eps, t2));
      std::vector<double> ms;
      std::size_t queries = 0;
      double err = 0.0, native = 0.0;
      for (std::size_t rep = 0; rep < config.reps; ++rep) {
        const std::uint64_t seed = mix_seed(config.seed, rep);
        Rng rng(mix_seed(seed, 1));
        Distribution dist = random_explicit(&checked, d, 32, rng);
        const Vector mean = dist.exact_mean();
        OracleSession session(dist, Stat{tau}, oracle.perturbation(mix_seed(seed, 2)));
        const auto start = std::chrono::steady_clock::now();
        const Outcome out = run_estimator(e, session, checked, config.eps, t2, mix_seed(seed, 3));
        ms.push_back(std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count());
        queries = out.queries;
        const Vector diff = out.estimate - mean;
        err = std::max(err, checked(diff));
        native = std::max(native, e == Estimator::Linf ? diff.cwiseAbs().maxCoeff() : e == Estimator::L2 ? diff.norm() : checked(diff));
      }
      std::sort(ms.begin(), ms.end());
      table.rows.push_back({estimator_name(e), static_cast<std::int64_t>(d), tau, static_cast<std::int64_t>(queries),
                            err, native, ms[ms.size() / 2]});
    }
  }
  return table;
}

int run(const ExperimentConfig& config, std::ostream& err) {
  try {
    const auto start = std::chrono::steady_clock::now();
    Table table;
    if (config.command == "estimate") {
      table = run_estimate(config);
    } else if (config.command == "hardness") {
      table = run_hardness(config);
    } else if (config.command == "verify") {
      table = run_verify(config);
    } else if (config.command == "bench") {
      table = run_bench(config);
    } else {
      throw ConfigError("unknown command '" + config.command + "'");
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    table.meta.emplace_back("wall_time_s", format_real(wall));

    std::ofstream file;
    std::ostream* out = &std::cout;
    if (config.out != "-") {
      file.open(config.out);
      if (!file) throw ConfigError("cannot open output '" + config.out + "'");
      out = &file;
    }
    if (config.format == OutputFormat::Json) {
      write_json(*out, table);
    } else {
      write_csv(*out, table);
    }
    for (const auto& m : table.messages) err << m << '\n';
    return table.exit_code;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return 2;
  } catch (const BudgetExhausted& e) {
    err << "budget exceeded: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 3;
  }
}

}  // namespace sqmean::experiment
