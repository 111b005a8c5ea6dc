#include "sqmean/io.hpp"

#include <fstream>
#include <istream>
#include <ostream>

#include <json.hpp>

namespace sqmean {
namespace {

using nlohmann::json;

Vector to_vector(const json& j) {
  if (!j.is_array()) throw std::invalid_argument("expected an array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j.at(i).get<double>();
  return v;
}

json from_vector(const Vector& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

json parse_stream(std::istream& in, const char* what) {
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string(what) + ": " + e.what());
  }
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  return in;
}

}  // namespace

Distribution read_distribution_json(std::istream& in, std::optional<Norm> ball) {
  const json j = parse_stream(in, "distribution file");
  try {
    const auto dim = j.at("dim").get<std::size_t>();
    std::vector<Vector> support;
    for (const auto& row : j.at("support")) {
      support.push_back(to_vector(row));
      if (static_cast<std::size_t>(support.back().size()) != dim) {
        throw std::invalid_argument("support point has " + std::to_string(support.back().size()) +
                                    " entries, expected " + std::to_string(dim));
      }
    }
    auto weights = j.at("weights").get<std::vector<double>>();
    return Distribution::from_points(std::move(support), std::move(weights), std::move(ball));
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("distribution file: ") + e.what());
  }
}

Distribution load_distribution(const std::filesystem::path& path, std::optional<Norm> ball) {
  auto in = open_input(path);
  return read_distribution_json(in, std::move(ball));
}

void write_distribution_json(std::ostream& out, const Distribution& dist) {
  json j;
  j["dim"] = dist.dim();
  j["support"] = json::array();
  for (const auto& x : dist.support()) j["support"].push_back(from_vector(x));
  j["weights"] = std::vector<double>(dist.weights().begin(), dist.weights().end());
  out << j.dump() << '\n';
}

WitnessFile read_witness_json(std::istream& in) {
  const json j = parse_stream(in, "witness file");
  try {
    WitnessFile w;
    w.norm = j.at("norm").get<std::string>();
    for (const auto& row : j.at("vectors")) w.vectors.push_back(to_vector(row));
    if (w.vectors.empty()) throw std::invalid_argument("witness file: no vectors");
    return w;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("witness file: ") + e.what());
  }
}

WitnessFile load_witness(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_witness_json(in);
}

void write_witness_json(std::ostream& out, const WitnessFile& witness) {
  json j;
  j["norm"] = witness.norm;
  j["vectors"] = json::array();
  for (const auto& v : witness.vectors) j["vectors"].push_back(from_vector(v));
  out << j.dump() << '\n';
}

std::string report_to_json(const EstimateReport& report, int indent) {
  json j;
  j["estimate"] = from_vector(report.estimate);
  j["queries_used"] = report.queries_used;
  j["gamma"] = report.gamma;
  j["alpha"] = report.alpha;
  j["per_ring"] = json::array();
  for (const auto& r : report.per_ring) {
    json ring;
    ring["j"] = r.j;
    ring["skipped"] = r.skipped;
    ring["mass_estimate"] = r.mass_estimate;
    ring["m"] = r.m;
    ring["w_inf"] = from_vector(r.w_inf);
    ring["w_2"] = from_vector(r.w_2);
    ring["w_reconciled"] = from_vector(r.w_reconciled);
    j["per_ring"].push_back(std::move(ring));
  }
  j["errors_realized"] = json::object();
  for (const auto& [name, value] : report.errors_realized) j["errors_realized"][name] = value;
  return j.dump(indent);
}

}  // namespace sqmean
