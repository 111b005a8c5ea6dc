#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "sqmean/distribution.hpp"
#include "sqmean/estimators.hpp"

namespace sqmean {

/// {"dim": d, "support": [[...], ...], "weights": [...]}
Distribution read_distribution_json(std::istream& in, std::optional<Norm> ball = std::nullopt);
Distribution load_distribution(const std::filesystem::path& path, std::optional<Norm> ball = std::nullopt);
void write_distribution_json(std::ostream& out, const Distribution& dist);

/// {"norm": "<spec>", "vectors": [[...], ...]}
struct WitnessFile {
  std::string norm;
  std::vector<Vector> vectors;
};
WitnessFile read_witness_json(std::istream& in);
WitnessFile load_witness(const std::filesystem::path& path);
void write_witness_json(std::ostream& out, const WitnessFile& witness);

/// Estimate, per-ring intermediates, query count and realized errors.
std::string report_to_json(const EstimateReport& report, int indent = 2);

}  // namespace sqmean
