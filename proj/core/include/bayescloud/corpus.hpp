#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bayescloud/bnscript.hpp"
#include "bayescloud/network.hpp"

namespace bayescloud::corpus {

inline constexpr const char* kHot = "hot_zone";
inline constexpr const char* kCold = "cold_zone";

/// Optional root placed above DZ_1_1_1 so the pyramid can join another model.
struct GeoAnchor {
    std::string name;
    double hot_prior = 0.5;
};

struct GeoParams {
    std::size_t depth = 3;
    double k = 0.9;
    double root_hot_prior = 0.05;
    std::optional<GeoAnchor> anchor;

    /// Validated construction; throws InvalidParams.
    static GeoParams make(std::size_t depth, double k, double root_hot_prior);
    void validate() const;
};

/// "DZ_<depth>_<x>_<y>"
std::string region_name(std::size_t depth, std::size_t x, std::size_t y);

/// Quadtree of hot/cold regions. A child copies its parent's state with
/// probability k. With an anchor, DZ_1_1_1 is conditioned on the anchor the
/// same way and the root prior is the anchor's.
BayesianNetwork generate_geospatial(const GeoParams& params);

BayesianNetwork regional_spread_model();
BayesianNetwork virus_mutation_model();
BayesianNetwork patient_model();

/// Manual union of two consistent models: each shared variable keeps the
/// definition with the larger parent set (bn1's on a tie). Throws
/// DomainMismatch, CycleInUnion, or InvalidRequest when neither parent set
/// contains the other.
BayesianNetwork compose(const BayesianNetwork& bn1, const BayesianNetwork& bn2);

/// Geospatial pyramid anchored on DangerousnessOfZone, composed with the
/// regional, mutation and patient models.
BayesianNetwork integrated_model(const GeoParams& params = {});

struct CorpusEntry {
    std::string file;
    std::size_t nodes = 0;
};

/// Writes the five scripts and corpus-manifest.json; returns the script file
/// names in emission order. Throws IoError.
std::vector<CorpusEntry> build_corpus(const std::filesystem::path& dir, const GeoParams& params = {});

struct RegionRisk {
    std::string region;
    double hot_probability = 0.0;
};

/// P(hot_zone) for every DZ_ region, sorted descending (ties by name).
/// Throws UnknownRegion when a report names a variable the network lacks.
std::vector<RegionRisk> run_scenario(const BayesianNetwork& net, const script::Evidence& reports);

}  // namespace bayescloud::corpus
