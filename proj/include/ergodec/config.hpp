#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ergodec/basin.hpp"
#include "ergodec/observables.hpp"
#include "ergodec/system.hpp"

namespace ergodec {

// One entry of the "points" list: an explicit point, a block of measure
// samples, or the oscillating witness stream.
struct PointRequest {
    enum class Kind { Explicit, Sample, Witness };
    Kind kind = Kind::Explicit;
    PointState point;               // Explicit
    std::uint64_t count = 1;        // Sample
    std::uint64_t block_growth = 2; // Witness
    std::string label;
};

// Parsed experiment description. The original bytes are kept so a run can
// echo its configuration verbatim.
struct ExperimentConfig {
    int version = 1;
    std::uint64_t seed = 0;
    SystemSpec system;
    std::optional<TestFunctionFamily> family; // always engaged after parsing
    DetectorParams detector;
    std::optional<MeasureSpec> measure;
    std::optional<MeasureSpec> reference_measure; // verification target override
    std::vector<PointRequest> points;
    std::uint64_t sample_count = 0;
    double cluster_eps = 0.0; // 0 means "use 5 * cauchy_eps"
    std::vector<std::string> checks; // empty means "all applicable"
    std::vector<FnDescriptor> borel_sets;
    std::uint32_t affine_block_len = 12;
    std::vector<double> affine_coefficients; // empty means no linear check
    std::uint64_t witness_block_growth = 2;
    std::string raw_text;

    double effective_cluster_eps() const {
        return cluster_eps > 0.0 ? cluster_eps : 5.0 * detector.cauchy_eps;
    }
    bool check_requested(const std::string& name) const;
};

// Parses a JSON configuration document. Field problems raise ConfigError
// naming the offending path.
ExperimentConfig parse_config(const std::string& text);

ExperimentConfig load_config(const std::string& path);

} // namespace ergodec
