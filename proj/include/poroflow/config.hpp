/**
 * @file config.hpp
 * @brief Scenario configuration: YAML document -> validated ScenarioConfig.
 *
 * Unknown keys are errors. Every error carries the 1-based line of the
 * offending node when the document provides one. The schema is documented
 * in configs/SCHEMA.md.
 */
#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "poroflow/assembly.hpp"
#include "poroflow/coupling.hpp"
#include "poroflow/verification.hpp"

namespace poroflow {

class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& what, int line = 0);
    int line() const { return line_; }

private:
    int line_;
};

enum class ScenarioKind { manufactured, terzaghi, subsidence, five_spot };
std::string to_string(ScenarioKind kind);

enum class HeterogeneityMode { none, layered, harmonic };
std::string to_string(HeterogeneityMode mode);

enum class WellControl { pressure, rate };
enum class WellRole { injector, producer };

struct WellConfig {
    double x = 0.0;
    double y = 0.0;
    WellControl control = WellControl::pressure;
    double value = 0.0;  // pressure, or volumetric rate (positive = injection)
    WellRole role = WellRole::producer;
};

struct MeshConfig {
    int nx = 1;
    int ny = 1;
    double lx = 1.0;
    double ly = 1.0;
};

struct HeterogeneityConfig {
    HeterogeneityMode mode = HeterogeneityMode::none;
    double amplitude = 0.0;
    unsigned seed = 0;
};

struct OutputConfig {
    std::string directory = "out";
    int vtk_interval = 0;  // steps between snapshots; 0 writes the final state only
};

struct ManufacturedConfig {
    ManufacturedConstants constants;
};

struct TerzaghiConfig {
    double k_c = 1.0e6;
};

struct SubsidenceConfig {
    bool compare_frozen = true;  // second run with frozen porosity
};

struct FiveSpotConfig {
    double breakthrough_threshold = 0.05;  // wetting saturation at a producer
    bool compare_constant = true;          // second run with constant permeability
    double initial_sn = 1.0;
};

struct ScenarioConfig {
    ScenarioKind scenario = ScenarioKind::manufactured;
    MeshConfig mesh;
    SolidParams solid;
    FluidParams fluid;
    PorosityModel porosity;
    PermeabilityModel permeability;
    TwoPhaseParams two_phase;
    CouplingConfig coupling;
    SolveOptions linear;
    std::vector<WellConfig> wells;
    HeterogeneityConfig heterogeneity;
    OutputConfig output;
    ManufacturedConfig manufactured;
    TerzaghiConfig terzaghi;
    SubsidenceConfig subsidence;
    FiveSpotConfig five_spot;
    std::string source_text;

    /// Defaults of each built-in scenario.
    static ScenarioConfig defaults(ScenarioKind kind);
    /// Throws ConfigError.
    void validate() const;
};

ScenarioConfig parse_config(const std::string& text);
/// Reads and parses a file; I/O failures raise std::ios_base::failure.
ScenarioConfig load_config(const std::string& path);

/// Resolved configuration as sorted "key = value" lines (manifest echo).
std::string describe(const ScenarioConfig& config);

/// Closest candidate by edit distance, if within 3 edits.
std::optional<std::string> suggest_key(const std::string& key,
                                       const std::vector<std::string>& candidates);

}  // namespace poroflow
