#pragma once

#include "dendsim/analysis.hpp"
#include "dendsim/cell.hpp"
#include "dendsim/protocols.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace dendsim {

// =============================================================================
// Run configuration
// =============================================================================
// One JSON config file fully describes a run: the cell (builtin, grown, or
// loaded from topology files), the device parameter bundle, and exactly one
// protocol section. Parsing is strict: unknown fields are errors, so a
// calibration bundle cannot silently drift.
// =============================================================================

struct GrowthCellSpec {
    std::vector<ElectrodeSpec> electrodes;
    GrowthParams params;
    bool seed_explicit = false; ///< params.seed came from the file, not the global seed
};

struct TopologySource {
    std::string file;                      // resolved path; empty when growing
    std::optional<GrowthCellSpec> growth;
};

struct CellConfig {
    std::optional<std::string> builtin;
    std::vector<TopologySource> sources;
    double dl_capacitance_f = 2.5e-11;
    double distance_exponent = 1.0;
    DeviceParams device;
};

struct RectifyProtocol {
    double v_max = 0.9;
    double v_step = 0.05;
};

struct UniquenessProtocol {
    int devices = 20;
    int replicates = 2;
    SequenceProgram program;
};

struct RunConfig {
    std::uint64_t seed = 0;
    std::string output_dir = "out";
    CellConfig cell;
    std::string protocol_type; // sweep|rectify|transfer|mac|sequence|signature|uniqueness
    SweepConfig sweep;         // sweep and transfer payload
    RectifyProtocol rectify;
    MacConfig mac;
    SequenceProgram sequence;  // sequence and signature payload
    UniquenessProtocol uniqueness;
    std::string canonical_text; ///< defaults materialized; hashed into the manifest
};

/// Parse and validate a config file. Throws ConfigError with line/column for
/// syntax problems and with the field path for semantic ones. Referenced
/// topology files must exist.
RunConfig load_config(const std::string& path);

/// Materialize the configured cell (build the builtin, load files, or grow).
/// Growth specs without an explicit seed derive theirs from the global seed.
SimulationCell build_cell(const RunConfig& config);

/// Rebuild the cell for population member k of a uniqueness run (fresh seed
/// derivation per member). ConfigError when the cell is file-based.
SimulationCell build_population_cell(const RunConfig& config, int member);

std::string version_string();

/// Reproducibility manifest written next to every run's outputs.
std::string manifest_text(const RunConfig& config, const std::string& command,
                          const std::vector<std::string>& outputs);

} // namespace dendsim
