#pragma once

#include "dendsim/analysis.hpp"
#include "dendsim/cell.hpp"
#include "dendsim/solver.hpp"

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace dendsim {

// =============================================================================
// Persistence: canonical JSON for structures, CSV for time series
// =============================================================================
// JSON documents are emitted with sorted keys and shortest-round-trip number
// formatting, so serializing the same object twice yields byte-identical
// text. That canonical form doubles as the identity used for determinism and
// uniqueness checks.
// =============================================================================

std::string topology_to_string(const NetworkTopology& topo);
NetworkTopology topology_from_string(const std::string& text);
void save_topology(const std::string& path, const NetworkTopology& topo);
NetworkTopology load_topology(const std::string& path);

std::string cell_to_string(const SimulationCell& cell);
SimulationCell cell_from_string(const std::string& text);

struct CellState {
    SimulationCell cell;
    ElectrochemicalState state;
};

/// Self-contained resume file: the full cell plus its electrochemical state.
void save_state(const std::string& path, const SimulationCell& cell,
                const ElectrochemicalState& state);
CellState load_state(const std::string& path);

void write_trace_csv(std::ostream& os, const Trace& trace);
void save_trace_csv(const std::string& path, const Trace& trace);

void write_signature_csv(std::ostream& os, const SignatureVector& sig);
void save_signature_csv(const std::string& path, const SignatureVector& sig);

/// Long-format, spider-diagram-ready rows: device, pattern, mean, std.
void write_stats_long_csv(std::ostream& os,
                          const std::vector<std::pair<std::string, SignatureStats>>& stats);
void save_stats_long_csv(const std::string& path,
                         const std::vector<std::pair<std::string, SignatureStats>>& stats);

std::string fnv1a_hex(const std::string& bytes);

std::string read_text_file(const std::string& path);   // IoError on failure
void write_text_file(const std::string& path, const std::string& text);

} // namespace dendsim
