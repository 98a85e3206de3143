#pragma once

#include "dendsim/cell.hpp"

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace dendsim {

// =============================================================================
// Nodal solver: linear operating points, self-consistent DC, transients
// =============================================================================

/// Per-electrode boundary assignment. Electrodes not listed are floating
/// (zero external current). Ground is a fixed 0 V.
struct BoundaryCondition {
    std::map<std::string, double> fixed; // electrode id -> volts

    BoundaryCondition& set(const std::string& electrode_id, double volts) {
        fixed[electrode_id] = volts;
        return *this;
    }
    BoundaryCondition& ground(const std::string& electrode_id) { return set(electrode_id, 0.0); }
    bool is_fixed(const std::string& electrode_id) const { return fixed.count(electrode_id) > 0; }

    BoundaryCondition scaled(double alpha) const {
        BoundaryCondition out;
        for (const auto& [id, v] : fixed) out.fixed[id] = alpha * v;
        return out;
    }
};

struct LinearSolution {
    std::vector<double> node_potentials;            // per global node, volts
    std::map<std::string, double> terminal_currents; // positive into the network
    double kcl_residual = 0.0;                      // max |node current| at internal nodes
    double current_sum = 0.0;                       // |sum of terminal currents|
    double max_terminal_current = 0.0;
};

/// Solve G v = i with conductances frozen at the given state. Floating nodes
/// carry zero injected current. Throws SolverError when every electrode
/// floats or when a connected component has no fixed-potential node (the
/// error names an electrode or node of the offending component).
LinearSolution solve_linear_network(const SimulationCell& cell,
                                    const ElectrochemicalState& state,
                                    const BoundaryCondition& bc);

/// Capacitance-weighted mean potential seen by the shared electrolyte:
/// segments contribute their midpoint (endpoint-average) potential through
/// their distance-weighted coupling capacitance, electrodes contribute their
/// own potential through the double-layer capacitance. Electrodes that are
/// bare and floating are excluded: their metal floats to the electrolyte
/// potential and cannot shift it.
double electrolyte_potential(const SimulationCell& cell,
                             const ElectrochemicalState& state,
                             std::span<const double> node_potentials);

struct OperatingPoint {
    std::vector<double> node_potentials;
    std::map<std::string, double> terminal_currents;
    ElectrochemicalState state;
    double kcl_residual = 0.0;
    int iterations = 0;
};

struct DcOptions {
    double damping = 0.5;
    double tolerance = 1e-10; // on max |s_eq - s|
    int max_iterations = 200;
};

/// Damped fixed-point iteration of {linear solve, electrolyte potential,
/// s = s_eq}. Trapped charge is frozen (quasi-static sweeps are slow compared
/// to gating but fast compared to trapping). Deterministic; throws SolverError
/// with the residual and iteration count on non-convergence.
OperatingPoint solve_dc(const SimulationCell& cell,
                        const BoundaryCondition& bc,
                        std::optional<ElectrochemicalState> initial = std::nullopt,
                        const DcOptions& options = {});

/// Piecewise-constant drive: the phase active at time t is the last one with
/// t_start <= t. Phases must be sorted and start at 0.
struct DrivePhase {
    double t_start_s = 0.0;
    BoundaryCondition bc;
};

struct DriveWaveform {
    std::vector<DrivePhase> phases;
    double duration_s = 0.0;

    const BoundaryCondition& bc_at(double t_s) const;
    void append_phase(double duration_s_, BoundaryCondition bc_);
};

/// Time series of a transient run. Column layout is fixed by electrode_ids:
/// one current and one potential column per electrode.
struct Trace {
    std::vector<std::string> electrode_ids;
    std::vector<double> time_s;
    std::vector<std::vector<double>> electrode_currents;  // [sample][electrode]
    std::vector<std::vector<double>> electrode_potentials;
    std::vector<double> electrolyte_v;
    std::vector<std::pair<double, ElectrochemicalState>> doping_snapshots;

    std::size_t n_samples() const { return time_s.size(); }
    std::size_t electrode_index(const std::string& id) const; // LookupError
    void append(const Trace& tail); // timestamps must keep increasing
};

struct TransientOptions {
    int sample_stride = 1;            ///< record every k-th step (>=1)
    double snapshot_interval_s = 0.0; ///< 0 = no doping snapshots
    double t0_s = 0.0;                ///< timestamp offset for the emitted trace
};

struct TransientResult {
    Trace trace;
    ElectrochemicalState final_state;
};

/// Largest dt honoring the step_doping stability contract (min tau / 10).
double stability_dt_limit(const SimulationCell& cell);

/// Operator-split transient: per step, solve the resistive network with the
/// current doping state, update the electrolyte potential, then advance the
/// doping. Samples record the state *before* the step. Deterministic.
TransientResult run_transient(const SimulationCell& cell,
                              const DriveWaveform& waveform,
                              double dt_s,
                              ElectrochemicalState initial,
                              const TransientOptions& options = {});

} // namespace dendsim
