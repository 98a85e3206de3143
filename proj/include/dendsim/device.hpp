#pragma once

#include "dendsim/topology.hpp"

#include <span>
#include <vector>

namespace dendsim {

class SimulationCell;

// =============================================================================
// Lumped electrochemical segment model
// =============================================================================
// Conductance scales with the doping fraction s, gating is a first-order
// relaxation of s toward a piecewise-linear equilibrium set by the electrolyte
// overpotential, and a slow trap population q accounts for drift and fatigue.
// Geometry lives in µm; electrical quantities are SI. The µm/cm conversions
// are owned by this module.
// =============================================================================

struct DeviceParams {
    double bulk_conductivity_s_per_cm = 1.0;      ///< fully doped channel
    double volumetric_capacitance_f_per_cm3 = 39.0;
    double pinchoff_voltage_v = 0.6;              ///< overpotential that fully dedopes
    double dedope_time_constant_s_per_cm3 = 3.0e9;
    double redope_time_constant_s_per_cm3 = 9.0e9; ///< recovery is slower than depletion
    double residual_doping = 0.05;                ///< conductance floor, in (0,1)
    double trap_rate = 0.02;                      ///< fraction of dedoping flux that traps
    double trap_release_rate_per_s = 2.0e-4;

    void validate() const; // throws DomainError
};

/// Per-segment electrochemical state, indexed by the segment ids of one
/// SimulationCell (ids are dense, 0..n-1).
struct ElectrochemicalState {
    std::vector<double> doping;   ///< s in [residual_doping, 1]
    std::vector<double> trapped;  ///< q in [0, 1 - residual_doping], s + q <= 1
    double electrolyte_potential_v = 0.0;

    std::size_t size() const { return doping.size(); }

    /// Fully doped, trap-free state for n segments.
    static ElectrochemicalState rested(std::size_t n_segments);
};

/// Channel conductance in siemens:
///   G = sigma * (pi r^2 / L) * max(s - q, residual_doping).
/// Traps block conduction one-for-one. Throws LookupError for a segment id
/// outside the state.
double segment_conductance(const DendriteSegment& segment,
                           const ElectrochemicalState& state,
                           const DeviceParams& params);

/// C = volumetric_capacitance * volume. Strictly increasing in volume.
double volumetric_capacitance_of(const DendriteSegment& segment,
                                 const DeviceParams& params);

/// Equilibrium doping under a gate overpotential dv = V_electrolyte - V_channel:
///   s_eq = clamp(1 - (1 - residual) * dv / pinchoff, residual, 1).
/// No positive overpotential, no dedoping.
double equilibrium_doping(double overpotential_v, const DeviceParams& params);

double dedope_time_constant_s(const DendriteSegment& segment, const DeviceParams& params);
double redope_time_constant_s(const DendriteSegment& segment, const DeviceParams& params);

/// Advance every segment's (s, q) by one explicit Euler step of
///   ds/dt = (s_eq - s)/tau,  tau = (dedope or redope constant) * volume
///   dq/dt = trap_rate * max(0, -ds/dt) - trap_release_rate * q
/// with s_eq evaluated from the segment midpoint potential and the state's
/// electrolyte potential. Clamping keeps all invariants. Throws StepError when
/// dt exceeds one tenth of the smallest segment time constant.
ElectrochemicalState step_doping(const SimulationCell& cell,
                                 const ElectrochemicalState& state,
                                 std::span<const double> node_potentials,
                                 double dt_s);

} // namespace dendsim
