#include "dendsim/device.hpp"

#include "dendsim/cell.hpp"
#include "dendsim/errors.hpp"

#include <algorithm>
#include <cmath>

namespace dendsim {

void DeviceParams::validate() const {
    if (bulk_conductivity_s_per_cm <= 0) throw DomainError("bulk_conductivity must be > 0");
    if (volumetric_capacitance_f_per_cm3 <= 0)
        throw DomainError("volumetric_capacitance must be > 0");
    if (pinchoff_voltage_v <= 0) throw DomainError("pinchoff_voltage must be > 0");
    if (dedope_time_constant_s_per_cm3 <= 0)
        throw DomainError("dedope_time_constant must be > 0");
    if (redope_time_constant_s_per_cm3 <= 0)
        throw DomainError("redope_time_constant must be > 0");
    if (residual_doping <= 0 || residual_doping >= 1)
        throw DomainError("residual_doping must be in (0,1)");
    if (trap_rate < 0) throw DomainError("trap_rate must be >= 0");
    if (trap_release_rate_per_s < 0) throw DomainError("trap_release_rate must be >= 0");
}

ElectrochemicalState ElectrochemicalState::rested(std::size_t n_segments) {
    ElectrochemicalState s;
    s.doping.assign(n_segments, 1.0);
    s.trapped.assign(n_segments, 0.0);
    s.electrolyte_potential_v = 0.0;
    return s;
}

namespace {

void check_segment(const DendriteSegment& segment, const ElectrochemicalState& state) {
    if (segment.id < 0 || static_cast<std::size_t>(segment.id) >= state.size())
        throw LookupError("segment " + std::to_string(segment.id) + " not present in state");
}

} // namespace

double segment_conductance(const DendriteSegment& segment,
                           const ElectrochemicalState& state,
                           const DeviceParams& params) {
    check_segment(segment, state);
    double s = state.doping[segment.id];
    double q = state.trapped[segment.id];
    double effective = std::max(s - q, params.residual_doping);
    double g0 = params.bulk_conductivity_s_per_cm * segment.cross_section_cm2() /
                (segment.length_um * 1e-4);
    return g0 * effective;
}

double volumetric_capacitance_of(const DendriteSegment& segment, const DeviceParams& params) {
    return params.volumetric_capacitance_f_per_cm3 * segment.volume_cm3();
}

double equilibrium_doping(double overpotential_v, const DeviceParams& params) {
    double s = 1.0 - (1.0 - params.residual_doping) * overpotential_v / params.pinchoff_voltage_v;
    return std::clamp(s, params.residual_doping, 1.0);
}

double dedope_time_constant_s(const DendriteSegment& segment, const DeviceParams& params) {
    return params.dedope_time_constant_s_per_cm3 * segment.volume_cm3();
}

double redope_time_constant_s(const DendriteSegment& segment, const DeviceParams& params) {
    return params.redope_time_constant_s_per_cm3 * segment.volume_cm3();
}

ElectrochemicalState step_doping(const SimulationCell& cell,
                                 const ElectrochemicalState& state,
                                 std::span<const double> node_potentials,
                                 double dt_s) {
    const DeviceParams& params = cell.device();
    if (dt_s <= 0) throw StepError("dt must be > 0");
    double dt_max = cell.min_time_constant_s() / 10.0;
    if (dt_s > dt_max * (1.0 + 1e-12))
        throw StepError("dt " + std::to_string(dt_s) + " s exceeds the stability limit " +
                        std::to_string(dt_max) + " s (min segment time constant / 10)");
    if (state.size() != cell.segments().size())
        throw LookupError("state does not cover the cell's segments");

    ElectrochemicalState next = state;
    for (const auto& seg : cell.segments()) {
        double v_mid = 0.5 * (node_potentials[seg.a] + node_potentials[seg.b]);
        double dv = state.electrolyte_potential_v - v_mid;
        double s_eq = equilibrium_doping(dv, params);
        double s = state.doping[seg.id];
        double q = state.trapped[seg.id];

        double tau = (s_eq < s ? dedope_time_constant_s(seg, params)
                               : redope_time_constant_s(seg, params));
        double rate = (s_eq - s) / tau;
        double dedope_flux = std::max(0.0, -rate);

        double s_new = s + dt_s * rate;
        double q_new = q + dt_s * (params.trap_rate * dedope_flux -
                                   params.trap_release_rate_per_s * q);

        q_new = std::clamp(q_new, 0.0, 1.0 - params.residual_doping);
        s_new = std::clamp(s_new, params.residual_doping, 1.0 - q_new); // keeps s + q <= 1
        next.doping[seg.id] = s_new;
        next.trapped[seg.id] = q_new;
    }
    return next;
}

} // namespace dendsim
