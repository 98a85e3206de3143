#include "dendsim/demo_cells.hpp"

#include "dendsim/errors.hpp"

#include <cmath>
#include <numbers>

namespace dendsim::demo {

namespace {

constexpr double kPi = std::numbers::pi;

/// Straight-chain topology builder for the hand-laid demo cells.
struct TopoBuilder {
    NetworkTopology topo;

    NodeId electrode(const std::string& id, Vec2 pos, ElectrodeRole role) {
        topo.electrodes.push_back({id, pos, role});
        NodeId n = static_cast<NodeId>(topo.nodes.size());
        topo.nodes.push_back({n, pos, id});
        return n;
    }

    NodeId point(Vec2 pos) {
        NodeId n = static_cast<NodeId>(topo.nodes.size());
        topo.nodes.push_back({n, pos, std::nullopt});
        return n;
    }

    /// Straight run of n segments between two existing nodes, the radius
    /// tapering linearly from r_from to r_to (real fibers are thickest at
    /// their seed electrode).
    void chain(NodeId from, NodeId to, int n, double r_from, double r_to, double freq_hz) {
        Vec2 a = topo.nodes[from].position;
        Vec2 b = topo.nodes[to].position;
        NodeId prev = from;
        for (int i = 1; i <= n; ++i) {
            NodeId next = (i == n) ? to : point(a + (b - a) * (static_cast<double>(i) / n));
            DendriteSegment seg;
            seg.id = static_cast<SegmentId>(topo.segments.size());
            seg.a = prev;
            seg.b = next;
            seg.length_um = distance(topo.nodes[prev].position, topo.nodes[next].position);
            double t = (static_cast<double>(i) - 0.5) / n;
            seg.radius_um = r_from + (r_to - r_from) * t;
            seg.growth_frequency_hz = freq_hz;
            topo.segments.push_back(seg);
            prev = next;
        }
    }

    void chain(NodeId from, NodeId to, int n, double radius_um, double freq_hz) {
        chain(from, to, n, radius_um, radius_um, freq_hz);
    }
};

double radius_at(double freq_hz) {
    GrowthParams p;
    return radius_from_frequency(freq_hz, p);
}

/// Growth frequency that the default thinning law associates with a radius.
double frequency_for_radius(double radius_um) {
    GrowthParams p;
    return p.reference_frequency_hz *
           std::pow(radius_um / p.reference_radius_um, -1.0 / p.thinning_exponent);
}

} // namespace

DeviceParams default_device() {
    DeviceParams p;
    p.bulk_conductivity_s_per_cm = 1.0;
    p.volumetric_capacitance_f_per_cm3 = 39.0;
    p.pinchoff_voltage_v = 0.45;
    p.dedope_time_constant_s_per_cm3 = 3.0e9;
    p.redope_time_constant_s_per_cm3 = 9.0e9;
    p.residual_doping = 0.03;
    p.trap_rate = 0.02;
    p.trap_release_rate_per_s = 2.0e-4;
    return p;
}

double default_dl_capacitance_f() {
    return 2.5e-11;
}

// =============================================================================
// Y device
// =============================================================================

SimulationCell y_device() {
    TopoBuilder b;
    NodeId core = b.electrode("EC", {0, 0}, ElectrodeRole::Ground);
    NodeId e1 = b.electrode("E1", {-200, 0}, ElectrodeRole::Input);
    NodeId e2 = b.electrode("E2", {0, -200}, ElectrodeRole::Input);
    NodeId e3 = b.electrode("E3", {200, 0}, ElectrodeRole::Input);
    double r = radius_at(80.0);
    b.chain(core, e1, 10, r, 80.0);
    b.chain(core, e2, 10, r, 80.0);
    b.chain(core, e3, 10, r, 80.0);
    return assemble_cell({std::move(b.topo)}, default_dl_capacitance_f(), default_device());
}

SweepConfig y_rectifying_sweep() {
    SweepConfig c;
    c.swept = "E3";
    c.grounded = {"EC"};
    c.v_start = -0.9;
    c.v_end = 0.9;
    c.v_step = 0.05;
    return c;
}

SweepConfig y_symmetric_sweep() {
    SweepConfig c;
    c.swept = "E3";
    c.grounded = {"E1"};
    c.v_start = -0.9;
    c.v_end = 0.9;
    c.v_step = 0.05;
    return c;
}

// =============================================================================
// Inter-gating pair
// =============================================================================

SimulationCell intergating_pair() {
    TopoBuilder bulky;
    NodeId bs = bulky.electrode("B_S", {-130, -50}, ElectrodeRole::Ground);
    NodeId bd = bulky.electrode("B_D", {130, -50}, ElectrodeRole::Input);
    bulky.chain(bs, bd, 12, radius_at(25.0), 25.0);

    TopoBuilder thin;
    NodeId ts = thin.electrode("T_S", {-150, 50}, ElectrodeRole::Ground);
    NodeId td = thin.electrode("T_D", {150, 50}, ElectrodeRole::Input);
    thin.chain(ts, td, 12, radius_at(200.0), 200.0);

    return assemble_cell({std::move(bulky.topo), std::move(thin.topo)},
                         default_dl_capacitance_f(), default_device());
}

SweepConfig transfer_bulky_gate() {
    SweepConfig c;
    c.swept = "T_D";
    c.grounded = {"T_S", "B_S"};
    c.secondary_electrode = "B_D";
    c.secondary_bias = {0.0, 0.3, 0.6, 0.9};
    c.v_start = 0.0;
    c.v_end = 0.9;
    c.v_step = 0.05;
    return c;
}

SweepConfig transfer_thin_gate() {
    SweepConfig c;
    c.swept = "B_D";
    c.grounded = {"B_S", "T_S"};
    c.secondary_electrode = "T_D";
    c.secondary_bias = {0.0, 0.3, 0.6, 0.9};
    c.v_start = 0.0;
    c.v_end = 0.9;
    c.v_step = 0.05;
    return c;
}

// =============================================================================
// MAC cell
// =============================================================================

SimulationCell mac_cell() {
    // Arm thickness and distance from the readout set the per-input weight:
    // IN3 sits closest to the readout, IN2 farthest and thinnest. Arms taper
    // toward the grounded core; the thick stub hanging off the core is a
    // ballast capacitance pinned at ground potential.
    TopoBuilder y;
    NodeId core = y.electrode("C", {0, 0}, ElectrodeRole::Ground);
    NodeId in1 = y.electrode("IN1", {-190, 110}, ElectrodeRole::Input);
    NodeId in2 = y.electrode("IN2", {-170, -100}, ElectrodeRole::Input);
    NodeId in3 = y.electrode("IN3", {190, 40}, ElectrodeRole::Input);
    NodeId stub = y.electrode("STUB", {-90, -60}, ElectrodeRole::Floating);
    y.chain(in1, core, 10, 3.0, 0.35 * 3.0, frequency_for_radius(3.0));
    y.chain(in2, core, 10, 1.6, 0.35 * 1.6, frequency_for_radius(1.6));
    y.chain(in3, core, 10, 2.9, 0.35 * 2.9, frequency_for_radius(2.9));
    y.chain(core, stub, 5, 1.8, 1.8, frequency_for_radius(1.8));

    TopoBuilder readout;
    NodeId rs = readout.electrode("R_S", {90, -150}, ElectrodeRole::OutputSource);
    NodeId rd = readout.electrode("R_D", {290, -150}, ElectrodeRole::OutputDrain);
    readout.chain(rs, rd, 10, radius_at(200.0), 200.0);

    return assemble_cell({std::move(y.topo), std::move(readout.topo)},
                         default_dl_capacitance_f(), default_device());
}

MacConfig mac_config() {
    MacConfig c;
    c.input_electrodes = {"IN1", "IN2", "IN3"};
    c.grounded = {"C"};
    c.readout_source = "R_S";
    c.readout_drain = "R_D";
    c.pulse_amplitude_v = 0.6;
    c.pulse_duration_s = 0.2;
    c.read_bias_v = 0.1;
    c.rest_factor = 5.0;
    return c;
}

// =============================================================================
// Sequence cell
// =============================================================================

SimulationCell sequence_cell(std::uint64_t seed) {
    std::vector<ElectrodeSpec> specs;
    // Input electrodes on an arc above a grounded hub; walks converge there.
    const double arc_r = 260.0;
    const Vec2 hub{0.0, 80.0};
    for (int k = 0; k < 8; ++k) {
        double angle = kPi * (0.08 + 0.84 * static_cast<double>(k) / 7.0);
        Vec2 pos = hub + Vec2{arc_r * std::cos(angle), arc_r * std::sin(angle)};
        specs.push_back({"IN" + std::to_string(k + 1), pos, ElectrodeRole::Input});
    }
    specs.push_back({"G", hub, ElectrodeRole::Ground});

    GrowthParams gp;
    gp.seed = seed;
    gp.growth_frequency_hz = 80.0;
    gp.branch_probability = 0.15;
    gp.field_bias = 0.7;
    gp.step_length_um = 25.0;
    gp.step_budget = 400;
    NetworkTopology network = grow_network(specs, gp);

    TopoBuilder readout;
    NodeId rs = readout.electrode("R_S", {-100, -140}, ElectrodeRole::OutputSource);
    NodeId rd = readout.electrode("R_D", {100, -140}, ElectrodeRole::OutputDrain);
    readout.chain(rs, rd, 10, radius_at(200.0), 200.0);

    return assemble_cell({std::move(network), std::move(readout.topo)},
                         default_dl_capacitance_f(), default_device());
}

std::vector<std::string> spatial_projection_inputs(int which) {
    switch (which) {
        case 1: return {"IN1", "IN2", "IN3"};
        case 2: return {"IN4", "IN5", "IN6"};
        case 3: return {"IN1", "IN2", "IN7"}; // one electrode away from SP1
    }
    throw DomainError("spatial projection must be 1, 2 or 3");
}

SequenceProgram sequence_program(const std::vector<std::string>& inputs, int cycles) {
    SequenceProgram p;
    p.input_electrodes = inputs;
    p.cycles = cycles;
    return p;
}

// =============================================================================
// Twin networks
// =============================================================================

namespace {

std::vector<ElectrodeSpec> twin_side(const std::string& prefix, double sign) {
    std::vector<ElectrodeSpec> specs;
    const Vec2 hub{sign * 170.0, 0.0};
    const double arc_r = 230.0;
    for (int k = 0; k < 4; ++k) {
        double angle = kPi * (-0.38 + 0.76 * static_cast<double>(k) / 3.0);
        Vec2 pos = hub + Vec2{sign * arc_r * std::cos(angle), arc_r * std::sin(angle)};
        specs.push_back({prefix + std::to_string(k + 1), pos, ElectrodeRole::Input});
    }
    specs.push_back({prefix + "G", hub, ElectrodeRole::Ground});
    return specs;
}

} // namespace

SimulationCell twin_networks(double left_frequency_hz, double right_frequency_hz,
                             std::uint64_t seed) {
    GrowthParams left_params;
    left_params.seed = seed;
    left_params.growth_frequency_hz = left_frequency_hz;
    left_params.branch_probability = 0.15;
    left_params.field_bias = 0.7;
    NetworkTopology left = grow_network(twin_side("L", -1.0), left_params);

    GrowthParams right_params = left_params;
    right_params.seed = seed + 1;
    right_params.growth_frequency_hz = right_frequency_hz;
    NetworkTopology right = grow_network(twin_side("R", 1.0), right_params);

    TopoBuilder readout;
    NodeId rs = readout.electrode("R_S", {0, -150}, ElectrodeRole::OutputSource);
    NodeId rd = readout.electrode("R_D", {0, 150}, ElectrodeRole::OutputDrain);
    readout.chain(rs, rd, 12, radius_at(80.0), 80.0);

    return assemble_cell({std::move(left), std::move(right), std::move(readout.topo)},
                         default_dl_capacitance_f(), default_device());
}

std::vector<std::string> twin_inputs_left() { return {"L1", "L2", "L3"}; }
std::vector<std::string> twin_inputs_right() { return {"R1", "R2", "R3"}; }

// =============================================================================
// Registry
// =============================================================================

SimulationCell builtin_cell(const std::string& name, std::uint64_t seed) {
    if (name == "y-device") return y_device();
    if (name == "intergating-pair") return intergating_pair();
    if (name == "mac") return mac_cell();
    if (name == "sequence") return sequence_cell(seed);
    if (name == "twins") return twin_networks(80.0, 500.0, seed);
    throw DomainError("unknown builtin cell '" + name + "'");
}

std::vector<std::string> builtin_cell_names() {
    return {"y-device", "intergating-pair", "mac", "sequence", "twins"};
}

} // namespace dendsim::demo
