#include <doctest.h>

#include "dendsim/cell.hpp"
#include "dendsim/demo_cells.hpp"
#include "dendsim/device.hpp"
#include "dendsim/errors.hpp"
#include "dendsim/rng.hpp"

#include <cmath>

using namespace dendsim;

namespace {

/// Straight two-electrode dendrite with n equal segments of the given radius.
SimulationCell chain_cell(int n, double radius_um, DeviceParams device,
                          double length_um = 200.0) {
    NetworkTopology topo;
    topo.nodes.push_back({0, {0, 0}, std::string("S")});
    topo.electrodes.push_back({"S", {0, 0}, ElectrodeRole::Ground});
    NodeId prev = 0;
    for (int i = 1; i <= n; ++i) {
        Vec2 pos{length_um * static_cast<double>(i) / n, 0.0};
        NodeId node = static_cast<NodeId>(topo.nodes.size());
        if (i == n) {
            topo.nodes.push_back({node, pos, std::string("D")});
            topo.electrodes.push_back({"D", pos, ElectrodeRole::Input});
        } else {
            topo.nodes.push_back({node, pos, std::nullopt});
        }
        DendriteSegment seg;
        seg.id = static_cast<SegmentId>(topo.segments.size());
        seg.a = prev;
        seg.b = node;
        seg.length_um = length_um / n;
        seg.radius_um = radius_um;
        seg.growth_frequency_hz = 80.0;
        topo.segments.push_back(seg);
        prev = node;
    }
    return assemble_cell({std::move(topo)}, 0.0, device);
}

DeviceParams test_device_params() {
    DeviceParams p = demo::default_device();
    p.trap_rate = 0.0;
    return p;
}

} // namespace

TEST_CASE("segment_conductance: identity, floor, and lookup error") {
    DeviceParams params = test_device_params();
    SimulationCell cell = chain_cell(1, 1.0, params, 100.0);
    const DendriteSegment& seg = cell.segments().front();

    double g0 = params.bulk_conductivity_s_per_cm * seg.cross_section_cm2() /
                (seg.length_um * 1e-4);

    ElectrochemicalState state = ElectrochemicalState::rested(1);
    CHECK(segment_conductance(seg, state, params) == doctest::Approx(g0));

    state.doping[0] = params.residual_doping;
    CHECK(segment_conductance(seg, state, params) ==
          doctest::Approx(params.residual_doping * g0));

    // Traps block one-for-one but never below the residual floor.
    state.doping[0] = 0.8;
    state.trapped[0] = 0.2;
    CHECK(segment_conductance(seg, state, params) == doctest::Approx(0.6 * g0));
    state.trapped[0] = 0.79;
    CHECK(segment_conductance(seg, state, params) ==
          doctest::Approx(params.residual_doping * g0));

    DendriteSegment unknown = seg;
    unknown.id = 99;
    CHECK_THROWS_AS(segment_conductance(unknown, state, params), LookupError);

    // Sanity scale: 1 S/cm, r = 1 um, L = 100 um gives ~0.31 uS.
    CHECK(g0 == doctest::Approx(3.14159e-7).epsilon(1e-4));
}

TEST_CASE("volumetric capacitance is linear in volume and frequency-ordered") {
    DeviceParams params = test_device_params();
    GrowthParams gp;

    DendriteSegment seg;
    seg.id = 0;
    seg.a = 0;
    seg.b = 1;
    seg.length_um = 50.0;
    seg.radius_um = 1.0;
    seg.growth_frequency_hz = 80.0;
    double c1 = volumetric_capacitance_of(seg, params);
    seg.length_um = 100.0;
    CHECK(volumetric_capacitance_of(seg, params) == doctest::Approx(2.0 * c1));

    DendriteSegment thick = seg, thin = seg;
    thick.radius_um = radius_from_frequency(25.0, gp);
    thin.radius_um = radius_from_frequency(200.0, gp);
    CHECK(volumetric_capacitance_of(thick, params) > volumetric_capacitance_of(thin, params));
}

TEST_CASE("equilibrium_doping: clamped linear law") {
    DeviceParams params = test_device_params();
    double res = params.residual_doping;

    CHECK(equilibrium_doping(0.0, params) == doctest::Approx(1.0));
    CHECK(equilibrium_doping(-0.5, params) == doctest::Approx(1.0));
    CHECK(equilibrium_doping(params.pinchoff_voltage_v, params) == doctest::Approx(res));
    CHECK(equilibrium_doping(10.0 * params.pinchoff_voltage_v, params) == doctest::Approx(res));
    CHECK(equilibrium_doping(params.pinchoff_voltage_v / 2.0, params) ==
          doctest::Approx((1.0 + res) / 2.0));
}

TEST_CASE("step_doping honors the stability contract") {
    SimulationCell cell = chain_cell(4, 1.0, test_device_params());
    ElectrochemicalState state = ElectrochemicalState::rested(cell.segments().size());
    std::vector<double> potentials(cell.nodes().size(), 0.0);

    double limit = cell.min_time_constant_s() / 10.0;
    CHECK_NOTHROW(step_doping(cell, state, potentials, limit));
    CHECK_THROWS_AS(step_doping(cell, state, potentials, 1.5 * limit), StepError);
    CHECK_THROWS_AS(step_doping(cell, state, potentials, -1.0), StepError);
}

TEST_CASE("fixed point: state at equilibrium does not move") {
    SimulationCell cell = chain_cell(3, 1.0, test_device_params());
    ElectrochemicalState state = ElectrochemicalState::rested(cell.segments().size());
    state.electrolyte_potential_v = 0.0;
    std::vector<double> potentials(cell.nodes().size(), 0.0);

    ElectrochemicalState next = step_doping(cell, state, potentials, 1e-3);
    for (std::size_t i = 0; i < state.size(); ++i) {
        CHECK(next.doping[i] == doctest::Approx(state.doping[i]));
        CHECK(next.trapped[i] == doctest::Approx(0.0));
    }
}

TEST_CASE("relaxation matches the closed-form exponential oracle") {
    // Oracle: with constant overpotential, s(t) = s_eq + (s0 - s_eq) exp(-t/tau).
    DeviceParams params = test_device_params();
    SimulationCell cell = chain_cell(1, 1.0, params, 100.0);
    const DendriteSegment& seg = cell.segments().front();

    double dv = 0.3; // positive overpotential: dedoping
    double tau = dedope_time_constant_s(seg, params);
    double s_eq = equilibrium_doping(dv, params);

    ElectrochemicalState state = ElectrochemicalState::rested(1);
    state.electrolyte_potential_v = dv; // channel held at 0 V below
    std::vector<double> potentials(cell.nodes().size(), 0.0);

    double dt = tau / 1000.0;
    double t = 0.0;
    // March one time constant and compare against the oracle.
    while (t < tau) {
        state = step_doping(cell, state, potentials, dt);
        t += dt;
    }
    double oracle = s_eq + (1.0 - s_eq) * std::exp(-t / tau);
    CHECK(state.doping[0] == doctest::Approx(oracle).epsilon(1e-3));

    // Held much longer than tau, the state converges to s_eq within 1%.
    while (t < 8.0 * tau) {
        state = step_doping(cell, state, potentials, dt);
        t += dt;
    }
    CHECK(state.doping[0] == doctest::Approx(s_eq).epsilon(0.01));
}

TEST_CASE("Richardson check: dt vs two half steps differ at O(dt^2)") {
    DeviceParams params = test_device_params();
    SimulationCell cell = chain_cell(3, 1.0, params);
    std::vector<double> potentials(cell.nodes().size(), 0.0);
    for (std::size_t i = 0; i < potentials.size(); ++i)
        potentials[i] = 0.05 * static_cast<double>(i);

    ElectrochemicalState base = ElectrochemicalState::rested(cell.segments().size());
    base.electrolyte_potential_v = 0.45;

    auto difference = [&](double dt) {
        ElectrochemicalState full = step_doping(cell, base, potentials, dt);
        ElectrochemicalState half =
            step_doping(cell, step_doping(cell, base, potentials, dt / 2), potentials, dt / 2);
        double diff = 0.0;
        for (std::size_t i = 0; i < full.size(); ++i)
            diff = std::max(diff, std::abs(full.doping[i] - half.doping[i]));
        return diff;
    };

    double dt = cell.min_time_constant_s() / 20.0;
    double d1 = difference(dt);
    double d2 = difference(dt / 2.0);
    CHECK(d1 > 0.0);
    // Halving dt shrinks the one-step mismatch by ~4x (second order).
    CHECK(d1 / d2 == doctest::Approx(4.0).epsilon(0.2));
}

TEST_CASE("volume-memory scaling: bigger volume, smaller excursion") {
    DeviceParams params = test_device_params();
    SimulationCell small = chain_cell(1, 0.8, params, 100.0);
    SimulationCell large = chain_cell(1, 1.6, params, 100.0);

    auto excursion = [&](SimulationCell& cell) {
        ElectrochemicalState state = ElectrochemicalState::rested(1);
        state.electrolyte_potential_v = 0.3;
        std::vector<double> potentials(cell.nodes().size(), 0.0);
        double dt = small.min_time_constant_s() / 10.0; // same dt for both
        for (int i = 0; i < 50; ++i) state = step_doping(cell, state, potentials, dt);
        return std::abs(1.0 - state.doping[0]);
    };

    CHECK(excursion(large) < excursion(small));
}

TEST_CASE("reversibility control: mirrored pulse pair returns the state") {
    DeviceParams params = test_device_params();
    params.redope_time_constant_s_per_cm3 = params.dedope_time_constant_s_per_cm3;
    SimulationCell cell = chain_cell(1, 1.0, params, 100.0);
    std::vector<double> potentials(cell.nodes().size(), 0.0);
    double tau = cell.min_time_constant_s();
    double dt = tau / 20.0;

    ElectrochemicalState state = ElectrochemicalState::rested(1);
    double s0 = state.doping[0];

    // Long enough for both phases to settle; equal durations.
    state.electrolyte_potential_v = 0.2; // dedope pulse
    for (int i = 0; i < 100; ++i) state = step_doping(cell, state, potentials, dt);
    CHECK(state.doping[0] < 0.75);

    state.electrolyte_potential_v = -0.2; // mirrored redope, equal duration
    for (int i = 0; i < 100; ++i) state = step_doping(cell, state, potentials, dt);

    CHECK(state.doping[0] == doctest::Approx(s0).epsilon(0.01));
    CHECK(state.trapped[0] == 0.0);
}

TEST_CASE("trap accumulation drives a monotone conductance decline") {
    DeviceParams params = demo::default_device();
    REQUIRE(params.trap_rate > 0.0);
    SimulationCell cell = chain_cell(1, 1.0, params, 100.0);
    const DendriteSegment& seg = cell.segments().front();
    std::vector<double> potentials(cell.nodes().size(), 0.0);
    double dt = cell.min_time_constant_s() / 10.0;
    double tau = cell.min_time_constant_s();

    ElectrochemicalState state = ElectrochemicalState::rested(1);
    double previous_g = segment_conductance(seg, state, params);
    for (int cycle = 0; cycle < 5; ++cycle) {
        state.electrolyte_potential_v = 0.5; // dedope
        for (double t = 0.0; t < 3.0 * tau; t += dt)
            state = step_doping(cell, state, potentials, dt);
        state.electrolyte_potential_v = -0.1; // recover
        for (double t = 0.0; t < 6.0 * tau; t += dt)
            state = step_doping(cell, state, potentials, dt);

        double g = segment_conductance(seg, state, params);
        CHECK(g < previous_g);
        previous_g = g;
        CHECK(state.trapped[0] > 0.0);
    }
}

TEST_CASE("property: s and q stay in range under random step programs") {
    DeviceParams params = demo::default_device();
    SimulationCell cell = chain_cell(3, 1.0, params);
    double dt = cell.min_time_constant_s() / 10.0;

    Rng rng(2024);
    for (int program = 0; program < 100; ++program) {
        ElectrochemicalState state = ElectrochemicalState::rested(cell.segments().size());
        std::vector<double> potentials(cell.nodes().size(), 0.0);
        for (int step = 0; step < 40; ++step) {
            state.electrolyte_potential_v = rng.uniform(-1.2, 1.2);
            for (auto& v : potentials) v = rng.uniform(-0.9, 0.9);
            state = step_doping(cell, state, potentials, dt);
            for (std::size_t i = 0; i < state.size(); ++i) {
                CHECK(state.doping[i] >= params.residual_doping - 1e-15);
                CHECK(state.doping[i] <= 1.0 + 1e-15);
                CHECK(state.trapped[i] >= -1e-15);
                CHECK(state.trapped[i] <= 1.0 - params.residual_doping + 1e-15);
                CHECK(state.doping[i] + state.trapped[i] <= 1.0 + 1e-12);
            }
        }
    }
}
