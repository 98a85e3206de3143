#include <doctest.h>

#include "dendsim/cell.hpp"
#include "dendsim/demo_cells.hpp"
#include "dendsim/errors.hpp"
#include "dendsim/rng.hpp"
#include "dendsim/solver.hpp"

#include <cmath>
#include <vector>

using namespace dendsim;

namespace {

// =============================================================================
// Independent dense oracle: naive Gaussian elimination with partial pivoting,
// assembled straight from the segment list. Shares no code with the solver.
// =============================================================================

std::vector<double> dense_oracle(const SimulationCell& cell, const ElectrochemicalState& state,
                                 const BoundaryCondition& bc) {
    const std::size_t n = cell.nodes().size();
    std::vector<double> fixed_value(n, 0.0);
    std::vector<bool> fixed(n, false);
    for (const auto& [id, v] : bc.fixed) {
        fixed[cell.electrode_node(id)] = true;
        fixed_value[cell.electrode_node(id)] = v;
    }

    std::vector<int> index(n, -1);
    int m = 0;
    for (std::size_t i = 0; i < n; ++i)
        if (!fixed[i]) index[i] = m++;

    std::vector<std::vector<double>> a(m, std::vector<double>(m + 1, 0.0));
    for (const auto& seg : cell.segments()) {
        double g = segment_conductance(seg, state, cell.device());
        int ia = index[seg.a], ib = index[seg.b];
        if (ia >= 0) a[ia][ia] += g;
        if (ib >= 0) a[ib][ib] += g;
        if (ia >= 0 && ib >= 0) {
            a[ia][ib] -= g;
            a[ib][ia] -= g;
        } else if (ia >= 0) {
            a[ia][m] += g * fixed_value[seg.b];
        } else if (ib >= 0) {
            a[ib][m] += g * fixed_value[seg.a];
        }
    }

    for (int col = 0; col < m; ++col) {
        int pivot = col;
        for (int row = col + 1; row < m; ++row)
            if (std::abs(a[row][col]) > std::abs(a[pivot][col])) pivot = row;
        std::swap(a[col], a[pivot]);
        for (int row = col + 1; row < m; ++row) {
            if (a[col][col] == 0.0) continue;
            double f = a[row][col] / a[col][col];
            for (int k = col; k <= m; ++k) a[row][k] -= f * a[col][k];
        }
    }
    std::vector<double> x(m, 0.0);
    for (int row = m - 1; row >= 0; --row) {
        double sum = a[row][m];
        for (int k = row + 1; k < m; ++k) sum -= a[row][k] * x[k];
        x[row] = sum / a[row][row];
    }

    std::vector<double> potentials(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        potentials[i] = fixed[i] ? fixed_value[i] : x[index[i]];
    return potentials;
}

/// Random connected resistive network on n nodes with two electrodes.
SimulationCell random_network(int n, std::uint64_t seed) {
    Rng rng(seed);
    NetworkTopology topo;
    for (int i = 0; i < n; ++i) {
        Vec2 pos{rng.uniform(-300, 300), rng.uniform(-300, 300)};
        std::optional<std::string> electrode;
        if (i == 0) electrode = "P";
        if (i == 1) electrode = "Q";
        topo.nodes.push_back({i, pos, electrode});
    }
    topo.electrodes = {{"P", topo.nodes[0].position, ElectrodeRole::Input},
                       {"Q", topo.nodes[1].position, ElectrodeRole::Ground}};
    auto add_segment = [&](NodeId a, NodeId b) {
        DendriteSegment seg;
        seg.id = static_cast<SegmentId>(topo.segments.size());
        seg.a = a;
        seg.b = b;
        seg.length_um = rng.uniform(10.0, 120.0);
        seg.radius_um = rng.uniform(0.4, 2.0);
        seg.growth_frequency_hz = 80.0;
        topo.segments.push_back(seg);
    };
    for (int i = 1; i < n; ++i) add_segment(static_cast<NodeId>(rng.below(i)), i); // spanning tree
    for (int extra = 0; extra < n / 2; ++extra) {
        NodeId a = static_cast<NodeId>(rng.below(n));
        NodeId b = static_cast<NodeId>(rng.below(n));
        if (a != b) add_segment(a, b);
    }
    return assemble_cell({std::move(topo)}, 1e-12, demo::default_device());
}

ElectrochemicalState random_state(const SimulationCell& cell, std::uint64_t seed) {
    Rng rng(seed);
    ElectrochemicalState state = ElectrochemicalState::rested(cell.segments().size());
    for (auto& s : state.doping) s = rng.uniform(0.1, 1.0);
    return state;
}

SimulationCell series_pair() {
    NetworkTopology topo;
    topo.nodes = {{0, {0, 0}, std::string("L")},
                  {1, {100, 0}, std::nullopt},
                  {2, {200, 0}, std::string("R")}};
    topo.electrodes = {{"L", {0, 0}, ElectrodeRole::Input},
                       {"R", {200, 0}, ElectrodeRole::Ground}};
    for (int i = 0; i < 2; ++i) {
        DendriteSegment seg;
        seg.id = i;
        seg.a = i;
        seg.b = i + 1;
        seg.length_um = 100;
        seg.radius_um = 1;
        seg.growth_frequency_hz = 80;
        topo.segments.push_back(seg);
    }
    return assemble_cell({std::move(topo)}, 0.0, demo::default_device());
}

} // namespace

TEST_CASE("voltage divider: two equal segments in series") {
    SimulationCell cell = series_pair();
    ElectrochemicalState state = ElectrochemicalState::rested(2);
    BoundaryCondition bc;
    bc.set("L", 1.0).ground("R");

    LinearSolution sol = solve_linear_network(cell, state, bc);
    CHECK(sol.node_potentials[1] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(sol.terminal_currents.at("L") == doctest::Approx(-sol.terminal_currents.at("R")));
    CHECK(sol.kcl_residual <= 1e-12 * sol.max_terminal_current);
    CHECK(sol.current_sum <= 1e-12 * sol.max_terminal_current);
}

TEST_CASE("symmetric Y: one arm driven, two grounded, center at a third") {
    NetworkTopology topo;
    topo.nodes = {{0, {0, 0}, std::nullopt},
                  {1, {100, 0}, std::string("A")},
                  {2, {-100, 50}, std::string("B")},
                  {3, {-100, -50}, std::string("C")}};
    topo.electrodes = {{"A", {100, 0}, ElectrodeRole::Input},
                       {"B", {-100, 50}, ElectrodeRole::Ground},
                       {"C", {-100, -50}, ElectrodeRole::Ground}};
    for (int i = 0; i < 3; ++i) {
        DendriteSegment seg;
        seg.id = i;
        seg.a = 0;
        seg.b = i + 1;
        seg.length_um = 100;
        seg.radius_um = 1;
        seg.growth_frequency_hz = 80;
        topo.segments.push_back(seg);
    }
    SimulationCell cell = assemble_cell({std::move(topo)}, 0.0, demo::default_device());

    BoundaryCondition bc;
    bc.set("A", 1.0).ground("B").ground("C");
    LinearSolution sol = solve_linear_network(cell, ElectrochemicalState::rested(3), bc);
    CHECK(sol.node_potentials[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("random 12-node network matches the dense oracle to 1e-9") {
    for (std::uint64_t seed : {1ull, 2ull, 3ull, 4ull, 5ull}) {
        SimulationCell cell = random_network(12, seed);
        ElectrochemicalState state = random_state(cell, seed + 100);
        BoundaryCondition bc;
        bc.set("P", 0.7).ground("Q");

        LinearSolution sol = solve_linear_network(cell, state, bc);
        std::vector<double> oracle = dense_oracle(cell, state, bc);

        double v_scale = 0.7;
        for (std::size_t i = 0; i < oracle.size(); ++i) {
            CAPTURE(seed);
            CAPTURE(i);
            CHECK(std::abs(sol.node_potentials[i] - oracle[i]) <= 1e-9 * v_scale);
        }
    }
}

TEST_CASE("charge conservation on random networks") {
    for (std::uint64_t seed : {11ull, 12ull, 13ull}) {
        SimulationCell cell = random_network(20, seed);
        ElectrochemicalState state = random_state(cell, seed);
        BoundaryCondition bc;
        bc.set("P", -0.9).ground("Q");
        LinearSolution sol = solve_linear_network(cell, state, bc);
        CHECK(sol.kcl_residual <= 1e-12 * sol.max_terminal_current);
        CHECK(sol.current_sum <= 1e-12 * sol.max_terminal_current);
    }
}

TEST_CASE("superposition: scaling the boundary scales the solution") {
    SimulationCell cell = random_network(15, 77);
    ElectrochemicalState state = random_state(cell, 78);
    BoundaryCondition bc;
    bc.set("P", 0.4).ground("Q");

    LinearSolution base = solve_linear_network(cell, state, bc);
    LinearSolution scaled = solve_linear_network(cell, state, bc.scaled(2.5));
    for (std::size_t i = 0; i < base.node_potentials.size(); ++i)
        CHECK(scaled.node_potentials[i] ==
              doctest::Approx(2.5 * base.node_potentials[i]).epsilon(1e-12));
    CHECK(scaled.terminal_currents.at("P") ==
          doctest::Approx(2.5 * base.terminal_currents.at("P")).epsilon(1e-12));
}

TEST_CASE("reciprocity: trans-conductance is symmetric on frozen networks") {
    SimulationCell cell = random_network(18, 99);
    ElectrochemicalState state = random_state(cell, 101);

    BoundaryCondition forward;
    forward.set("P", 1.0).ground("Q");
    double i_q = solve_linear_network(cell, state, forward).terminal_currents.at("Q");

    BoundaryCondition reverse;
    reverse.set("Q", 1.0).ground("P");
    double i_p = solve_linear_network(cell, state, reverse).terminal_currents.at("P");

    CHECK(i_q == doctest::Approx(i_p).epsilon(1e-12));
}

TEST_CASE("solver errors name the offending component") {
    SUBCASE("all electrodes floating") {
        SimulationCell cell = series_pair();
        BoundaryCondition bc;
        CHECK_THROWS_AS(solve_linear_network(cell, ElectrochemicalState::rested(2), bc),
                        SolverError);
    }

    SUBCASE("disconnected component without a reference") {
        // Two disjoint dendrites; only one is driven.
        SimulationCell cell = demo::intergating_pair();
        BoundaryCondition bc;
        bc.set("B_D", 0.5).ground("B_S"); // thin dendrite left floating entirely
        try {
            solve_linear_network(cell, ElectrochemicalState::rested(cell.segments().size()), bc);
            FAIL("expected SolverError");
        } catch (const SolverError& e) {
            std::string msg = e.what();
            CHECK(msg.find("T_") != std::string::npos); // names a thin-dendrite electrode
        }
    }
}

TEST_CASE("electrolyte potential is a capacitance-weighted mean") {
    SUBCASE("all nodes at zero") {
        SimulationCell cell = demo::y_device();
        std::vector<double> potentials(cell.nodes().size(), 0.0);
        CHECK(electrolyte_potential(cell, ElectrochemicalState::rested(cell.segments().size()),
                                    potentials) == doctest::Approx(0.0));
    }

    SUBCASE("single segment spans 0..V: midpoint V/2") {
        NetworkTopology topo;
        topo.nodes = {{0, {0, 0}, std::string("L")}, {1, {100, 0}, std::string("R")}};
        topo.electrodes = {{"L", {0, 0}, ElectrodeRole::Input},
                           {"R", {100, 0}, ElectrodeRole::Ground}};
        DendriteSegment seg;
        seg.id = 0;
        seg.a = 0;
        seg.b = 1;
        seg.length_um = 100;
        seg.radius_um = 1;
        seg.growth_frequency_hz = 80;
        topo.segments = {seg};
        SimulationCell cell = assemble_cell({std::move(topo)}, 0.0, demo::default_device());
        std::vector<double> potentials{0.8, 0.0};
        CHECK(electrolyte_potential(cell, ElectrochemicalState::rested(1), potentials) ==
              doctest::Approx(0.4));
    }

    SUBCASE("Y device at -0.9 V: grounded capacitance dominates") {
        SimulationCell cell = demo::y_device();
        BoundaryCondition bc;
        bc.ground("EC").set("E3", -0.9);
        ElectrochemicalState state = ElectrochemicalState::rested(cell.segments().size());
        LinearSolution sol = solve_linear_network(cell, state, bc);
        double v = electrolyte_potential(cell, state, sol.node_potentials);
        CHECK(std::abs(v - 0.0) < std::abs(v - (-0.45)));
        CHECK(v < 0.0);
    }

    SUBCASE("convex combination of node potentials on random networks") {
        for (std::uint64_t seed : {5ull, 6ull, 7ull}) {
            SimulationCell cell = random_network(14, seed);
            ElectrochemicalState state = random_state(cell, seed + 3);
            BoundaryCondition bc;
            bc.set("P", 0.6).ground("Q");
            LinearSolution sol = solve_linear_network(cell, state, bc);
            double v = electrolyte_potential(cell, state, sol.node_potentials);
            double lo = *std::min_element(sol.node_potentials.begin(), sol.node_potentials.end());
            double hi = *std::max_element(sol.node_potentials.begin(), sol.node_potentials.end());
            CHECK(v >= lo - 1e-15);
            CHECK(v <= hi + 1e-15);
        }
    }
}

TEST_CASE("solve_dc: grounded cell stays fully doped with zero current") {
    SimulationCell cell = demo::y_device();
    BoundaryCondition bc;
    for (const auto& id : cell.electrode_ids()) bc.ground(id);
    OperatingPoint op = solve_dc(cell, bc);
    for (double s : op.state.doping) CHECK(s == doctest::Approx(1.0));
    for (const auto& [id, i] : op.terminal_currents) CHECK(std::abs(i) < 1e-18);
}

TEST_CASE("solve_dc: Y device plateau regime at -0.9 V") {
    SimulationCell cell = demo::y_device();
    BoundaryCondition bc;
    bc.ground("EC").set("E3", -0.9);
    OperatingPoint negative = solve_dc(cell, bc);

    double min_s_negative = 1.0;
    for (double s : negative.state.doping) min_s_negative = std::min(min_s_negative, s);
    // Conducting-arm doping collapses toward the residual floor.
    CHECK(min_s_negative < cell.device().residual_doping + 0.05);

    BoundaryCondition positive_bc;
    positive_bc.ground("EC").set("E3", 0.9);
    OperatingPoint positive = solve_dc(cell, positive_bc);
    double min_s_positive = 1.0;
    for (double s : positive.state.doping) min_s_positive = std::min(min_s_positive, s);
    CHECK(min_s_positive > min_s_negative);
}

TEST_CASE("solve_dc is idempotent: resolving from its own output converges fast") {
    SimulationCell cell = demo::y_device();
    BoundaryCondition bc;
    bc.ground("EC").set("E3", -0.7);
    OperatingPoint first = solve_dc(cell, bc);
    OperatingPoint second = solve_dc(cell, bc, first.state);
    CHECK(second.iterations <= 2);
    for (std::size_t i = 0; i < first.state.size(); ++i)
        CHECK(second.state.doping[i] == doctest::Approx(first.state.doping[i]).epsilon(1e-8));
}

TEST_CASE("run_transient: constant zero drive gives a flat zero trace") {
    SimulationCell cell = demo::y_device();
    DriveWaveform wf;
    BoundaryCondition bc;
    for (const auto& id : cell.electrode_ids()) bc.ground(id);
    wf.append_phase(1.0, bc);

    double dt = stability_dt_limit(cell);
    TransientResult result =
        run_transient(cell, wf, dt, ElectrochemicalState::rested(cell.segments().size()));
    REQUIRE(result.trace.n_samples() > 0);
    for (std::size_t k = 0; k < result.trace.n_samples(); ++k) {
        for (double i : result.trace.electrode_currents[k]) CHECK(std::abs(i) < 1e-18);
        CHECK(result.trace.electrolyte_v[k] == doctest::Approx(0.0));
    }
    for (double s : result.final_state.doping) CHECK(s == doctest::Approx(1.0));
}

TEST_CASE("run_transient: halving dt changes sampled currents by < 0.1%") {
    SimulationCell cell = demo::mac_cell();
    DriveWaveform wf;
    BoundaryCondition rest;
    for (const auto& id : cell.electrode_ids()) rest.ground(id);
    rest.set("R_D", 0.1);
    BoundaryCondition pulse = rest;
    pulse.set("IN1", 0.6);
    wf.append_phase(0.2, rest);
    wf.append_phase(0.2, pulse);
    wf.append_phase(0.2, rest);

    double dt = stability_dt_limit(cell) / 2.0;
    ElectrochemicalState initial = ElectrochemicalState::rested(cell.segments().size());
    TransientResult coarse = run_transient(cell, wf, dt, initial);
    TransientResult fine = run_transient(cell, wf, dt / 2.0, initial, {2, 0.0, 0.0});

    REQUIRE(coarse.trace.n_samples() == fine.trace.n_samples());
    std::size_t drain = coarse.trace.electrode_index("R_D");
    for (std::size_t k = 0; k < coarse.trace.n_samples(); ++k) {
        double a = coarse.trace.electrode_currents[k][drain];
        double b = fine.trace.electrode_currents[k][drain];
        CHECK(std::abs(a - b) <= 1e-3 * std::abs(b));
    }
}

TEST_CASE("run_transient: 0.6 V pulse dips the readout, then partial recovery") {
    SimulationCell cell = demo::mac_cell();
    BoundaryCondition rest;
    for (const auto& id : cell.electrode_ids()) rest.ground(id);
    rest.set("R_D", 0.1);
    BoundaryCondition pulse = rest;
    pulse.set("IN3", 0.6);

    DriveWaveform wf;
    wf.append_phase(1.0, rest);  // settle
    wf.append_phase(0.2, pulse); // Fig-3 style input pulse
    wf.append_phase(1.0, rest);  // recovery

    double dt = std::min(stability_dt_limit(cell), 0.005);
    TransientResult result =
        run_transient(cell, wf, dt, ElectrochemicalState::rested(cell.segments().size()));
    const Trace& trace = result.trace;
    std::size_t drain = trace.electrode_index("R_D");

    auto current_at = [&](double t) {
        std::size_t best = 0;
        for (std::size_t k = 0; k < trace.n_samples(); ++k)
            if (std::abs(trace.time_s[k] - t) < std::abs(trace.time_s[best] - t)) best = k;
        return trace.electrode_currents[best][drain];
    };

    double before = current_at(0.99);
    double during = current_at(1.19);  // end of pulse
    double after = current_at(1.25);   // shortly after release
    double recovered = current_at(2.15);

    CHECK(during < before);             // dip while the input fires
    CHECK(after > during);              // recovery begins
    CHECK(recovered > after);           // and continues
    CHECK(recovered < before * 1.001);  // but is not instantaneous
}

TEST_CASE("run_transient rejects a dt above the stability limit") {
    SimulationCell cell = demo::y_device();
    DriveWaveform wf;
    BoundaryCondition bc;
    bc.ground("EC").set("E3", 0.5);
    wf.append_phase(0.1, bc);
    CHECK_THROWS_AS(run_transient(cell, wf, 10.0 * stability_dt_limit(cell),
                                  ElectrochemicalState::rested(cell.segments().size())),
                    StepError);
}
