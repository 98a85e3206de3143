#include <doctest.h>

#include "dendsim/cell.hpp"
#include "dendsim/demo_cells.hpp"
#include "dendsim/errors.hpp"
#include "dendsim/serialize.hpp"
#include "dendsim/topology.hpp"

#include <set>

using namespace dendsim;

namespace {

std::vector<ElectrodeSpec> four_pad_mea() {
    return {
        {"A", {-200, 0}, ElectrodeRole::Input},
        {"B", {200, 60}, ElectrodeRole::Input},
        {"C", {150, -180}, ElectrodeRole::Input},
        {"G", {0, 0}, ElectrodeRole::Ground},
    };
}

GrowthParams stochastic_params(std::uint64_t seed) {
    GrowthParams p;
    p.seed = seed;
    p.branch_probability = 0.2;
    p.field_bias = 0.65;
    return p;
}

} // namespace

TEST_CASE("radius_from_frequency follows the thinning power law") {
    GrowthParams p;
    p.reference_radius_um = 1.0;
    p.reference_frequency_hz = 80.0;
    p.thinning_exponent = 0.5;

    CHECK(radius_from_frequency(80.0, p) == doctest::Approx(1.0));
    CHECK(radius_from_frequency(4.0 * 80.0, p) == doctest::Approx(0.5));
    // Thicker at 25 Hz than at 200 Hz, for any valid parameter set.
    for (double exponent : {0.2, 0.5, 1.0}) {
        p.thinning_exponent = exponent;
        CHECK(radius_from_frequency(25.0, p) > radius_from_frequency(200.0, p));
    }
    CHECK_THROWS_AS(radius_from_frequency(0.0, p), DomainError);
    CHECK_THROWS_AS(radius_from_frequency(-5.0, p), DomainError);
}

TEST_CASE("frequency ordering holds across the whole range") {
    GrowthParams p;
    double previous = radius_from_frequency(10.0, p);
    for (double f = 20.0; f <= 640.0; f *= 2.0) {
        double r = radius_from_frequency(f, p);
        CHECK(r < previous);
        previous = r;
    }
}

TEST_CASE("grow_network is deterministic for a fixed seed") {
    auto electrodes = four_pad_mea();
    auto params = stochastic_params(42);
    NetworkTopology a = grow_network(electrodes, params);
    NetworkTopology b = grow_network(electrodes, params);
    CHECK(topology_to_string(a) == topology_to_string(b));
    CHECK(a.segments.size() > 0);
}

TEST_CASE("different seeds give different topologies (100 seed pairs)") {
    auto electrodes = four_pad_mea();
    int differing = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        NetworkTopology a = grow_network(electrodes, stochastic_params(2 * seed));
        NetworkTopology b = grow_network(electrodes, stochastic_params(2 * seed + 1));
        if (topology_to_string(a) != topology_to_string(b)) ++differing;
    }
    CHECK(differing == 100);
}

TEST_CASE("uniqueness at scale: 100 seeds, all topologies distinct") {
    auto electrodes = four_pad_mea();
    std::set<std::string> canonical;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        auto params = stochastic_params(seed);
        canonical.insert(topology_to_string(grow_network(electrodes, params)));
    }
    CHECK(canonical.size() == 100);
}

TEST_CASE("every grown topology passes validation") {
    auto electrodes = four_pad_mea();
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        NetworkTopology topo = grow_network(electrodes, stochastic_params(seed));
        auto issues = validate_topology(topo);
        CAPTURE(seed);
        CHECK(issues.empty());
        for (const auto& seg : topo.segments) {
            CHECK(seg.length_um > 0);
            CHECK(seg.radius_um > 0);
            CHECK(seg.a != seg.b);
        }
    }
}

TEST_CASE("degenerate parameters give a single unbranched path per source") {
    std::vector<ElectrodeSpec> electrodes = {
        {"IN", {-200, 0}, ElectrodeRole::Input},
        {"G", {200, 0}, ElectrodeRole::Ground},
    };
    GrowthParams p;
    p.branch_probability = 0.0;
    p.field_bias = 1.0;
    NetworkTopology topo = grow_network(electrodes, p);

    CHECK_FALSE(topo.unconnected);
    // A straight chain: every node has degree <= 2 and the electrodes degree 1.
    std::vector<int> degree(topo.nodes.size(), 0);
    for (const auto& s : topo.segments) {
        degree[s.a]++;
        degree[s.b]++;
    }
    CHECK(degree[topo.electrode_node("IN")] == 1);
    CHECK(degree[topo.electrode_node("G")] == 1);
    for (int d : degree) CHECK(d <= 2);
}

TEST_CASE("exhausted step budget flags the topology unconnected") {
    std::vector<ElectrodeSpec> electrodes = {
        {"IN", {-2000, 0}, ElectrodeRole::Input},
        {"G", {2000, 0}, ElectrodeRole::Ground},
    };
    GrowthParams p;
    p.step_budget = 5; // nowhere near enough for a 4 mm gap at 25 um steps
    p.field_bias = 1.0;
    p.branch_probability = 0.0;
    NetworkTopology topo = grow_network(electrodes, p);
    CHECK(topo.unconnected);
    CHECK(topo.segments.size() == 5);
}

TEST_CASE("grow_network input validation") {
    CHECK_THROWS_AS(grow_network({{"A", {0, 0}, ElectrodeRole::Input}}, GrowthParams{}),
                    DomainError);
    auto electrodes = four_pad_mea();
    electrodes.push_back({"A", {50, 50}, ElectrodeRole::Input}); // duplicate id
    CHECK_THROWS_AS(grow_network(electrodes, GrowthParams{}), DomainError);

    GrowthParams bad;
    bad.branch_probability = 1.5;
    CHECK_THROWS_AS(grow_network(four_pad_mea(), bad), DomainError);
}

TEST_CASE("validate_topology reports specific violations") {
    NetworkTopology topo;
    topo.nodes = {{0, {0, 0}, std::string("E1")}, {1, {100, 0}, std::nullopt}};
    topo.electrodes = {{"E1", {0, 0}, ElectrodeRole::Input}};
    DendriteSegment seg;
    seg.id = 0;
    seg.a = 0;
    seg.b = 1;
    seg.length_um = 100;
    seg.radius_um = 1;
    seg.growth_frequency_hz = 80;
    topo.segments = {seg};

    SUBCASE("valid topology: empty report") { CHECK(validate_topology(topo).empty()); }

    SUBCASE("dangling endpoint") {
        topo.segments[0].b = 7;
        auto issues = validate_topology(topo);
        REQUIRE(issues.size() == 1);
        CHECK(issues[0].kind == "dangling endpoint");
    }

    SUBCASE("floating component") {
        topo.nodes.push_back({2, {0, 50}, std::nullopt});
        topo.nodes.push_back({3, {50, 50}, std::nullopt});
        DendriteSegment orphan = seg;
        orphan.id = 1;
        orphan.a = 2;
        orphan.b = 3;
        orphan.length_um = 50;
        topo.segments.push_back(orphan);
        auto issues = validate_topology(topo);
        REQUIRE(issues.size() == 1);
        CHECK(issues[0].kind == "floating component");
    }

    SUBCASE("self loop") {
        topo.segments[0].b = 0;
        auto issues = validate_topology(topo);
        bool found = false;
        for (const auto& issue : issues) found = found || issue.kind == "self-loop segment";
        CHECK(found);
    }

    SUBCASE("nonpositive geometry") {
        topo.segments[0].radius_um = 0.0;
        auto issues = validate_topology(topo);
        REQUIRE(issues.size() == 1);
        CHECK(issues[0].kind == "nonpositive geometry");
    }
}

TEST_CASE("assemble_cell merges topologies around one electrolyte") {
    SUBCASE("single topology") {
        SimulationCell cell = demo::y_device();
        CHECK(cell.topologies().size() == 1);
        CHECK(cell.electrode_ids().size() == 4);
        CHECK(cell.segments().size() == 30);
    }

    SUBCASE("two disjoint topologies couple through the same cell") {
        SimulationCell cell = demo::intergating_pair();
        CHECK(cell.topologies().size() == 2);
        CHECK(cell.electrode_ids().size() == 4);
        // Global segment ids are dense across both topologies.
        for (std::size_t i = 0; i < cell.segments().size(); ++i)
            CHECK(cell.segments()[i].id == static_cast<SegmentId>(i));
    }

    SUBCASE("duplicate electrode ids across topologies fail") {
        NetworkTopology t1, t2;
        for (auto* t : {&t1, &t2}) {
            t->nodes = {{0, {0, 0}, std::string("X")}, {1, {50, 0}, std::nullopt}};
            t->electrodes = {{"X", {0, 0}, ElectrodeRole::Input}};
            DendriteSegment seg;
            seg.id = 0;
            seg.a = 0;
            seg.b = 1;
            seg.length_um = 50;
            seg.radius_um = 1;
            seg.growth_frequency_hz = 80;
            t->segments = {seg};
        }
        CHECK_THROWS_AS(assemble_cell({t1, t2}, 1e-12), DomainError);
    }

    SUBCASE("empty topology list fails") {
        CHECK_THROWS_AS(assemble_cell({}, 1e-12), DomainError);
    }
}

TEST_CASE("junction splitting keeps segment geometry consistent") {
    // A dense network with many collisions; check lengths match endpoints.
    auto electrodes = four_pad_mea();
    GrowthParams p = stochastic_params(7);
    p.branch_probability = 0.35;
    NetworkTopology topo = grow_network(electrodes, p);
    REQUIRE(validate_topology(topo).empty());
    for (const auto& seg : topo.segments) {
        double euclid = distance(topo.node(seg.a).position, topo.node(seg.b).position);
        CHECK(seg.length_um == doctest::Approx(euclid).epsilon(1e-9));
    }
}
