#pragma once

#include "dendsim/geometry.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace dendsim {

// =============================================================================
// Network geometry: electrodes, nodes, dendrite segments, stochastic growth
// =============================================================================

using NodeId = int;
using SegmentId = int;

enum class ElectrodeRole {
    Input,        ///< drive electrode, also a growth source
    OutputSource, ///< readout dendrite terminal, grown toward OutputDrain
    OutputDrain,
    Ground,       ///< preferred growth target; held at 0 V by most protocols
    Floating,     ///< present on the MEA but never addressed
};

std::string to_string(ElectrodeRole role);
ElectrodeRole electrode_role_from_string(const std::string& s);

struct ElectrodeSpec {
    std::string id;
    Vec2 position;                              // µm
    ElectrodeRole role = ElectrodeRole::Input;
};

/// A node is either an electrode landing site or a junction created by growth.
struct Node {
    NodeId id = -1;
    Vec2 position;
    std::optional<std::string> electrode;       // electrode id when applicable
};

struct DendriteSegment {
    SegmentId id = -1;
    NodeId a = -1;
    NodeId b = -1;
    double length_um = 0.0;
    double radius_um = 0.0;
    double growth_frequency_hz = 0.0;

    double volume_um3() const;
    double volume_cm3() const { return volume_um3() * 1e-12; }
    double cross_section_cm2() const;
};

struct GrowthParams {
    double reference_radius_um = 1.0;   ///< radius obtained at reference_frequency
    double reference_frequency_hz = 80.0;
    double thinning_exponent = 0.5;     ///< radius ∝ f^(-thinning_exponent)
    double step_length_um = 25.0;
    double branch_probability = 0.15;   ///< per step
    double field_bias = 0.7;            ///< 1 = straight toward target, 0 = pure random walk
    double growth_frequency_hz = 80.0;  ///< default AC drive; sets segment radii
    int step_budget = 400;              ///< per growth source, shared with its branches
    std::uint64_t seed = 0;

    void validate() const;              // throws DomainError
};

/// Thin-to-thick mapping between electropolymerization frequency and fiber
/// radius: radius = reference_radius * (f / f_ref)^(-thinning_exponent).
/// Strictly decreasing in frequency; throws DomainError for f <= 0.
double radius_from_frequency(double frequency_hz, const GrowthParams& params);

struct NetworkTopology {
    std::vector<Node> nodes;
    std::vector<DendriteSegment> segments;
    std::vector<ElectrodeSpec> electrodes;
    GrowthParams growth;      // provenance echo; defaults for hand-built cells
    bool unconnected = false; // a growth source never reached another electrode

    const Node& node(NodeId id) const;
    NodeId electrode_node(const std::string& electrode_id) const; // LookupError if absent
    double segment_midpoint_x(SegmentId) const = delete;          // use midpoint()
    Vec2 midpoint(const DendriteSegment& seg) const;
};

struct ValidationIssue {
    std::string kind;   // "dangling endpoint", "floating component", ...
    std::string detail;
};

/// Report-only check of the NetworkTopology invariants. Empty iff valid.
std::vector<ValidationIssue> validate_topology(const NetworkTopology& topo);

/// Grow a dendritic network as a biased branching random walk on the plane.
///
/// Every electrode with role Input or OutputSource seeds a walk toward its
/// designated counterpart (nearest Ground electrode for inputs, nearest
/// OutputDrain for output sources; nearest non-floating electrode when no
/// preferred target exists). Walks step by step_length_um, drift toward the
/// target with field_bias, branch with branch_probability, and terminate on
/// contact with any electrode or any existing segment (a junction node is
/// created there, splitting the touched segment), or once the per-source step
/// budget runs out. Deterministic for a fixed params.seed.
NetworkTopology grow_network(const std::vector<ElectrodeSpec>& electrodes,
                             const GrowthParams& params);

} // namespace dendsim
