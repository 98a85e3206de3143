#pragma once

#include "dendsim/device.hpp"
#include "dendsim/topology.hpp"

#include <map>
#include <string>
#include <vector>

namespace dendsim {

// =============================================================================
// SimulationCell: one or more topologies sharing a single electrolyte
// =============================================================================

struct CellNode {
    Vec2 position;
    std::optional<std::string> electrode;
    int topology_index = -1;
    NodeId local_id = -1;
};

/// Immutable assembled cell. Node and segment ids are re-indexed globally
/// (dense, in topology order) so that one ElectrochemicalState covers the
/// whole cell. Physically disconnected topologies couple only through the
/// shared electrolyte node, whose potential is the coupling-capacitance
/// weighted mean of channel potentials plus the electrode double layers.
class SimulationCell {
public:
    SimulationCell() = default;

    const std::vector<NetworkTopology>& topologies() const { return topologies_; }
    const std::vector<CellNode>& nodes() const { return nodes_; }
    const std::vector<DendriteSegment>& segments() const { return segments_; }
    const DeviceParams& device() const { return device_; }
    double dl_capacitance_f() const { return dl_capacitance_f_; }
    double distance_exponent() const { return distance_exponent_; }

    /// Electrode ids in deterministic order (topology order, then spec order).
    const std::vector<std::string>& electrode_ids() const { return electrode_ids_; }
    NodeId electrode_node(const std::string& electrode_id) const; // LookupError
    bool has_electrode(const std::string& electrode_id) const;
    ElectrodeRole electrode_role(const std::string& electrode_id) const;
    /// True when the electrode has no attached dendrite segment.
    bool electrode_is_bare(const std::string& electrode_id) const;

    /// Coupling capacitance of a segment toward the electrolyte:
    /// volumetric capacitance times the distance weight (d_mean/d)^exponent,
    /// d measured from segment midpoint to the electrode centroid.
    double coupling_capacitance_f(SegmentId id) const { return coupling_c_[id]; }
    double segment_capacitance_f(SegmentId id) const { return segment_c_[id]; }
    Vec2 electrolyte_centroid() const { return centroid_; }

    Vec2 segment_midpoint(const DendriteSegment& seg) const;

    /// Smallest relaxation time constant over segments and both directions.
    double min_time_constant_s() const { return min_tau_s_; }

    /// Per-node incident segments as (segment id, other endpoint).
    const std::vector<std::vector<std::pair<SegmentId, NodeId>>>& adjacency() const {
        return adjacency_;
    }

    friend SimulationCell assemble_cell(std::vector<NetworkTopology> topologies,
                                        double electrode_dl_capacitance_f,
                                        DeviceParams device,
                                        double distance_exponent);

private:
    std::vector<NetworkTopology> topologies_;
    std::vector<CellNode> nodes_;
    std::vector<DendriteSegment> segments_; // endpoints are global node ids
    std::vector<std::string> electrode_ids_;
    std::map<std::string, NodeId> electrode_nodes_;
    std::map<std::string, ElectrodeRole> electrode_roles_;
    std::vector<double> segment_c_;   // F
    std::vector<double> coupling_c_;  // F, distance-weighted
    std::vector<int> node_degree_;
    std::vector<std::vector<std::pair<SegmentId, NodeId>>> adjacency_;
    DeviceParams device_;
    double dl_capacitance_f_ = 0.0;
    double distance_exponent_ = 1.0;
    Vec2 centroid_;
    double min_tau_s_ = 0.0;
};

/// Assemble one or more topologies into a cell with one shared electrolyte.
/// Electrode ids must be globally unique; throws DomainError otherwise or when
/// the topology list is empty.
SimulationCell assemble_cell(std::vector<NetworkTopology> topologies,
                             double electrode_dl_capacitance_f,
                             DeviceParams device = {},
                             double distance_exponent = 1.0);

} // namespace dendsim
