#include "dendsim/cell.hpp"

#include "dendsim/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace dendsim {

NodeId SimulationCell::electrode_node(const std::string& electrode_id) const {
    auto it = electrode_nodes_.find(electrode_id);
    if (it == electrode_nodes_.end())
        throw LookupError("no electrode '" + electrode_id + "' in cell");
    return it->second;
}

bool SimulationCell::has_electrode(const std::string& electrode_id) const {
    return electrode_nodes_.count(electrode_id) > 0;
}

ElectrodeRole SimulationCell::electrode_role(const std::string& electrode_id) const {
    auto it = electrode_roles_.find(electrode_id);
    if (it == electrode_roles_.end())
        throw LookupError("no electrode '" + electrode_id + "' in cell");
    return it->second;
}

bool SimulationCell::electrode_is_bare(const std::string& electrode_id) const {
    return node_degree_[electrode_node(electrode_id)] == 0;
}

Vec2 SimulationCell::segment_midpoint(const DendriteSegment& seg) const {
    return (nodes_[seg.a].position + nodes_[seg.b].position) * 0.5;
}

SimulationCell assemble_cell(std::vector<NetworkTopology> topologies,
                             double electrode_dl_capacitance_f,
                             DeviceParams device,
                             double distance_exponent) {
    if (topologies.empty()) throw DomainError("cannot assemble a cell from zero topologies");
    if (electrode_dl_capacitance_f < 0)
        throw DomainError("double-layer capacitance must be >= 0");
    if (distance_exponent < 0) throw DomainError("distance_exponent must be >= 0");
    device.validate();

    SimulationCell cell;
    cell.device_ = device;
    cell.dl_capacitance_f_ = electrode_dl_capacitance_f;
    cell.distance_exponent_ = distance_exponent;

    std::set<std::string> seen_electrodes;
    int next_segment = 0;
    for (std::size_t ti = 0; ti < topologies.size(); ++ti) {
        const auto& topo = topologies[ti];
        NodeId base = static_cast<NodeId>(cell.nodes_.size());
        for (const auto& n : topo.nodes) {
            if (static_cast<std::size_t>(n.id) >= topo.nodes.size() ||
                topo.nodes[n.id].id != n.id)
                throw DomainError("topology nodes must be dense and ordered by id");
            cell.nodes_.push_back({n.position, n.electrode, static_cast<int>(ti), n.id});
        }
        for (const auto& e : topo.electrodes) {
            if (!seen_electrodes.insert(e.id).second)
                throw DomainError("duplicate electrode id '" + e.id + "' across topologies");
            cell.electrode_ids_.push_back(e.id);
            cell.electrode_nodes_[e.id] = base + topo.electrode_node(e.id);
            cell.electrode_roles_[e.id] = e.role;
        }
        for (const auto& s : topo.segments) {
            DendriteSegment g = s;
            g.id = next_segment++;
            g.a = base + s.a;
            g.b = base + s.b;
            if (g.a == g.b) throw DomainError("self-loop segment in topology");
            if (!(g.length_um > 0) || !(g.radius_um > 0))
                throw DomainError("segment with nonpositive geometry");
            cell.segments_.push_back(g);
        }
    }

    cell.node_degree_.assign(cell.nodes_.size(), 0);
    cell.adjacency_.assign(cell.nodes_.size(), {});
    for (const auto& s : cell.segments_) {
        cell.node_degree_[s.a]++;
        cell.node_degree_[s.b]++;
        cell.adjacency_[s.a].emplace_back(s.id, s.b);
        cell.adjacency_[s.b].emplace_back(s.id, s.a);
    }

    // Electrolyte centroid: mean electrode position. Electrode geometry is
    // fixed by the MEA, so growth stochasticity cannot move it.
    Vec2 centroid{0.0, 0.0};
    for (const auto& [id, node] : cell.electrode_nodes_) centroid = centroid + cell.nodes_[node].position;
    centroid = centroid * (1.0 / static_cast<double>(cell.electrode_nodes_.size()));
    cell.centroid_ = centroid;

    // Distance-weighted coupling capacitances. The weight (d_mean/d)^p keeps
    // the mean weight near one so the double-layer terms stay comparable.
    cell.segment_c_.resize(cell.segments_.size());
    cell.coupling_c_.resize(cell.segments_.size());
    std::vector<double> dist(cell.segments_.size(), 0.0);
    double d_mean = 0.0;
    for (std::size_t i = 0; i < cell.segments_.size(); ++i) {
        cell.segment_c_[i] = volumetric_capacitance_of(cell.segments_[i], device);
        dist[i] = distance(cell.segment_midpoint(cell.segments_[i]), centroid);
        d_mean += dist[i];
    }
    if (!cell.segments_.empty()) d_mean /= static_cast<double>(cell.segments_.size());
    for (std::size_t i = 0; i < cell.segments_.size(); ++i) {
        double w = 1.0;
        if (distance_exponent > 0 && d_mean > 0) {
            double d = std::max(dist[i], 0.05 * d_mean);
            w = std::pow(d_mean / d, distance_exponent);
        }
        cell.coupling_c_[i] = w * cell.segment_c_[i];
    }

    double min_tau = std::numeric_limits<double>::infinity();
    for (const auto& s : cell.segments_) {
        min_tau = std::min(min_tau, dedope_time_constant_s(s, device));
        min_tau = std::min(min_tau, redope_time_constant_s(s, device));
    }
    cell.min_tau_s_ = min_tau;

    cell.topologies_ = std::move(topologies);
    return cell;
}

} // namespace dendsim
