#include "dendsim/topology.hpp"

#include "dendsim/errors.hpp"
#include "dendsim/rng.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

namespace dendsim {

namespace {

constexpr double kPi = std::numbers::pi;

} // namespace

std::string to_string(ElectrodeRole role) {
    switch (role) {
        case ElectrodeRole::Input: return "input";
        case ElectrodeRole::OutputSource: return "output-source";
        case ElectrodeRole::OutputDrain: return "output-drain";
        case ElectrodeRole::Ground: return "ground";
        case ElectrodeRole::Floating: return "floating";
    }
    throw DomainError("unknown electrode role");
}

ElectrodeRole electrode_role_from_string(const std::string& s) {
    if (s == "input") return ElectrodeRole::Input;
    if (s == "output-source") return ElectrodeRole::OutputSource;
    if (s == "output-drain") return ElectrodeRole::OutputDrain;
    if (s == "ground") return ElectrodeRole::Ground;
    if (s == "floating") return ElectrodeRole::Floating;
    throw DomainError("unknown electrode role '" + s + "'");
}

double DendriteSegment::volume_um3() const {
    return kPi * radius_um * radius_um * length_um;
}

double DendriteSegment::cross_section_cm2() const {
    return kPi * radius_um * radius_um * 1e-8;
}

void GrowthParams::validate() const {
    if (reference_radius_um <= 0) throw DomainError("reference_radius must be > 0");
    if (reference_frequency_hz <= 0) throw DomainError("reference_frequency must be > 0");
    if (thinning_exponent <= 0) throw DomainError("thinning_exponent must be > 0");
    if (step_length_um <= 0) throw DomainError("step_length must be > 0");
    if (branch_probability < 0 || branch_probability > 1)
        throw DomainError("branch_probability must be in [0,1]");
    if (field_bias < 0 || field_bias > 1) throw DomainError("field_bias must be in [0,1]");
    if (growth_frequency_hz <= 0) throw DomainError("growth_frequency must be > 0");
    if (step_budget <= 0) throw DomainError("step_budget must be > 0");
}

double radius_from_frequency(double frequency_hz, const GrowthParams& params) {
    if (frequency_hz <= 0) throw DomainError("growth frequency must be > 0");
    return params.reference_radius_um *
           std::pow(frequency_hz / params.reference_frequency_hz, -params.thinning_exponent);
}

const Node& NetworkTopology::node(NodeId id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= nodes.size())
        throw LookupError("node id out of range");
    return nodes[static_cast<std::size_t>(id)];
}

NodeId NetworkTopology::electrode_node(const std::string& electrode_id) const {
    for (const auto& n : nodes)
        if (n.electrode && *n.electrode == electrode_id) return n.id;
    throw LookupError("no node for electrode '" + electrode_id + "'");
}

Vec2 NetworkTopology::midpoint(const DendriteSegment& seg) const {
    return (node(seg.a).position + node(seg.b).position) * 0.5;
}

// =============================================================================
// Validation
// =============================================================================

std::vector<ValidationIssue> validate_topology(const NetworkTopology& topo) {
    std::vector<ValidationIssue> issues;
    auto add = [&](std::string kind, std::string detail) {
        issues.push_back({std::move(kind), std::move(detail)});
    };

    std::set<NodeId> node_ids;
    for (const auto& n : topo.nodes) {
        if (!node_ids.insert(n.id).second)
            add("duplicate node id", "node " + std::to_string(n.id));
        if (!std::isfinite(n.position.x) || !std::isfinite(n.position.y))
            add("non-finite position", "node " + std::to_string(n.id));
    }

    std::set<std::string> electrode_ids;
    for (const auto& e : topo.electrodes) {
        if (!electrode_ids.insert(e.id).second)
            add("duplicate electrode id", e.id);
    }

    std::set<SegmentId> seg_ids;
    for (const auto& s : topo.segments) {
        std::string tag = "segment " + std::to_string(s.id);
        if (!seg_ids.insert(s.id).second) add("duplicate segment id", tag);
        bool a_ok = node_ids.count(s.a) > 0;
        bool b_ok = node_ids.count(s.b) > 0;
        if (!a_ok || !b_ok) {
            add("dangling endpoint", tag);
            continue;
        }
        if (s.a == s.b) add("self-loop segment", tag);
        if (!(s.length_um > 0) || !(s.radius_um > 0) || !(s.growth_frequency_hz > 0))
            add("nonpositive geometry", tag);
    }

    // Components without an electrode. Union-find over segment endpoints.
    std::map<NodeId, NodeId> parent;
    std::function<NodeId(NodeId)> find = [&](NodeId x) {
        auto it = parent.find(x);
        if (it == parent.end()) {
            parent[x] = x;
            return x;
        }
        if (it->second == x) return x;
        NodeId root = find(it->second);
        parent[x] = root;
        return root;
    };
    for (const auto& s : topo.segments) {
        if (node_ids.count(s.a) && node_ids.count(s.b)) parent[find(s.a)] = find(s.b);
    }
    std::set<NodeId> components_with_electrode;
    for (const auto& n : topo.nodes)
        if (n.electrode && parent.count(n.id)) components_with_electrode.insert(find(n.id));
    std::set<NodeId> reported;
    for (const auto& s : topo.segments) {
        if (!node_ids.count(s.a) || !node_ids.count(s.b)) continue;
        NodeId root = find(s.a);
        if (!components_with_electrode.count(root) && reported.insert(root).second)
            add("floating component", "component containing node " + std::to_string(s.a));
    }

    return issues;
}

// =============================================================================
// Growth
// =============================================================================

namespace {

/// Uniform spatial hash over segment bounding boxes, for O(1) contact queries.
class SegmentGrid {
public:
    explicit SegmentGrid(double cell_um) : cell_(cell_um) {}

    void insert(SegmentId id, Vec2 a, Vec2 b) {
        for (auto key : keys_for(a, b)) grid_[key].push_back(id);
    }

    void remove(SegmentId id, Vec2 a, Vec2 b) {
        for (auto key : keys_for(a, b)) {
            auto& v = grid_[key];
            v.erase(std::remove(v.begin(), v.end(), id), v.end());
        }
    }

    /// Candidate segment ids near segment [a,b], deterministic ascending order.
    std::vector<SegmentId> query(Vec2 a, Vec2 b) const {
        std::vector<SegmentId> out;
        for (auto key : keys_for(a, b)) {
            auto it = grid_.find(key);
            if (it == grid_.end()) continue;
            out.insert(out.end(), it->second.begin(), it->second.end());
        }
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
        return out;
    }

private:
    std::vector<std::pair<int, int>> keys_for(Vec2 a, Vec2 b) const {
        int x0 = static_cast<int>(std::floor(std::min(a.x, b.x) / cell_)) - 1;
        int x1 = static_cast<int>(std::floor(std::max(a.x, b.x) / cell_)) + 1;
        int y0 = static_cast<int>(std::floor(std::min(a.y, b.y) / cell_)) - 1;
        int y1 = static_cast<int>(std::floor(std::max(a.y, b.y) / cell_)) + 1;
        std::vector<std::pair<int, int>> keys;
        for (int x = x0; x <= x1; ++x)
            for (int y = y0; y <= y1; ++y) keys.emplace_back(x, y);
        return keys;
    }

    double cell_;
    std::map<std::pair<int, int>, std::vector<SegmentId>> grid_;
};

struct Builder {
    NetworkTopology topo;
    SegmentGrid grid;
    double freq;
    double radius;
    double step;
    double contact_eps;   // touch distance for merging into an existing segment
    double snap_eps;      // reuse an existing node instead of splitting near it
    int next_segment_id = 0;

    explicit Builder(double step_um)
        : grid(step_um), step(step_um),
          contact_eps(0.3 * step_um), snap_eps(0.3 * step_um) {}

    NodeId add_node(Vec2 pos, std::optional<std::string> electrode = std::nullopt) {
        NodeId id = static_cast<NodeId>(topo.nodes.size());
        topo.nodes.push_back({id, pos, std::move(electrode)});
        return id;
    }

    SegmentId add_segment(NodeId a, NodeId b) {
        Vec2 pa = topo.nodes[a].position, pb = topo.nodes[b].position;
        DendriteSegment seg;
        seg.id = next_segment_id++;
        seg.a = a;
        seg.b = b;
        seg.length_um = distance(pa, pb);
        seg.radius_um = radius;
        seg.growth_frequency_hz = freq;
        topo.segments.push_back(seg);
        grid.insert(seg.id, pa, pb);
        return seg.id;
    }

    const DendriteSegment* segment_by_id(SegmentId id) const {
        for (const auto& s : topo.segments)
            if (s.id == id) return &s;
        return nullptr;
    }

    /// Split an existing segment at a point on it, returning the junction node.
    NodeId split_segment(SegmentId id, Vec2 at) {
        auto it = std::find_if(topo.segments.begin(), topo.segments.end(),
                               [&](const DendriteSegment& s) { return s.id == id; });
        DendriteSegment old = *it;
        Vec2 pa = topo.nodes[old.a].position, pb = topo.nodes[old.b].position;
        // Snap to an endpoint when the contact is essentially there already.
        if (distance(at, pa) < snap_eps) return old.a;
        if (distance(at, pb) < snap_eps) return old.b;

        grid.remove(old.id, pa, pb);
        topo.segments.erase(it);
        NodeId j = add_node(at);
        for (NodeId end : {old.a, old.b}) {
            Vec2 pe = topo.nodes[end].position;
            DendriteSegment part;
            part.id = next_segment_id++;
            part.a = end;
            part.b = j;
            part.length_um = distance(pe, at);
            part.radius_um = old.radius_um;
            part.growth_frequency_hz = old.growth_frequency_hz;
            topo.segments.push_back(part);
            grid.insert(part.id, pe, at);
        }
        return j;
    }
};

struct WalkPath {
    NodeId at;
    Vec2 heading;
};

} // namespace

NetworkTopology grow_network(const std::vector<ElectrodeSpec>& electrodes,
                             const GrowthParams& params) {
    params.validate();
    if (electrodes.size() < 2) throw DomainError("a cell needs at least two electrodes");
    {
        std::set<std::string> ids;
        for (const auto& e : electrodes) {
            if (!ids.insert(e.id).second)
                throw DomainError("duplicate electrode id '" + e.id + "'");
            if (!std::isfinite(e.position.x) || !std::isfinite(e.position.y))
                throw DomainError("electrode '" + e.id + "' has a non-finite position");
        }
    }

    Builder b(params.step_length_um);
    b.freq = params.growth_frequency_hz;
    b.radius = radius_from_frequency(params.growth_frequency_hz, params);
    b.topo.electrodes = electrodes;
    b.topo.growth = params;

    std::vector<NodeId> electrode_nodes;
    for (const auto& e : electrodes) electrode_nodes.push_back(b.add_node(e.position, e.id));

    auto nearest_with_role = [&](std::size_t self, std::initializer_list<ElectrodeRole> roles)
        -> std::optional<std::size_t> {
        std::optional<std::size_t> best;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < electrodes.size(); ++i) {
            if (i == self) continue;
            bool match = false;
            for (auto r : roles) match = match || electrodes[i].role == r;
            if (!match) continue;
            double d = distance(electrodes[self].position, electrodes[i].position);
            if (d < best_d) {
                best_d = d;
                best = i;
            }
        }
        return best;
    };

    Rng rng = derive_rng(params.seed, "grow");

    for (std::size_t src = 0; src < electrodes.size(); ++src) {
        ElectrodeRole role = electrodes[src].role;
        if (role != ElectrodeRole::Input && role != ElectrodeRole::OutputSource) continue;

        std::optional<std::size_t> target =
            role == ElectrodeRole::OutputSource
                ? nearest_with_role(src, {ElectrodeRole::OutputDrain})
                : nearest_with_role(src, {ElectrodeRole::Ground});
        if (!target) {
            target = nearest_with_role(src, {ElectrodeRole::Input, ElectrodeRole::Ground,
                                             ElectrodeRole::OutputSource,
                                             ElectrodeRole::OutputDrain});
        }
        if (!target)
            throw DomainError("electrode '" + electrodes[src].id + "' has no growth target");

        Vec2 target_pos = electrodes[*target].position;
        int budget = params.step_budget;

        std::deque<WalkPath> paths;
        paths.push_back({electrode_nodes[src],
                         (target_pos - electrodes[src].position).normalized()});

        while (!paths.empty() && budget > 0) {
            WalkPath path = paths.front();
            paths.pop_front();
            --budget;

            Vec2 here = b.topo.nodes[path.at].position;
            Vec2 toward = (target_pos - here).normalized();
            Vec2 jitter = Vec2{1.0, 0.0}.rotated(rng.uniform(0.0, 2.0 * kPi));
            Vec2 heading =
                (toward * params.field_bias + jitter * (1.0 - params.field_bias)).normalized();
            Vec2 next = here + heading * params.step_length_um;

            // Electrode capture: any electrode within reach terminates the path.
            std::optional<std::size_t> captured;
            double captured_d = 0.75 * params.step_length_um;
            for (std::size_t i = 0; i < electrodes.size(); ++i) {
                NodeId en = electrode_nodes[i];
                if (en == path.at) continue;
                double d = distance(next, electrodes[i].position);
                if (d < captured_d) {
                    captured_d = d;
                    captured = i;
                }
            }
            if (captured) {
                if (electrode_nodes[*captured] != path.at)
                    b.add_segment(path.at, electrode_nodes[*captured]);
                continue;
            }

            // Contact with existing dendrite: merge at a junction and stop.
            std::optional<std::pair<SegmentId, Vec2>> contact;
            double best_t = std::numeric_limits<double>::infinity();
            for (SegmentId cand : b.grid.query(here, next)) {
                const DendriteSegment* s = b.segment_by_id(cand);
                if (!s) continue;
                if (s->a == path.at || s->b == path.at) continue; // touching by construction
                Vec2 pa = b.topo.nodes[s->a].position, pb = b.topo.nodes[s->b].position;
                if (auto t = segment_crossing_param(here, next, pa, pb)) {
                    if (*t < best_t) {
                        best_t = *t;
                        contact = {cand, here + (next - here) * *t};
                    }
                } else if (point_segment_distance(pa, pb, next) < b.contact_eps) {
                    double tp = closest_point_param(pa, pb, next);
                    if (1.0 < best_t) {
                        best_t = 1.0;
                        contact = {cand, pa + (pb - pa) * tp};
                    }
                }
            }
            if (contact) {
                NodeId j = b.split_segment(contact->first, contact->second);
                if (j != path.at) b.add_segment(path.at, j);
                continue;
            }

            NodeId n = b.add_node(next);
            b.add_segment(path.at, n);

            if (rng.bernoulli(params.branch_probability)) {
                double sign = rng.bernoulli(0.5) ? 1.0 : -1.0;
                double angle = sign * rng.uniform(kPi / 7.0, kPi / 2.2);
                paths.push_back({n, heading.rotated(angle)});
            }
            paths.push_back({n, heading});
        }
    }

    // A grown structure counts as connected only when its component links at
    // least two electrodes; a walk that merely merged with its own trail or
    // ran out of budget leaves a single-electrode component.
    {
        std::map<NodeId, NodeId> parent;
        std::function<NodeId(NodeId)> find = [&](NodeId x) {
            auto it = parent.find(x);
            if (it == parent.end()) {
                parent[x] = x;
                return x;
            }
            if (it->second == x) return x;
            NodeId root = find(it->second);
            parent[x] = root;
            return root;
        };
        for (const auto& s : b.topo.segments) parent[find(s.a)] = find(s.b);
        std::map<NodeId, int> electrodes_in_component;
        for (const auto& n : b.topo.nodes)
            if (n.electrode && parent.count(n.id)) electrodes_in_component[find(n.id)]++;
        b.topo.unconnected = false;
        for (const auto& s : b.topo.segments) {
            if (electrodes_in_component[find(s.a)] < 2) {
                b.topo.unconnected = true;
                break;
            }
        }
    }
    return b.topo;
}

} // namespace dendsim
