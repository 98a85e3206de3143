#include "dendsim/serialize.hpp"

#include "dendsim/errors.hpp"
#include "dendsim/rng.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>

namespace dendsim {

using nlohmann::json;

namespace {

constexpr int kTopologyVersion = 1;
constexpr int kStateVersion = 1;

std::string full_precision(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

json growth_to_json(const GrowthParams& p) {
    return json{{"reference_radius_um", p.reference_radius_um},
                {"reference_frequency_hz", p.reference_frequency_hz},
                {"thinning_exponent", p.thinning_exponent},
                {"step_length_um", p.step_length_um},
                {"branch_probability", p.branch_probability},
                {"field_bias", p.field_bias},
                {"growth_frequency_hz", p.growth_frequency_hz},
                {"step_budget", p.step_budget},
                {"seed", p.seed}};
}

GrowthParams growth_from_json(const json& j) {
    GrowthParams p;
    p.reference_radius_um = j.at("reference_radius_um").get<double>();
    p.reference_frequency_hz = j.at("reference_frequency_hz").get<double>();
    p.thinning_exponent = j.at("thinning_exponent").get<double>();
    p.step_length_um = j.at("step_length_um").get<double>();
    p.branch_probability = j.at("branch_probability").get<double>();
    p.field_bias = j.at("field_bias").get<double>();
    p.growth_frequency_hz = j.at("growth_frequency_hz").get<double>();
    p.step_budget = j.at("step_budget").get<int>();
    p.seed = j.at("seed").get<std::uint64_t>();
    return p;
}

json topology_to_json(const NetworkTopology& topo) {
    json nodes = json::array();
    for (const auto& n : topo.nodes) {
        json jn{{"id", n.id}, {"x", n.position.x}, {"y", n.position.y}};
        if (n.electrode) jn["electrode"] = *n.electrode;
        nodes.push_back(std::move(jn));
    }
    json electrodes = json::array();
    for (const auto& e : topo.electrodes)
        electrodes.push_back(json{{"id", e.id},
                                  {"x", e.position.x},
                                  {"y", e.position.y},
                                  {"role", to_string(e.role)}});
    json segments = json::array();
    for (const auto& s : topo.segments)
        segments.push_back(json{{"id", s.id},
                                {"a", s.a},
                                {"b", s.b},
                                {"length_um", s.length_um},
                                {"radius_um", s.radius_um},
                                {"growth_frequency_hz", s.growth_frequency_hz}});
    return json{{"format", "dendsim-topology"},
                {"version", kTopologyVersion},
                {"unconnected", topo.unconnected},
                {"growth", growth_to_json(topo.growth)},
                {"electrodes", std::move(electrodes)},
                {"nodes", std::move(nodes)},
                {"segments", std::move(segments)}};
}

NetworkTopology topology_from_json(const json& j) {
    if (j.at("format").get<std::string>() != "dendsim-topology")
        throw IoError("not a dendsim topology document");
    int version = j.at("version").get<int>();
    if (version != kTopologyVersion)
        throw IoError("topology format version " + std::to_string(version) +
                      " needs migration; this build reads version " +
                      std::to_string(kTopologyVersion));
    NetworkTopology topo;
    topo.unconnected = j.at("unconnected").get<bool>();
    topo.growth = growth_from_json(j.at("growth"));
    for (const auto& je : j.at("electrodes"))
        topo.electrodes.push_back({je.at("id").get<std::string>(),
                                   {je.at("x").get<double>(), je.at("y").get<double>()},
                                   electrode_role_from_string(je.at("role").get<std::string>())});
    for (const auto& jn : j.at("nodes")) {
        Node n;
        n.id = jn.at("id").get<NodeId>();
        n.position = {jn.at("x").get<double>(), jn.at("y").get<double>()};
        if (jn.contains("electrode")) n.electrode = jn.at("electrode").get<std::string>();
        topo.nodes.push_back(std::move(n));
    }
    for (const auto& js : j.at("segments")) {
        DendriteSegment s;
        s.id = js.at("id").get<SegmentId>();
        s.a = js.at("a").get<NodeId>();
        s.b = js.at("b").get<NodeId>();
        s.length_um = js.at("length_um").get<double>();
        s.radius_um = js.at("radius_um").get<double>();
        s.growth_frequency_hz = js.at("growth_frequency_hz").get<double>();
        topo.segments.push_back(std::move(s));
    }
    return topo;
}

json device_to_json(const DeviceParams& p) {
    return json{{"bulk_conductivity_s_per_cm", p.bulk_conductivity_s_per_cm},
                {"volumetric_capacitance_f_per_cm3", p.volumetric_capacitance_f_per_cm3},
                {"pinchoff_voltage_v", p.pinchoff_voltage_v},
                {"dedope_time_constant_s_per_cm3", p.dedope_time_constant_s_per_cm3},
                {"redope_time_constant_s_per_cm3", p.redope_time_constant_s_per_cm3},
                {"residual_doping", p.residual_doping},
                {"trap_rate", p.trap_rate},
                {"trap_release_rate_per_s", p.trap_release_rate_per_s}};
}

DeviceParams device_from_json(const json& j) {
    DeviceParams p;
    p.bulk_conductivity_s_per_cm = j.at("bulk_conductivity_s_per_cm").get<double>();
    p.volumetric_capacitance_f_per_cm3 = j.at("volumetric_capacitance_f_per_cm3").get<double>();
    p.pinchoff_voltage_v = j.at("pinchoff_voltage_v").get<double>();
    p.dedope_time_constant_s_per_cm3 = j.at("dedope_time_constant_s_per_cm3").get<double>();
    p.redope_time_constant_s_per_cm3 = j.at("redope_time_constant_s_per_cm3").get<double>();
    p.residual_doping = j.at("residual_doping").get<double>();
    p.trap_rate = j.at("trap_rate").get<double>();
    p.trap_release_rate_per_s = j.at("trap_release_rate_per_s").get<double>();
    return p;
}

json cell_to_json(const SimulationCell& cell) {
    json topologies = json::array();
    for (const auto& t : cell.topologies()) topologies.push_back(topology_to_json(t));
    return json{{"format", "dendsim-cell"},
                {"version", kStateVersion},
                {"dl_capacitance_f", cell.dl_capacitance_f()},
                {"distance_exponent", cell.distance_exponent()},
                {"device", device_to_json(cell.device())},
                {"topologies", std::move(topologies)}};
}

SimulationCell cell_from_json(const json& j) {
    if (j.at("format").get<std::string>() != "dendsim-cell")
        throw IoError("not a dendsim cell document");
    std::vector<NetworkTopology> topologies;
    for (const auto& jt : j.at("topologies")) topologies.push_back(topology_from_json(jt));
    return assemble_cell(std::move(topologies), j.at("dl_capacitance_f").get<double>(),
                         device_from_json(j.at("device")),
                         j.at("distance_exponent").get<double>());
}

json parse(const std::string& text, const std::string& what) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) throw IoError("failed to parse " + what + " (malformed JSON)");
    return j;
}

} // namespace

std::string topology_to_string(const NetworkTopology& topo) {
    return topology_to_json(topo).dump(2) + "\n";
}

NetworkTopology topology_from_string(const std::string& text) {
    try {
        return topology_from_json(parse(text, "topology"));
    } catch (const json::exception& e) {
        throw IoError(std::string("invalid topology document: ") + e.what());
    }
}

void save_topology(const std::string& path, const NetworkTopology& topo) {
    write_text_file(path, topology_to_string(topo));
}

NetworkTopology load_topology(const std::string& path) {
    return topology_from_string(read_text_file(path));
}

std::string cell_to_string(const SimulationCell& cell) {
    return cell_to_json(cell).dump(2) + "\n";
}

SimulationCell cell_from_string(const std::string& text) {
    try {
        return cell_from_json(parse(text, "cell"));
    } catch (const json::exception& e) {
        throw IoError(std::string("invalid cell document: ") + e.what());
    }
}

void save_state(const std::string& path, const SimulationCell& cell,
                const ElectrochemicalState& state) {
    if (state.size() != cell.segments().size())
        throw DomainError("state does not cover the cell (inconsistent pair)");
    json j{{"format", "dendsim-state"},
           {"version", kStateVersion},
           {"cell", cell_to_json(cell)},
           {"state",
            json{{"electrolyte_potential_v", state.electrolyte_potential_v},
                 {"doping", state.doping},
                 {"trapped", state.trapped}}}};
    write_text_file(path, j.dump(2) + "\n");
}

CellState load_state(const std::string& path) {
    json j = parse(read_text_file(path), "state file '" + path + "'");
    try {
        if (j.at("format").get<std::string>() != "dendsim-state")
            throw IoError("not a dendsim state document");
        int version = j.at("version").get<int>();
        if (version != kStateVersion)
            throw IoError("state format version " + std::to_string(version) +
                          " needs migration; this build reads version " +
                          std::to_string(kStateVersion));
        CellState out;
        out.cell = cell_from_json(j.at("cell"));
        const auto& js = j.at("state");
        out.state.electrolyte_potential_v = js.at("electrolyte_potential_v").get<double>();
        out.state.doping = js.at("doping").get<std::vector<double>>();
        out.state.trapped = js.at("trapped").get<std::vector<double>>();
        if (out.state.size() != out.cell.segments().size() ||
            out.state.trapped.size() != out.state.doping.size())
            throw IoError("state does not cover the stored cell");
        return out;
    } catch (const json::exception& e) {
        throw IoError("invalid state file '" + path + "': " + e.what());
    }
}

// =============================================================================
// CSV
// =============================================================================

void write_trace_csv(std::ostream& os, const Trace& trace) {
    os << "time_s,electrolyte_V";
    for (const auto& id : trace.electrode_ids) os << ",I_" << id << "_A";
    for (const auto& id : trace.electrode_ids) os << ",V_" << id << "_V";
    os << "\n";
    for (std::size_t i = 0; i < trace.n_samples(); ++i) {
        os << full_precision(trace.time_s[i]) << "," << full_precision(trace.electrolyte_v[i]);
        for (double v : trace.electrode_currents[i]) os << "," << full_precision(v);
        for (double v : trace.electrode_potentials[i]) os << "," << full_precision(v);
        os << "\n";
    }
}

void save_trace_csv(const std::string& path, const Trace& trace) {
    std::ostringstream ss;
    write_trace_csv(ss, trace);
    write_text_file(path, ss.str());
}

void write_signature_csv(std::ostream& os, const SignatureVector& sig) {
    os << "cycle";
    for (const auto& label : sig.pattern_labels) os << ",p" << label;
    os << "\n";
    for (std::size_t c = 0; c < sig.n_cycles(); ++c) {
        os << c;
        for (double v : sig.cycles[c]) os << "," << full_precision(v);
        os << "\n";
    }
}

void save_signature_csv(const std::string& path, const SignatureVector& sig) {
    std::ostringstream ss;
    write_signature_csv(ss, sig);
    write_text_file(path, ss.str());
}

void write_stats_long_csv(std::ostream& os,
                          const std::vector<std::pair<std::string, SignatureStats>>& stats) {
    os << "device,pattern,mean,std\n";
    for (const auto& [device, s] : stats)
        for (std::size_t j = 0; j < s.size(); ++j)
            os << device << "," << s.pattern_labels[j] << "," << full_precision(s.mean[j]) << ","
               << full_precision(s.stddev[j]) << "\n";
}

void save_stats_long_csv(const std::string& path,
                         const std::vector<std::pair<std::string, SignatureStats>>& stats) {
    std::ostringstream ss;
    write_stats_long_csv(ss, stats);
    write_text_file(path, ss.str());
}

std::string fnv1a_hex(const std::string& bytes) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a(bytes)));
    return buf;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw IoError("read failure on '" + path + "'");
    return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << text;
    if (!out) throw IoError("write failure on '" + path + "'");
}

} // namespace dendsim
