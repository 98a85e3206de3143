#include "dendsim/config.hpp"

#include "dendsim/demo_cells.hpp"
#include "dendsim/errors.hpp"
#include "dendsim/rng.hpp"
#include "dendsim/serialize.hpp"

#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <set>

namespace dendsim {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// ---------------------------------------------------------------------------
// Strict-parsing helpers: every object's keys are checked against a whitelist
// and every error carries the field path.
// ---------------------------------------------------------------------------

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
    throw ConfigError(path + ": " + msg);
}

void check_keys(const json& obj, const std::string& path, std::set<std::string> allowed) {
    for (const auto& [key, value] : obj.items())
        if (!allowed.count(key)) fail(path + "." + key, "unknown field");
}

const json* find(const json& obj, const std::string& key) {
    auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
}

double get_number(const json& obj, const std::string& path, const std::string& key,
                  std::optional<double> fallback = std::nullopt) {
    const json* v = find(obj, key);
    if (!v) {
        if (fallback) return *fallback;
        fail(path + "." + key, "missing required number");
    }
    if (!v->is_number()) fail(path + "." + key, "expected a number");
    return v->get<double>();
}

int get_int(const json& obj, const std::string& path, const std::string& key,
            std::optional<int> fallback = std::nullopt) {
    const json* v = find(obj, key);
    if (!v) {
        if (fallback) return *fallback;
        fail(path + "." + key, "missing required integer");
    }
    if (!v->is_number_integer()) fail(path + "." + key, "expected an integer");
    return v->get<int>();
}

std::string get_string(const json& obj, const std::string& path, const std::string& key,
                       std::optional<std::string> fallback = std::nullopt) {
    const json* v = find(obj, key);
    if (!v) {
        if (fallback) return *fallback;
        fail(path + "." + key, "missing required string");
    }
    if (!v->is_string()) fail(path + "." + key, "expected a string");
    return v->get<std::string>();
}

std::vector<std::string> get_string_list(const json& obj, const std::string& path,
                                         const std::string& key, bool required) {
    const json* v = find(obj, key);
    if (!v) {
        if (required) fail(path + "." + key, "missing required list");
        return {};
    }
    if (!v->is_array()) fail(path + "." + key, "expected a list of strings");
    std::vector<std::string> out;
    for (const auto& e : *v) {
        if (!e.is_string()) fail(path + "." + key, "expected a list of strings");
        out.push_back(e.get<std::string>());
    }
    return out;
}

DeviceParams parse_device(const json& obj, const std::string& path) {
    check_keys(obj, path,
               {"bulk_conductivity_s_per_cm", "volumetric_capacitance_f_per_cm3",
                "pinchoff_voltage_v", "dedope_time_constant_s_per_cm3",
                "redope_time_constant_s_per_cm3", "residual_doping", "trap_rate",
                "trap_release_rate_per_s"});
    DeviceParams d = demo::default_device();
    d.bulk_conductivity_s_per_cm =
        get_number(obj, path, "bulk_conductivity_s_per_cm", d.bulk_conductivity_s_per_cm);
    d.volumetric_capacitance_f_per_cm3 = get_number(obj, path, "volumetric_capacitance_f_per_cm3",
                                                    d.volumetric_capacitance_f_per_cm3);
    d.pinchoff_voltage_v = get_number(obj, path, "pinchoff_voltage_v", d.pinchoff_voltage_v);
    d.dedope_time_constant_s_per_cm3 = get_number(obj, path, "dedope_time_constant_s_per_cm3",
                                                  d.dedope_time_constant_s_per_cm3);
    d.redope_time_constant_s_per_cm3 = get_number(obj, path, "redope_time_constant_s_per_cm3",
                                                  d.redope_time_constant_s_per_cm3);
    d.residual_doping = get_number(obj, path, "residual_doping", d.residual_doping);
    d.trap_rate = get_number(obj, path, "trap_rate", d.trap_rate);
    d.trap_release_rate_per_s =
        get_number(obj, path, "trap_release_rate_per_s", d.trap_release_rate_per_s);
    try {
        d.validate();
    } catch (const DomainError& e) {
        fail(path, e.what());
    }
    return d;
}

GrowthCellSpec parse_growth(const json& obj, const std::string& path) {
    check_keys(obj, path, {"electrodes", "params"});
    GrowthCellSpec spec;
    const json* electrodes = find(obj, "electrodes");
    if (!electrodes || !electrodes->is_array() || electrodes->empty())
        fail(path + ".electrodes", "missing electrode list");
    std::set<std::string> ids;
    for (std::size_t i = 0; i < electrodes->size(); ++i) {
        const json& je = (*electrodes)[i];
        std::string epath = path + ".electrodes[" + std::to_string(i) + "]";
        check_keys(je, epath, {"id", "x", "y", "role"});
        ElectrodeSpec e;
        e.id = get_string(je, epath, "id");
        e.position = {get_number(je, epath, "x"), get_number(je, epath, "y")};
        try {
            e.role = electrode_role_from_string(get_string(je, epath, "role", "input"));
        } catch (const DomainError& err) {
            fail(epath + ".role", err.what());
        }
        if (!ids.insert(e.id).second) fail(epath + ".id", "duplicate electrode id '" + e.id + "'");
        spec.electrodes.push_back(std::move(e));
    }
    if (const json* params = find(obj, "params")) {
        std::string ppath = path + ".params";
        check_keys(*params, ppath,
                   {"reference_radius_um", "reference_frequency_hz", "thinning_exponent",
                    "step_length_um", "branch_probability", "field_bias", "growth_frequency_hz",
                    "step_budget", "seed"});
        GrowthParams& g = spec.params;
        g.reference_radius_um = get_number(*params, ppath, "reference_radius_um", g.reference_radius_um);
        g.reference_frequency_hz =
            get_number(*params, ppath, "reference_frequency_hz", g.reference_frequency_hz);
        g.thinning_exponent = get_number(*params, ppath, "thinning_exponent", g.thinning_exponent);
        g.step_length_um = get_number(*params, ppath, "step_length_um", g.step_length_um);
        g.branch_probability = get_number(*params, ppath, "branch_probability", g.branch_probability);
        g.field_bias = get_number(*params, ppath, "field_bias", g.field_bias);
        g.growth_frequency_hz = get_number(*params, ppath, "growth_frequency_hz", g.growth_frequency_hz);
        g.step_budget = get_int(*params, ppath, "step_budget", g.step_budget);
        if (find(*params, "seed")) {
            g.seed = (*params)["seed"].get<std::uint64_t>();
            spec.seed_explicit = true;
        }
        try {
            g.validate();
        } catch (const DomainError& e) {
            fail(ppath, e.what());
        }
    }
    return spec;
}

std::vector<BitPattern> parse_patterns(const json& obj, const std::string& path) {
    std::vector<BitPattern> out;
    const json* v = find(obj, "patterns");
    if (!v) return out;
    if (!v->is_array()) fail(path + ".patterns", "expected a list of bit strings");
    for (const auto& e : *v) {
        if (!e.is_string()) fail(path + ".patterns", "expected a list of bit strings");
        BitPattern p;
        for (char c : e.get<std::string>()) {
            if (c != '0' && c != '1') fail(path + ".patterns", "bits must be 0 or 1");
            p.bits.push_back(c - '0');
        }
        out.push_back(std::move(p));
    }
    return out;
}

SequenceProgram parse_sequence(const json& obj, const std::string& path) {
    check_keys(obj, path,
               {"type", "inputs", "patterns", "write_duration_s", "read_duration_s",
                "rest_duration_s", "high_voltage_v", "low_voltage_v", "read_bias_v", "cycles",
                "dt_s", "trace_stride", "devices", "replicates"});
    SequenceProgram p;
    p.input_electrodes = get_string_list(obj, path, "inputs", true);
    p.patterns = parse_patterns(obj, path);
    p.write_duration_s = get_number(obj, path, "write_duration_s", 10.0);
    p.read_duration_s = get_number(obj, path, "read_duration_s", 0.05);
    p.rest_duration_s = get_number(obj, path, "rest_duration_s", 10.0);
    p.high_voltage_v = get_number(obj, path, "high_voltage_v", 0.6);
    p.low_voltage_v = get_number(obj, path, "low_voltage_v", -0.6);
    p.read_bias_v = get_number(obj, path, "read_bias_v", 0.1);
    p.cycles = get_int(obj, path, "cycles", 1);
    p.dt_s = get_number(obj, path, "dt_s", 0.0);
    p.trace_stride = get_int(obj, path, "trace_stride", 0);
    return p;
}

json sequence_to_json(const SequenceProgram& p) {
    json patterns = json::array();
    for (const auto& pat : p.effective_patterns()) patterns.push_back(pat.label());
    return json{{"inputs", p.input_electrodes},
                {"patterns", std::move(patterns)},
                {"write_duration_s", p.write_duration_s},
                {"read_duration_s", p.read_duration_s},
                {"rest_duration_s", p.rest_duration_s},
                {"high_voltage_v", p.high_voltage_v},
                {"low_voltage_v", p.low_voltage_v},
                {"read_bias_v", p.read_bias_v},
                {"cycles", p.cycles},
                {"dt_s", p.dt_s},
                {"trace_stride", p.trace_stride}};
}

} // namespace

RunConfig load_config(const std::string& path) {
    std::string text;
    try {
        text = read_text_file(path);
    } catch (const IoError& e) {
        throw IoError(std::string("config: ") + e.what());
    }

    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        // Convert the byte offset into line/column for a usable diagnostic.
        std::size_t line = 1, col = 1;
        for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw ConfigError("parse error at line " + std::to_string(line) + ", column " +
                          std::to_string(col) + ": " + e.what());
    }
    if (!root.is_object()) throw ConfigError("config root must be an object");

    RunConfig config;
    check_keys(root, "config", {"seed", "output_dir", "cell", "protocol"});
    if (find(root, "seed")) {
        if (!root["seed"].is_number_unsigned() && !root["seed"].is_number_integer())
            fail("config.seed", "expected an integer seed");
        config.seed = root["seed"].get<std::uint64_t>();
    }
    config.output_dir = get_string(root, "config", "output_dir", std::string("out"));

    const json* cell = find(root, "cell");
    if (!cell || !cell->is_object()) fail("config.cell", "missing cell section");
    check_keys(*cell, "config.cell",
               {"builtin", "topologies", "dl_capacitance_f", "distance_exponent", "device"});
    if (find(*cell, "builtin")) {
        config.cell.builtin = get_string(*cell, "config.cell", "builtin");
        auto names = demo::builtin_cell_names();
        if (std::find(names.begin(), names.end(), *config.cell.builtin) == names.end())
            fail("config.cell.builtin", "unknown builtin cell '" + *config.cell.builtin + "'");
    }
    if (const json* topologies = find(*cell, "topologies")) {
        if (!topologies->is_array()) fail("config.cell.topologies", "expected a list");
        fs::path base = fs::path(path).parent_path();
        for (std::size_t i = 0; i < topologies->size(); ++i) {
            const json& jt = (*topologies)[i];
            std::string tpath = "config.cell.topologies[" + std::to_string(i) + "]";
            check_keys(jt, tpath, {"file", "growth"});
            TopologySource source;
            if (find(jt, "file") && find(jt, "growth"))
                fail(tpath, "give either a file or a growth spec, not both");
            if (find(jt, "file")) {
                fs::path p = base / get_string(jt, tpath, "file");
                if (!fs::exists(p)) fail(tpath + ".file", "file does not exist: " + p.string());
                source.file = p.string();
            } else if (find(jt, "growth")) {
                source.growth = parse_growth(jt["growth"], tpath + ".growth");
            } else {
                fail(tpath, "needs a file or a growth spec");
            }
            config.cell.sources.push_back(std::move(source));
        }
    }
    if (config.cell.builtin && !config.cell.sources.empty())
        fail("config.cell", "builtin and topologies are mutually exclusive");
    if (!config.cell.builtin && config.cell.sources.empty())
        fail("config.cell", "needs a builtin name or a topologies list");
    config.cell.dl_capacitance_f =
        get_number(*cell, "config.cell", "dl_capacitance_f", demo::default_dl_capacitance_f());
    config.cell.distance_exponent = get_number(*cell, "config.cell", "distance_exponent", 1.0);
    config.cell.device = find(*cell, "device") ? parse_device((*cell)["device"], "config.cell.device")
                                               : demo::default_device();

    const json* protocol = find(root, "protocol");
    if (!protocol || !protocol->is_object()) fail("config.protocol", "missing protocol section");
    std::string type = get_string(*protocol, "config.protocol", "type");
    config.protocol_type = type;

    const std::string ppath = "config.protocol";
    if (type == "sweep" || type == "transfer") {
        check_keys(*protocol, ppath,
                   {"type", "swept", "grounded", "v_start", "v_end", "v_step",
                    "secondary_electrode", "secondary_bias"});
        config.sweep.swept = get_string(*protocol, ppath, "swept");
        config.sweep.grounded = get_string_list(*protocol, ppath, "grounded", true);
        config.sweep.v_start = get_number(*protocol, ppath, "v_start");
        config.sweep.v_end = get_number(*protocol, ppath, "v_end");
        config.sweep.v_step = get_number(*protocol, ppath, "v_step");
        config.sweep.secondary_electrode =
            get_string(*protocol, ppath, "secondary_electrode", std::string());
        if (const json* bias = find(*protocol, "secondary_bias")) {
            if (!bias->is_array()) fail(ppath + ".secondary_bias", "expected a list of numbers");
            for (const auto& b : *bias) config.sweep.secondary_bias.push_back(b.get<double>());
        }
        if (type == "transfer" && config.sweep.secondary_electrode.empty())
            fail(ppath, "transfer needs a secondary (gate) electrode");
    } else if (type == "rectify") {
        check_keys(*protocol, ppath, {"type", "v_max", "v_step"});
        config.rectify.v_max = get_number(*protocol, ppath, "v_max", 0.9);
        config.rectify.v_step = get_number(*protocol, ppath, "v_step", 0.05);
    } else if (type == "mac") {
        check_keys(*protocol, ppath,
                   {"type", "inputs", "grounded", "readout_source", "readout_drain",
                    "pulse_amplitude_v", "pulse_duration_s", "read_bias_v", "rest_factor", "dt_s",
                    "schedule"});
        config.mac.input_electrodes = get_string_list(*protocol, ppath, "inputs", true);
        config.mac.grounded = get_string_list(*protocol, ppath, "grounded", false);
        config.mac.readout_source = get_string(*protocol, ppath, "readout_source");
        config.mac.readout_drain = get_string(*protocol, ppath, "readout_drain");
        config.mac.pulse_amplitude_v = get_number(*protocol, ppath, "pulse_amplitude_v", 0.6);
        config.mac.pulse_duration_s = get_number(*protocol, ppath, "pulse_duration_s", 0.2);
        config.mac.read_bias_v = get_number(*protocol, ppath, "read_bias_v", 0.1);
        config.mac.rest_factor = get_number(*protocol, ppath, "rest_factor", 5.0);
        config.mac.dt_s = get_number(*protocol, ppath, "dt_s", 0.0);
        if (const json* schedule = find(*protocol, "schedule")) {
            if (!schedule->is_array()) fail(ppath + ".schedule", "expected a list of index lists");
            for (const auto& subset : *schedule) {
                if (!subset.is_array()) fail(ppath + ".schedule", "expected a list of index lists");
                config.mac.schedule.push_back(subset.get<std::vector<int>>());
            }
        }
    } else if (type == "sequence" || type == "signature") {
        config.sequence = parse_sequence(*protocol, ppath);
        if (find(*protocol, "devices") || find(*protocol, "replicates"))
            fail(ppath, "devices/replicates belong to the uniqueness protocol");
    } else if (type == "uniqueness") {
        config.uniqueness.program = parse_sequence(*protocol, ppath);
        config.uniqueness.devices = get_int(*protocol, ppath, "devices", 20);
        config.uniqueness.replicates = get_int(*protocol, ppath, "replicates", 2);
        if (config.uniqueness.devices < 2) fail(ppath + ".devices", "need >= 2 devices");
        if (config.uniqueness.replicates < 2) fail(ppath + ".replicates", "need >= 2 replicates");
    } else {
        fail(ppath + ".type", "unknown protocol type '" + type + "'");
    }

    // Canonical echo with every default materialized.
    json canon;
    canon["seed"] = config.seed;
    canon["output_dir"] = config.output_dir;
    json jcell;
    if (config.cell.builtin) jcell["builtin"] = *config.cell.builtin;
    if (!config.cell.sources.empty()) {
        json jsources = json::array();
        for (const auto& s : config.cell.sources) {
            json js;
            if (!s.file.empty()) {
                js["file"] = s.file;
            } else {
                json je = json::array();
                for (const auto& e : s.growth->electrodes)
                    je.push_back(json{{"id", e.id},
                                      {"x", e.position.x},
                                      {"y", e.position.y},
                                      {"role", to_string(e.role)}});
                js["growth"] = json{{"electrodes", std::move(je)},
                                    {"params",
                                     json{{"reference_radius_um", s.growth->params.reference_radius_um},
                                          {"reference_frequency_hz", s.growth->params.reference_frequency_hz},
                                          {"thinning_exponent", s.growth->params.thinning_exponent},
                                          {"step_length_um", s.growth->params.step_length_um},
                                          {"branch_probability", s.growth->params.branch_probability},
                                          {"field_bias", s.growth->params.field_bias},
                                          {"growth_frequency_hz", s.growth->params.growth_frequency_hz},
                                          {"step_budget", s.growth->params.step_budget},
                                          {"seed", s.growth->params.seed},
                                          {"seed_explicit", s.growth->seed_explicit}}}};
            }
            jsources.push_back(std::move(js));
        }
        jcell["topologies"] = std::move(jsources);
    }
    jcell["dl_capacitance_f"] = config.cell.dl_capacitance_f;
    jcell["distance_exponent"] = config.cell.distance_exponent;
    jcell["device"] = json{{"bulk_conductivity_s_per_cm", config.cell.device.bulk_conductivity_s_per_cm},
                           {"volumetric_capacitance_f_per_cm3", config.cell.device.volumetric_capacitance_f_per_cm3},
                           {"pinchoff_voltage_v", config.cell.device.pinchoff_voltage_v},
                           {"dedope_time_constant_s_per_cm3", config.cell.device.dedope_time_constant_s_per_cm3},
                           {"redope_time_constant_s_per_cm3", config.cell.device.redope_time_constant_s_per_cm3},
                           {"residual_doping", config.cell.device.residual_doping},
                           {"trap_rate", config.cell.device.trap_rate},
                           {"trap_release_rate_per_s", config.cell.device.trap_release_rate_per_s}};
    canon["cell"] = std::move(jcell);
    json jproto{{"type", type}};
    if (type == "sweep" || type == "transfer") {
        jproto["swept"] = config.sweep.swept;
        jproto["grounded"] = config.sweep.grounded;
        jproto["v_start"] = config.sweep.v_start;
        jproto["v_end"] = config.sweep.v_end;
        jproto["v_step"] = config.sweep.v_step;
        if (!config.sweep.secondary_electrode.empty()) {
            jproto["secondary_electrode"] = config.sweep.secondary_electrode;
            jproto["secondary_bias"] = config.sweep.secondary_bias;
        }
    } else if (type == "rectify") {
        jproto["v_max"] = config.rectify.v_max;
        jproto["v_step"] = config.rectify.v_step;
    } else if (type == "mac") {
        jproto["inputs"] = config.mac.input_electrodes;
        jproto["grounded"] = config.mac.grounded;
        jproto["readout_source"] = config.mac.readout_source;
        jproto["readout_drain"] = config.mac.readout_drain;
        jproto["pulse_amplitude_v"] = config.mac.pulse_amplitude_v;
        jproto["pulse_duration_s"] = config.mac.pulse_duration_s;
        jproto["read_bias_v"] = config.mac.read_bias_v;
        jproto["rest_factor"] = config.mac.rest_factor;
        jproto["dt_s"] = config.mac.dt_s;
        jproto["schedule"] = config.mac.schedule;
    } else if (type == "sequence" || type == "signature") {
        jproto.update(sequence_to_json(config.sequence));
    } else if (type == "uniqueness") {
        jproto.update(sequence_to_json(config.uniqueness.program));
        jproto["devices"] = config.uniqueness.devices;
        jproto["replicates"] = config.uniqueness.replicates;
    }
    canon["protocol"] = std::move(jproto);
    config.canonical_text = canon.dump(2) + "\n";

    return config;
}

namespace {

SimulationCell build_from_sources(const RunConfig& config, std::uint64_t member_salt,
                                  bool reseed) {
    std::vector<NetworkTopology> topologies;
    for (std::size_t i = 0; i < config.cell.sources.size(); ++i) {
        const auto& source = config.cell.sources[i];
        if (!source.file.empty()) {
            topologies.push_back(load_topology(source.file));
            continue;
        }
        GrowthParams params = source.growth->params;
        if (!source.growth->seed_explicit) {
            Rng rng = derive_rng(config.seed, "cell-topology", i + (member_salt << 8));
            params.seed = rng.next_u64();
        } else if (reseed) {
            Rng rng = derive_rng(params.seed, "population-member", member_salt);
            params.seed = rng.next_u64();
        }
        topologies.push_back(grow_network(source.growth->electrodes, params));
    }
    return assemble_cell(std::move(topologies), config.cell.dl_capacitance_f, config.cell.device,
                         config.cell.distance_exponent);
}

} // namespace

SimulationCell build_cell(const RunConfig& config) {
    if (config.cell.builtin) return demo::builtin_cell(*config.cell.builtin, config.seed);
    return build_from_sources(config, 0, false);
}

SimulationCell build_population_cell(const RunConfig& config, int member) {
    std::uint64_t salt = static_cast<std::uint64_t>(member);
    if (config.cell.builtin) {
        Rng rng = derive_rng(config.seed, "population-member", salt);
        return demo::builtin_cell(*config.cell.builtin, rng.next_u64());
    }
    for (const auto& s : config.cell.sources)
        if (!s.file.empty())
            throw ConfigError("uniqueness runs need a regrowable cell (builtin or growth spec), "
                              "not topology files");
    return build_from_sources(config, salt, true);
}

std::string version_string() {
    return "dendsim 0.1.0";
}

std::string manifest_text(const RunConfig& config, const std::string& command,
                          const std::vector<std::string>& outputs) {
    json j{{"command", command},
           {"version", version_string()},
           {"seed", config.seed},
           {"config_hash", "fnv1a:" + fnv1a_hex(config.canonical_text)},
           {"config", json::parse(config.canonical_text)},
           {"outputs", outputs}};
    return j.dump(2) + "\n";
}

} // namespace dendsim
