#include "dendsim/analysis.hpp"
#include "dendsim/config.hpp"
#include "dendsim/demo_cells.hpp"
#include "dendsim/errors.hpp"
#include "dendsim/protocols.hpp"
#include "dendsim/serialize.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace dendsim;

namespace {

// Exit codes: 0 ok, 1 usage, 2 config error, 3 solver error, 4 I/O error.
enum ExitCode { kOk = 0, kUsage = 1, kConfig = 2, kSolver = 3, kIo = 4 };

struct Cli {
    std::string config_path;
    std::string output_dir_override;
    bool has_seed_override = false;
    std::uint64_t seed_override = 0;
};

std::string fp(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct Run {
    RunConfig config;
    fs::path out;
    std::vector<std::string> outputs;

    void emit(const std::string& name, const std::string& text) {
        fs::path p = out / name;
        write_text_file(p.string(), text);
        outputs.push_back(name);
    }

    void finish(const std::string& command) {
        write_text_file((out / "manifest.json").string(),
                        manifest_text(config, command, outputs));
        std::cout << command << ": wrote " << outputs.size() + 1 << " files to " << out.string()
                  << "\n";
    }
};

Run open_run(const Cli& cli, const std::string& expected_type) {
    Run run;
    run.config = load_config(cli.config_path);
    if (cli.has_seed_override) run.config.seed = cli.seed_override;
    if (!cli.output_dir_override.empty()) run.config.output_dir = cli.output_dir_override;
    if (!expected_type.empty() && run.config.protocol_type != expected_type)
        throw ConfigError("config declares protocol '" + run.config.protocol_type +
                          "' but the subcommand needs '" + expected_type + "'");
    run.out = run.config.output_dir;
    std::error_code ec;
    fs::create_directories(run.out, ec);
    if (ec) throw IoError("cannot create output directory '" + run.out.string() + "'");
    return run;
}

void cmd_validate(const Cli& cli) {
    load_config(cli.config_path);
    std::cout << "config OK\n";
}

void cmd_grow(const Cli& cli) {
    Run run = open_run(cli, "");
    SimulationCell cell = build_cell(run.config);
    const auto& topologies = cell.topologies();
    for (std::size_t i = 0; i < topologies.size(); ++i)
        run.emit("topology_" + std::to_string(i) + ".json", topology_to_string(topologies[i]));
    std::ostringstream report;
    report << "cell: " << topologies.size() << " topologies, " << cell.segments().size()
           << " segments, " << cell.nodes().size() << " nodes\n";
    for (std::size_t i = 0; i < topologies.size(); ++i) {
        auto issues = validate_topology(topologies[i]);
        report << "topology " << i << ": " << topologies[i].segments.size() << " segments, "
               << (topologies[i].unconnected ? "unconnected" : "connected") << ", "
               << issues.size() << " validation issues\n";
        for (const auto& issue : issues)
            report << "  - " << issue.kind << ": " << issue.detail << "\n";
    }
    run.emit("report.txt", report.str());
    run.finish("grow");
}

void cmd_sweep(const Cli& cli) {
    Run run = open_run(cli, "sweep");
    SimulationCell cell = build_cell(run.config);
    OutputCurve curve = run_output_sweep(cell, run.config.sweep);
    std::ostringstream csv;
    csv << "voltage_V,current_A\n";
    for (std::size_t i = 0; i < curve.voltage_v.size(); ++i)
        csv << fp(curve.voltage_v[i]) << "," << fp(curve.current_a[i]) << "\n";
    run.emit("curve.csv", csv.str());
    run.finish("sweep");
}

void cmd_rectify(const Cli& cli) {
    Run run = open_run(cli, "rectify");
    SimulationCell cell = build_cell(run.config);
    auto table = rectification_matrix(cell, run.config.rectify.v_max, run.config.rectify.v_step);
    std::ostringstream csv;
    csv << "configuration,coefficient\n";
    for (const auto& entry : table) csv << entry.label << "," << fp(entry.coefficient) << "\n";
    run.emit("rectification.csv", csv.str());
    run.finish("rectify");
}

void cmd_transfer(const Cli& cli) {
    Run run = open_run(cli, "transfer");
    SimulationCell cell = build_cell(run.config);
    TransferFamily family = run_transfer_sweep(cell, run.config.sweep);
    std::ostringstream csv;
    csv << "gate_bias_V,voltage_V,current_A\n";
    for (std::size_t g = 0; g < family.curves.size(); ++g)
        for (std::size_t i = 0; i < family.curves[g].voltage_v.size(); ++i)
            csv << fp(family.gate_bias_v[g]) << "," << fp(family.curves[g].voltage_v[i]) << ","
                << fp(family.curves[g].current_a[i]) << "\n";
    run.emit("transfer.csv", csv.str());
    std::ostringstream report;
    report << "drain-current suppression at max gate bias: "
           << fp(family.suppression_at_max_bias()) << "\n";
    run.emit("report.txt", report.str());
    run.finish("transfer");
}

void cmd_mac(const Cli& cli) {
    Run run = open_run(cli, "mac");
    SimulationCell cell = build_cell(run.config);
    MacResult result = run_mac(cell, run.config.mac);
    std::ostringstream csv;
    csv << "subset,delta_i_over_i,modulation\n";
    for (const auto& entry : result.entries) {
        std::string label;
        for (std::size_t i = 0; i < run.config.mac.input_electrodes.size(); ++i) {
            bool on = std::find(entry.subset.begin(), entry.subset.end(), static_cast<int>(i)) !=
                      entry.subset.end();
            label += on ? '1' : '0';
        }
        csv << label << "," << fp(entry.delta_i_over_i) << "," << fp(entry.modulation()) << "\n";
    }
    run.emit("mac_summary.csv", csv.str());
    std::ostringstream trace;
    write_trace_csv(trace, result.trace);
    run.emit("trace.csv", trace.str());
    run.finish("mac");
}

void run_sequence_outputs(Run& run, const SequenceProgram& program, bool with_stats) {
    SimulationCell cell = build_cell(run.config);
    ElectrochemicalState state = ElectrochemicalState::rested(cell.segments().size());
    SequenceTrace trace = run_sequence(cell, program, state);

    std::ostringstream steps;
    steps << "cycle,pattern,i_rest_A,i_read_A,delta_i_over_i\n";
    for (const auto& step : trace.steps)
        steps << step.cycle << "," << step.pattern.label() << "," << fp(step.i_rest_pre) << ","
              << fp(step.i_read) << "," << fp(delta_i_over_i(step.i_read, step.i_rest_pre))
              << "\n";
    run.emit("sequence_steps.csv", steps.str());

    SignatureVector sig = extract_signature(trace);
    std::ostringstream sig_csv;
    write_signature_csv(sig_csv, sig);
    run.emit("signature.csv", sig_csv.str());

    if (trace.raw.n_samples() > 0) {
        std::ostringstream raw;
        write_trace_csv(raw, trace.raw);
        run.emit("trace.csv", raw.str());
    }
    save_state((run.out / "state.json").string(), cell, state);
    run.outputs.push_back("state.json");

    if (with_stats) {
        SignatureStats stats = signature_stats(sig);
        std::ostringstream long_csv;
        write_stats_long_csv(long_csv, {{"device", stats}});
        run.emit("signature_stats.csv", long_csv.str());
        std::ostringstream report;
        report << "pattern  mean        std\n";
        for (std::size_t j = 0; j < stats.size(); ++j)
            report << stats.pattern_labels[j] << "      " << fp(stats.mean[j]) << "  "
                   << fp(stats.stddev[j]) << "\n";
        run.emit("report.txt", report.str());
    }
}

void cmd_sequence(const Cli& cli) {
    Run run = open_run(cli, "sequence");
    run_sequence_outputs(run, run.config.sequence, false);
    run.finish("sequence");
}

void cmd_signature(const Cli& cli) {
    Run run = open_run(cli, "signature");
    run_sequence_outputs(run, run.config.sequence, true);
    run.finish("signature");
}

void cmd_uniqueness(const Cli& cli) {
    Run run = open_run(cli, "uniqueness");
    const auto& proto = run.config.uniqueness;

    std::vector<SignatureStats> population;
    std::vector<std::vector<SignatureStats>> replicates;
    std::vector<std::pair<std::string, SignatureStats>> long_rows;
    for (int device = 0; device < proto.devices; ++device) {
        SimulationCell cell = build_population_cell(run.config, device);
        ElectrochemicalState state = ElectrochemicalState::rested(cell.segments().size());
        std::vector<SignatureStats> reps;
        SignatureVector all_cycles;
        for (int r = 0; r < proto.replicates; ++r) {
            SequenceTrace trace = run_sequence(cell, proto.program, state);
            SignatureVector sig = extract_signature(trace);
            reps.push_back(signature_stats(sig));
            if (all_cycles.pattern_labels.empty()) all_cycles.pattern_labels = sig.pattern_labels;
            for (auto& row : sig.cycles) all_cycles.cycles.push_back(std::move(row));
        }
        SignatureStats device_stats = signature_stats(all_cycles);
        std::string name = "device" + std::to_string(device);
        long_rows.emplace_back(name, device_stats);
        population.push_back(std::move(device_stats));
        replicates.push_back(std::move(reps));
    }

    UniquenessReport report = uniqueness_report(population, replicates);
    std::ostringstream txt;
    txt << "devices: " << report.n_devices << "\n"
        << "replicates per device: " << report.n_replicates << "\n"
        << "inter-device mean distance: " << fp(report.inter_device_mean) << "\n"
        << "intra-device mean distance: " << fp(report.intra_device_mean) << "\n"
        << "uniqueness score: " << fp(report.score) << "\n";
    run.emit("uniqueness_report.txt", txt.str());
    std::ostringstream long_csv;
    write_stats_long_csv(long_csv, long_rows);
    run.emit("population_stats.csv", long_csv.str());
    run.finish("uniqueness");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"dendritic electrochemical network simulator"};
    app.require_subcommand(1);

    Cli cli;
    const std::vector<std::pair<std::string, std::string>> commands = {
        {"grow", "grow the configured topologies and persist them"},
        {"sweep", "quasi-static output sweep"},
        {"rectify", "rectification coefficient matrix over electrode configurations"},
        {"transfer", "inter-gating transfer/output families"},
        {"mac", "pulsed multiply-accumulate run"},
        {"sequence", "WRITE/READ/REST bit-sequence program"},
        {"signature", "sequence program plus signature statistics"},
        {"uniqueness", "population uniqueness metrics over seeds"},
        {"validate", "check a config file and exit"},
    };
    for (const auto& [name, description] : commands) {
        CLI::App* sub = app.add_subcommand(name, description);
        sub->add_option("config", cli.config_path, "config file (JSON)")->required();
        sub->add_option("-o,--output-dir", cli.output_dir_override, "override the output directory");
        sub->add_option("--seed", cli.seed_override, "override the global seed")
            ->each([&cli](const std::string&) { cli.has_seed_override = true; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e); // --help
        std::cerr << "usage error: " << e.what() << "\n";
        return kUsage;
    }

    std::string command = app.get_subcommands().front()->get_name();
    try {
        if (command == "validate") cmd_validate(cli);
        else if (command == "grow") cmd_grow(cli);
        else if (command == "sweep") cmd_sweep(cli);
        else if (command == "rectify") cmd_rectify(cli);
        else if (command == "transfer") cmd_transfer(cli);
        else if (command == "mac") cmd_mac(cli);
        else if (command == "sequence") cmd_sequence(cli);
        else if (command == "signature") cmd_signature(cli);
        else if (command == "uniqueness") cmd_uniqueness(cli);
        return kOk;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfig;
    } catch (const SolverError& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return kSolver;
    } catch (const StepError& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return kSolver;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return kIo;
    } catch (const Error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfig;
    }
}
