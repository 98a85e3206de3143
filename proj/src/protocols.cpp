#include "dendsim/protocols.hpp"

#include "dendsim/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace dendsim {

// =============================================================================
// Sweeps
// =============================================================================

void SweepConfig::validate(const SimulationCell& cell) const {
    if (swept.empty()) throw DomainError("sweep needs a swept electrode");
    if (!cell.has_electrode(swept)) throw LookupError("unknown swept electrode '" + swept + "'");
    if (grounded.empty()) throw DomainError("sweep needs at least one grounded electrode");
    for (const auto& g : grounded) {
        if (!cell.has_electrode(g)) throw LookupError("unknown grounded electrode '" + g + "'");
        if (g == swept) throw DomainError("swept and grounded sets must be disjoint");
    }
    if (v_step == 0) throw DomainError("sweep step must be nonzero");
    double n = (v_end - v_start) / v_step;
    if (n < 0.5 || std::abs(n - std::round(n)) > 1e-9)
        throw DomainError("sweep step must divide the range");
    if (!secondary_electrode.empty()) {
        if (!cell.has_electrode(secondary_electrode))
            throw LookupError("unknown secondary electrode '" + secondary_electrode + "'");
        if (secondary_electrode == swept)
            throw DomainError("secondary electrode cannot be the swept one");
    }
}

int SweepConfig::n_points() const {
    return static_cast<int>(std::lround((v_end - v_start) / v_step)) + 1;
}

double OutputCurve::current_at(double v) const {
    for (std::size_t i = 0; i < voltage_v.size(); ++i)
        if (std::abs(voltage_v[i] - v) < 1e-9) return current_a[i];
    throw DomainError("no sample at " + std::to_string(v) + " V");
}

OutputCurve run_output_sweep(const SimulationCell& cell, const SweepConfig& config) {
    config.validate(cell);
    OutputCurve curve;
    curve.monitored = config.swept;
    int n = config.n_points();
    for (int i = 0; i < n; ++i) {
        double v = config.v_start + config.v_step * static_cast<double>(i);
        BoundaryCondition bc;
        for (const auto& g : config.grounded) bc.ground(g);
        bc.set(config.swept, v);
        if (!config.secondary_electrode.empty() && !config.secondary_bias.empty())
            bc.set(config.secondary_electrode, config.secondary_bias.front());
        try {
            OperatingPoint op = solve_dc(cell, bc);
            curve.voltage_v.push_back(v);
            curve.current_a.push_back(op.terminal_currents.at(config.swept));
        } catch (const SolverError& e) {
            throw SolverError("output sweep aborted at " + std::to_string(v) + " V: " + e.what());
        }
    }
    return curve;
}

double rectification_coefficient(const OutputCurve& curve) {
    if (curve.voltage_v.empty()) throw DomainError("empty curve");
    double v_min = *std::min_element(curve.voltage_v.begin(), curve.voltage_v.end());
    double v_max = *std::max_element(curve.voltage_v.begin(), curve.voltage_v.end());
    if (std::abs(v_max + v_min) > 1e-9)
        throw DomainError("curve endpoints are not symmetric around 0 V");
    if (v_max <= 0) throw DomainError("curve does not span a positive endpoint");
    double i_pos = std::abs(curve.current_at(v_max));
    double i_neg = std::abs(curve.current_at(v_min));
    if (i_neg == 0.0)
        return i_pos == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
    return i_pos / i_neg;
}

std::vector<RectificationEntry> rectification_matrix(const SimulationCell& cell,
                                                     double v_max, double v_step) {
    const auto& topo = cell.topologies().front();
    std::vector<std::string> ids;
    for (const auto& e : topo.electrodes) ids.push_back(e.id);
    if (ids.size() < 3)
        throw DomainError("rectification matrix needs >= 3 electrodes on one topology");

    std::vector<RectificationEntry> table;
    for (const auto& swept : ids) {
        std::vector<std::string> others;
        for (const auto& id : ids)
            if (id != swept) others.push_back(id);
        // Every non-empty ground subset, in binary counting order.
        for (unsigned mask = 1; mask < (1u << others.size()); ++mask) {
            SweepConfig config;
            config.swept = swept;
            for (std::size_t i = 0; i < others.size(); ++i)
                if (mask & (1u << i)) config.grounded.push_back(others[i]);
            config.v_start = -v_max;
            config.v_end = v_max;
            config.v_step = v_step;

            RectificationEntry entry;
            entry.swept = swept;
            entry.grounded = config.grounded;
            std::ostringstream label;
            if (config.grounded.size() > 1) {
                label << "(";
                for (std::size_t i = 0; i < config.grounded.size(); ++i)
                    label << (i ? "·" : "") << config.grounded[i];
                label << ")";
            } else {
                label << config.grounded.front();
            }
            label << "-" << swept;
            entry.label = label.str();
            entry.coefficient = rectification_coefficient(run_output_sweep(cell, config));
            table.push_back(std::move(entry));
        }
    }
    return table;
}

double TransferFamily::suppression_at_max_bias() const {
    if (curves.empty()) throw DomainError("empty transfer family");
    std::size_t zero_idx = gate_bias_v.size();
    std::size_t max_idx = 0;
    for (std::size_t i = 0; i < gate_bias_v.size(); ++i) {
        if (std::abs(gate_bias_v[i]) < 1e-12) zero_idx = i;
        if (gate_bias_v[i] > gate_bias_v[max_idx]) max_idx = i;
    }
    if (zero_idx == gate_bias_v.size())
        throw DomainError("transfer family has no zero gate bias");
    double i0 = curves[zero_idx].current_a.back();
    double i1 = curves[max_idx].current_a.back();
    if (i0 == 0.0) throw DomainError("zero-bias drain current is zero");
    return 1.0 - i1 / i0;
}

TransferFamily run_transfer_sweep(const SimulationCell& cell, const SweepConfig& config) {
    config.validate(cell);
    if (cell.topologies().size() < 2)
        throw DomainError("transfer sweep needs two disjoint device topologies");
    if (config.secondary_electrode.empty() || config.secondary_bias.empty())
        throw DomainError("transfer sweep needs a secondary (gate) electrode and bias list");

    TransferFamily family;
    for (double vg : config.secondary_bias) {
        OutputCurve curve;
        curve.monitored = config.swept;
        int n = config.n_points();
        for (int i = 0; i < n; ++i) {
            double vd = config.v_start + config.v_step * static_cast<double>(i);
            BoundaryCondition bc;
            for (const auto& g : config.grounded) bc.ground(g);
            bc.set(config.secondary_electrode, vg);
            bc.set(config.swept, vd);
            OperatingPoint op = solve_dc(cell, bc);
            curve.voltage_v.push_back(vd);
            curve.current_a.push_back(op.terminal_currents.at(config.swept));
        }
        family.gate_bias_v.push_back(vg);
        family.curves.push_back(std::move(curve));
    }
    return family;
}

// =============================================================================
// Shared phase-runner plumbing
// =============================================================================

namespace {

/// Mean of an electrode current over one phase trace, excluding the leading
/// fraction of the window (transient removal).
double window_mean(const Trace& trace, std::size_t electrode, double skip_fraction) {
    std::size_t n = trace.n_samples();
    if (n == 0) throw DomainError("empty measurement window");
    std::size_t start = static_cast<std::size_t>(std::ceil(skip_fraction * static_cast<double>(n)));
    if (start >= n) start = n - 1;
    double sum = 0.0;
    for (std::size_t i = start; i < n; ++i) sum += trace.electrode_currents[i][electrode];
    return sum / static_cast<double>(n - start);
}

void append_strided(Trace& sink, const Trace& source, int stride) {
    if (stride <= 0) return;
    Trace thin;
    thin.electrode_ids = source.electrode_ids;
    for (std::size_t i = 0; i < source.n_samples(); i += static_cast<std::size_t>(stride)) {
        thin.time_s.push_back(source.time_s[i]);
        thin.electrode_currents.push_back(source.electrode_currents[i]);
        thin.electrode_potentials.push_back(source.electrode_potentials[i]);
        thin.electrolyte_v.push_back(source.electrolyte_v[i]);
    }
    sink.append(thin);
}

struct PhaseRunner {
    const SimulationCell& cell;
    double dt;
    ElectrochemicalState state;
    double t = 0.0;
    Trace* raw = nullptr;
    int stride = 0;

    /// Run one piecewise-constant phase and return its full-resolution trace.
    Trace run(const BoundaryCondition& bc, double duration) {
        DriveWaveform wf;
        wf.append_phase(duration, bc);
        TransientOptions opts;
        opts.t0_s = t;
        TransientResult r = run_transient(cell, wf, dt, std::move(state), opts);
        state = std::move(r.final_state);
        t += std::max<long>(1, std::lround(duration / dt)) * dt;
        if (raw) append_strided(*raw, r.trace, stride);
        return std::move(r.trace);
    }
};

} // namespace

// =============================================================================
// MAC
// =============================================================================

void MacConfig::validate(const SimulationCell& cell) const {
    if (input_electrodes.empty()) throw DomainError("MAC needs input electrodes");
    for (const auto& id : input_electrodes)
        if (!cell.has_electrode(id)) throw LookupError("unknown input electrode '" + id + "'");
    if (readout_source.empty() || readout_drain.empty())
        throw DomainError("MAC needs a readout source/drain pair");
    if (!cell.has_electrode(readout_source) || !cell.has_electrode(readout_drain))
        throw LookupError("unknown readout electrode");
    for (const auto& id : input_electrodes)
        if (id == readout_source || id == readout_drain)
            throw DomainError("inputs and readout must be disjoint");
    if (pulse_duration_s <= 0 || rest_factor <= 0) throw DomainError("MAC durations must be > 0");
    for (const auto& subset : schedule)
        for (int idx : subset)
            if (idx < 0 || static_cast<std::size_t>(idx) >= input_electrodes.size())
                throw DomainError("schedule references input index out of range");
}

MacResult run_mac(const SimulationCell& cell, const MacConfig& config) {
    config.validate(cell);

    std::vector<std::vector<int>> schedule = config.schedule;
    if (schedule.empty()) {
        // All subsets: singles first, then pairs, then the full set.
        std::size_t n = config.input_electrodes.size();
        for (std::size_t count = 0; count <= n; ++count)
            for (unsigned mask = 0; mask < (1u << n); ++mask) {
                if (static_cast<std::size_t>(__builtin_popcount(mask)) != count) continue;
                std::vector<int> subset;
                for (std::size_t i = 0; i < n; ++i)
                    if (mask & (1u << i)) subset.push_back(static_cast<int>(i));
                schedule.push_back(std::move(subset));
            }
    }

    double dt = config.dt_s > 0
                    ? config.dt_s
                    : std::min(stability_dt_limit(cell), config.pulse_duration_s / 10.0);

    auto base_bc = [&] {
        BoundaryCondition bc;
        for (const auto& id : config.input_electrodes) bc.ground(id);
        for (const auto& id : config.grounded) bc.ground(id);
        bc.ground(config.readout_source);
        bc.set(config.readout_drain, config.read_bias_v);
        return bc;
    };

    MacResult result;
    PhaseRunner runner{cell, dt, ElectrochemicalState::rested(cell.segments().size())};
    runner.raw = &result.trace;
    runner.stride = 1;

    double rest_duration = config.rest_factor * config.pulse_duration_s;
    std::size_t drain_col = 0; // resolved after the first phase emits ids

    Trace settle = runner.run(base_bc(), rest_duration);
    drain_col = settle.electrode_index(config.readout_drain);
    double baseline = window_mean(settle, drain_col, 0.8);

    for (const auto& subset : schedule) {
        BoundaryCondition pulse_bc = base_bc();
        for (int idx : subset)
            pulse_bc.set(config.input_electrodes[static_cast<std::size_t>(idx)],
                         config.pulse_amplitude_v);

        Trace pulse = runner.run(pulse_bc, config.pulse_duration_s);
        double i_pulse = window_mean(pulse, drain_col, 0.2);

        MacResult::Entry entry;
        entry.subset = subset;
        entry.delta_i_over_i = delta_i_over_i(i_pulse, baseline);
        result.entries.push_back(std::move(entry));

        Trace rest = runner.run(base_bc(), rest_duration);
        baseline = window_mean(rest, drain_col, 0.8);
    }
    return result;
}

// =============================================================================
// WRITE / READ / REST sequences
// =============================================================================

std::string BitPattern::label() const {
    std::string s;
    for (int b : bits) s += (b ? '1' : '0');
    return s;
}

std::vector<BitPattern> SequenceProgram::default_patterns() {
    return {BitPattern{{1, 1, 1}}, BitPattern{{0, 0, 0}}, BitPattern{{1, 1, 0}},
            BitPattern{{0, 1, 1}}, BitPattern{{1, 0, 1}}, BitPattern{{1, 0, 0}},
            BitPattern{{0, 1, 0}}, BitPattern{{0, 0, 1}}};
}

std::vector<BitPattern> SequenceProgram::effective_patterns() const {
    return patterns.empty() ? default_patterns() : patterns;
}

void SequenceProgram::validate(const SimulationCell& cell) const {
    if (input_electrodes.empty()) throw DomainError("sequence needs input electrodes");
    for (const auto& id : input_electrodes)
        if (!cell.has_electrode(id)) throw LookupError("unknown input electrode '" + id + "'");
    if (write_duration_s <= 0 || read_duration_s <= 0 || rest_duration_s <= 0)
        throw DomainError("sequence durations must be > 0");
    if (rest_duration_s <= read_duration_s)
        throw DomainError("rest duration must exceed the read duration (the baseline window)");
    if (cycles < 1) throw DomainError("cycles must be >= 1");
    if (!(high_voltage_v > 0.0) || !(low_voltage_v < 0.0))
        throw DomainError("need high_voltage > 0 > low_voltage");
    for (const auto& p : effective_patterns()) {
        if (p.bits.size() != input_electrodes.size())
            throw DomainError("pattern length does not match the input electrode list");
        for (int b : p.bits)
            if (b != 0 && b != 1) throw DomainError("pattern bits must be 0 or 1");
    }
}

std::map<std::string, double> encode_pattern(const BitPattern& pattern,
                                             const SequenceProgram& program) {
    if (pattern.bits.size() != program.input_electrodes.size())
        throw DomainError("pattern length does not match the input electrode list");
    std::map<std::string, double> out;
    for (std::size_t i = 0; i < pattern.bits.size(); ++i) {
        if (pattern.bits[i] != 0 && pattern.bits[i] != 1)
            throw DomainError("pattern bits must be 0 or 1");
        out[program.input_electrodes[i]] =
            pattern.bits[i] ? program.high_voltage_v : program.low_voltage_v;
    }
    return out;
}

namespace {

struct ReadoutPair {
    std::string source;
    std::string drain;
};

ReadoutPair find_readout(const SimulationCell& cell) {
    ReadoutPair pair;
    for (const auto& id : cell.electrode_ids()) {
        auto role = cell.electrode_role(id);
        if (role == ElectrodeRole::OutputSource) {
            if (!pair.source.empty()) throw DomainError("cell has more than one output-source");
            pair.source = id;
        } else if (role == ElectrodeRole::OutputDrain) {
            if (!pair.drain.empty()) throw DomainError("cell has more than one output-drain");
            pair.drain = id;
        }
    }
    if (pair.source.empty() || pair.drain.empty())
        throw DomainError("cell has no output-source/output-drain readout pair");
    return pair;
}

} // namespace

SequenceTrace run_sequence(const SimulationCell& cell,
                           const SequenceProgram& program,
                           ElectrochemicalState& state) {
    program.validate(cell);
    ReadoutPair readout = find_readout(cell);

    double dt = program.dt_s > 0
                    ? program.dt_s
                    : std::min(stability_dt_limit(cell), program.read_duration_s / 5.0);

    std::vector<std::string> always_grounded;
    for (const auto& id : cell.electrode_ids())
        if (cell.electrode_role(id) == ElectrodeRole::Ground) always_grounded.push_back(id);

    auto grounded_base = [&] {
        BoundaryCondition bc;
        for (const auto& id : program.input_electrodes) bc.ground(id);
        for (const auto& id : always_grounded) bc.ground(id);
        bc.ground(readout.source);
        bc.ground(readout.drain);
        return bc;
    };
    auto bc_rest = grounded_base;
    auto bc_biased = [&] {
        BoundaryCondition bc = grounded_base();
        bc.set(readout.drain, program.read_bias_v);
        return bc;
    };
    auto bc_write = [&](const BitPattern& p) {
        BoundaryCondition bc = grounded_base();
        for (const auto& [id, v] : encode_pattern(p, program)) bc.set(id, v);
        return bc;
    };

    SequenceTrace out;
    out.input_electrodes = program.input_electrodes;
    out.patterns = program.effective_patterns();
    out.cycles = program.cycles;

    PhaseRunner runner{cell, dt, std::move(state)};
    runner.raw = program.trace_stride > 0 ? &out.raw : nullptr;
    runner.stride = program.trace_stride;

    double rest_hold = program.rest_duration_s - program.read_duration_s;
    std::size_t drain_col = 0;
    bool drain_col_set = false;

    // REST = grounded hold, then a brief biased window whose mean is I_REST.
    auto run_rest = [&] {
        runner.run(bc_rest(), rest_hold);
        Trace sample = runner.run(bc_biased(), program.read_duration_s);
        if (!drain_col_set) {
            drain_col = sample.electrode_index(readout.drain);
            drain_col_set = true;
        }
        double i_rest = window_mean(sample, drain_col, 0.2);
        out.rest_currents_a.push_back(i_rest);
        return i_rest;
    };

    double i_rest = run_rest(); // leading baseline
    for (int cycle = 0; cycle < program.cycles; ++cycle) {
        for (std::size_t pi = 0; pi < out.patterns.size(); ++pi) {
            runner.run(bc_write(out.patterns[pi]), program.write_duration_s);
            Trace read = runner.run(bc_biased(), program.read_duration_s);
            double i_read = window_mean(read, drain_col, 0.2);

            SequenceStep step;
            step.cycle = cycle;
            step.pattern_index = static_cast<int>(pi);
            step.pattern = out.patterns[pi];
            step.i_rest_pre = i_rest;
            step.i_read = i_read;
            step.t_read_s = runner.t;
            out.steps.push_back(std::move(step));

            i_rest = run_rest();
        }
    }

    state = std::move(runner.state);
    return out;
}

SequenceTrace run_sequence(const SimulationCell& cell, const SequenceProgram& program) {
    ElectrochemicalState state = ElectrochemicalState::rested(cell.segments().size());
    return run_sequence(cell, program, state);
}

double delta_i_over_i(double i_read_a, double i_rest_a) {
    if (i_rest_a == 0.0) throw DomainError("delta_i_over_i: rest current is zero");
    return (i_read_a - i_rest_a) / i_rest_a;
}

} // namespace dendsim
