#pragma once

#include "dendsim/solver.hpp"

#include <map>
#include <string>
#include <vector>

namespace dendsim {

// =============================================================================
// Experiment protocols: sweeps, rectification, inter-gating, MAC, sequences
// =============================================================================

struct SweepConfig {
    std::string swept;                  ///< electrode receiving the ramp
    std::vector<std::string> grounded;  ///< held at 0 V (a shorted group)
    double v_start = -0.9;
    double v_end = 0.9;
    double v_step = 0.05;
    std::vector<double> secondary_bias;  ///< gate-bias family for transfer sweeps
    std::string secondary_electrode;     ///< electrode receiving secondary_bias

    void validate(const SimulationCell& cell) const; // DomainError on violation
    int n_points() const;
};

struct OutputCurve {
    std::string monitored;  ///< electrode whose current is sampled (the swept one)
    std::vector<double> voltage_v;
    std::vector<double> current_a;

    double current_at(double v) const; ///< DomainError when no sample matches
};

/// One solve_dc per voltage step, ascending, each from the rested state
/// (quasi-static, path independent). The sampled current is the swept
/// electrode's terminal current.
OutputCurve run_output_sweep(const SimulationCell& cell, const SweepConfig& config);

/// |I| at the positive endpoint over |I| at the negative endpoint. The curve
/// must contain both symmetric endpoint samples. A zero denominator with a
/// nonzero numerator yields +infinity rather than a throw.
double rectification_coefficient(const OutputCurve& curve);

struct RectificationEntry {
    std::string label;        ///< Fig-style "(a·b)-c": grounds left, swept right
    std::vector<std::string> grounded;
    std::string swept;
    double coefficient = 0.0;
};

/// Enumerate every (ground subset, swept electrode) permutation over the
/// first topology's electrodes, sweep each, and tabulate the coefficients.
std::vector<RectificationEntry> rectification_matrix(const SimulationCell& cell,
                                                     double v_max = 0.9,
                                                     double v_step = 0.05);

struct TransferFamily {
    std::vector<double> gate_bias_v;
    std::vector<OutputCurve> curves;   ///< one drain sweep per gate bias

    /// 1 - I(V_drain max, gate max) / I(V_drain max, gate 0). The family must
    /// include a zero gate bias.
    double suppression_at_max_bias() const;
};

/// Inter-gating characterization of two devices in one electrolyte: for each
/// gate bias, the channel drain is swept while the other dendrite's drain is
/// held at the bias (both sources grounded).
TransferFamily run_transfer_sweep(const SimulationCell& cell, const SweepConfig& config);

struct MacConfig {
    std::vector<std::string> input_electrodes;
    std::vector<std::string> grounded;   ///< e.g. the Y core electrode
    std::string readout_source;          ///< grounded
    std::string readout_drain;           ///< held at read_bias
    double pulse_amplitude_v = 0.6;
    double pulse_duration_s = 0.2;
    double read_bias_v = 0.1;
    double rest_factor = 5.0;            ///< inter-pulse rest = factor * pulse duration
    double dt_s = 0.0;                   ///< 0 = auto from the stability limit
    std::vector<std::vector<int>> schedule; ///< input subsets; empty = all subsets

    void validate(const SimulationCell& cell) const;
};

struct MacResult {
    struct Entry {
        std::vector<int> subset;       ///< indices into input_electrodes
        double delta_i_over_i = 0.0;   ///< signed, negative for suppression
        double modulation() const { return delta_i_over_i < 0 ? -delta_i_over_i : delta_i_over_i; }
    };
    std::vector<Entry> entries;
    Trace trace;
};

/// Pulse every scheduled input subset in order while the readout dendrite is
/// biased, and report the steady-pulse current modulation per subset. The
/// pulse mean excludes the first 20% of the window (transient removal); the
/// baseline is the tail of the preceding rest.
MacResult run_mac(const SimulationCell& cell, const MacConfig& config);

// -----------------------------------------------------------------------------
// WRITE / READ / REST sequence programs
// -----------------------------------------------------------------------------

struct BitPattern {
    std::vector<int> bits; // 0 or 1 per input electrode

    std::string label() const;
    bool operator==(const BitPattern&) const = default;
};

struct SequenceProgram {
    std::vector<std::string> input_electrodes;
    std::vector<BitPattern> patterns;   ///< defaults to default_patterns() when empty
    double write_duration_s = 10.0;
    double read_duration_s = 0.05;
    double rest_duration_s = 10.0;
    double high_voltage_v = 0.6;
    double low_voltage_v = -0.6;
    double read_bias_v = 0.1;
    int cycles = 1;
    double dt_s = 0.0;                  ///< 0 = auto
    int trace_stride = 0;               ///< 0 = discard the raw trace

    /// 111, 000, 110, 011, 101, 100, 010, 001 for three bits.
    static std::vector<BitPattern> default_patterns();
    std::vector<BitPattern> effective_patterns() const;
    void validate(const SimulationCell& cell) const;
};

/// Map a bit pattern onto per-electrode write voltages: 1 -> high, 0 -> low,
/// in input_electrodes order. DomainError on length mismatch.
std::map<std::string, double> encode_pattern(const BitPattern& pattern,
                                             const SequenceProgram& program);

struct SequenceStep {
    int cycle = 0;
    int pattern_index = 0;
    BitPattern pattern;
    double i_rest_pre = 0.0; ///< readout current sampled at the end of the preceding REST
    double i_read = 0.0;     ///< readout current over the READ window
    double t_read_s = 0.0;
};

struct SequenceTrace {
    std::vector<std::string> input_electrodes;
    std::vector<BitPattern> patterns;
    int cycles = 0;
    std::vector<SequenceStep> steps;  ///< cycles * patterns entries, in order
    std::vector<double> rest_currents_a; ///< chronological I_REST samples (incl. leading)
    Trace raw;                        ///< strided raw trace; empty when stride = 0
};

/// Run the full program: a leading REST, then WRITE -> READ -> REST per
/// pattern, per cycle. Input electrodes carry the encoded pattern during
/// WRITE; the readout is biased only during READ and during the brief
/// baseline window that closes every REST; ground-role electrodes stay
/// grounded throughout; everything addressed is grounded during REST. The
/// cell state evolves across the run (trap dynamics included) and is left in
/// `state` afterwards, so consecutive calls model consecutive measurements.
SequenceTrace run_sequence(const SimulationCell& cell,
                           const SequenceProgram& program,
                           ElectrochemicalState& state);

/// Convenience overload starting from the rested state.
SequenceTrace run_sequence(const SimulationCell& cell, const SequenceProgram& program);

/// Drift-compensated modulation (i_read - i_rest) / i_rest.
/// DomainError when i_rest is zero.
double delta_i_over_i(double i_read_a, double i_rest_a);

} // namespace dendsim
