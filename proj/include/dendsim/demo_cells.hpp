#pragma once

#include "dendsim/analysis.hpp"
#include "dendsim/cell.hpp"
#include "dendsim/protocols.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace dendsim::demo {

// =============================================================================
// Calibrated demonstration cells
// =============================================================================
// One device parameter bundle plus a small family of cells reproducing the
// reference experiments: the four-terminal Y device, the thick/thin
// inter-gating pair, the Y-plus-readout MAC circuit, the grown multi-input
// network with a separate readout dendrite, and the twin networks sharing one
// readout. Geometry constants here are calibration, not measurement.
// =============================================================================

/// The default electrochemical parameter bundle used by every demo cell.
DeviceParams default_device();

/// Default electrode double-layer capacitance (about 1% of a typical segment
/// capacitance; unconstrained by experiment).
double default_dl_capacitance_f();

// --- Y device (rectification) -----------------------------------------------

/// Four electrodes, three identical arms meeting at the grounded core.
SimulationCell y_device();

/// Core grounded, arm E3 swept: the high-rectification configuration.
SweepConfig y_rectifying_sweep();

/// E1 grounded, mirror arm E3 swept: the geometry-symmetric configuration.
SweepConfig y_symmetric_sweep();

// --- Inter-gating pair (transfer) --------------------------------------------

/// Two disconnected parallel dendrites, one grown thick (25 Hz) and one thin
/// (200 Hz), in one electrolyte.
SimulationCell intergating_pair();

/// Thin channel swept while the bulky dendrite gates it.
SweepConfig transfer_bulky_gate();

/// Bulky channel swept while the thin dendrite gates it.
SweepConfig transfer_thin_gate();

// --- MAC cell -----------------------------------------------------------------

SimulationCell mac_cell();
MacConfig mac_config();

// --- Sequence cell (spatiotemporal programs) ----------------------------------

inline constexpr std::uint64_t kSequenceSeed = 11;

/// Grown multi-input network (8 input electrodes around a grounded hub) plus
/// a separate straight readout dendrite below it.
SimulationCell sequence_cell(std::uint64_t seed = kSequenceSeed);

/// Input triple of spatial projection 1, 2 or 3. SP3 differs from SP1 in a
/// single electrode.
std::vector<std::string> spatial_projection_inputs(int which);

/// Standard WRITE/READ/REST program on the given input triple.
SequenceProgram sequence_program(const std::vector<std::string>& inputs, int cycles);

// --- Twin networks (hardware uniqueness) ---------------------------------------

inline constexpr std::uint64_t kTwinSeed = 5;

/// Two mirrored networks grown at different frequencies on either side of a
/// shared readout dendrite.
SimulationCell twin_networks(double left_frequency_hz = 80.0,
                             double right_frequency_hz = 500.0,
                             std::uint64_t seed = kTwinSeed);

std::vector<std::string> twin_inputs_left();
std::vector<std::string> twin_inputs_right();

// --- Registry -------------------------------------------------------------------

/// Build a demo cell by name: "y-device", "intergating-pair", "mac",
/// "sequence", "twins". The seed applies to the grown cells.
SimulationCell builtin_cell(const std::string& name, std::uint64_t seed);
std::vector<std::string> builtin_cell_names();

} // namespace dendsim::demo
