#pragma once

#include "dendsim/protocols.hpp"

#include <optional>
#include <string>
#include <vector>

namespace dendsim {

// =============================================================================
// Signatures: extraction, statistics, distances, classification, uniqueness
// =============================================================================

/// Per-pattern delta-I/I values, one row per cycle, columns ordered as the
/// program's patterns.
struct SignatureVector {
    std::vector<std::string> pattern_labels;
    std::vector<std::vector<double>> cycles; // [cycle][pattern]

    std::size_t n_cycles() const { return cycles.size(); }
    std::size_t n_patterns() const { return pattern_labels.size(); }

    /// Reorder columns to the given label order (for comparing programs that
    /// present the same patterns in different chronological order).
    SignatureVector aligned_to(const std::vector<std::string>& labels) const;
};

struct SignatureStats {
    std::vector<std::string> pattern_labels;
    std::vector<double> mean;
    std::vector<double> stddev; // population standard deviation across cycles

    std::size_t size() const { return mean.size(); }
    SignatureStats aligned_to(const std::vector<std::string>& labels) const;
};

/// Apply delta_i_over_i to every (READ, preceding REST) pair of a sequence
/// trace. Throws DomainError when the trace is incomplete, naming the missing
/// step.
SignatureVector extract_signature(const SequenceTrace& trace);

/// Column-wise mean and population standard deviation. Needs >= 1 cycle.
SignatureStats signature_stats(const SignatureVector& sig);

struct DistanceOptions {
    /// Floor on the pooled per-pattern std so the z-distance stays defined for
    /// noiseless (deterministic) signatures. In delta-I/I units.
    double std_floor = 1e-3;
};

/// z-score distance between two signatures: Euclidean distance between mean
/// vectors with each component normalized by the pooled per-pattern std.
/// Symmetric, zero iff the means coincide. DomainError on length mismatch.
double signature_distance(const SignatureStats& a, const SignatureStats& b,
                          const DistanceOptions& options = {});

struct Classification {
    std::size_t index = 0;
    std::string label;
    std::optional<double> margin; ///< runner-up minus best; empty for a 1-entry library
};

/// Nearest-centroid classification of an observed signature against a labeled
/// library. Ties break to the first index. DomainError on an empty library.
Classification classify_source(const SignatureVector& observed,
                               const std::vector<std::pair<std::string, SignatureStats>>& library,
                               const DistanceOptions& options = {});

struct UniquenessReport {
    double inter_device_mean = 0.0; ///< mean pairwise distance across devices
    double intra_device_mean = 0.0; ///< mean pairwise distance between replicates
    double score = 0.0;             ///< inter / intra; 0 when inter is 0
    int n_devices = 0;
    int n_replicates = 0;
};

/// PUF-style separability: inter-device over intra-device mean distance.
/// Needs >= 2 devices and >= 2 replicates per device (DomainError otherwise).
UniquenessReport uniqueness_report(const std::vector<SignatureStats>& population,
                                   const std::vector<std::vector<SignatureStats>>& replicates,
                                   const DistanceOptions& options = {});

} // namespace dendsim
