#include "dendsim/analysis.hpp"

#include "dendsim/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace dendsim {

namespace {

std::vector<std::size_t> alignment(const std::vector<std::string>& from,
                                   const std::vector<std::string>& to) {
    if (from.size() != to.size()) throw DomainError("pattern label sets differ in size");
    std::vector<std::size_t> index(to.size());
    for (std::size_t j = 0; j < to.size(); ++j) {
        auto it = std::find(from.begin(), from.end(), to[j]);
        if (it == from.end()) throw DomainError("pattern '" + to[j] + "' missing from signature");
        index[j] = static_cast<std::size_t>(it - from.begin());
    }
    return index;
}

} // namespace

SignatureVector SignatureVector::aligned_to(const std::vector<std::string>& labels) const {
    auto index = alignment(pattern_labels, labels);
    SignatureVector out;
    out.pattern_labels = labels;
    for (const auto& row : cycles) {
        std::vector<double> r(labels.size());
        for (std::size_t j = 0; j < labels.size(); ++j) r[j] = row[index[j]];
        out.cycles.push_back(std::move(r));
    }
    return out;
}

SignatureStats SignatureStats::aligned_to(const std::vector<std::string>& labels) const {
    auto index = alignment(pattern_labels, labels);
    SignatureStats out;
    out.pattern_labels = labels;
    out.mean.resize(labels.size());
    out.stddev.resize(labels.size());
    for (std::size_t j = 0; j < labels.size(); ++j) {
        out.mean[j] = mean[index[j]];
        out.stddev[j] = stddev[index[j]];
    }
    return out;
}

SignatureVector extract_signature(const SequenceTrace& trace) {
    if (trace.cycles < 1 || trace.patterns.empty())
        throw DomainError("sequence trace carries no cycles or patterns");
    std::size_t expected = static_cast<std::size_t>(trace.cycles) * trace.patterns.size();
    if (trace.steps.size() != expected) {
        std::size_t missing = trace.steps.size();
        int cycle = static_cast<int>(missing / trace.patterns.size());
        std::size_t pattern = missing % trace.patterns.size();
        throw DomainError("incomplete sequence trace: missing READ/REST for cycle " +
                          std::to_string(cycle) + ", pattern '" +
                          trace.patterns[pattern].label() + "'");
    }

    SignatureVector sig;
    for (const auto& p : trace.patterns) sig.pattern_labels.push_back(p.label());
    for (int c = 0; c < trace.cycles; ++c) {
        std::vector<double> row;
        row.reserve(trace.patterns.size());
        for (std::size_t p = 0; p < trace.patterns.size(); ++p) {
            const auto& step = trace.steps[static_cast<std::size_t>(c) * trace.patterns.size() + p];
            row.push_back(delta_i_over_i(step.i_read, step.i_rest_pre));
        }
        sig.cycles.push_back(std::move(row));
    }
    return sig;
}

SignatureStats signature_stats(const SignatureVector& sig) {
    if (sig.n_cycles() < 1) throw DomainError("signature needs at least one cycle");
    std::size_t n = sig.n_patterns();
    SignatureStats stats;
    stats.pattern_labels = sig.pattern_labels;
    stats.mean.assign(n, 0.0);
    stats.stddev.assign(n, 0.0);
    double cycles = static_cast<double>(sig.n_cycles());
    for (const auto& row : sig.cycles) {
        if (row.size() != n) throw DomainError("ragged signature matrix");
        for (std::size_t j = 0; j < n; ++j) stats.mean[j] += row[j];
    }
    for (std::size_t j = 0; j < n; ++j) stats.mean[j] /= cycles;
    for (const auto& row : sig.cycles)
        for (std::size_t j = 0; j < n; ++j) {
            double d = row[j] - stats.mean[j];
            stats.stddev[j] += d * d;
        }
    for (std::size_t j = 0; j < n; ++j) stats.stddev[j] = std::sqrt(stats.stddev[j] / cycles);
    return stats;
}

double signature_distance(const SignatureStats& a, const SignatureStats& b,
                          const DistanceOptions& options) {
    if (a.size() != b.size()) throw DomainError("signature lengths differ");
    double sum = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        double pooled =
            std::sqrt(0.5 * (a.stddev[j] * a.stddev[j] + b.stddev[j] * b.stddev[j]));
        double sigma = std::max(pooled, options.std_floor);
        double z = (a.mean[j] - b.mean[j]) / sigma;
        sum += z * z;
    }
    return std::sqrt(sum);
}

Classification classify_source(const SignatureVector& observed,
                               const std::vector<std::pair<std::string, SignatureStats>>& library,
                               const DistanceOptions& options) {
    if (library.empty()) throw DomainError("classification needs a non-empty library");
    SignatureStats obs = signature_stats(observed);

    double best = std::numeric_limits<double>::infinity();
    double runner_up = std::numeric_limits<double>::infinity();
    std::size_t best_idx = 0;
    for (std::size_t i = 0; i < library.size(); ++i) {
        double d = signature_distance(obs, library[i].second.aligned_to(obs.pattern_labels),
                                      options);
        if (d < best) {
            runner_up = best;
            best = d;
            best_idx = i;
        } else if (d < runner_up) {
            runner_up = d;
        }
    }

    Classification c;
    c.index = best_idx;
    c.label = library[best_idx].first;
    if (library.size() > 1) c.margin = runner_up - best;
    return c;
}

UniquenessReport uniqueness_report(const std::vector<SignatureStats>& population,
                                   const std::vector<std::vector<SignatureStats>>& replicates,
                                   const DistanceOptions& options) {
    if (population.size() < 2) throw DomainError("uniqueness needs >= 2 devices");
    if (replicates.size() != population.size())
        throw DomainError("one replicate list per device is required");
    for (const auto& r : replicates)
        if (r.size() < 2) throw DomainError("uniqueness needs >= 2 replicates per device");

    UniquenessReport report;
    report.n_devices = static_cast<int>(population.size());
    report.n_replicates = static_cast<int>(replicates.front().size());

    double inter = 0.0;
    int inter_n = 0;
    for (std::size_t i = 0; i < population.size(); ++i)
        for (std::size_t j = i + 1; j < population.size(); ++j) {
            inter += signature_distance(population[i], population[j], options);
            ++inter_n;
        }
    report.inter_device_mean = inter / static_cast<double>(inter_n);

    double intra = 0.0;
    int intra_n = 0;
    for (const auto& reps : replicates)
        for (std::size_t i = 0; i < reps.size(); ++i)
            for (std::size_t j = i + 1; j < reps.size(); ++j) {
                intra += signature_distance(reps[i], reps[j], options);
                ++intra_n;
            }
    report.intra_device_mean = intra / static_cast<double>(intra_n);

    if (report.inter_device_mean == 0.0) {
        report.score = 0.0;
    } else if (report.intra_device_mean == 0.0) {
        report.score = std::numeric_limits<double>::infinity();
    } else {
        report.score = report.inter_device_mean / report.intra_device_mean;
    }
    return report;
}

} // namespace dendsim
