#include "dendsim/solver.hpp"

#include "dendsim/errors.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace dendsim {

// =============================================================================
// Linear network
// =============================================================================

namespace {

struct BcView {
    // node -> fixed potential; floating nodes absent
    std::vector<char> is_fixed;
    std::vector<double> value;
};

BcView resolve_bc(const SimulationCell& cell, const BoundaryCondition& bc) {
    BcView view;
    view.is_fixed.assign(cell.nodes().size(), 0);
    view.value.assign(cell.nodes().size(), 0.0);
    if (bc.fixed.empty()) throw SolverError("all electrodes are floating; no reference potential");
    for (const auto& [id, v] : bc.fixed) {
        NodeId n = cell.electrode_node(id); // LookupError for unknown electrodes
        view.is_fixed[n] = 1;
        view.value[n] = v;
    }
    return view;
}

/// Every component reachable through segments must contain a fixed node.
void check_references(const SimulationCell& cell, const BcView& bc) {
    const auto& adj = cell.adjacency();
    std::vector<int> comp(cell.nodes().size(), -1);
    int n_comp = 0;
    for (std::size_t start = 0; start < cell.nodes().size(); ++start) {
        if (comp[start] >= 0 || adj[start].empty()) continue;
        int c = n_comp++;
        std::vector<NodeId> stack{static_cast<NodeId>(start)};
        bool has_fixed = false;
        std::vector<NodeId> members;
        while (!stack.empty()) {
            NodeId n = stack.back();
            stack.pop_back();
            if (comp[n] >= 0) continue;
            comp[n] = c;
            members.push_back(n);
            if (bc.is_fixed[n]) has_fixed = true;
            for (const auto& [sid, other] : adj[n])
                if (comp[other] < 0) stack.push_back(other);
        }
        if (!has_fixed) {
            std::string name = "node " + std::to_string(members.front());
            for (NodeId m : members) {
                if (cell.nodes()[m].electrode) {
                    name = "electrode '" + *cell.nodes()[m].electrode + "'";
                    break;
                }
            }
            throw SolverError("connected component containing " + name +
                              " has no fixed-potential reference");
        }
    }
}

} // namespace

LinearSolution solve_linear_network(const SimulationCell& cell,
                                    const ElectrochemicalState& state,
                                    const BoundaryCondition& bc) {
    const auto n_nodes = cell.nodes().size();
    BcView view = resolve_bc(cell, bc);
    check_references(cell, view);

    // Unknowns: non-fixed nodes with at least one incident segment.
    std::vector<int> unknown_index(n_nodes, -1);
    int n_unknown = 0;
    for (std::size_t i = 0; i < n_nodes; ++i)
        if (!view.is_fixed[i] && !cell.adjacency()[i].empty())
            unknown_index[i] = n_unknown++;

    std::vector<double> g(cell.segments().size());
    for (const auto& seg : cell.segments()) g[seg.id] = segment_conductance(seg, state, cell.device());

    Eigen::SparseMatrix<double> A(n_unknown, n_unknown);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n_unknown);
    {
        std::vector<Eigen::Triplet<double>> triplets;
        triplets.reserve(cell.segments().size() * 4);
        for (const auto& seg : cell.segments()) {
            int ia = unknown_index[seg.a];
            int ib = unknown_index[seg.b];
            double gs = g[seg.id];
            if (ia >= 0) triplets.emplace_back(ia, ia, gs);
            if (ib >= 0) triplets.emplace_back(ib, ib, gs);
            if (ia >= 0 && ib >= 0) {
                triplets.emplace_back(ia, ib, -gs);
                triplets.emplace_back(ib, ia, -gs);
            } else if (ia >= 0) {
                rhs[ia] += gs * view.value[seg.b];
            } else if (ib >= 0) {
                rhs[ib] += gs * view.value[seg.a];
            }
        }
        A.setFromTriplets(triplets.begin(), triplets.end());
    }

    Eigen::VectorXd x;
    if (n_unknown > 0) {
        Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(A);
        if (ldlt.info() != Eigen::Success)
            throw SolverError("nodal matrix factorization failed (singular system)");
        x = ldlt.solve(rhs);
        if (ldlt.info() != Eigen::Success) throw SolverError("nodal solve failed");
    }

    LinearSolution sol;
    sol.node_potentials.assign(n_nodes, 0.0);
    for (std::size_t i = 0; i < n_nodes; ++i) {
        if (view.is_fixed[i]) {
            sol.node_potentials[i] = view.value[i];
        } else if (unknown_index[i] >= 0) {
            sol.node_potentials[i] = x[unknown_index[i]];
        } else {
            // Bare floating electrode: no galvanic path. Marked non-finite so
            // the electrolyte step can pin it to the electrolyte potential.
            sol.node_potentials[i] = std::numeric_limits<double>::quiet_NaN();
        }
    }

    // Terminal currents (positive into the network) and the KCL residual.
    auto node_current = [&](NodeId n) {
        double sum = 0.0;
        for (const auto& [sid, other] : cell.adjacency()[n])
            sum += g[sid] * (sol.node_potentials[n] - sol.node_potentials[other]);
        return sum;
    };
    double total = 0.0;
    for (const auto& id : cell.electrode_ids()) {
        NodeId n = cell.electrode_node(id);
        double i = cell.adjacency()[n].empty() ? 0.0 : node_current(n);
        sol.terminal_currents[id] = i;
        sol.max_terminal_current = std::max(sol.max_terminal_current, std::abs(i));
        total += i;
    }
    sol.current_sum = std::abs(total);
    for (std::size_t i = 0; i < n_nodes; ++i) {
        if (view.is_fixed[i] || cell.adjacency()[i].empty()) continue;
        sol.kcl_residual = std::max(sol.kcl_residual, std::abs(node_current(static_cast<NodeId>(i))));
    }
    return sol;
}

double electrolyte_potential(const SimulationCell& cell,
                             const ElectrochemicalState& state,
                             std::span<const double> node_potentials) {
    (void)state;
    double num = 0.0;
    double den = 0.0;
    for (const auto& seg : cell.segments()) {
        double v_mid = 0.5 * (node_potentials[seg.a] + node_potentials[seg.b]);
        double c = cell.coupling_capacitance_f(seg.id);
        num += c * v_mid;
        den += c;
    }
    for (const auto& id : cell.electrode_ids()) {
        double v = node_potentials[cell.electrode_node(id)];
        if (!std::isfinite(v)) continue; // bare floating metal follows the electrolyte
        num += cell.dl_capacitance_f() * v;
        den += cell.dl_capacitance_f();
    }
    if (den <= 0.0) return 0.0;
    return num / den;
}

namespace {

/// Bare floating electrodes sit at the electrolyte potential.
void patch_isolated(std::vector<double>& potentials, double v_elec) {
    for (double& v : potentials)
        if (!std::isfinite(v)) v = v_elec;
}

} // namespace

// =============================================================================
// Self-consistent DC
// =============================================================================

OperatingPoint solve_dc(const SimulationCell& cell,
                        const BoundaryCondition& bc,
                        std::optional<ElectrochemicalState> initial,
                        const DcOptions& options) {
    ElectrochemicalState state =
        initial ? std::move(*initial) : ElectrochemicalState::rested(cell.segments().size());
    if (state.size() != cell.segments().size())
        throw DomainError("initial state does not cover the cell");

    LinearSolution sol;
    double residual = std::numeric_limits<double>::infinity();
    // A segment whose own conductance dominates its midpoint potential maps
    // onto a locally expanding oscillation (s down -> midpoint up -> s_eq up).
    // Per-segment damping handles this: halve on a sign flip of the segment's
    // update, recover geometrically while the update direction is steady.
    std::vector<double> damping(cell.segments().size(), options.damping);
    std::vector<double> delta_prev(cell.segments().size(), 0.0);
    int iter = 0;
    for (; iter < options.max_iterations; ++iter) {
        sol = solve_linear_network(cell, state, bc);
        double v_elec = electrolyte_potential(cell, state, sol.node_potentials);
        patch_isolated(sol.node_potentials, v_elec);
        state.electrolyte_potential_v = v_elec;

        residual = 0.0;
        for (const auto& seg : cell.segments()) {
            double v_mid = 0.5 * (sol.node_potentials[seg.a] + sol.node_potentials[seg.b]);
            double s_eq = equilibrium_doping(v_elec - v_mid, cell.device());
            // Quasi-static: traps frozen, but they still cap the doping range.
            s_eq = std::min(s_eq, 1.0 - state.trapped[seg.id]);
            s_eq = std::max(s_eq, cell.device().residual_doping);
            double delta = s_eq - state.doping[seg.id];
            residual = std::max(residual, std::abs(delta));
            double& d = damping[seg.id];
            if (delta * delta_prev[seg.id] < 0.0) {
                d = std::max(0.02, 0.5 * d);
            } else {
                d = std::min(1.0, 1.3 * d);
            }
            delta_prev[seg.id] = delta;
            state.doping[seg.id] += d * delta;
        }
        if (residual < options.tolerance) break;
    }
    if (residual >= options.tolerance)
        throw SolverError("solve_dc did not converge: residual " + std::to_string(residual) +
                          " after " + std::to_string(iter) + " iterations");

    sol = solve_linear_network(cell, state, bc);
    double v_elec = electrolyte_potential(cell, state, sol.node_potentials);
    patch_isolated(sol.node_potentials, v_elec);
    state.electrolyte_potential_v = v_elec;

    OperatingPoint op;
    op.node_potentials = std::move(sol.node_potentials);
    op.terminal_currents = std::move(sol.terminal_currents);
    op.state = std::move(state);
    op.kcl_residual = sol.kcl_residual;
    op.iterations = iter + 1;
    return op;
}

// =============================================================================
// Transient
// =============================================================================

const BoundaryCondition& DriveWaveform::bc_at(double t_s) const {
    if (phases.empty()) throw DomainError("waveform has no phases");
    const BoundaryCondition* active = &phases.front().bc;
    for (const auto& p : phases) {
        if (p.t_start_s <= t_s) active = &p.bc;
        else break;
    }
    return *active;
}

void DriveWaveform::append_phase(double phase_duration_s, BoundaryCondition bc_) {
    if (phase_duration_s <= 0) throw DomainError("phase duration must be > 0");
    phases.push_back({duration_s, std::move(bc_)});
    duration_s += phase_duration_s;
}

std::size_t Trace::electrode_index(const std::string& id) const {
    for (std::size_t i = 0; i < electrode_ids.size(); ++i)
        if (electrode_ids[i] == id) return i;
    throw LookupError("no electrode '" + id + "' in trace");
}

void Trace::append(const Trace& tail) {
    if (electrode_ids.empty()) electrode_ids = tail.electrode_ids;
    if (electrode_ids != tail.electrode_ids)
        throw DomainError("cannot append traces with different electrode layouts");
    if (!time_s.empty() && !tail.time_s.empty() && tail.time_s.front() <= time_s.back())
        throw DomainError("appended trace timestamps must keep increasing");
    time_s.insert(time_s.end(), tail.time_s.begin(), tail.time_s.end());
    electrode_currents.insert(electrode_currents.end(), tail.electrode_currents.begin(),
                              tail.electrode_currents.end());
    electrode_potentials.insert(electrode_potentials.end(), tail.electrode_potentials.begin(),
                                tail.electrode_potentials.end());
    electrolyte_v.insert(electrolyte_v.end(), tail.electrolyte_v.begin(), tail.electrolyte_v.end());
    doping_snapshots.insert(doping_snapshots.end(), tail.doping_snapshots.begin(),
                            tail.doping_snapshots.end());
}

double stability_dt_limit(const SimulationCell& cell) {
    return cell.min_time_constant_s() / 10.0;
}

TransientResult run_transient(const SimulationCell& cell,
                              const DriveWaveform& waveform,
                              double dt_s,
                              ElectrochemicalState initial,
                              const TransientOptions& options) {
    if (dt_s <= 0) throw StepError("dt must be > 0");
    if (dt_s > stability_dt_limit(cell) * (1.0 + 1e-12))
        throw StepError("dt " + std::to_string(dt_s) + " s exceeds the stability limit " +
                        std::to_string(stability_dt_limit(cell)) + " s");
    if (waveform.phases.empty() || waveform.duration_s <= 0)
        throw DomainError("waveform must contain at least one phase");
    if (options.sample_stride < 1) throw DomainError("sample_stride must be >= 1");
    if (initial.size() != cell.segments().size())
        throw DomainError("initial state does not cover the cell");

    TransientResult result;
    Trace& trace = result.trace;
    trace.electrode_ids = cell.electrode_ids();

    ElectrochemicalState state = std::move(initial);
    long step = 0;
    long next_snapshot = 0;
    long snapshot_every =
        options.snapshot_interval_s > 0
            ? std::max<long>(1, std::lround(options.snapshot_interval_s / dt_s))
            : 0;

    for (std::size_t pi = 0; pi < waveform.phases.size(); ++pi) {
        const auto& phase = waveform.phases[pi];
        double phase_end =
            pi + 1 < waveform.phases.size() ? waveform.phases[pi + 1].t_start_s : waveform.duration_s;
        long n_steps = std::max<long>(1, std::lround((phase_end - phase.t_start_s) / dt_s));

        for (long k = 0; k < n_steps; ++k, ++step) {
            double t = options.t0_s + phase.t_start_s + static_cast<double>(k) * dt_s;
            try {
                LinearSolution sol = solve_linear_network(cell, state, phase.bc);
                double v_elec = electrolyte_potential(cell, state, sol.node_potentials);
                patch_isolated(sol.node_potentials, v_elec);
                state.electrolyte_potential_v = v_elec;

                if (step % options.sample_stride == 0) {
                    trace.time_s.push_back(t);
                    std::vector<double> currents, potentials;
                    currents.reserve(trace.electrode_ids.size());
                    potentials.reserve(trace.electrode_ids.size());
                    for (const auto& id : trace.electrode_ids) {
                        currents.push_back(sol.terminal_currents[id]);
                        potentials.push_back(sol.node_potentials[cell.electrode_node(id)]);
                    }
                    trace.electrode_currents.push_back(std::move(currents));
                    trace.electrode_potentials.push_back(std::move(potentials));
                    trace.electrolyte_v.push_back(v_elec);
                }
                if (snapshot_every > 0 && step >= next_snapshot) {
                    trace.doping_snapshots.emplace_back(t, state);
                    next_snapshot += snapshot_every;
                }

                state = step_doping(cell, state, sol.node_potentials, dt_s);
            } catch (const Error& e) {
                throw SolverError("transient failed at t=" + std::to_string(t) +
                                  " s: " + e.what());
            }
        }
    }
    result.final_state = std::move(state);
    return result;
}

} // namespace dendsim
