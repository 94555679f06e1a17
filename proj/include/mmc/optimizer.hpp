#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mmc/clustering.hpp"
#include "mmc/error.hpp"
#include "mmc/mapping.hpp"
#include "mmc/numeric.hpp"

namespace mmc {

/// One source: its per-view normalized Laplacians, per-view coupling weights
/// toward the source's consensus factor, and the cluster count.
struct SourceProblem {
    std::string name;
    std::vector<SymmetricMatrix> laplacians;
    std::vector<double> view_weights;
    Eigen::Index cluster_count = 0;

    Eigen::Index instances() const { return laplacians.empty() ? 0 : laplacians.front().size(); }
};

/// Cross-source coupling: the (partially known) instance mapping between an
/// unordered source pair plus the penalty weight on their disagreement.
struct PairCoupling {
    double weight = 1.0;
    MappingState mapping;
};

/// The full collective-clustering problem: K sources and the couplings
/// between those source pairs that share (partial) instance mappings.
struct MmcProblem {
    std::vector<SourceProblem> sources;
    std::vector<PairCoupling> pairs;

    void validate() const {
        if (sources.empty()) throw DimensionError("MmcProblem: no sources");
        for (std::size_t k = 0; k < sources.size(); ++k) {
            const SourceProblem& s = sources[k];
            const std::string who = "source " + std::to_string(k);
            if (s.laplacians.empty()) throw DimensionError("MmcProblem: " + who + " has no views");
            if (s.view_weights.size() != s.laplacians.size())
                throw DimensionError("MmcProblem: " + who + " has " +
                                     std::to_string(s.view_weights.size()) + " weights for " +
                                     std::to_string(s.laplacians.size()) + " views");
            const Eigen::Index n = s.laplacians.front().size();
            for (const SymmetricMatrix& l : s.laplacians)
                if (l.size() != n)
                    throw DimensionError("MmcProblem: views of " + who + " disagree on size");
            if (s.cluster_count < 1 || s.cluster_count > n)
                throw DimensionError("MmcProblem: " + who + " cluster count " +
                                     std::to_string(s.cluster_count) + " out of range for n = " +
                                     std::to_string(n));
            for (double w : s.view_weights)
                if (!(w >= 0.0) || !std::isfinite(w))
                    throw ValidationError("MmcProblem: " + who + " has an invalid view weight");
        }
        std::vector<std::pair<int, int>> seen;
        for (const PairCoupling& p : pairs) {
            const int i = p.mapping.source_i();
            const int j = p.mapping.source_j();
            if (i < 0 || j < 0 || i >= static_cast<int>(sources.size()) ||
                j >= static_cast<int>(sources.size()) || i >= j)
                throw DimensionError("MmcProblem: pair (" + std::to_string(i) + ", " +
                                     std::to_string(j) + ") is not a valid ordered source pair");
            if (std::find(seen.begin(), seen.end(), std::make_pair(i, j)) != seen.end())
                throw ValidationError("MmcProblem: duplicate pair (" + std::to_string(i) + ", " +
                                      std::to_string(j) + ")");
            seen.emplace_back(i, j);
            if (p.mapping.rows() != sources[static_cast<std::size_t>(i)].instances() ||
                p.mapping.cols() != sources[static_cast<std::size_t>(j)].instances())
                throw DimensionError("MmcProblem: mapping (" + std::to_string(i) + ", " +
                                     std::to_string(j) + ") shape does not match source sizes");
            if (!(p.weight >= 0.0) || !std::isfinite(p.weight))
                throw ValidationError("MmcProblem: pair (" + std::to_string(i) + ", " +
                                      std::to_string(j) + ") has an invalid weight");
        }
    }
};

/// Optimization knobs. Weights here are the defaults applied when a problem
/// is built from files; a problem's own weights always win once set.
struct MmcConfig {
    double default_alpha = 0.1;
    double default_beta = 1.0;
    double inner_tol = 1e-6;
    double outer_tol = 1e-4;
    int max_inner = 100;
    int max_outer = 50;
    int restarts = 20;
    std::uint64_t seed = 0;
    bool row_normalize = true;

    void validate() const {
        if (!(inner_tol > 0.0) || !(outer_tol > 0.0))
            throw ValidationError("MmcConfig: tolerances must be positive");
        if (max_inner < 1 || max_outer < 1)
            throw ValidationError("MmcConfig: iteration caps must be >= 1");
        if (restarts < 1) throw ValidationError("MmcConfig: restarts must be >= 1");
        if (!(default_alpha >= 0.0) || !(default_beta >= 0.0))
            throw ValidationError("MmcConfig: default weights must be non-negative");
    }

    ClusterParams cluster_params() const { return ClusterParams{restarts, row_normalize, seed}; }
};

/// One objective evaluation along the optimization path. Rows with inner = 0
/// record the objective entering that outer iteration's inner loop, so the
/// rows of one outer iteration form a non-decreasing sequence.
struct TraceRow {
    int outer = 0;
    int inner = 0;
    double objective = 0.0;
};

/// Mutable optimization state: per-view factors, per-source consensus
/// factors, current mappings, and the objective trace.
struct MmcState {
    std::vector<std::vector<OrthonormalFactor>> view_factors;
    std::vector<OrthonormalFactor> consensus;
    std::vector<MappingState> mappings;
    std::vector<TraceRow> trace;
    int outer_iters = 0;
    std::vector<int> inner_iters;
};

struct MmcResult {
    std::vector<OrthonormalFactor> consensus;
    std::vector<LabelVector> labels;
    std::vector<MappingState> mappings;
    std::vector<TraceRow> trace;
    int outer_iters = 0;
    std::vector<int> inner_iters;
    bool outer_converged = false;
    bool mapping_fallback = false;
    double wall_time_sec = 0.0;
};

/// Per-view spectral embedding: top-c eigenvectors of the view's Laplacian.
inline OrthonormalFactor init_view_factor(const SymmetricMatrix& laplacian, Eigen::Index c) {
    return top_eigvecs(laplacian, c).factor;
}

/// Consensus seed for one source: top-c eigenvectors of the weighted sum of
/// the views' projection matrices, sum_i alpha_i U_i U_i^T.
inline OrthonormalFactor init_consensus(const std::vector<OrthonormalFactor>& view_factors,
                                        const std::vector<double>& weights, Eigen::Index c) {
    if (view_factors.empty()) throw DimensionError("init_consensus: no view factors");
    if (view_factors.size() != weights.size())
        throw DimensionError("init_consensus: " + std::to_string(weights.size()) +
                             " weights for " + std::to_string(view_factors.size()) + " factors");
    const Eigen::Index n = view_factors.front().rows();
    double weight_sum = 0.0;
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t i = 0; i < view_factors.size(); ++i) {
        if (view_factors[i].rows() != n)
            throw DimensionError("init_consensus: factors disagree on instance count");
        if (weights[i] == 0.0) continue;
        const Eigen::MatrixXd& u = view_factors[i].values();
        sum.noalias() += weights[i] * (u * u.transpose());
        weight_sum += weights[i];
    }
    if (weight_sum == 0.0)
        throw DegenerateError("init_consensus: all view weights are zero");
    return top_eigvecs(SymmetricMatrix(sum), c).factor;
}

/// View-factor refinement: top-c eigenvectors of the Laplacian augmented
/// with the consensus projection, L + alpha U* U*^T. This is the exact
/// maximizer of the view's subproblem with the consensus fixed.
inline OrthonormalFactor update_view_factor(const SymmetricMatrix& laplacian, double alpha,
                                            const OrthonormalFactor& consensus, Eigen::Index c) {
    if (consensus.rows() != laplacian.size())
        throw DimensionError("update_view_factor: consensus has " +
                             std::to_string(consensus.rows()) + " rows, Laplacian is " +
                             std::to_string(laplacian.size()));
    if (alpha == 0.0) return init_view_factor(laplacian, c);
    const Eigen::MatrixXd& u = consensus.values();
    Eigen::MatrixXd augmented = laplacian.values();
    augmented.noalias() += alpha * (u * u.transpose());
    return top_eigvecs(SymmetricMatrix(std::move(augmented)), c).factor;
}

/// Consensus refinement for source k: top-c_k eigenvectors of the modified
/// Laplacian that stacks the source's own view projections with every
/// coupled neighbor's consensus projection carried across the mapping,
/// sum_i alpha_i U_i U_i^T + sum_j beta M U^{j*} U^{j*T} M^T.
/// Couplings with weight exactly 0 are skipped entirely, which keeps a
/// beta = 0 run bit-identical to fully independent per-source runs.
inline OrthonormalFactor update_consensus(const MmcProblem& problem, const MmcState& state,
                                          int k) {
    const SourceProblem& source = problem.sources[static_cast<std::size_t>(k)];
    const Eigen::Index n = source.instances();
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(n, n);
    const auto& factors = state.view_factors[static_cast<std::size_t>(k)];
    for (std::size_t i = 0; i < factors.size(); ++i) {
        if (source.view_weights[i] == 0.0) continue;
        const Eigen::MatrixXd& u = factors[i].values();
        sum.noalias() += source.view_weights[i] * (u * u.transpose());
    }
    for (std::size_t p = 0; p < problem.pairs.size(); ++p) {
        const PairCoupling& pair = problem.pairs[p];
        if (pair.weight == 0.0) continue;
        const MappingState& mapping = state.mappings[p];
        int other = -1;
        Eigen::MatrixXd m;
        if (mapping.source_i() == k) {
            other = mapping.source_j();
            m = mapping.mapping();
        } else if (mapping.source_j() == k) {
            other = mapping.source_i();
            m = mapping.mapping().transpose();
        } else {
            continue;
        }
        const Eigen::MatrixXd bridged =
            m * state.consensus[static_cast<std::size_t>(other)].values();
        sum.noalias() += pair.weight * (bridged * bridged.transpose());
    }
    return top_eigvecs(SymmetricMatrix(std::move(sum)), source.cluster_count).factor;
}

/// The collective objective: per view tr(U^T L U) + alpha |U^T U*|_F^2,
/// plus beta |U^{i*T} M U^{j*}|_F^2 once per coupled source pair. The pair
/// term appears exactly once per unordered pair so that update_consensus is
/// the exact maximizer of its restriction (the coupling enters a single
/// source's modified Laplacian with the same coefficient beta).
inline double objective(const MmcProblem& problem, const MmcState& state) {
    double total = 0.0;
    for (std::size_t k = 0; k < problem.sources.size(); ++k) {
        const SourceProblem& source = problem.sources[k];
        const Eigen::MatrixXd& consensus = state.consensus[k].values();
        for (std::size_t i = 0; i < source.laplacians.size(); ++i) {
            const Eigen::MatrixXd& u = state.view_factors[k][i].values();
            total += (u.transpose() * (source.laplacians[i].values() * u)).trace();
            if (source.view_weights[i] != 0.0)
                total += source.view_weights[i] * (u.transpose() * consensus).squaredNorm();
        }
    }
    for (std::size_t p = 0; p < problem.pairs.size(); ++p) {
        const PairCoupling& pair = problem.pairs[p];
        if (pair.weight == 0.0) continue;
        const MappingState& mapping = state.mappings[p];
        const Eigen::MatrixXd& ui =
            state.consensus[static_cast<std::size_t>(mapping.source_i())].values();
        const Eigen::MatrixXd& uj =
            state.consensus[static_cast<std::size_t>(mapping.source_j())].values();
        total += pair.weight * (ui.transpose() * (mapping.mapping() * uj)).squaredNorm();
    }
    return total;
}

/// Source k's share of the objective: its own view terms plus the full
/// coupling term of every pair it belongs to. Coupling terms are counted for
/// both endpoints so a source stays responsive while a coupled neighbor is
/// still moving. Zero-weight terms are skipped exactly as in objective().
inline double source_objective(const MmcProblem& problem, const MmcState& state, int k) {
    double total = 0.0;
    const SourceProblem& source = problem.sources[static_cast<std::size_t>(k)];
    const Eigen::MatrixXd& consensus = state.consensus[static_cast<std::size_t>(k)].values();
    for (std::size_t i = 0; i < source.laplacians.size(); ++i) {
        const Eigen::MatrixXd& u = state.view_factors[static_cast<std::size_t>(k)][i].values();
        total += (u.transpose() * (source.laplacians[i].values() * u)).trace();
        if (source.view_weights[i] != 0.0)
            total += source.view_weights[i] * (u.transpose() * consensus).squaredNorm();
    }
    for (std::size_t p = 0; p < problem.pairs.size(); ++p) {
        const PairCoupling& pair = problem.pairs[p];
        if (pair.weight == 0.0) continue;
        const MappingState& mapping = state.mappings[p];
        if (mapping.source_i() != k && mapping.source_j() != k) continue;
        const Eigen::MatrixXd& ui =
            state.consensus[static_cast<std::size_t>(mapping.source_i())].values();
        const Eigen::MatrixXd& uj =
            state.consensus[static_cast<std::size_t>(mapping.source_j())].values();
        total += pair.weight * (ui.transpose() * (mapping.mapping() * uj)).squaredNorm();
    }
    return total;
}

namespace detail {

template <typename Fn>
auto with_context(const std::string& where, Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const Error& e) {
        throw Error("fit: " + where + ": " + e.what());
    }
}

}  // namespace detail

/// Runs the full alternating optimization (Algorithm: init factors, init
/// consensus, init unknown mapping blocks; then outer iterations of {inner
/// sweeps to convergence of the objective, mapping refresh} until the
/// mappings stabilize) and finishes with restarted k-means per source.
inline MmcResult fit(const MmcProblem& problem, const MmcConfig& config) {
    problem.validate();
    config.validate();
    const auto start = std::chrono::steady_clock::now();
    const std::size_t n_sources = problem.sources.size();

    MmcState state;
    state.view_factors.resize(n_sources);
    bool fallback = false;
    for (std::size_t k = 0; k < n_sources; ++k) {
        const SourceProblem& source = problem.sources[k];
        state.view_factors[k].reserve(source.laplacians.size());
        for (std::size_t i = 0; i < source.laplacians.size(); ++i)
            state.view_factors[k].push_back(detail::with_context(
                "init view factor, source " + std::to_string(k) + ", view " + std::to_string(i),
                [&] { return init_view_factor(source.laplacians[i], source.cluster_count); }));
        state.consensus.push_back(detail::with_context(
            "init consensus, source " + std::to_string(k), [&] {
                return init_consensus(state.view_factors[k], source.view_weights,
                                      source.cluster_count);
            }));
    }
    for (std::size_t p = 0; p < problem.pairs.size(); ++p) {
        const MappingState& mapping = problem.pairs[p].mapping;
        MappingInit init = detail::with_context(
            "init mapping, pair (" + std::to_string(mapping.source_i()) + ", " +
                std::to_string(mapping.source_j()) + ")",
            [&] {
                return init_unknown_block(
                    mapping,
                    state.consensus[static_cast<std::size_t>(mapping.source_i())],
                    state.consensus[static_cast<std::size_t>(mapping.source_j())]);
            });
        fallback = fallback || init.uniform_fallback;
        state.mappings.push_back(std::move(init.state));
    }

    // A source is updated only while its own objective share still moves by
    // at least inner_tol (relative), and a mapping refresh re-activates only
    // sources it can actually affect (endpoints of positive-weight pairs).
    // This keeps an uncoupled source's update sequence — and therefore its
    // results — bit-identical to a run where the other sources do not exist.
    // With one source the rule is exactly the relative change of the whole
    // objective.
    std::vector<char> active(n_sources, 1);
    bool converged = false;
    for (int outer = 1; outer <= config.max_outer; ++outer) {
        state.trace.push_back(TraceRow{outer, 0, objective(problem, state)});
        std::vector<double> previous(n_sources);
        for (std::size_t k = 0; k < n_sources; ++k)
            previous[k] = source_objective(problem, state, static_cast<int>(k));
        int sweeps = 0;
        for (int inner = 1; inner <= config.max_inner; ++inner) {
            const std::string where_iter =
                "outer " + std::to_string(outer) + ", inner " + std::to_string(inner);
            for (std::size_t k = 0; k < n_sources; ++k) {
                if (!active[k]) continue;
                const SourceProblem& source = problem.sources[k];
                for (std::size_t i = 0; i < source.laplacians.size(); ++i)
                    state.view_factors[k][i] = detail::with_context(
                        "update view factor, source " + std::to_string(k) + ", view " +
                            std::to_string(i) + ", " + where_iter,
                        [&] {
                            return update_view_factor(source.laplacians[i],
                                                      source.view_weights[i], state.consensus[k],
                                                      source.cluster_count);
                        });
            }
            for (std::size_t k = 0; k < n_sources; ++k) {
                if (!active[k]) continue;
                state.consensus[k] = detail::with_context(
                    "update consensus, source " + std::to_string(k) + ", " + where_iter,
                    [&] { return update_consensus(problem, state, static_cast<int>(k)); });
            }
            state.trace.push_back(TraceRow{outer, inner, objective(problem, state)});
            sweeps = inner;
            bool any_active = false;
            for (std::size_t k = 0; k < n_sources; ++k) {
                const double current = source_objective(problem, state, static_cast<int>(k));
                active[k] = std::abs(current - previous[k]) / std::max(1.0, std::abs(current)) >=
                            config.inner_tol;
                previous[k] = current;
                any_active = any_active || active[k];
            }
            if (!any_active) break;
        }
        state.inner_iters.push_back(sweeps);
        state.outer_iters = outer;

        double max_delta = 0.0;
        for (std::size_t p = 0; p < state.mappings.size(); ++p) {
            const MappingState& old_state = state.mappings[p];
            MappingState next = detail::with_context(
                "update mapping, pair (" + std::to_string(old_state.source_i()) + ", " +
                    std::to_string(old_state.source_j()) + "), outer " + std::to_string(outer),
                [&] {
                    return update_mapping(
                        old_state,
                        state.consensus[static_cast<std::size_t>(old_state.source_i())],
                        state.consensus[static_cast<std::size_t>(old_state.source_j())]);
                });
            max_delta = std::max(max_delta, mapping_delta(old_state, next));
            state.mappings[p] = std::move(next);
        }
        if (max_delta < config.outer_tol) {
            converged = true;
            break;
        }
        for (const PairCoupling& pair : problem.pairs) {
            if (pair.weight == 0.0) continue;
            active[static_cast<std::size_t>(pair.mapping.source_i())] = 1;
            active[static_cast<std::size_t>(pair.mapping.source_j())] = 1;
        }
    }

    MmcResult result;
    result.consensus = std::move(state.consensus);
    result.mappings = std::move(state.mappings);
    result.trace = std::move(state.trace);
    result.outer_iters = state.outer_iters;
    result.inner_iters = std::move(state.inner_iters);
    result.outer_converged = converged;
    result.mapping_fallback = fallback;
    for (std::size_t k = 0; k < n_sources; ++k)
        result.labels.push_back(detail::with_context(
            "assign clusters, source " + std::to_string(k), [&] {
                return assign_clusters(result.consensus[k],
                                       static_cast<int>(problem.sources[k].cluster_count),
                                       config.cluster_params());
            }));
    result.wall_time_sec =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

}  // namespace mmc
