#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "mmc/error.hpp"
#include "mmc/numeric.hpp"

namespace mmc {

/// Cluster ids per instance, each in [0, c).
using LabelVector = std::vector<int>;

/// Finishing-step configuration: restart count, optional row normalization
/// of the embedding, and the seed that derives every random draw.
struct ClusterParams {
    int restarts = 20;
    bool row_normalize = true;
    std::uint64_t seed = 0;
};

/// Scales every row to unit Euclidean norm. Zero rows are left unchanged;
/// their count is reported through `zero_rows` when provided.
inline Eigen::MatrixXd row_normalize(const Eigen::MatrixXd& u, std::size_t* zero_rows = nullptr) {
    Eigen::MatrixXd out = u;
    std::size_t zeros = 0;
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
        const double norm = out.row(i).norm();
        if (norm == 0.0) {
            ++zeros;
            continue;
        }
        out.row(i) /= norm;
    }
    if (zero_rows) *zero_rows = zeros;
    return out;
}

inline Eigen::MatrixXd row_normalize(const OrthonormalFactor& u, std::size_t* zero_rows = nullptr) {
    return row_normalize(u.values(), zero_rows);
}

struct KmeansResult {
    LabelVector labels;
    double inertia = 0.0;
};

namespace detail {

// k-means++ seeding: first center uniform, then D^2-weighted draws via an
// explicit cumulative-sum walk (keeps the sampling fully deterministic and
// portable across standard-library implementations).
inline std::vector<Eigen::Index> kmeanspp_centers(const Eigen::MatrixXd& points, int k,
                                                  std::mt19937_64& rng) {
    const Eigen::Index n = points.rows();
    std::vector<Eigen::Index> centers;
    centers.reserve(static_cast<std::size_t>(k));
    std::uniform_int_distribution<Eigen::Index> uniform_index(0, n - 1);
    centers.push_back(uniform_index(rng));
    Eigen::VectorXd d2(n);
    for (Eigen::Index i = 0; i < n; ++i)
        d2(i) = (points.row(i) - points.row(centers[0])).squaredNorm();
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<char> taken(static_cast<std::size_t>(n), 0);
    taken[static_cast<std::size_t>(centers[0])] = 1;
    while (static_cast<int>(centers.size()) < k) {
        const double total = d2.sum();
        Eigen::Index chosen = -1;
        if (total > 0.0) {
            const double target = unit(rng) * total;
            double cum = 0.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                cum += d2(i);
                if (cum > target) {
                    chosen = i;
                    break;
                }
            }
            if (chosen < 0) {  // numeric edge: target landed on the final cumulative sum
                for (Eigen::Index i = n - 1; i >= 0; --i)
                    if (d2(i) > 0.0) {
                        chosen = i;
                        break;
                    }
            }
        } else {
            // all remaining points coincide with existing centers; take the
            // lowest untaken index so duplicates still yield k centers
            for (Eigen::Index i = 0; i < n; ++i)
                if (!taken[static_cast<std::size_t>(i)]) {
                    chosen = i;
                    break;
                }
        }
        taken[static_cast<std::size_t>(chosen)] = 1;
        centers.push_back(chosen);
        for (Eigen::Index i = 0; i < n; ++i)
            d2(i) = std::min(d2(i), (points.row(i) - points.row(chosen)).squaredNorm());
    }
    return centers;
}

}  // namespace detail

/// One k-means run: k-means++ seeding followed by Lloyd iterations (at most
/// 100) with empty clusters repaired by stealing the farthest point. When
/// `inertia_trace` is given it receives the inertia after every iteration
/// (a non-increasing sequence).
inline KmeansResult kmeans_single(const Eigen::MatrixXd& points, int k, std::uint64_t seed,
                                  std::vector<double>* inertia_trace = nullptr) {
    const Eigen::Index n = points.rows();
    if (k < 1 || k > n)
        throw DimensionError("kmeans: k = " + std::to_string(k) + " out of range for n = " +
                             std::to_string(n));
    if (!points.allFinite()) throw NumericError("kmeans: non-finite points");
    std::mt19937_64 rng(seed);
    const std::vector<Eigen::Index> seeds = detail::kmeanspp_centers(points, k, rng);
    Eigen::MatrixXd centers(k, points.cols());
    for (int j = 0; j < k; ++j) centers.row(j) = points.row(seeds[static_cast<std::size_t>(j)]);

    LabelVector labels(static_cast<std::size_t>(n), 0);
    if (inertia_trace) inertia_trace->clear();
    double inertia = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
        // assignment: nearest center, ties to the lowest center index
        bool changed = iter == 0;
        for (Eigen::Index i = 0; i < n; ++i) {
            int best = 0;
            double best_d2 = (points.row(i) - centers.row(0)).squaredNorm();
            for (int j = 1; j < k; ++j) {
                const double d2 = (points.row(i) - centers.row(j)).squaredNorm();
                if (d2 < best_d2) {
                    best_d2 = d2;
                    best = j;
                }
            }
            if (labels[static_cast<std::size_t>(i)] != best) {
                labels[static_cast<std::size_t>(i)] = best;
                changed = true;
            }
        }
        // repair: every empty cluster steals the point farthest from its
        // center, taken only from clusters that keep at least one member
        std::vector<int> sizes(static_cast<std::size_t>(k), 0);
        for (int lab : labels) ++sizes[static_cast<std::size_t>(lab)];
        for (int j = 0; j < k; ++j) {
            if (sizes[static_cast<std::size_t>(j)] > 0) continue;
            Eigen::Index farthest = -1;
            double far_d2 = -1.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                const int owner = labels[static_cast<std::size_t>(i)];
                if (sizes[static_cast<std::size_t>(owner)] < 2) continue;
                const double d2 = (points.row(i) - centers.row(owner)).squaredNorm();
                if (d2 > far_d2) {
                    far_d2 = d2;
                    farthest = i;
                }
            }
            if (farthest >= 0) {
                --sizes[static_cast<std::size_t>(labels[static_cast<std::size_t>(farthest)])];
                labels[static_cast<std::size_t>(farthest)] = j;
                ++sizes[static_cast<std::size_t>(j)] ;
                changed = true;
            }
        }
        // update step
        centers.setZero();
        for (Eigen::Index i = 0; i < n; ++i)
            centers.row(labels[static_cast<std::size_t>(i)]) += points.row(i);
        for (int j = 0; j < k; ++j)
            if (sizes[static_cast<std::size_t>(j)] > 0)
                centers.row(j) /= static_cast<double>(sizes[static_cast<std::size_t>(j)]);
        inertia = 0.0;
        for (Eigen::Index i = 0; i < n; ++i)
            inertia += (points.row(i) - centers.row(labels[static_cast<std::size_t>(i)])).squaredNorm();
        if (inertia_trace) inertia_trace->push_back(inertia);
        if (!changed) break;
    }
    return KmeansResult{std::move(labels), inertia};
}

/// Restarted k-means: `restarts` independent runs with per-run seeds drawn
/// up front from `seed`; the minimum-inertia labeling wins (earlier restart
/// on exact ties).
inline KmeansResult kmeans(const Eigen::MatrixXd& points, int k, int restarts,
                           std::uint64_t seed) {
    if (restarts < 1)
        throw DimensionError("kmeans: restarts must be >= 1, got " + std::to_string(restarts));
    std::mt19937_64 master(seed);
    std::vector<std::uint64_t> run_seeds(static_cast<std::size_t>(restarts));
    for (auto& s : run_seeds) s = master();
    KmeansResult best;
    best.inertia = std::numeric_limits<double>::infinity();
    for (int r = 0; r < restarts; ++r) {
        KmeansResult run = kmeans_single(points, k, run_seeds[static_cast<std::size_t>(r)]);
        if (run.inertia < best.inertia) best = std::move(run);
    }
    return best;
}

/// Final assignment step: optionally row-normalize the consensus embedding,
/// then run restarted k-means on its rows.
inline LabelVector assign_clusters(const OrthonormalFactor& consensus, int c,
                                   const ClusterParams& params) {
    const Eigen::MatrixXd points =
        params.row_normalize ? row_normalize(consensus) : consensus.values();
    return kmeans(points, c, params.restarts, params.seed).labels;
}

}  // namespace mmc
