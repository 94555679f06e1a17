#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "mmc/clustering.hpp"
#include "mmc/error.hpp"
#include "mmc/mapping.hpp"
#include "mmc/numeric.hpp"

namespace mmc {

/// Joint label-count table between two labelings of the same instances.
struct ContingencyTable {
    Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic> counts;
    std::int64_t total = 0;

    static ContingencyTable from_labels(const LabelVector& a, const LabelVector& b) {
        if (a.size() != b.size())
            throw DimensionError("ContingencyTable: label lengths differ (" +
                                 std::to_string(a.size()) + " vs " + std::to_string(b.size()) +
                                 ")");
        if (a.empty()) throw DimensionError("ContingencyTable: empty labelings");
        int max_a = 0, max_b = 0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            if (a[i] < 0 || b[i] < 0)
                throw ValidationError("ContingencyTable: negative label id");
            max_a = std::max(max_a, a[i]);
            max_b = std::max(max_b, b[i]);
        }
        ContingencyTable table;
        table.counts.setZero(max_a + 1, max_b + 1);
        for (std::size_t i = 0; i < a.size(); ++i) ++table.counts(a[i], b[i]);
        table.total = static_cast<std::int64_t>(a.size());
        return table;
    }
};

/// Normalized mutual information I(a;b) / sqrt(H(a) H(b)) with natural-log
/// entropies. Two structural cases are answered exactly: statistically
/// independent labelings (every cell satisfies n_ab * n = rowsum * colsum,
/// which subsumes zero-entropy labelings) give 0, and labelings identical up
/// to a bijection of ids give 1. The general case sums its log terms in
/// sorted order, which makes the result exactly symmetric and exactly
/// invariant to relabeling.
inline double nmi(const LabelVector& a, const LabelVector& b) {
    const ContingencyTable table = ContingencyTable::from_labels(a, b);
    const auto& counts = table.counts;
    const std::int64_t n = table.total;
    const Eigen::Index rows = counts.rows(), cols = counts.cols();
    std::vector<std::int64_t> row_sum(static_cast<std::size_t>(rows), 0);
    std::vector<std::int64_t> col_sum(static_cast<std::size_t>(cols), 0);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) {
            row_sum[static_cast<std::size_t>(r)] += counts(r, c);
            col_sum[static_cast<std::size_t>(c)] += counts(r, c);
        }

    bool independent = true;
    for (Eigen::Index r = 0; r < rows && independent; ++r)
        for (Eigen::Index c = 0; c < cols && independent; ++c)
            if (counts(r, c) * n !=
                row_sum[static_cast<std::size_t>(r)] * col_sum[static_cast<std::size_t>(c)])
                independent = false;
    if (independent) return 0.0;

    bool bijective = true;  // at most one occupied cell per row and per column
    for (Eigen::Index r = 0; r < rows && bijective; ++r) {
        int occupied = 0;
        for (Eigen::Index c = 0; c < cols; ++c) occupied += counts(r, c) > 0 ? 1 : 0;
        if (occupied > 1) bijective = false;
    }
    for (Eigen::Index c = 0; c < cols && bijective; ++c) {
        int occupied = 0;
        for (Eigen::Index r = 0; r < rows; ++r) occupied += counts(r, c) > 0 ? 1 : 0;
        if (occupied > 1) bijective = false;
    }
    if (bijective) return 1.0;

    const double dn = static_cast<double>(n);
    std::vector<double> mi_terms;
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) {
            const std::int64_t cell = counts(r, c);
            if (cell == 0) continue;
            const double ratio = (static_cast<double>(cell) * dn) /
                                 (static_cast<double>(row_sum[static_cast<std::size_t>(r)]) *
                                  static_cast<double>(col_sum[static_cast<std::size_t>(c)]));
            mi_terms.push_back(static_cast<double>(cell) / dn * std::log(ratio));
        }
    std::sort(mi_terms.begin(), mi_terms.end());
    double mi = 0.0;
    for (double t : mi_terms) mi += t;

    const auto entropy = [dn](const std::vector<std::int64_t>& sums) {
        std::vector<double> terms;
        for (std::int64_t s : sums) {
            if (s == 0) continue;
            const double p = static_cast<double>(s) / dn;
            terms.push_back(-p * std::log(p));
        }
        std::sort(terms.begin(), terms.end());
        double h = 0.0;
        for (double t : terms) h += t;
        return h;
    };
    const double ha = entropy(row_sum);
    const double hb = entropy(col_sum);
    if (ha <= 0.0 || hb <= 0.0) return 0.0;  // unreachable after the shortcuts; kept for safety
    const double value = mi / std::sqrt(ha * hb);
    return std::clamp(value, 0.0, 1.0);
}

/// Mean and sample standard deviation of NMI against ground truth over
/// `runs` independent single-restart k-means labelings of the embedding
/// (the evaluation protocol used for reported averages).
struct MeanNmi {
    double mean = 0.0;
    double stddev = 0.0;
};

inline MeanNmi mean_nmi_protocol(const OrthonormalFactor& consensus, int c,
                                 const LabelVector& truth, int runs, std::uint64_t seed,
                                 bool normalize_rows = true) {
    if (runs < 1) throw DimensionError("mean_nmi_protocol: runs must be >= 1");
    if (static_cast<Eigen::Index>(truth.size()) != consensus.rows())
        throw DimensionError("mean_nmi_protocol: truth length " + std::to_string(truth.size()) +
                             " does not match " + std::to_string(consensus.rows()) + " instances");
    const Eigen::MatrixXd points = normalize_rows ? row_normalize(consensus) : consensus.values();
    std::mt19937_64 master(seed);
    std::vector<std::uint64_t> run_seeds(static_cast<std::size_t>(runs));
    for (auto& s : run_seeds) s = master();
    std::vector<double> scores;
    scores.reserve(static_cast<std::size_t>(runs));
    for (int r = 0; r < runs; ++r)
        scores.push_back(nmi(kmeans_single(points, c, run_seeds[static_cast<std::size_t>(r)]).labels,
                             truth));
    double mean = 0.0;
    for (double s : scores) mean += s;
    mean /= static_cast<double>(runs);
    double var = 0.0;
    if (runs > 1) {
        for (double s : scores) var += (s - mean) * (s - mean);
        var /= static_cast<double>(runs - 1);
    }
    return MeanNmi{mean, std::sqrt(var)};
}

/// How well the inferred similarities line up unmapped instances: for each
/// row with no known link, take the largest-similarity unmapped column and
/// check the two instances share a class.
struct MappingAccuracy {
    std::size_t unmapped = 0;
    std::size_t matches = 0;
    double accuracy = 1.0;
};

inline MappingAccuracy mapping_inference_accuracy(const MappingState& map,
                                                  const LabelVector& labels_i,
                                                  const LabelVector& labels_j) {
    if (static_cast<Eigen::Index>(labels_i.size()) != map.rows() ||
        static_cast<Eigen::Index>(labels_j.size()) != map.cols())
        throw DimensionError("mapping_inference_accuracy: label lengths do not match mapping");
    std::vector<Eigen::Index> free_cols;
    for (Eigen::Index b = 0; b < map.cols(); ++b)
        if (map.known().col(b).sum() == 0.0) free_cols.push_back(b);
    MappingAccuracy result;
    for (Eigen::Index a = 0; a < map.rows(); ++a) {
        if (map.known().row(a).sum() != 0.0) continue;
        ++result.unmapped;
        if (free_cols.empty()) continue;  // no candidate to pick: counted, never matched
        Eigen::Index best = free_cols.front();
        for (Eigen::Index b : free_cols)
            if (map.mapping()(a, b) > map.mapping()(a, best)) best = b;
        if (labels_i[static_cast<std::size_t>(a)] == labels_j[static_cast<std::size_t>(best)])
            ++result.matches;
    }
    result.accuracy = result.unmapped == 0
                          ? 1.0
                          : static_cast<double>(result.matches) /
                                static_cast<double>(result.unmapped);
    return result;
}

}  // namespace mmc
