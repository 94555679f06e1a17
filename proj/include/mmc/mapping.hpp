#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "mmc/error.hpp"
#include "mmc/numeric.hpp"

namespace mmc {

/// Partially observed instance mapping between two sources. M holds the
/// current similarity estimates (n_i x n_j, non-negative), W marks which
/// entries are known ground truth (binary, one-to-one). Known entries of M
/// are exactly 1 and are never modified by updates.
class MappingState {
public:
    MappingState(int source_i, int source_j, Eigen::MatrixXd m, Eigen::MatrixXd w)
        : source_i_(source_i), source_j_(source_j), m_(std::move(m)), w_(std::move(w)) {
        if (m_.rows() != w_.rows() || m_.cols() != w_.cols())
            throw DimensionError("MappingState: M is " + shape(m_) + " but W is " + shape(w_));
        if (m_.size() == 0) throw DimensionError("MappingState: empty mapping");
        if (!m_.allFinite()) throw NumericError("MappingState: non-finite entries in M");
        if (m_.minCoeff() < 0.0)
            throw ValidationError("MappingState: negative entries in M");
        for (Eigen::Index a = 0; a < w_.rows(); ++a)
            for (Eigen::Index b = 0; b < w_.cols(); ++b) {
                const double wv = w_(a, b);
                if (wv != 0.0 && wv != 1.0)
                    throw ValidationError("MappingState: W must be binary, got " +
                                          std::to_string(wv));
                if (wv == 1.0 && m_(a, b) != 1.0)
                    throw ValidationError("MappingState: known entries of M must equal 1");
            }
        // one-to-one: at most one known link per row and per column
        for (Eigen::Index a = 0; a < w_.rows(); ++a)
            if (w_.row(a).sum() > 1.0)
                throw ValidationError("MappingState: row " + std::to_string(a) +
                                      " has multiple known links");
        for (Eigen::Index b = 0; b < w_.cols(); ++b)
            if (w_.col(b).sum() > 1.0)
                throw ValidationError("MappingState: column " + std::to_string(b) +
                                      " has multiple known links");
    }

    int source_i() const { return source_i_; }
    int source_j() const { return source_j_; }
    Eigen::Index rows() const { return m_.rows(); }
    Eigen::Index cols() const { return m_.cols(); }
    const Eigen::MatrixXd& mapping() const { return m_; }
    const Eigen::MatrixXd& known() const { return w_; }

    /// The same mapping viewed from the other side: M^(j,i) = M^(i,j)^T.
    MappingState transposed() const {
        return MappingState(source_j_, source_i_, m_.transpose(), w_.transpose());
    }

private:
    static std::string shape(const Eigen::MatrixXd& x) {
        return std::to_string(x.rows()) + "x" + std::to_string(x.cols());
    }

    int source_i_;
    int source_j_;
    Eigen::MatrixXd m_;
    Eigen::MatrixXd w_;
};

/// Builds the initial mapping from a list of known (a, b) instance pairs:
/// M[a][b] = W[a][b] = 1 per pair, everything else 0.
inline MappingState build_mapping(Eigen::Index n_i, Eigen::Index n_j,
                                  const std::vector<std::pair<Eigen::Index, Eigen::Index>>& known_pairs,
                                  int source_i = 0, int source_j = 1) {
    if (n_i < 1 || n_j < 1)
        throw DimensionError("build_mapping: sizes must be positive (" + std::to_string(n_i) +
                             ", " + std::to_string(n_j) + ")");
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n_i, n_j);
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n_i, n_j);
    std::vector<char> row_used(static_cast<std::size_t>(n_i), 0);
    std::vector<char> col_used(static_cast<std::size_t>(n_j), 0);
    for (const auto& [a, b] : known_pairs) {
        if (a < 0 || a >= n_i || b < 0 || b >= n_j)
            throw DimensionError("build_mapping: pair (" + std::to_string(a) + ", " +
                                 std::to_string(b) + ") out of range");
        if (row_used[static_cast<std::size_t>(a)])
            throw ValidationError("build_mapping: instance " + std::to_string(a) +
                                  " mapped twice on the left side");
        if (col_used[static_cast<std::size_t>(b)])
            throw ValidationError("build_mapping: instance " + std::to_string(b) +
                                  " mapped twice on the right side");
        row_used[static_cast<std::size_t>(a)] = 1;
        col_used[static_cast<std::size_t>(b)] = 1;
        m(a, b) = 1.0;
        w(a, b) = 1.0;
    }
    return MappingState(source_i, source_j, std::move(m), std::move(w));
}

/// Similarity-transfer estimate: instances similar to the same bridged
/// instance should be similar, so the known links are propagated through
/// both latent spaces as (Ui Ui^T) M (Uj Uj^T).
inline Eigen::MatrixXd estimate_unknown(const MappingState& map, const OrthonormalFactor& ui,
                                        const OrthonormalFactor& uj) {
    if (ui.rows() != map.rows() || uj.rows() != map.cols())
        throw DimensionError("estimate_unknown: factors are " + std::to_string(ui.rows()) + "/" +
                             std::to_string(uj.rows()) + " rows, mapping is " +
                             std::to_string(map.rows()) + "x" + std::to_string(map.cols()));
    const Eigen::MatrixXd& u = ui.values();
    const Eigen::MatrixXd& v = uj.values();
    return u * ((u.transpose() * (map.mapping() * v)) * v.transpose());
}

/// init_unknown_block result; `uniform_fallback` records that the block had
/// to be filled uniformly (no known pairs, or a rank-deficient estimate).
struct MappingInit {
    MappingState state;
    bool uniform_fallback = false;
};

/// One-time initialization of the fully-unknown block of M: the similarity
/// estimate restricted to (unmapped rows x unmapped columns) is
/// orthogonalized to its nearest semi-orthogonal matrix, clamped at zero and
/// written back. Known entries are untouched. Degenerate estimates fall back
/// to a uniform block whose rows sum to 1.
inline MappingInit init_unknown_block(const MappingState& map, const OrthonormalFactor& ui,
                                      const OrthonormalFactor& uj) {
    std::vector<Eigen::Index> free_rows, free_cols;
    for (Eigen::Index a = 0; a < map.rows(); ++a)
        if (map.known().row(a).sum() == 0.0) free_rows.push_back(a);
    for (Eigen::Index b = 0; b < map.cols(); ++b)
        if (map.known().col(b).sum() == 0.0) free_cols.push_back(b);
    if (free_rows.empty() || free_cols.empty()) return MappingInit{map, false};

    Eigen::MatrixXd m = map.mapping();
    const double uniform = 1.0 / static_cast<double>(free_cols.size());
    const bool any_known = map.known().sum() > 0.0;
    bool fallback = false;
    Eigen::MatrixXd block(static_cast<Eigen::Index>(free_rows.size()),
                          static_cast<Eigen::Index>(free_cols.size()));
    if (any_known) {
        const Eigen::MatrixXd estimate = estimate_unknown(map, ui, uj);
        for (std::size_t r = 0; r < free_rows.size(); ++r)
            for (std::size_t c = 0; c < free_cols.size(); ++c)
                block(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                    estimate(free_rows[r], free_cols[c]);
        try {
            block = polar_orthogonalize(block).cwiseMax(0.0);
        } catch (const DegenerateError&) {
            block.setConstant(uniform);
            fallback = true;
        }
    } else {
        block.setConstant(uniform);
        fallback = true;
    }
    for (std::size_t r = 0; r < free_rows.size(); ++r)
        for (std::size_t c = 0; c < free_cols.size(); ++c)
            m(free_rows[r], free_cols[c]) = block(static_cast<Eigen::Index>(r),
                                                  static_cast<Eigen::Index>(c));
    return MappingInit{MappingState(map.source_i(), map.source_j(), std::move(m), map.known()),
                       fallback};
}

/// One refinement step: unknown entries are replaced by the current
/// similarity-transfer estimate (clamped at zero), known entries are copied
/// bit-for-bit from the previous state.
inline MappingState update_mapping(const MappingState& map, const OrthonormalFactor& ui,
                                   const OrthonormalFactor& uj) {
    const Eigen::MatrixXd estimate = estimate_unknown(map, ui, uj);
    Eigen::MatrixXd m(map.rows(), map.cols());
    for (Eigen::Index a = 0; a < map.rows(); ++a)
        for (Eigen::Index b = 0; b < map.cols(); ++b)
            m(a, b) = map.known()(a, b) == 1.0 ? map.mapping()(a, b)
                                               : std::max(0.0, estimate(a, b));
    return MappingState(map.source_i(), map.source_j(), std::move(m), map.known());
}

/// Relative change between two mapping iterates:
/// |M_new - M_old|_F / max(1, |M_old|_F).
inline double mapping_delta(const MappingState& before, const MappingState& after) {
    if (before.rows() != after.rows() || before.cols() != after.cols())
        throw DimensionError("mapping_delta: shape mismatch");
    return (after.mapping() - before.mapping()).norm() / std::max(1.0, before.mapping().norm());
}

}  // namespace mmc
