#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mmc/error.hpp"
#include "mmc/numeric.hpp"

namespace mmc {

enum class ViewKind { kFeatures, kSimilarity };

/// One view of one source: either an n x d feature matrix or a precomputed
/// n x n similarity matrix (validated downstream).
struct ViewData {
    ViewKind kind = ViewKind::kFeatures;
    Eigen::MatrixXd matrix;
    int source_index = 0;
    int view_index = 0;
};

/// Square non-negative symmetric affinity matrix. The constructor rejects
/// anything else; use validate_similarity() to repair near-misses first.
class KernelMatrix {
public:
    explicit KernelMatrix(Eigen::MatrixXd k) : values_(std::move(k)) {
        if (values_.rows() != values_.cols())
            throw DimensionError("KernelMatrix: input is " + std::to_string(values_.rows()) + "x" +
                                 std::to_string(values_.cols()) + ", expected square");
        if (values_.size() == 0) throw DimensionError("KernelMatrix: input is empty");
        if (!values_.allFinite()) throw NumericError("KernelMatrix: non-finite entries");
        if (values_.minCoeff() < 0.0)
            throw ValidationError("KernelMatrix: negative entries; run validate_similarity first");
        if (!(values_ == values_.transpose().eval()))
            throw ValidationError("KernelMatrix: not exactly symmetric; run validate_similarity first");
    }

    Eigen::Index size() const { return values_.rows(); }
    const Eigen::MatrixXd& values() const { return values_; }

private:
    Eigen::MatrixXd values_;
};

/// Median of the n(n-1)/2 pairwise Euclidean distances between rows of x;
/// an even count takes the mean of the two middle values. This is the
/// default Gaussian bandwidth heuristic.
inline double median_pairwise_distance(const Eigen::MatrixXd& x) {
    const Eigen::Index n = x.rows();
    if (n < 2) throw DimensionError("median_pairwise_distance: need at least 2 points");
    if (!x.allFinite()) throw NumericError("median_pairwise_distance: non-finite features");
    std::vector<double> dists;
    dists.reserve(static_cast<std::size_t>(n) * static_cast<std::size_t>(n - 1) / 2);
    for (Eigen::Index a = 0; a < n; ++a)
        for (Eigen::Index b = a + 1; b < n; ++b) dists.push_back((x.row(a) - x.row(b)).norm());
    if (*std::max_element(dists.begin(), dists.end()) == 0.0)
        throw DegenerateError("median_pairwise_distance: all pairwise distances are zero");
    std::sort(dists.begin(), dists.end());
    const std::size_t m = dists.size();
    if (m % 2 == 1) return dists[m / 2];
    return 0.5 * (dists[m / 2 - 1] + dists[m / 2]);
}

/// Gaussian affinity K[a][b] = exp(-|x_a - x_b|^2 / (2 sigma^2)) with an
/// exactly-unit diagonal. When sigma is omitted it defaults to the median
/// pairwise distance.
inline KernelMatrix gaussian_kernel(const Eigen::MatrixXd& x,
                                    std::optional<double> sigma = std::nullopt) {
    const Eigen::Index n = x.rows();
    if (n < 2) throw DimensionError("gaussian_kernel: need at least 2 points");
    if (!x.allFinite()) throw NumericError("gaussian_kernel: non-finite features");
    const double s = sigma.has_value() ? *sigma : median_pairwise_distance(x);
    if (!(s > 0.0)) throw DegenerateError("gaussian_kernel: bandwidth must be positive, got " +
                                          std::to_string(s));
    const double denom = 2.0 * s * s;
    Eigen::MatrixXd k(n, n);
    for (Eigen::Index a = 0; a < n; ++a) {
        k(a, a) = 1.0;
        for (Eigen::Index b = a + 1; b < n; ++b) {
            const double v = std::exp(-(x.row(a) - x.row(b)).squaredNorm() / denom);
            k(a, b) = v;
            k(b, a) = v;  // mirrored assignment keeps the matrix exactly symmetric
        }
    }
    return KernelMatrix(std::move(k));
}

/// Row-sum floor below which an instance counts as disconnected from the
/// similarity graph.
inline constexpr double kRowSumFloor = 1e-12;

/// Degree-normalized affinity L = D^{-1/2} K D^{-1/2} where D holds the row
/// sums of K. Spectral radius is at most 1; for PSD kernels the spectrum
/// lies in [0, 1] with top eigenvalue exactly 1.
inline SymmetricMatrix normalized_laplacian(const KernelMatrix& k) {
    const Eigen::Index n = k.size();
    const Eigen::VectorXd degree = k.values().rowwise().sum();
    for (Eigen::Index i = 0; i < n; ++i) {
        if (degree(i) < kRowSumFloor)
            throw ValidationError("normalized_laplacian: instance " + std::to_string(i) +
                                  " is disconnected (row sum " + std::to_string(degree(i)) + ")");
    }
    const Eigen::VectorXd inv_sqrt = degree.array().rsqrt();
    Eigen::MatrixXd l(n, n);
    for (Eigen::Index a = 0; a < n; ++a) {
        for (Eigen::Index b = a; b < n; ++b) {
            const double v = k.values()(a, b) * inv_sqrt(a) * inv_sqrt(b);
            l(a, b) = v;
            l(b, a) = v;
        }
    }
    return SymmetricMatrix(std::move(l));
}

/// Repaired similarity matrix plus how many entries had to be clamped.
struct SimilarityValidation {
    KernelMatrix kernel;
    std::size_t clamped_entries = 0;
};

/// Symmetrizes a raw similarity matrix as (S + S^T)/2 and clamps negative
/// entries to zero. The clamp count is returned so callers can surface a
/// warning instead of silently repairing the data.
inline SimilarityValidation validate_similarity(const Eigen::MatrixXd& s) {
    if (s.rows() != s.cols())
        throw DimensionError("validate_similarity: input is " + std::to_string(s.rows()) + "x" +
                             std::to_string(s.cols()) + ", expected square");
    if (s.size() == 0) throw DimensionError("validate_similarity: input is empty");
    if (!s.allFinite()) throw NumericError("validate_similarity: non-finite entries");
    Eigen::MatrixXd sym = 0.5 * (s + s.transpose());
    std::size_t clamped = 0;
    for (Eigen::Index a = 0; a < sym.rows(); ++a) {
        for (Eigen::Index b = 0; b < sym.cols(); ++b) {
            if (sym(a, b) < 0.0) {
                sym(a, b) = 0.0;
                ++clamped;
            }
        }
    }
    return SimilarityValidation{KernelMatrix(std::move(sym)), clamped};
}

}  // namespace mmc
