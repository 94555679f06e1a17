#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "mmc/error.hpp"

namespace mmc {

/// Dense real symmetric matrix. The constructor symmetrizes its argument as
/// (A + A^T)/2, so values()(a, b) == values()(b, a) holds exactly, not just
/// up to rounding.
class SymmetricMatrix {
public:
    explicit SymmetricMatrix(const Eigen::MatrixXd& a) {
        if (a.rows() != a.cols())
            throw DimensionError("SymmetricMatrix: input is " + std::to_string(a.rows()) + "x" +
                                 std::to_string(a.cols()) + ", expected square");
        if (a.size() == 0) throw DimensionError("SymmetricMatrix: input is empty");
        if (!a.allFinite()) throw NumericError("SymmetricMatrix: input has non-finite entries");
        values_ = 0.5 * (a + a.transpose());
    }

    Eigen::Index size() const { return values_.rows(); }
    const Eigen::MatrixXd& values() const { return values_; }

private:
    Eigen::MatrixXd values_;
};

/// Matrix with orthonormal columns (n x c, c <= n) under a deterministic sign
/// convention: in each column the entry of largest magnitude (lowest row index
/// on ties) is non-negative. The convention removes the sign ambiguity of
/// eigenvectors and singular vectors, which makes downstream runs repeatable.
class OrthonormalFactor {
public:
    /// Column-orthonormality acceptance threshold on |U^T U - I|_F.
    static constexpr double kOrthoTol = 1e-8;

    explicit OrthonormalFactor(Eigen::MatrixXd u) : values_(std::move(u)) {
        const Eigen::Index n = values_.rows();
        const Eigen::Index c = values_.cols();
        if (c < 1 || n < c)
            throw DimensionError("OrthonormalFactor: shape " + std::to_string(n) + "x" +
                                 std::to_string(c) + " is not tall (need 1 <= c <= n)");
        if (!values_.allFinite()) throw NumericError("OrthonormalFactor: non-finite entries");
        const double residual =
            (values_.transpose() * values_ - Eigen::MatrixXd::Identity(c, c)).norm();
        if (residual > kOrthoTol)
            throw NumericError("OrthonormalFactor: columns not orthonormal, |U^T U - I|_F = " +
                               std::to_string(residual));
        fix_signs();
    }

    Eigen::Index rows() const { return values_.rows(); }
    Eigen::Index cols() const { return values_.cols(); }
    const Eigen::MatrixXd& values() const { return values_; }

private:
    void fix_signs() {
        for (Eigen::Index j = 0; j < values_.cols(); ++j) {
            Eigen::Index anchor = 0;
            double best = -1.0;
            for (Eigen::Index i = 0; i < values_.rows(); ++i) {
                const double mag = std::abs(values_(i, j));
                if (mag > best) {  // strict: ties keep the lowest row index
                    best = mag;
                    anchor = i;
                }
            }
            if (values_(anchor, j) < 0.0) values_.col(j) = -values_.col(j);
        }
    }

    Eigen::MatrixXd values_;
};

/// Top-c eigenpairs of a symmetric matrix: eigenvalues in non-increasing
/// order with their eigenvectors as factor columns.
struct EigenPairs {
    OrthonormalFactor factor;
    Eigen::VectorXd eigenvalues;
};

/// Computes the c largest eigenvalues of `a` and their eigenvectors.
/// Equal eigenvalues keep the solver's ascending-index positions (a stable
/// sort by descending eigenvalue), so e.g. the identity yields e1, e2, ...
/// rather than an arbitrary permutation.
inline EigenPairs top_eigvecs(const SymmetricMatrix& a, Eigen::Index c) {
    const Eigen::Index n = a.size();
    if (c < 1 || c > n)
        throw DimensionError("top_eigvecs: c = " + std::to_string(c) + " out of range for n = " +
                             std::to_string(n));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a.values());
    if (solver.info() != Eigen::Success)
        throw NumericError("top_eigvecs: eigendecomposition did not converge");

    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    const Eigen::VectorXd& all_vals = solver.eigenvalues();
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index lhs, Eigen::Index rhs) { return all_vals(lhs) > all_vals(rhs); });

    Eigen::MatrixXd u(n, c);
    Eigen::VectorXd vals(c);
    for (Eigen::Index k = 0; k < c; ++k) {
        u.col(k) = solver.eigenvectors().col(order[static_cast<std::size_t>(k)]);
        vals(k) = all_vals(order[static_cast<std::size_t>(k)]);
    }
    return EigenPairs{OrthonormalFactor(std::move(u)), std::move(vals)};
}

/// Relative singular-value floor below which polar_orthogonalize refuses to
/// orthogonalize (the nearest orthonormal matrix would not be well defined).
inline constexpr double kPolarRankTol = 1e-10;

/// Nearest semi-orthogonal matrix in Frobenius norm: P Q^T from the thin SVD
/// B = P S Q^T. For r <= s the result has orthonormal rows, for r >= s
/// orthonormal columns. Requires full rank min(r, s).
inline Eigen::MatrixXd polar_orthogonalize(const Eigen::MatrixXd& b) {
    if (b.rows() < 1 || b.cols() < 1)
        throw DimensionError("polar_orthogonalize: input is empty");
    if (!b.allFinite()) throw NumericError("polar_orthogonalize: non-finite entries");
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(b, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& sv = svd.singularValues();
    const double largest = sv(0);
    const double smallest = sv(sv.size() - 1);
    if (largest <= 0.0 || smallest < kPolarRankTol * largest)
        throw DegenerateError("polar_orthogonalize: rank-deficient input (sigma_min = " +
                              std::to_string(smallest) + ", sigma_max = " + std::to_string(largest) +
                              ")");
    return svd.matrixU() * svd.matrixV().transpose();
}

}  // namespace mmc
