#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>

#include "l1dl/csv.hpp"
#include "l1dl/errors.hpp"
#include "l1dl/hungarian.hpp"
#include "l1dl/rng.hpp"

namespace l1dl {

inline constexpr double kUnitNormTol = 1e-10;
inline constexpr double kConditionGuard = 1e-12;

/// Square dictionary with unit-norm columns and full rank.
///
/// The inverse and singular values are computed at construction; instances
/// are immutable afterwards and safe to share across threads.
class Dictionary {
public:
    /// Validates an already-normalized matrix. Use make_dictionary() to
    /// normalize arbitrary input first.
    explicit Dictionary(Eigen::MatrixXd matrix) : mat_(std::move(matrix)) {
        if (mat_.rows() != mat_.cols() || mat_.rows() < 1)
            throw ShapeError("dictionary must be square and non-empty");
        for (Eigen::Index j = 0; j < mat_.cols(); ++j) {
            const double norm = mat_.col(j).norm();
            if (std::abs(norm - 1.0) > kUnitNormTol)
                throw NormalizationError("dictionary column " + std::to_string(j) +
                                         " has norm " + format_g17(norm));
        }
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(mat_);
        sigma_max_ = svd.singularValues()(0);
        sigma_min_ = svd.singularValues()(mat_.rows() - 1);
        if (!(sigma_min_ > kConditionGuard * sigma_max_))
            throw RankError("dictionary is rank-deficient (sigma_min/sigma_max = " +
                            format_g17(sigma_min_ / sigma_max_) + ")");
        inv_ = mat_.partialPivLu().inverse();
    }

    int dim() const { return static_cast<int>(mat_.rows()); }
    const Eigen::MatrixXd& matrix() const { return mat_; }
    const Eigen::MatrixXd& inverse() const { return inv_; }
    double sigma_max() const { return sigma_max_; }
    double sigma_min() const { return sigma_min_; }
    /// Squared spectral norm, evaluated from the computed singular values.
    double spectral_norm_sq() const { return sigma_max_ * sigma_max_; }

private:
    Eigen::MatrixXd mat_;
    Eigen::MatrixXd inv_;
    double sigma_max_ = 0.0;
    double sigma_min_ = 0.0;
};

/// Normalizes columns to unit norm and validates invertibility.
inline Dictionary make_dictionary(Eigen::MatrixXd matrix) {
    if (matrix.rows() != matrix.cols() || matrix.rows() < 1)
        throw ShapeError("dictionary must be square and non-empty");
    for (Eigen::Index j = 0; j < matrix.cols(); ++j) {
        const double norm = matrix.col(j).norm();
        if (!(norm > 0.0) || !std::isfinite(norm))
            throw NormalizationError("cannot normalize zero column " + std::to_string(j));
        if (std::abs(norm - 1.0) > kUnitNormTol) matrix.col(j) /= norm;
    }
    return Dictionary(std::move(matrix));
}

/// Symmetric PSD square root of the Gram matrix (1-mu) I + mu 11^T.
///
/// Built from the explicit eigendecomposition: eigenvalue sqrt(1-mu) on the
/// complement of the all-ones direction and sqrt(1+mu(K-1)) along it.
inline Dictionary constant_collinearity_dictionary(int K, double mu) {
    if (K < 1) throw ParameterError("dimension must be positive");
    if (K > 1) {
        const double lo = -1.0 / (K - 1);
        if (!(mu > lo && mu < 1.0))
            throw ParameterError("mu must lie in (-1/(K-1), 1) for K = " + std::to_string(K));
    }
    const double a = std::sqrt(std::max(0.0, 1.0 - mu));
    const double b = std::sqrt(std::max(0.0, 1.0 + mu * (K - 1)));
    Eigen::MatrixXd d = Eigen::MatrixXd::Constant(K, K, (b - a) / K);
    d.diagonal().array() += a;
    return Dictionary(std::move(d));
}

/// I.i.d. standard Gaussian entries with columns normalized.
inline Dictionary random_gaussian_dictionary(int K, std::uint64_t seed) {
    if (K < 1) throw ParameterError("dimension must be positive");
    SplitRng root(seed);
    Eigen::MatrixXd x(K, K);
    for (Eigen::Index j = 0; j < K; ++j) {
        SplitRng rng = root.split(static_cast<std::uint64_t>(j));
        for (Eigen::Index i = 0; i < K; ++i) x(i, j) = rng.next_gaussian();
    }
    return make_dictionary(std::move(x));
}

/// Gram matrix D^T D.
inline Eigen::MatrixXd collinearity(const Dictionary& dict) {
    return dict.matrix().transpose() * dict.matrix();
}

/// Largest absolute off-diagonal Gram entry.
inline double max_coherence(const Dictionary& dict) {
    const Eigen::MatrixXd m = collinearity(dict);
    double best = 0.0;
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            if (i != j) best = std::max(best, std::abs(m(i, j)));
    return best;
}

/// Sign-permutation-minimized relative squared Frobenius error.
///
/// The Frobenius objective decouples column-wise, so the exact minimum is an
/// assignment problem with cost 2 - 2|<est_i, ref_j>| (the optimal sign of a
/// matched column is the sign of the inner product). ||ref||_F^2 = K.
inline double nmse(const Dictionary& estimate, const Dictionary& reference) {
    const int K = reference.dim();
    if (estimate.dim() != K) throw ShapeError("nmse: dimension mismatch");
    Eigen::MatrixXd cost(K, K);
    for (int i = 0; i < K; ++i)
        for (int j = 0; j < K; ++j)
            cost(i, j) = 2.0 - 2.0 * std::abs(estimate.matrix().col(i).dot(
                                         reference.matrix().col(j)));
    const std::vector<int> assignment = solve_assignment(cost);
    double total = 0.0;
    for (int i = 0; i < K; ++i) total += cost(i, assignment[static_cast<std::size_t>(i)]);
    return std::max(0.0, total) / K;
}

inline void save_dictionary_csv(const std::string& path, const Dictionary& dict) {
    write_matrix_csv(path, dict.matrix());
}

/// Loads a dictionary without renormalizing, so that save/load round-trips
/// are bit-exact; columns must already be unit norm within tolerance.
inline Dictionary load_dictionary_csv(const std::string& path) {
    return Dictionary(read_matrix_csv(path));
}

}  // namespace l1dl
