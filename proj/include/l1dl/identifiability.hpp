#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <vector>

#include <json.hpp>

#include "l1dl/coeff_models.hpp"
#include "l1dl/dictionary.hpp"
#include "l1dl/errors.hpp"
#include "l1dl/quadrature.hpp"

namespace l1dl {

/// Empirical bias matrix of a coefficient sample against a Gram matrix:
/// B_{k,j} = mean_i alpha_j sign(alpha_k) - M_{j,k} mean_i |alpha_j|,
/// with sign(0) = 0. Diagonal entries vanish identically since M_{k,k} = 1.
inline Eigen::MatrixXd bias_matrix_empirical(const Eigen::MatrixXd& coeffs,
                                             const Eigen::MatrixXd& gram) {
    const Eigen::Index K = coeffs.cols();
    if (gram.rows() != K || gram.cols() != K)
        throw ShapeError("gram dimension must match coefficient columns");
    if (coeffs.rows() < 1) throw ShapeError("need at least one sample");
    const double n = static_cast<double>(coeffs.rows());
    const Eigen::MatrixXd signs = coeffs.array().sign().matrix();
    const Eigen::MatrixXd cross = signs.transpose() * coeffs / n;  // (k,j)
    const Eigen::VectorXd mean_abs = coeffs.array().abs().colwise().mean();
    Eigen::MatrixXd b(K, K);
    for (Eigen::Index k = 0; k < K; ++k)
        for (Eigen::Index j = 0; j < K; ++j) b(k, j) = cross(k, j) - gram(j, k) * mean_abs(j);
    // On the diagonal alpha_k sign(alpha_k) = |alpha_k| sample by sample, so
    // both terms are the same sum; evaluate the cancellation directly.
    for (Eigen::Index k = 0; k < K; ++k) b(k, k) = (1.0 - gram(k, k)) * mean_abs(k);
    return b;
}

/// Bias matrix under a constant-collinearity Gram with coherence mu:
/// constant off-diagonal with the model's closed-form value, zero diagonal.
inline Eigen::MatrixXd bias_matrix_closed_form(const CoefficientModel& model, double mu) {
    model.validate();
    const int K = model.dim;
    const double c = sqrt_two_over_pi();
    double off = 0.0;
    switch (model.kind) {
        case CoefKind::sparse_gaussian:
            off = -c * mu * model.s / K;
            break;
        case CoefKind::nonneg_sparse_gaussian:
            off = -c * (mu * model.s / K -
                        static_cast<double>(model.s) * (model.s - 1) / (static_cast<double>(K) * (K - 1)));
            break;
        case CoefKind::bernoulli_gaussian:
            off = -c * mu * model.p;
            break;
        case CoefKind::sparse_laplacian:
            off = -mu * static_cast<double>(model.s) / K;
            break;
        default:
            throw UnsupportedModelError("no closed-form bias for generic kinds");
    }
    Eigen::MatrixXd b = Eigen::MatrixXd::Constant(K, K, off);
    b.diagonal().setZero();
    return b;
}

/// Monte-Carlo estimate of the coefficient-induced semi-norm
/// sum_k E |sum_j A_{k,j} alpha_j| 1(alpha_k = 0).
///
/// Zeros are detected by exact comparison by default, which is correct for
/// matrices produced by the generators here (stored zeros are exact). For
/// externally supplied data pass a small zero_tol such as 1e-12.
inline double seminorm_empirical(const Eigen::MatrixXd& a, const Eigen::MatrixXd& coeffs,
                                 double zero_tol = 0.0) {
    const Eigen::Index K = coeffs.cols();
    if (a.rows() != K || a.cols() != K) throw ShapeError("matrix must be K x K");
    if (coeffs.rows() < 1) throw ShapeError("need at least one sample");
    const Eigen::MatrixXd t = coeffs * a.transpose();  // t(i,k) = <A[k,], alpha_i>
    double total = 0.0;
    for (Eigen::Index i = 0; i < coeffs.rows(); ++i)
        for (Eigen::Index k = 0; k < K; ++k)
            if (std::abs(coeffs(i, k)) <= zero_tol) total += std::abs(t(i, k));
    return total / static_cast<double>(coeffs.rows());
}

inline double binomial(int n, int k) {
    if (k < 0 || k > n) return 0.0;
    return std::round(std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) -
                               std::lgamma(n - k + 1.0)));
}

/// Exact semi-norm under the sparse Gaussian model SG(s): the combinatorial
/// sum sqrt(2/pi) sum_k C(K,s)^{-1} sum_{|S|=s, k not in S} sqrt(sum_{j in S} A_{k,j}^2).
inline double seminorm_closed_form_sg(const Eigen::MatrixXd& a, int s) {
    const int K = static_cast<int>(a.rows());
    if (a.cols() != K) throw ShapeError("matrix must be square");
    if (s < 1 || s > K) throw ParameterError("sparsity s must satisfy 1 <= s <= K");
    if (binomial(K, s) > 1e6) throw CapacityError("subset enumeration too large");
    if (s == K) return 0.0;  // no subset avoids k

    const double inv_count = 1.0 / binomial(K, s);
    double total = 0.0;
    std::vector<int> others(static_cast<std::size_t>(K) - 1);
    std::vector<int> pick(static_cast<std::size_t>(s));
    for (int k = 0; k < K; ++k) {
        int m = 0;
        for (int j = 0; j < K; ++j)
            if (j != k) others[static_cast<std::size_t>(m++)] = j;
        for (int i = 0; i < s; ++i) pick[static_cast<std::size_t>(i)] = i;
        while (true) {
            double sq = 0.0;
            for (int i = 0; i < s; ++i) {
                const double v = a(k, others[static_cast<std::size_t>(pick[static_cast<std::size_t>(i)])]);
                sq += v * v;
            }
            total += std::sqrt(sq);
            // next combination of size s from {0,...,K-2}
            int i = s - 1;
            while (i >= 0 && pick[static_cast<std::size_t>(i)] == K - 2 - (s - 1 - i)) --i;
            if (i < 0) break;
            ++pick[static_cast<std::size_t>(i)];
            for (int t = i + 1; t < s; ++t)
                pick[static_cast<std::size_t>(t)] = pick[static_cast<std::size_t>(t - 1)] + 1;
        }
    }
    return sqrt_two_over_pi() * inv_count * total;
}

/// I(s) = E|X - Y| for independent X, Y ~ Gamma(s, 1), integer s >= 1.
///
/// The inner integral over the Gamma density is carried out analytically,
/// leaving I(s) = 2 int_0^inf e^{-t} P_s(t) dt with P_s the tail polynomial
/// of degree s-1; the remaining 1-D integral is done by adaptive quadrature
/// to absolute error below 1e-8.
inline double laplace_integral(int s) {
    if (s < 1) throw ParameterError("s must be a positive integer");
    // P_s coefficients: coef[d] = (1/d!) sum_{r=0}^{s-1-d} Gamma(s+r)/(r! Gamma(s) 2^{s+r}).
    double term = std::pow(0.5, s);  // r = 0
    double acc = term;
    std::vector<double> partial(static_cast<std::size_t>(s));
    partial[0] = acc;
    for (int r = 1; r < s; ++r) {
        term *= (s + r - 1.0) / (2.0 * r);
        acc += term;
        partial[static_cast<std::size_t>(r)] = acc;
    }
    std::vector<double> coef(static_cast<std::size_t>(s));
    double inv_fact = 1.0;
    for (int d = 0; d < s; ++d) {
        if (d > 0) inv_fact /= d;
        coef[static_cast<std::size_t>(d)] = partial[static_cast<std::size_t>(s - 1 - d)] * inv_fact;
    }
    auto integrand = [&](double t) {
        double poly = 0.0;
        for (int d = s - 1; d >= 0; --d) poly = poly * t + coef[static_cast<std::size_t>(d)];
        return 2.0 * std::exp(-t) * poly;
    };
    const double t_hi = 50.0 + 12.0 * s;
    return integrate(integrand, 0.0, t_hi, 1e-10);
}

/// Dual semi-norm of the constant-collinearity bias matrix, closed forms.
inline double dual_norm_constant(const CoefficientModel& model, double mu) {
    model.validate();
    const int K = model.dim;
    switch (model.kind) {
        case CoefKind::sparse_gaussian: {
            if (model.s == K) throw ParameterError("dual norm undefined at s = K");
            return std::abs(mu) * std::sqrt(static_cast<double>(model.s)) * (K - 1) /
                   (K - model.s);
        }
        case CoefKind::nonneg_sparse_gaussian: {
            if (model.s == K) throw ParameterError("dual norm undefined at s = K");
            return (static_cast<double>(K) - 1) / (K - model.s) *
                   std::abs(mu - static_cast<double>(model.s - 1) / (K - 1));
        }
        case CoefKind::bernoulli_gaussian: {
            // E sqrt(S) for S ~ Binomial(K-1, p).
            const double p = model.p;
            double pmf = std::pow(1.0 - p, K - 1);
            double esqrt = 0.0;
            for (int t = 0; t < K; ++t) {
                esqrt += pmf * std::sqrt(static_cast<double>(t));
                pmf *= (static_cast<double>(K - 1 - t) / (t + 1)) * (p / (1.0 - p));
            }
            if (!(esqrt > 0.0)) throw NumericError("degenerate binomial moment");
            return std::abs(mu) * p * (K - 1) / ((1.0 - p) * esqrt);
        }
        case CoefKind::sparse_laplacian: {
            if (model.s == K) throw ParameterError("dual norm undefined at s = K");
            return std::abs(mu) * model.s * (K - 1) /
                   ((K - model.s) * laplace_integral(model.s));
        }
        default:
            throw UnsupportedModelError("no closed-form dual norm for generic kinds");
    }
}

/// Simplified Bernoulli-Gaussian expression mu sqrt(p(K-1))/(1-p). Jensen on
/// the concave square root gives E sqrt(S) <= sqrt(E S), so this is a lower
/// bound on the exact dual norm above.
inline double bg_dual_norm_simplified(double p, double mu, int K) {
    return std::abs(mu) * std::sqrt(p * (K - 1)) / (1.0 - p);
}

/// Regularity constant c_alpha bounding the semi-norm below by c ||.||_F.
inline double regularity_constant(const CoefficientModel& model) {
    model.validate();
    switch (model.kind) {
        case CoefKind::sparse_gaussian:
            return static_cast<double>(model.s) * (model.dim - model.s) /
                   (static_cast<double>(model.dim) * (model.dim - 1)) * sqrt_two_over_pi();
        case CoefKind::bernoulli_gaussian:
            return model.p * (1.0 - model.p) * sqrt_two_over_pi();
        default:
            throw UnsupportedModelError(std::string("no stated regularity constant for ") +
                                        kind_name(model.kind));
    }
}

struct IdentifiabilityReport {
    double dual_norm = 0.0;
    bool is_sharp_condition = false;
    bool has_sharpness = false;  // sharpness/region need a regularity constant
    double sharpness_lower_bound = std::numeric_limits<double>::quiet_NaN();
    double region_radius = std::numeric_limits<double>::quiet_NaN();
    double regularity_constant = std::numeric_limits<double>::quiet_NaN();
};

/// Evaluates the dual-norm condition, sharpness lower bound and region
/// radius for a constant-collinearity reference with coherence mu. The
/// squared spectral norm of the reference enters numerically.
inline IdentifiabilityReport make_report(const CoefficientModel& model, double mu) {
    IdentifiabilityReport rep;
    rep.dual_norm = dual_norm_constant(model, mu);
    rep.is_sharp_condition = rep.dual_norm < 1.0;
    const Dictionary ref = constant_collinearity_dictionary(model.dim, mu);
    const double norm_sq = ref.spectral_norm_sq();
    try {
        rep.regularity_constant = l1dl::regularity_constant(model);
        rep.has_sharpness = true;
    } catch (const UnsupportedModelError&) {
        rep.has_sharpness = false;
        return rep;
    }
    const double margin = 1.0 - rep.dual_norm;
    rep.sharpness_lower_bound = rep.regularity_constant / (std::sqrt(2.0) * norm_sq) * margin;
    rep.region_radius = margin * rep.regularity_constant /
                        (8.0 * std::sqrt(2.0) * norm_sq * expected_abs_coef(model));
    return rep;
}

inline nlohmann::ordered_json report_to_json(const IdentifiabilityReport& rep) {
    nlohmann::ordered_json j;
    j["dual_norm"] = rep.dual_norm;
    j["condition"] = rep.is_sharp_condition;
    if (rep.has_sharpness) {
        j["sharpness"] = rep.sharpness_lower_bound;
        j["region_radius"] = rep.region_radius;
        j["c_alpha"] = rep.regularity_constant;
    } else {
        j["sharpness"] = nullptr;
        j["region_radius"] = nullptr;
        j["c_alpha"] = nullptr;
    }
    return j;
}

}  // namespace l1dl
