#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "l1dl/csv.hpp"
#include "l1dl/dictionary.hpp"
#include "l1dl/errors.hpp"
#include "l1dl/rng.hpp"

namespace l1dl {

inline double sqrt_two_over_pi() { return std::sqrt(2.0 / std::numbers::pi); }

enum class CoefKind {
    sparse_gaussian,         // exactly s nonzeros, Gaussian values
    bernoulli_gaussian,      // independent Bernoulli(p) gates, Gaussian values
    nonneg_sparse_gaussian,  // |sparse Gaussian|
    sparse_laplacian,        // exactly s nonzeros, Laplace values
    bernoulli_type,          // independent Bernoulli(p_j) gates, generic base
    exact_sparse,            // exactly s nonzeros, generic base
};

/// Base value distribution for the generic kinds. The contract is an
/// absolutely continuous marginal; it is not checked at runtime.
enum class BaseSampler { gaussian, laplace };

struct CoefficientModel {
    CoefKind kind = CoefKind::sparse_gaussian;
    int dim = 0;
    int s = 0;                  // exact-sparse kinds
    double p = 0.0;             // bernoulli_gaussian
    std::vector<double> probs;  // bernoulli_type, one per coordinate
    BaseSampler base = BaseSampler::gaussian;

    static CoefficientModel sparse_gaussian(int s, int K) {
        CoefficientModel m;
        m.kind = CoefKind::sparse_gaussian;
        m.dim = K;
        m.s = s;
        m.validate();
        return m;
    }
    static CoefficientModel bernoulli_gaussian(double p, int K) {
        CoefficientModel m;
        m.kind = CoefKind::bernoulli_gaussian;
        m.dim = K;
        m.p = p;
        m.validate();
        return m;
    }
    static CoefficientModel nonneg_sparse_gaussian(int s, int K) {
        CoefficientModel m;
        m.kind = CoefKind::nonneg_sparse_gaussian;
        m.dim = K;
        m.s = s;
        m.validate();
        return m;
    }
    static CoefficientModel sparse_laplacian(int s, int K) {
        CoefficientModel m;
        m.kind = CoefKind::sparse_laplacian;
        m.dim = K;
        m.s = s;
        m.validate();
        return m;
    }
    static CoefficientModel bernoulli_type(std::vector<double> probs,
                                           BaseSampler base = BaseSampler::gaussian) {
        CoefficientModel m;
        m.kind = CoefKind::bernoulli_type;
        m.dim = static_cast<int>(probs.size());
        m.probs = std::move(probs);
        m.base = base;
        m.validate();
        return m;
    }
    static CoefficientModel exact_sparse(int s, int K,
                                         BaseSampler base = BaseSampler::gaussian) {
        CoefficientModel m;
        m.kind = CoefKind::exact_sparse;
        m.dim = K;
        m.s = s;
        m.base = base;
        m.validate();
        return m;
    }

    bool is_exact_sparse_kind() const {
        return kind == CoefKind::sparse_gaussian || kind == CoefKind::nonneg_sparse_gaussian ||
               kind == CoefKind::sparse_laplacian || kind == CoefKind::exact_sparse;
    }

    void validate() const {
        if (dim < 1) throw ParameterError("coefficient dimension must be positive");
        if (is_exact_sparse_kind()) {
            if (s < 1 || s > dim)
                throw ParameterError("sparsity s must satisfy 1 <= s <= K");
        } else if (kind == CoefKind::bernoulli_gaussian) {
            if (!(p > 0.0 && p < 1.0))
                throw ParameterError("Bernoulli probability must lie in (0, 1)");
        } else {
            if (static_cast<int>(probs.size()) != dim)
                throw ParameterError("need one probability per coordinate");
            for (double q : probs)
                if (!(q > 0.0 && q < 1.0))
                    throw ParameterError("Bernoulli probabilities must lie in (0, 1)");
        }
    }
};

inline const char* kind_name(CoefKind kind) {
    switch (kind) {
        case CoefKind::sparse_gaussian: return "sparse_gaussian";
        case CoefKind::bernoulli_gaussian: return "bernoulli_gaussian";
        case CoefKind::nonneg_sparse_gaussian: return "nonneg_sparse_gaussian";
        case CoefKind::sparse_laplacian: return "sparse_laplacian";
        case CoefKind::bernoulli_type: return "bernoulli_type";
        case CoefKind::exact_sparse: return "exact_sparse";
    }
    return "unknown";
}

namespace detail {

inline double draw_base(SplitRng& rng, BaseSampler base) {
    return base == BaseSampler::gaussian ? rng.next_gaussian() : rng.next_laplace();
}

/// Uniform size-s subset of {0,...,K-1} by partial Fisher-Yates shuffle,
/// returned sorted so value draws have a fixed coordinate order.
inline void draw_support(SplitRng& rng, int K, int s, std::vector<int>& idx,
                         std::vector<int>& support) {
    idx.resize(static_cast<std::size_t>(K));
    std::iota(idx.begin(), idx.end(), 0);
    for (int i = 0; i < s; ++i) {
        const int j = i + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(K - i)));
        std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
    }
    support.assign(idx.begin(), idx.begin() + s);
    std::sort(support.begin(), support.end());
}

}  // namespace detail

/// Draws n i.i.d. coefficient vectors as rows. Each row's stream derives
/// from (seed, row index), so the result is independent of evaluation order.
inline Eigen::MatrixXd sample_coefficients(const CoefficientModel& model, int n,
                                           std::uint64_t seed) {
    model.validate();
    if (n < 1) throw ParameterError("sample count must be positive");
    const int K = model.dim;
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, K);
    SplitRng root(seed);
    std::vector<int> idx, support;
    for (int i = 0; i < n; ++i) {
        SplitRng rng = root.split(static_cast<std::uint64_t>(i));
        switch (model.kind) {
            case CoefKind::sparse_gaussian:
            case CoefKind::nonneg_sparse_gaussian:
            case CoefKind::sparse_laplacian:
            case CoefKind::exact_sparse: {
                detail::draw_support(rng, K, model.s, idx, support);
                for (int j : support) {
                    double z;
                    if (model.kind == CoefKind::sparse_laplacian)
                        z = rng.next_laplace();
                    else if (model.kind == CoefKind::exact_sparse)
                        z = detail::draw_base(rng, model.base);
                    else
                        z = rng.next_gaussian();
                    if (model.kind == CoefKind::nonneg_sparse_gaussian) z = std::abs(z);
                    out(i, j) = z;
                }
                break;
            }
            case CoefKind::bernoulli_gaussian:
            case CoefKind::bernoulli_type: {
                for (int j = 0; j < K; ++j) {
                    const double pj = model.kind == CoefKind::bernoulli_gaussian
                                          ? model.p
                                          : model.probs[static_cast<std::size_t>(j)];
                    if (rng.next_bernoulli(pj)) {
                        out(i, j) = model.kind == CoefKind::bernoulli_gaussian
                                        ? rng.next_gaussian()
                                        : detail::draw_base(rng, model.base);
                    }
                }
                break;
            }
        }
    }
    return out;
}

/// max_j E|alpha_j| for the kinds with a closed form.
inline double expected_abs_coef(const CoefficientModel& model) {
    model.validate();
    const double frac = model.is_exact_sparse_kind()
                            ? static_cast<double>(model.s) / model.dim
                            : model.p;
    switch (model.kind) {
        case CoefKind::sparse_gaussian:
        case CoefKind::nonneg_sparse_gaussian:
            return frac * sqrt_two_over_pi();
        case CoefKind::bernoulli_gaussian:
            return model.p * sqrt_two_over_pi();
        case CoefKind::sparse_laplacian:
            return frac;  // Laplace has E|z| = 1
        default:
            throw UnsupportedModelError(std::string("no closed-form moment for ") +
                                        kind_name(model.kind));
    }
}

struct SignalSet {
    Eigen::MatrixXd signals;       // rows are y^(i)
    Eigen::MatrixXd coefficients;  // rows are alpha^(i), kept for oracles
    std::uint64_t seed = 0;
    double snr = std::numeric_limits<double>::infinity();
    std::optional<CoefficientModel> model;
};

/// Mean chi_K: E||eps||_2 for eps ~ N(0, I_K).
inline double chi_mean(int K) {
    return std::sqrt(2.0) * std::exp(std::lgamma((K + 1) / 2.0) - std::lgamma(K / 2.0));
}

/// Forms y^(i) = D alpha^(i) + eps^(i) with isotropic Gaussian noise whose
/// scale is set so that E||D alpha||_2 / E||eps||_2 equals snr.
///
/// E||D alpha||_2 is a 1e4-sample Monte-Carlo estimate with a fixed internal
/// sub-seed when `calibration` is given; otherwise the empirical mean over
/// the supplied coefficient rows is used.
inline SignalSet generate_signals(const Dictionary& dict, const Eigen::MatrixXd& coeffs,
                                  double snr, std::uint64_t seed,
                                  const CoefficientModel* calibration = nullptr) {
    const int K = dict.dim();
    if (coeffs.cols() != K) throw ShapeError("coefficient columns must match dictionary dim");
    if (coeffs.rows() < 1) throw ShapeError("need at least one coefficient row");
    if (!(snr > 0.0)) throw ParameterError("snr must be positive");

    SignalSet set;
    set.coefficients = coeffs;
    set.seed = seed;
    set.snr = snr;
    if (calibration) set.model = *calibration;
    set.signals = coeffs * dict.matrix().transpose();
    if (std::isinf(snr)) return set;

    constexpr int kCalibrationSamples = 10000;
    constexpr std::uint64_t kCalibrationSeed = 0x5EEDCA11B8A7E5ull;
    double mean_signal_norm = 0.0;
    if (calibration) {
        const Eigen::MatrixXd sample =
            sample_coefficients(*calibration, kCalibrationSamples, kCalibrationSeed);
        mean_signal_norm =
            (sample * dict.matrix().transpose()).rowwise().norm().mean();
    } else {
        const int m = std::min<int>(kCalibrationSamples, static_cast<int>(coeffs.rows()));
        mean_signal_norm = set.signals.topRows(m).rowwise().norm().mean();
    }
    const double sigma = mean_signal_norm / (snr * chi_mean(K));

    SplitRng root(seed);
    for (Eigen::Index i = 0; i < set.signals.rows(); ++i) {
        SplitRng rng = root.split(static_cast<std::uint64_t>(i));
        for (int j = 0; j < K; ++j) set.signals(i, j) += sigma * rng.next_gaussian();
    }
    return set;
}

/// Samples coefficients and signals in one step; the model also serves as
/// the SNR calibration reference.
inline SignalSet make_signal_set(const Dictionary& dict, const CoefficientModel& model,
                                 int n, double snr, std::uint64_t seed) {
    const Eigen::MatrixXd coeffs = sample_coefficients(model, n, mix64(seed ^ 0x1ull));
    SignalSet set = generate_signals(dict, coeffs, snr, mix64(seed ^ 0x2ull), &model);
    set.seed = seed;
    return set;
}

/// Two-coordinate Bernoulli-type draw whose base is an equal-weight mixture
/// of centered Gaussians with covariances [[101,-99],[-99,101]] and
/// [[101,99],[99,101]]; gates are Bernoulli(0.67).
inline Eigen::MatrixXd sample_counterexample(int n, std::uint64_t seed) {
    if (n < 1) throw ParameterError("sample count must be positive");
    // Cholesky factors of the two mixture covariances.
    const double l11 = std::sqrt(101.0);
    const double l21 = 99.0 / l11;
    const double l22 = 20.0 / l11;
    Eigen::MatrixXd out(n, 2);
    SplitRng root(seed);
    for (int i = 0; i < n; ++i) {
        SplitRng rng = root.split(static_cast<std::uint64_t>(i));
        const bool flip = rng.next_bernoulli(0.5);
        const double g1 = rng.next_gaussian();
        const double g2 = rng.next_gaussian();
        const double z1 = l11 * g1;
        const double z2 = (flip ? l21 : -l21) * g1 + l22 * g2;
        const bool xi1 = rng.next_bernoulli(0.67);
        const bool xi2 = rng.next_bernoulli(0.67);
        out(i, 0) = xi1 ? z1 : 0.0;
        out(i, 1) = xi2 ? z2 : 0.0;
    }
    return out;
}

inline nlohmann::ordered_json model_to_json(const CoefficientModel& model) {
    nlohmann::ordered_json j;
    j["kind"] = kind_name(model.kind);
    j["K"] = model.dim;
    if (model.is_exact_sparse_kind()) j["s"] = model.s;
    if (model.kind == CoefKind::bernoulli_gaussian) j["p"] = model.p;
    if (model.kind == CoefKind::bernoulli_type) j["p"] = model.probs;
    if (model.kind == CoefKind::bernoulli_type || model.kind == CoefKind::exact_sparse)
        j["base"] = model.base == BaseSampler::gaussian ? "gaussian" : "laplace";
    return j;
}

/// Writes the signal matrix as headerless CSV plus a <path>.meta.json
/// sidecar carrying seed, snr and the generating model.
inline void save_signal_set(const std::string& path, const SignalSet& set) {
    write_matrix_csv(path, set.signals);
    nlohmann::ordered_json meta;
    meta["seed"] = set.seed;
    if (std::isinf(set.snr))
        meta["snr"] = "inf";
    else
        meta["snr"] = set.snr;
    meta["n"] = set.signals.rows();
    meta["K"] = set.signals.cols();
    if (set.model) meta["model"] = model_to_json(*set.model);
    write_text_file(path + ".meta.json", meta.dump(2) + "\n");
}

}  // namespace l1dl
