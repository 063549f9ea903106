#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "l1dl/coeff_models.hpp"
#include "l1dl/dictionary.hpp"
#include "l1dl/errors.hpp"
#include "l1dl/rng.hpp"
#include "l1dl/subproblem.hpp"

namespace l1dl {

/// Truncated l1 objective f(D) = sum_i sum_j min(|D^{-1}[j,] y^(i)|, tau).
inline double truncated_objective(const Dictionary& dict, const Eigen::MatrixXd& signals,
                                  double tau) {
    if (signals.cols() != dict.dim()) throw ShapeError("signal dimension mismatch");
    if (!(tau > 0.0)) throw ParameterError("tau must be positive");
    const Eigen::MatrixXd beta = signals * dict.inverse().transpose();
    return beta.array().abs().min(tau).sum();
}

/// Row reparameterization: replaces row k of q by w^T q and rescales every
/// other row h by sqrt((w_h - M_{k,h})^2 + 1 - M_{k,h}^2), where M is the
/// Gram matrix of dict = q^{-1}. The inverse of the result keeps unit-norm
/// columns; this is asserted within 1e-8.
inline Eigen::MatrixXd row_update_matrix(const Eigen::MatrixXd& q, const Dictionary& dict,
                                         int k, const Eigen::VectorXd& w) {
    const int K = dict.dim();
    if (q.rows() != K || q.cols() != K) throw ShapeError("q must be K x K");
    if (w.size() != K) throw ShapeError("w must have K entries");
    if (k < 0 || k >= K) throw ParameterError("coordinate index out of range");
    if (w(k) != 1.0) throw ContractError("w[k] must equal 1");

    Eigen::MatrixXd out = q;
    out.row(k) = w.transpose() * q;
    for (int h = 0; h < K; ++h) {
        if (h == k) continue;
        double m = dict.matrix().col(h).dot(dict.matrix().col(k));
        m = std::min(kGramClamp, std::max(-kGramClamp, m));
        const double d = w(h) - m;
        out.row(h) *= std::sqrt(d * d + 1.0 - m * m);
    }

    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(out);
    const Eigen::MatrixXd inv = lu.inverse();
    if (!inv.allFinite()) throw RankError("row update produced a singular matrix");
    for (int j = 0; j < K; ++j) {
        const double norm = inv.col(j).norm();
        if (std::abs(norm - 1.0) > 1e-8)
            throw RankError("row update lost unit-norm columns (norm " + format_g17(norm) + ")");
    }
    return out;
}

enum class BcdInit { random_gaussian, data_columns, given };

struct BcdConfig {
    double tau = std::numeric_limits<double>::infinity();
    int max_sweeps = 100;
    double solver_tol = 1e-9;
    int solver_max_iter = 2000;
    double stop_rel_tol = 1e-10;
    BcdInit init = BcdInit::random_gaussian;
    std::uint64_t seed = 0;
    bool trace_per_coordinate = false;  // also record f after every row update

    void validate() const {
        if (!(tau > 0.0)) throw ParameterError("tau must be positive");
        if (max_sweeps < 1) throw ParameterError("max_sweeps must be at least 1");
    }
};

struct BcdTrace {
    std::vector<double> objective_per_sweep;       // f(D^{(t,K)})
    std::vector<double> nmse_per_sweep;            // empty without a reference
    std::vector<double> objective_per_coordinate;  // verbose trace, optional
    int sweeps_run = 0;
    bool aborted = false;
    std::string message;
};

struct BcdResult {
    Dictionary dictionary;
    BcdTrace trace;
    bool ok = true;
};

namespace detail {

inline Dictionary bcd_initial_dictionary(const Eigen::MatrixXd& signals, const BcdConfig& cfg,
                                         const std::optional<Dictionary>& given) {
    const int K = static_cast<int>(signals.cols());
    switch (cfg.init) {
        case BcdInit::given:
            if (!given) throw ParameterError("init = given requires a dictionary");
            return *given;
        case BcdInit::random_gaussian:
            return random_gaussian_dictionary(K, mix64(cfg.seed ^ 0xD1C7ull));
        case BcdInit::data_columns: {
            if (signals.rows() < K)
                throw ParameterError("data-column init needs at least K signals");
            SplitRng rng(mix64(cfg.seed ^ 0xDA7Aull));
            // retry a few index draws if the selection is numerically singular
            for (int attempt = 0; attempt < 32; ++attempt) {
                Eigen::MatrixXd d(K, K);
                std::vector<int> idx(static_cast<std::size_t>(signals.rows()));
                std::iota(idx.begin(), idx.end(), 0);
                for (int j = 0; j < K; ++j) {
                    const int pick = j + static_cast<int>(rng.next_below(
                                             static_cast<std::uint64_t>(signals.rows() - j)));
                    std::swap(idx[static_cast<std::size_t>(j)], idx[static_cast<std::size_t>(pick)]);
                    d.col(j) = signals.row(idx[static_cast<std::size_t>(j)]).transpose();
                }
                try {
                    return make_dictionary(std::move(d));
                } catch (const std::exception&) {
                }
            }
            throw RankError("could not build an invertible data-column init");
        }
    }
    throw ParameterError("unknown init kind");
}

}  // namespace detail

/// Block coordinate descent over rows of Q = D^{-1}: per coordinate j the
/// tau-truncated subproblem is solved from w0 = I_j and the row
/// reparameterization applied, so the truncated objective never increases.
/// Stops when the relative per-sweep decrease falls below stop_rel_tol or
/// max_sweeps is reached.
inline BcdResult bcd_run(const Eigen::MatrixXd& signals, const BcdConfig& config,
                         const std::optional<Dictionary>& init = std::nullopt,
                         const std::optional<Dictionary>& reference = std::nullopt) {
    config.validate();
    if (signals.rows() < 1) throw ShapeError("need at least one signal");
    const int K = static_cast<int>(signals.cols());

    Dictionary current = detail::bcd_initial_dictionary(signals, config, init);
    Eigen::MatrixXd q = current.inverse();

    BcdResult result{current, {}, true};
    BcdTrace& trace = result.trace;

    SolveOptions opt;
    opt.tol = config.solver_tol;
    opt.max_iter = config.solver_max_iter;

    double prev_f = truncated_objective(current, signals, config.tau);
    for (int sweep = 0; sweep < config.max_sweeps; ++sweep) {
        for (int j = 0; j < K; ++j) {
            const Eigen::MatrixXd beta = signals * q.transpose();
            Eigen::VectorXd m(K);
            for (int h = 0; h < K; ++h)
                m(h) = current.matrix().col(h).dot(current.matrix().col(j));
            const SubproblemData data = make_subproblem(beta, j, m, config.tau);
            Eigen::VectorXd w0 = Eigen::VectorXd::Zero(K);
            w0(j) = 1.0;
            const SolveResult sol = solve(data, w0, opt);

            Eigen::MatrixXd q_next = q;
            q_next.row(j) = sol.w.transpose() * q;
            for (int h = 0; h < K; ++h) {
                if (h == j) continue;
                const double d = sol.w(h) - data.m_row(h);
                q_next.row(h) *= std::sqrt(d * d + 1.0 - data.m_row(h) * data.m_row(h));
            }
            Eigen::MatrixXd d_next = q_next.partialPivLu().inverse();
            if (!d_next.allFinite()) {
                trace.aborted = true;
                trace.message = "singular update at sweep " + std::to_string(sweep) +
                                ", coordinate " + std::to_string(j);
                result.ok = false;
                result.dictionary = current;
                return result;
            }
            // The update preserves unit columns exactly in exact arithmetic;
            // rescaling both factors keeps rounding from accumulating.
            for (int h = 0; h < K; ++h) {
                const double norm = d_next.col(h).norm();
                d_next.col(h) /= norm;
                q_next.row(h) *= norm;
            }
            q = q_next;
            try {
                current = Dictionary(d_next);
            } catch (const std::exception& e) {
                trace.aborted = true;
                trace.message = std::string("infeasible update at sweep ") +
                                std::to_string(sweep) + ", coordinate " + std::to_string(j) +
                                ": " + e.what();
                result.ok = false;
                return result;
            }
            if (config.trace_per_coordinate)
                trace.objective_per_coordinate.push_back(
                    truncated_objective(current, signals, config.tau));
        }
        const double f = truncated_objective(current, signals, config.tau);
        trace.objective_per_sweep.push_back(f);
        if (reference) trace.nmse_per_sweep.push_back(nmse(current, *reference));
        trace.sweeps_run = sweep + 1;
        const double rel_drop = (prev_f - f) / std::max(1e-300, std::abs(prev_f));
        prev_f = f;
        if (rel_drop < config.stop_rel_tol) break;
    }

    result.dictionary = current;
    return result;
}

}  // namespace l1dl
