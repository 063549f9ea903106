#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <vector>

#include "l1dl/errors.hpp"

namespace l1dl {

inline constexpr double kGramClamp = 1.0 - 1e-9;

/// Per-coordinate strongly convex objective over w with w[k] = 1:
///
///   f(w) = sum_{active i} |<beta^(i), w>|
///        + sum_{h != k} sqrt((w_h - m_h)^2 + 1 - m_h^2) * c_h
///
/// where c_h sums |beta_h| over the samples below the truncation threshold.
/// Gram entries are clamped to |m_h| <= 1 - 1e-9 so the root terms stay
/// differentiable.
struct SubproblemData {
    Eigen::MatrixXd beta;      // rows kept for the first term (|beta_k| < tau)
    Eigen::VectorXd m_row;     // clamped collinearity row, entry k unused
    Eigen::VectorXd weights;   // c_h, entry k unused
    Eigen::VectorXd row_mass;  // ||beta^(i)||_1, sets the kink tolerance scale
    int k = 0;
    int dim = 0;
};

/// Inner products below kKinkRelTol * ||beta^(i)||_1 are treated as sitting
/// on the l1 kink. Coefficients computed as D^{-1} y carry rounding of this
/// order, so exact-zero tests on <beta, w> would miss every kink.
inline constexpr double kKinkRelTol = 1e-11;

inline SubproblemData make_subproblem(const Eigen::MatrixXd& beta, int k,
                                      const Eigen::VectorXd& m_row,
                                      double tau = std::numeric_limits<double>::infinity()) {
    const int K = static_cast<int>(beta.cols());
    if (k < 0 || k >= K) throw ParameterError("coordinate index out of range");
    if (m_row.size() != K) throw ShapeError("collinearity row must have K entries");
    if (!(tau > 0.0)) throw ParameterError("truncation threshold must be positive");

    SubproblemData data;
    data.k = k;
    data.dim = K;
    data.m_row = m_row.cwiseMax(-kGramClamp).cwiseMin(kGramClamp);

    data.weights = Eigen::VectorXd::Zero(K);
    for (Eigen::Index i = 0; i < beta.rows(); ++i)
        for (int h = 0; h < K; ++h) {
            const double v = std::abs(beta(i, h));
            if (v < tau) data.weights(h) += v;
        }

    if (std::isinf(tau)) {
        data.beta = beta;
    } else {
        Eigen::Index count = 0;
        for (Eigen::Index i = 0; i < beta.rows(); ++i)
            if (std::abs(beta(i, k)) < tau) ++count;
        data.beta.resize(count, K);
        Eigen::Index r = 0;
        for (Eigen::Index i = 0; i < beta.rows(); ++i)
            if (std::abs(beta(i, k)) < tau) data.beta.row(r++) = beta.row(i);
    }
    data.row_mass = data.beta.cwiseAbs().rowwise().sum();
    return data;
}

namespace detail {

inline void check_contract(const SubproblemData& data, const Eigen::VectorXd& w) {
    if (w.size() != data.dim) throw ShapeError("w must have K entries");
    if (w(data.k) != 1.0) throw ContractError("w[k] must equal 1");
}

inline double root_term(double wh, double mh) {
    const double d = wh - mh;
    return std::sqrt(d * d + 1.0 - mh * mh);
}

inline double kink_scale(const Eigen::VectorXd& w) {
    return kKinkRelTol * std::max(1.0, w.cwiseAbs().maxCoeff());
}

inline Eigen::VectorXd gradient_from_z(const SubproblemData& data, const Eigen::VectorXd& w,
                                       const Eigen::VectorXd& z) {
    const double scale = kink_scale(w);
    Eigen::VectorXd signs(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        const double tol = scale * data.row_mass(i);
        signs(i) = z(i) > tol ? 1.0 : z(i) < -tol ? -1.0 : 0.0;
    }
    Eigen::VectorXd g = data.beta.transpose() * signs;
    for (int h = 0; h < data.dim; ++h) {
        if (h == data.k) continue;
        const double d = w(h) - data.m_row(h);
        g(h) += d / root_term(w(h), data.m_row(h)) * data.weights(h);
    }
    g(data.k) = 0.0;
    return g;
}

}  // namespace detail

inline double objective(const SubproblemData& data, const Eigen::VectorXd& w) {
    detail::check_contract(data, w);
    double f = (data.beta * w).array().abs().sum();
    for (int h = 0; h < data.dim; ++h) {
        if (h == data.k) continue;
        f += detail::root_term(w(h), data.m_row(h)) * data.weights(h);
    }
    return f;
}

/// One element of the subdifferential with sign(0) = 0 on the data term.
/// Component k is reported as 0 (the coordinate is fixed).
inline Eigen::VectorXd subgradient(const SubproblemData& data, const Eigen::VectorXd& w) {
    detail::check_contract(data, w);
    const Eigen::VectorXd z = data.beta * w;
    return detail::gradient_from_z(data, w, z);
}

struct SolveOptions {
    double tol = 1e-9;
    int max_iter = 500;
};

struct SolveResult {
    Eigen::VectorXd w;
    double objective_value = 0.0;
    int iterations = 0;
    bool converged = false;
};

namespace detail {

inline double eval_objective(const SubproblemData& data, const Eigen::VectorXd& w,
                             Eigen::VectorXd& z) {
    z.noalias() = data.beta * w;
    double f = z.array().abs().sum();
    for (int h = 0; h < data.dim; ++h) {
        if (h == data.k) continue;
        f += root_term(w(h), data.m_row(h)) * data.weights(h);
    }
    return f;
}

/// Splits the first-order information at w into the smooth part
/// a_h = sum_{z_i != 0} sign(z_i) beta_ih + phi_h'(w_h) and the kink mass
/// v_h = sum_{z_i = 0} |beta_ih|. One-sided derivatives along the coordinate
/// axes are f'(w; +e_h) = a_h + v_h and f'(w; -e_h) = -a_h + v_h.
inline void directional_split(const SubproblemData& data, const Eigen::VectorXd& w,
                              const Eigen::VectorXd& z, Eigen::VectorXd& a,
                              Eigen::VectorXd& v) {
    a = Eigen::VectorXd::Zero(data.dim);
    v = Eigen::VectorXd::Zero(data.dim);
    const double scale = kink_scale(w);
    for (Eigen::Index i = 0; i < data.beta.rows(); ++i) {
        const double zi = z(i);
        const double tol = scale * data.row_mass(i);
        if (zi > tol)
            a += data.beta.row(i).transpose();
        else if (zi < -tol)
            a -= data.beta.row(i).transpose();
        else
            v += data.beta.row(i).transpose().cwiseAbs();
    }
    for (int h = 0; h < data.dim; ++h) {
        if (h == data.k) continue;
        const double d = w(h) - data.m_row(h);
        a(h) += d / root_term(w(h), data.m_row(h)) * data.weights(h);
    }
    a(data.k) = 0.0;
    v(data.k) = 0.0;
}

}  // namespace detail

/// Minimizes the subproblem over the K-1 free coordinates.
///
/// Quasi-Newton (BFGS) iteration on the subgradient oracle with a
/// backtracking line search on objective values only; if the quasi-Newton
/// direction repeatedly fails to produce descent the Hessian estimate is
/// reset and steepest/axis directions are tried. The iteration stops with
/// converged = true when either
///   - every one-sided derivative along +-e_h at the incumbent is >= -tol
///     (stationarity certificate; checked only after descent attempts fail,
///     since the axis test alone cannot rule out diagonal descent), or
///   - the objective decrease stays below tol*(1+|f|) for 5 iterations.
/// Hitting max_iter returns the best iterate with converged = false.
inline SolveResult solve(const SubproblemData& data, const Eigen::VectorXd& w0,
                         const SolveOptions& opt = {}) {
    detail::check_contract(data, w0);
    const int K = data.dim;
    const int m = K - 1;

    SolveResult res;
    res.w = w0;
    Eigen::VectorXd z;
    res.objective_value = detail::eval_objective(data, res.w, z);
    if (m == 0) {
        res.converged = true;
        return res;
    }

    // free-coordinate bookkeeping
    std::vector<int> free_idx(static_cast<std::size_t>(m));
    {
        int t = 0;
        for (int h = 0; h < K; ++h)
            if (h != data.k) free_idx[static_cast<std::size_t>(t++)] = h;
    }
    auto gather = [&](const Eigen::VectorXd& full) {
        Eigen::VectorXd out(m);
        for (int i = 0; i < m; ++i) out(i) = full(free_idx[static_cast<std::size_t>(i)]);
        return out;
    };

    Eigen::VectorXd w = w0;
    double f = res.objective_value;
    Eigen::VectorXd g_full = subgradient(data, w);
    Eigen::VectorXd g = gather(g_full);
    Eigen::MatrixXd h_inv = Eigen::MatrixXd::Identity(m, m);
    const double g0 = g.norm();
    if (g0 > 1.0) h_inv /= g0;  // keeps the first trial step O(1)

    Eigen::VectorXd best_w = w;
    double best_f = f;
    int stall = 0;
    int qn_failures = 0;
    bool converged = false;
    int iter = 0;

    // Backtracking on objective values; falls back to the best simple
    // decrease seen if the Armijo test never fires.
    Eigen::VectorXd z_accept;
    auto line_search = [&](const Eigen::VectorXd& dir_free, double gtd, Eigen::VectorXd& w_out,
                           double& f_out) {
        double t = 1.0;
        const double dmax = dir_free.cwiseAbs().maxCoeff();
        if (dmax > 10.0) t = 10.0 / dmax;
        double best_t = -1.0, best_val = f;
        Eigen::VectorXd trial = w;
        Eigen::VectorXd zt;
        for (int back = 0; back < 60; ++back) {
            for (int i = 0; i < m; ++i)
                trial(free_idx[static_cast<std::size_t>(i)]) = w(free_idx[static_cast<std::size_t>(i)]) + t * dir_free(i);
            const double ft = detail::eval_objective(data, trial, zt);
            if (ft <= f + 1e-4 * t * gtd && ft < f) {
                w_out = trial;
                f_out = ft;
                z_accept = zt;
                return true;
            }
            if (ft < best_val) {
                best_val = ft;
                best_t = t;
            }
            t *= 0.5;
        }
        if (best_t > 0.0) {
            for (int i = 0; i < m; ++i)
                trial(free_idx[static_cast<std::size_t>(i)]) = w(free_idx[static_cast<std::size_t>(i)]) + best_t * dir_free(i);
            f_out = detail::eval_objective(data, trial, zt);
            w_out = trial;
            z_accept = zt;
            return true;
        }
        return false;
    };

    for (; iter < opt.max_iter; ++iter) {
        Eigen::VectorXd dir = -(h_inv * g);
        bool used_qn = true;
        if (dir.dot(g) >= 0.0) {
            dir = -g;
            used_qn = false;
        }

        Eigen::VectorXd w_new;
        double f_new = f;
        bool stepped = line_search(dir, dir.dot(g), w_new, f_new);
        if (!stepped && used_qn) {
            ++qn_failures;
            if (qn_failures >= 10) h_inv.setIdentity();
            stepped = line_search(-g, -g.squaredNorm(), w_new, f_new);
            used_qn = false;
        }

        if (!stepped) {
            // No descent along gradient directions: consult the certificate.
            Eigen::VectorXd a, v;
            detail::directional_split(data, w, z, a, v);
            double worst = std::numeric_limits<double>::infinity();
            int worst_h = -1;
            for (int h = 0; h < K; ++h) {
                if (h == data.k) continue;
                const double slack = v(h) - std::abs(a(h));
                if (slack < worst) {
                    worst = slack;
                    worst_h = h;
                }
            }
            if (worst >= -opt.tol) {
                converged = true;
                break;
            }
            // One axis still claims descent; try it directly.
            Eigen::VectorXd axis = Eigen::VectorXd::Zero(m);
            for (int i = 0; i < m; ++i)
                if (free_idx[static_cast<std::size_t>(i)] == worst_h)
                    axis(i) = a(worst_h) > 0.0 ? -1.0 : 1.0;
            stepped = line_search(axis, -std::abs(a(worst_h)) + v(worst_h), w_new, f_new);
            if (!stepped) {
                // No direction produces any decrease: the zero decrease sits
                // below tol * (1 + |f|), the objective-stall criterion.
                converged = true;
                break;
            }
            h_inv.setIdentity();
            used_qn = false;
        }

        const Eigen::VectorXd g_new_full = detail::gradient_from_z(data, w_new, z_accept);
        const Eigen::VectorXd g_new = gather(g_new_full);
        if (used_qn || qn_failures < 10) {
            const Eigen::VectorXd s = gather(w_new) - gather(w);
            const Eigen::VectorXd y = g_new - g;
            const double sy = s.dot(y);
            if (sy > 1e-12 * s.norm() * y.norm()) {
                const Eigen::VectorXd hy = h_inv * y;
                const double yhy = y.dot(hy);
                h_inv += ((sy + yhy) / (sy * sy)) * (s * s.transpose()) -
                         (hy * s.transpose() + s * hy.transpose()) / sy;
            }
        }
        if (used_qn) qn_failures = 0;

        const double decrease = f - f_new;
        w = w_new;
        f = f_new;
        z = z_accept;  // keeps z in sync with w for the certificate
        g = g_new;
        if (f < best_f) {
            best_f = f;
            best_w = w;
        }
        stall = decrease < opt.tol * (1.0 + std::abs(f)) ? stall + 1 : 0;
        if (stall >= 5) {
            converged = true;
            break;
        }
    }

    res.w = best_w;
    res.objective_value = best_f;
    res.iterations = iter;
    res.converged = converged;
    return res;
}

}  // namespace l1dl
