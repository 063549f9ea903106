#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "l1dl/coeff_models.hpp"
#include "l1dl/csv.hpp"
#include "l1dl/dictionary.hpp"
#include "l1dl/dl_bcd.hpp"
#include "l1dl/parallel.hpp"
#include "l1dl/rng.hpp"
#include "l1dl/sharpness.hpp"

namespace l1dl {

/// Generates a constant-collinearity reference with SG(s) coefficients and
/// runs the perturbation test. One call per (grid point, trial); the trial
/// seed drives data and perturbation through separate sub-streams.
inline SharpTestReport sharp_trial(int K, int s, int n, double mu, double snr, double rho,
                                   double threshold, std::uint64_t trial_seed,
                                   int threads = 1) {
    const Dictionary ref = constant_collinearity_dictionary(K, mu);
    const CoefficientModel model = CoefficientModel::sparse_gaussian(s, K);
    const SignalSet set = make_signal_set(ref, model, n, snr, mix64(trial_seed ^ 0xDA7Aull));
    SharpTestConfig cfg;
    cfg.rho = rho;
    cfg.threshold = threshold;
    cfg.seed = mix64(trial_seed ^ 0x9E27ull);
    cfg.threads = threads;
    return sharp_test(ref, set.signals, cfg);
}

// ---------------------------------------------------------------------------
// rho sensitivity
// ---------------------------------------------------------------------------

struct SharpnessGridParams {
    int K = 20;
    int s = 10;
    int n = 1600;
    double mu = 0.1;
    std::vector<double> rho_grid{0.05, 0.1, 0.2, 0.3};
    int seeds = 20;
    double threshold = 1e-6;
    double snr = std::numeric_limits<double>::infinity();
    std::uint64_t master_seed = 1;
    int threads = 1;
};

struct SharpnessRow {
    double rho = 0.0;
    std::uint64_t seed = 0;
    double r = 0.0;
    bool is_sharp = false;
};

inline std::vector<SharpnessRow> run_sharpness_grid(const SharpnessGridParams& p) {
    if (p.rho_grid.empty() || p.seeds < 1) throw ParameterError("empty grid");
    const int total = static_cast<int>(p.rho_grid.size()) * p.seeds;
    std::vector<SharpnessRow> rows(static_cast<std::size_t>(total));
    parallel_for(total, p.threads, [&](int t) {
        const int gi = t / p.seeds;
        const int trial = t % p.seeds;
        const std::uint64_t seed = derive_seed(p.master_seed, static_cast<std::uint64_t>(gi),
                                               static_cast<std::uint64_t>(trial));
        const SharpTestReport rep = sharp_trial(p.K, p.s, p.n, p.mu, p.snr,
                                                p.rho_grid[static_cast<std::size_t>(gi)],
                                                p.threshold, seed);
        if (!rep.converged) throw NumericError("subproblem solver did not converge");
        rows[static_cast<std::size_t>(t)] = {p.rho_grid[static_cast<std::size_t>(gi)], seed,
                                             rep.r, rep.is_sharp};
    });
    return rows;
}

inline Table sharpness_rows_to_table(const std::vector<SharpnessRow>& rows) {
    Table t({"rho", "seed", "r", "is_sharp"});
    for (const auto& row : rows)
        t.add_row({format_g17(row.rho), std::to_string(row.seed), format_g17(row.r),
                   row.is_sharp ? "1" : "0"});
    return t;
}

// ---------------------------------------------------------------------------
// sample-size study with logistic fit
// ---------------------------------------------------------------------------

struct SampleSizeParams {
    std::vector<int> K_grid{12, 16, 20};
    std::vector<int> n_grid{100, 150, 200, 250, 300, 350, 400, 500, 600};
    int s = 5;
    double mu = 0.5;
    double rho = 0.01;
    double threshold = 1e-6;
    int seeds = 20;
    double snr = std::numeric_limits<double>::infinity();
    std::uint64_t master_seed = 1;
    int threads = 1;
};

struct SampleSizeCell {
    int K = 0;
    int n = 0;
    int trials = 0;
    int sharp_count = 0;
};

struct LogisticFit {
    bool available = false;
    double intercept = 0.0;  // on the standardized scale
    double slope = 0.0;
    double n50 = std::numeric_limits<double>::quiet_NaN();
    std::string status = "unfitted";
};

/// Maximum-likelihood logistic fit of success counts against a predictor,
/// by Newton iterations with step halving (at most 50 steps). Initialized
/// at the empirical 50% crossing. Degenerate data (all failures and/or no
/// increasing trend) reports the crossing as unavailable.
inline LogisticFit logistic_fit(const std::vector<double>& x, const std::vector<int>& successes,
                                const std::vector<int>& trials) {
    LogisticFit fit;
    const std::size_t m = x.size();
    if (m < 2 || successes.size() != m || trials.size() != m)
        throw ShapeError("logistic fit needs matching vectors of length >= 2");
    long total_succ = 0, total = 0;
    for (std::size_t i = 0; i < m; ++i) {
        total_succ += successes[i];
        total += trials[i];
    }
    if (total_succ == 0) {
        fit.status = "all_failure";
        return fit;
    }
    if (total_succ == total) {
        fit.status = "all_success";
        return fit;
    }

    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(m);
    double sd = 0.0;
    for (double v : x) sd += (v - mean) * (v - mean);
    sd = std::sqrt(sd / static_cast<double>(m));
    if (!(sd > 0.0)) throw ParameterError("predictor has zero variance");

    // empirical crossing of 0.5 to seed the intercept
    double z0 = 0.0;
    bool seen = false;
    for (std::size_t i = 0; i < m; ++i) {
        if (static_cast<double>(successes[i]) / trials[i] >= 0.5) {
            z0 = (x[i] - mean) / sd;
            seen = true;
            break;
        }
    }
    if (!seen) z0 = (x.back() - mean) / sd;

    double a = -z0, b = 1.0;
    auto loglik = [&](double aa, double bb) {
        double ll = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            const double z = (x[i] - mean) / sd;
            const double eta = aa + bb * z;
            // log(sigmoid) written to stay finite for large |eta|
            ll += successes[i] * (-std::log1p(std::exp(-eta))) +
                  (trials[i] - successes[i]) * (-std::log1p(std::exp(eta)));
        }
        return ll;
    };
    double ll = loglik(a, b);
    bool converged = false;
    for (int it = 0; it < 50; ++it) {
        double g0 = 0.0, g1 = 0.0, h00 = 0.0, h01 = 0.0, h11 = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            const double z = (x[i] - mean) / sd;
            const double pi = 1.0 / (1.0 + std::exp(-(a + b * z)));
            const double r = successes[i] - trials[i] * pi;
            const double wgt = trials[i] * pi * (1.0 - pi);
            g0 += r;
            g1 += r * z;
            h00 += wgt;
            h01 += wgt * z;
            h11 += wgt * z * z;
        }
        const double det = h00 * h11 - h01 * h01;
        if (std::abs(det) < 1e-14) break;
        double da = (h11 * g0 - h01 * g1) / det;
        double db = (-h01 * g0 + h00 * g1) / det;
        double step = 1.0;
        double ll_new = loglik(a + da, b + db);
        int halvings = 0;
        while (ll_new < ll && halvings < 20) {
            step *= 0.5;
            ll_new = loglik(a + step * da, b + step * db);
            ++halvings;
        }
        if (ll_new < ll) break;
        a += step * da;
        b += step * db;
        const double gain = ll_new - ll;
        ll = ll_new;
        if (std::abs(step * da) + std::abs(step * db) < 1e-10 || gain < 1e-12) {
            converged = true;
            break;
        }
    }
    fit.intercept = a;
    fit.slope = b;
    if (!(b > 0.0)) {
        fit.status = "non_increasing";
        return fit;
    }
    fit.n50 = mean - sd * a / b;
    fit.available = true;
    fit.status = converged ? "ok" : "max_iterations";
    return fit;
}

struct SampleSizeResult {
    std::vector<SampleSizeCell> cells;   // sorted by (K, n)
    std::map<int, LogisticFit> fit_by_K;
};

inline SampleSizeResult run_sample_size(const SampleSizeParams& p) {
    if (p.K_grid.empty() || p.n_grid.empty() || p.seeds < 1) throw ParameterError("empty grid");
    const int cells = static_cast<int>(p.K_grid.size() * p.n_grid.size());
    const int total = cells * p.seeds;
    std::vector<char> sharp(static_cast<std::size_t>(total), 0);
    parallel_for(total, p.threads, [&](int t) {
        const int cell = t / p.seeds;
        const int trial = t % p.seeds;
        const int K = p.K_grid[static_cast<std::size_t>(cell) / p.n_grid.size()];
        const int n = p.n_grid[static_cast<std::size_t>(cell) % p.n_grid.size()];
        const std::uint64_t seed = derive_seed(p.master_seed, static_cast<std::uint64_t>(cell),
                                               static_cast<std::uint64_t>(trial));
        const SharpTestReport rep =
            sharp_trial(K, p.s, n, p.mu, p.snr, p.rho, p.threshold, seed);
        if (!rep.converged) throw NumericError("subproblem solver did not converge");
        sharp[static_cast<std::size_t>(t)] = rep.is_sharp ? 1 : 0;
    });

    SampleSizeResult result;
    for (std::size_t ki = 0; ki < p.K_grid.size(); ++ki) {
        for (std::size_t ni = 0; ni < p.n_grid.size(); ++ni) {
            const int cell = static_cast<int>(ki * p.n_grid.size() + ni);
            SampleSizeCell c;
            c.K = p.K_grid[ki];
            c.n = p.n_grid[ni];
            c.trials = p.seeds;
            for (int trial = 0; trial < p.seeds; ++trial)
                c.sharp_count += sharp[static_cast<std::size_t>(cell * p.seeds + trial)];
            result.cells.push_back(c);
        }
        std::vector<double> xs;
        std::vector<int> succ, tri;
        for (std::size_t ni = 0; ni < p.n_grid.size(); ++ni) {
            const SampleSizeCell& c = result.cells[ki * p.n_grid.size() + ni];
            xs.push_back(static_cast<double>(c.n));
            succ.push_back(c.sharp_count);
            tri.push_back(c.trials);
        }
        result.fit_by_K[p.K_grid[ki]] = logistic_fit(xs, succ, tri);
    }
    return result;
}

inline Table sample_size_cells_to_table(const SampleSizeResult& r) {
    Table t({"K", "n", "trials", "sharp_count", "fraction"});
    for (const auto& c : r.cells)
        t.add_row({std::to_string(c.K), std::to_string(c.n), std::to_string(c.trials),
                   std::to_string(c.sharp_count),
                   format_g17(static_cast<double>(c.sharp_count) / c.trials)});
    return t;
}

inline Table sample_size_fits_to_table(const SampleSizeResult& r) {
    Table t({"K", "status", "intercept", "slope", "n50"});
    for (const auto& [K, fit] : r.fit_by_K)
        t.add_row({std::to_string(K), fit.status, format_g17(fit.intercept),
                   format_g17(fit.slope), format_g17(fit.n50)});
    return t;
}

// ---------------------------------------------------------------------------
// recovery phase diagram
// ---------------------------------------------------------------------------

struct RecoveryCellParams {
    int K = 10;
    int s = 3;
    int n = 0;  // 0 means 100 * K
    double snr = 100.0;
    double tau = 0.5;
    int seeds = 20;
    int restarts = 3;  // random inits per trial, best truncated objective wins
    int max_sweeps = 100;
    double nmse_threshold = 0.01;
    std::uint64_t master_seed = 1;
    int threads = 1;
};

struct RecoveryCell {
    int K = 0;
    int s = 0;
    int trials = 0;
    int successes = 0;
    double rate = 0.0;
};

/// One recovery trial: random Gaussian reference, SG(s) data, DL-BCD from a
/// random init (best of `restarts` by truncated objective). Returns the NMSE
/// of the selected dictionary against the reference.
inline double recovery_trial(const RecoveryCellParams& p, std::uint64_t trial_seed) {
    const int n = p.n > 0 ? p.n : 100 * p.K;
    const Dictionary ref = random_gaussian_dictionary(p.K, mix64(trial_seed ^ 0xD1C7ull));
    const CoefficientModel model = CoefficientModel::sparse_gaussian(p.s, p.K);
    const SignalSet set = make_signal_set(ref, model, n, p.snr, mix64(trial_seed ^ 0xDA7Aull));

    double best_obj = std::numeric_limits<double>::infinity();
    std::optional<Dictionary> best;
    for (int r = 0; r < std::max(1, p.restarts); ++r) {
        BcdConfig cfg;
        cfg.tau = p.tau;
        cfg.max_sweeps = p.max_sweeps;
        cfg.seed = mix64(trial_seed ^ (0xB0057ull + static_cast<std::uint64_t>(r)));
        cfg.init = BcdInit::random_gaussian;
        const BcdResult res = bcd_run(set.signals, cfg);
        if (!res.ok) continue;
        const double obj = truncated_objective(res.dictionary, set.signals, p.tau);
        if (obj < best_obj) {
            best_obj = obj;
            best = res.dictionary;
        }
    }
    if (!best) return std::numeric_limits<double>::infinity();
    return nmse(*best, ref);
}

inline RecoveryCell run_recovery_cell(const RecoveryCellParams& p) {
    RecoveryCell cell;
    cell.K = p.K;
    cell.s = p.s;
    cell.trials = p.seeds;
    std::vector<char> success(static_cast<std::size_t>(p.seeds), 0);
    parallel_for(p.seeds, p.threads, [&](int trial) {
        const std::uint64_t seed = derive_seed(p.master_seed, 0, static_cast<std::uint64_t>(trial));
        const double err = recovery_trial(p, seed);
        success[static_cast<std::size_t>(trial)] = err < p.nmse_threshold ? 1 : 0;
    });
    for (char c : success) cell.successes += c;
    cell.rate = static_cast<double>(cell.successes) / cell.trials;
    return cell;
}

struct PhaseDiagramParams {
    std::vector<int> K_grid{2, 4, 6, 8, 10};
    std::vector<int> s_grid;  // empty: s = 2..K per K
    RecoveryCellParams cell;  // K/s overridden per grid point
};

inline std::vector<RecoveryCell> run_phase_diagram(const PhaseDiagramParams& p) {
    if (p.K_grid.empty()) throw ParameterError("empty K grid");
    std::vector<std::pair<int, int>> points;
    for (int K : p.K_grid) {
        if (p.s_grid.empty()) {
            for (int s = 2; s <= K; ++s) points.emplace_back(K, s);
        } else {
            for (int s : p.s_grid)
                if (s <= K) points.emplace_back(K, s);
        }
    }
    std::vector<RecoveryCell> cells(points.size());
    for (std::size_t gi = 0; gi < points.size(); ++gi) {
        RecoveryCellParams cp = p.cell;
        cp.K = points[gi].first;
        cp.s = points[gi].second;
        cp.master_seed = derive_seed(p.cell.master_seed, gi, 0xCE11ull);
        cells[gi] = run_recovery_cell(cp);
    }
    return cells;
}

inline Table phase_diagram_to_table(const std::vector<RecoveryCell>& cells, double tau) {
    Table t({"algorithm", "tau", "K", "s", "trials", "successes", "recovery_rate"});
    for (const auto& c : cells)
        t.add_row({"dl-bcd", format_g17(tau), std::to_string(c.K), std::to_string(c.s),
                   std::to_string(c.trials), std::to_string(c.successes), format_g17(c.rate)});
    return t;
}

// ---------------------------------------------------------------------------
// timing
// ---------------------------------------------------------------------------

struct TimingParams {
    int K_fixed = 20;
    std::vector<int> n_grid{500, 1000, 2000, 3500, 5000};
    int n_fixed = 400;
    std::vector<int> K_grid{5, 10, 20, 35, 50};
    double mu = 0.5;
    double p = 0.7;  // Bernoulli-Gaussian coefficients
    double rho = 0.01;
    double threshold = 1e-6;
    // Timed solves run to their numerical floor so the iteration count is
    // uniform across the grid and the wall clock reflects the per-iteration
    // cost; with the default stall tolerance the larger (smoother) instances
    // terminate in fewer iterations and bias the fitted slope down.
    double solver_tol = 0.0;
    int repeats = 3;
    std::uint64_t master_seed = 1;
};

struct TimingRow {
    std::string grid;  // "n" or "K"
    int K = 0;
    int n = 0;
    double seconds = 0.0;
};

struct TimingResult {
    std::vector<TimingRow> rows;
    bool has_slope_n = false;
    bool has_slope_K = false;
    double slope_n = std::numeric_limits<double>::quiet_NaN();
    double slope_K = std::numeric_limits<double>::quiet_NaN();
};

inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t m = x.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < m; ++i) {
        const double lx = std::log(x[i]);
        const double ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    const double denom = m * sxx - sx * sx;
    if (std::abs(denom) < 1e-12) throw NumericError("degenerate regression");
    return (m * sxy - sx * sy) / denom;
}

inline double time_sharp_trial_bg(int K, int n, double mu, double p, double rho,
                                  double threshold, double solver_tol, std::uint64_t seed,
                                  int repeats) {
    const Dictionary ref = constant_collinearity_dictionary(K, mu);
    const CoefficientModel model = CoefficientModel::bernoulli_gaussian(p, K);
    const SignalSet set = make_signal_set(ref, model, n,
                                          std::numeric_limits<double>::infinity(),
                                          mix64(seed ^ 0xDA7Aull));
    SharpTestConfig cfg;
    cfg.rho = rho;
    cfg.threshold = threshold;
    cfg.solver_tol = solver_tol;
    cfg.threads = 1;
    std::vector<double> times;
    for (int r = 0; r < std::max(1, repeats); ++r) {
        cfg.seed = mix64(seed ^ (0x9E27ull + static_cast<std::uint64_t>(r)));
        const auto t0 = std::chrono::steady_clock::now();
        (void)sharp_test(ref, set.signals, cfg);
        const auto t1 = std::chrono::steady_clock::now();
        times.push_back(std::chrono::duration<double>(t1 - t0).count());
    }
    std::sort(times.begin(), times.end());
    return times[times.size() / 2];
}

inline TimingResult run_timing(const TimingParams& p) {
    TimingResult result;
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < p.n_grid.size(); ++i) {
        const int n = p.n_grid[i];
        const double sec = time_sharp_trial_bg(p.K_fixed, n, p.mu, p.p, p.rho, p.threshold,
                                               p.solver_tol, derive_seed(p.master_seed, 0, i),
                                               p.repeats);
        result.rows.push_back({"n", p.K_fixed, n, sec});
        xs.push_back(n);
        ys.push_back(sec);
    }
    if (xs.size() >= 2) {
        result.slope_n = loglog_slope(xs, ys);
        result.has_slope_n = true;
    }
    xs.clear();
    ys.clear();
    for (std::size_t i = 0; i < p.K_grid.size(); ++i) {
        const int K = p.K_grid[i];
        const double sec = time_sharp_trial_bg(K, p.n_fixed, p.mu, p.p, p.rho, p.threshold,
                                               p.solver_tol, derive_seed(p.master_seed, 1, i),
                                               p.repeats);
        result.rows.push_back({"K", K, p.n_fixed, sec});
        xs.push_back(K);
        ys.push_back(sec);
    }
    if (xs.size() >= 2) {
        result.slope_K = loglog_slope(xs, ys);
        result.has_slope_K = true;
    }
    return result;
}

inline Table timing_to_table(const TimingResult& r) {
    Table t({"grid", "K", "n", "seconds"});
    for (const auto& row : r.rows)
        t.add_row({row.grid, std::to_string(row.K), std::to_string(row.n),
                   format_g17(row.seconds)});
    return t;
}

// ---------------------------------------------------------------------------
// 2-D counter-example surface
// ---------------------------------------------------------------------------

struct CounterexampleParams {
    int n = 2000;
    int grid = 360;              // theta resolution over [0, pi)
    double singular_guard = 1e-6;  // skip |sin(t1 - t2)| below this
    double rho = 0.01;
    double threshold = 1e-6;
    std::uint64_t master_seed = 1;
    int threads = 1;
};

struct CounterexampleResult {
    int grid = 0;
    std::vector<double> theta;          // grid values
    Eigen::MatrixXd surface;            // L(theta1, theta2); NaN where singular
    std::vector<double> slice;          // orthogonal dictionaries, theta2 = theta1 + pi/2
    double L_reference = 0.0;           // identity dictionary
    double grid_min = 0.0;
    double argmin_theta1 = 0.0;
    double argmin_theta2 = 0.0;
    bool reference_is_sharp = false;
    double reference_r = 0.0;
};

/// Evaluates the empirical l1 objective over dictionaries parameterized by
/// two column angles. Decomposes as L = (g(t1) + g(t2)) / |sin(t2 - t1)|
/// with g(t) = mean_i |sin(t) y_1 - cos(t) y_2|, so the grid assembly is
/// O(grid^2) after an O(grid * n) pass.
inline CounterexampleResult run_counterexample(const CounterexampleParams& p) {
    if (p.grid < 4) throw ParameterError("grid too small");
    const Eigen::MatrixXd samples = sample_counterexample(p.n, p.master_seed);
    const double nan = std::numeric_limits<double>::quiet_NaN();

    CounterexampleResult r;
    r.grid = p.grid;
    r.theta.resize(static_cast<std::size_t>(p.grid));
    for (int i = 0; i < p.grid; ++i)
        r.theta[static_cast<std::size_t>(i)] = std::numbers::pi * i / p.grid;

    auto g_of = [&](double t) {
        return (std::sin(t) * samples.col(0) - std::cos(t) * samples.col(1))
            .array()
            .abs()
            .mean();
    };
    std::vector<double> g(static_cast<std::size_t>(p.grid));
    parallel_for(p.grid, p.threads, [&](int i) {
        g[static_cast<std::size_t>(i)] = g_of(r.theta[static_cast<std::size_t>(i)]);
    });

    r.surface = Eigen::MatrixXd::Constant(p.grid, p.grid, nan);
    r.grid_min = std::numeric_limits<double>::infinity();
    for (int i = 0; i < p.grid; ++i) {
        for (int j = 0; j < p.grid; ++j) {
            const double det = std::sin(r.theta[static_cast<std::size_t>(j)] -
                                        r.theta[static_cast<std::size_t>(i)]);
            if (std::abs(det) < p.singular_guard) continue;
            const double val =
                (g[static_cast<std::size_t>(i)] + g[static_cast<std::size_t>(j)]) / std::abs(det);
            r.surface(i, j) = val;
            if (val < r.grid_min) {
                r.grid_min = val;
                r.argmin_theta1 = r.theta[static_cast<std::size_t>(i)];
                r.argmin_theta2 = r.theta[static_cast<std::size_t>(j)];
            }
        }
    }

    r.slice.resize(static_cast<std::size_t>(p.grid));
    for (int i = 0; i < p.grid; ++i) {
        const double t1 = r.theta[static_cast<std::size_t>(i)];
        double t2 = t1 + std::numbers::pi / 2.0;
        if (t2 >= std::numbers::pi) t2 -= std::numbers::pi;
        r.slice[static_cast<std::size_t>(i)] = g_of(t1) + g_of(t2);
    }

    r.L_reference = g_of(0.0) + g_of(std::numbers::pi / 2.0);

    const Dictionary identity = make_dictionary(Eigen::MatrixXd::Identity(2, 2));
    SharpTestConfig cfg;
    cfg.rho = p.rho;
    cfg.threshold = p.threshold;
    cfg.seed = mix64(p.master_seed ^ 0x9E27ull);
    cfg.threads = p.threads;
    const SharpTestReport rep = sharp_test(identity, samples, cfg);
    r.reference_is_sharp = rep.converged && rep.is_sharp;
    r.reference_r = rep.r;
    return r;
}

inline Table counterexample_surface_to_table(const CounterexampleResult& r) {
    Table t({"theta1", "theta2", "objective", "singular"});
    for (int i = 0; i < r.grid; ++i)
        for (int j = 0; j < r.grid; ++j) {
            const double v = r.surface(i, j);
            const bool singular = std::isnan(v);
            t.add_row({format_g17(r.theta[static_cast<std::size_t>(i)]),
                       format_g17(r.theta[static_cast<std::size_t>(j)]),
                       singular ? "nan" : format_g17(v), singular ? "1" : "0"});
        }
    return t;
}

inline Table counterexample_slice_to_table(const CounterexampleResult& r) {
    Table t({"theta1", "objective"});
    for (int i = 0; i < r.grid; ++i)
        t.add_row({format_g17(r.theta[static_cast<std::size_t>(i)]),
                   format_g17(r.slice[static_cast<std::size_t>(i)])});
    return t;
}

inline nlohmann::ordered_json counterexample_summary_json(const CounterexampleResult& r) {
    nlohmann::ordered_json j;
    j["L_reference"] = r.L_reference;
    j["grid_min"] = r.grid_min;
    j["argmin_theta1"] = r.argmin_theta1;
    j["argmin_theta2"] = r.argmin_theta2;
    j["reference_is_sharp"] = r.reference_is_sharp;
    j["reference_r"] = r.reference_r;
    return j;
}

/// JSON rendering of a table: {"columns": [...], "rows": [[...], ...]}.
inline nlohmann::ordered_json table_to_json(const Table& t) {
    nlohmann::ordered_json j;
    j["columns"] = t.columns();
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const auto& row : t.rows()) rows.push_back(row);
    j["rows"] = rows;
    return j;
}

}  // namespace l1dl
