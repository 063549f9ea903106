#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>
#include <limits>

#include "l1dl/coeff_models.hpp"
#include "l1dl/dictionary.hpp"
#include "l1dl/rng.hpp"
#include "l1dl/subproblem.hpp"

using l1dl::CoefficientModel;
using l1dl::SubproblemData;

namespace {
const double kInf = std::numeric_limits<double>::infinity();

SubproblemData random_problem(int n, int K, int k, l1dl::SplitRng& rng) {
    Eigen::MatrixXd beta(n, K);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < K; ++j) beta(i, j) = rng.next_gaussian();
    Eigen::VectorXd m(K);
    for (int j = 0; j < K; ++j) m(j) = 1.8 * rng.next_double() - 0.9;
    return l1dl::make_subproblem(beta, k, m);
}

Eigen::VectorXd with_k(const Eigen::VectorXd& free_vals, int k) {
    Eigen::VectorXd w(free_vals.size() + 1);
    int t = 0;
    for (int h = 0; h < w.size(); ++h) w(h) = h == k ? 1.0 : free_vals(t++);
    return w;
}

}  // namespace

TEST_CASE("objective at the basis vector collapses to the l1 mass") {
    l1dl::SplitRng rng(1);
    const int n = 50, K = 6, k = 2;
    const SubproblemData data = random_problem(n, K, k, rng);
    Eigen::VectorXd w = Eigen::VectorXd::Zero(K);
    w(k) = 1.0;
    // root terms collapse to 1, so f(I_k) = sum_i ||beta_i||_1
    REQUIRE(l1dl::objective(data, w) ==
            Catch::Approx(data.beta.array().abs().sum()).epsilon(1e-12));
}

TEST_CASE("objective matches the two-sample hand formula") {
    Eigen::MatrixXd beta(2, 2);
    beta << 1, 0, 0, 1;
    Eigen::VectorXd m = Eigen::VectorXd::Zero(2);
    const SubproblemData data = l1dl::make_subproblem(beta, 0, m);
    for (double w2 : {-1.5, -0.3, 0.0, 0.7, 2.0}) {
        Eigen::VectorXd w(2);
        w << 1.0, w2;
        const double expect = 1.0 + std::abs(w2) + std::sqrt(w2 * w2 + 1.0);
        REQUIRE(l1dl::objective(data, w) == Catch::Approx(expect).epsilon(1e-14));
    }
}

TEST_CASE("zero data makes the objective identically zero") {
    const Eigen::MatrixXd beta = Eigen::MatrixXd::Zero(5, 4);
    const SubproblemData data = l1dl::make_subproblem(beta, 1, Eigen::VectorXd::Zero(4));
    l1dl::SplitRng rng(3);
    for (int trial = 0; trial < 5; ++trial) {
        Eigen::VectorXd w(4);
        for (int j = 0; j < 4; ++j) w(j) = rng.next_gaussian();
        w(1) = 1.0;
        REQUIRE(l1dl::objective(data, w) == 0.0);
    }
}

TEST_CASE("objective enforces the fixed-coordinate contract") {
    l1dl::SplitRng rng(4);
    const SubproblemData data = random_problem(10, 4, 0, rng);
    Eigen::VectorXd w = Eigen::VectorXd::Ones(4);
    w(0) = 0.5;
    REQUIRE_THROWS_AS(l1dl::objective(data, w), l1dl::ContractError);
    REQUIRE_THROWS_AS(l1dl::subgradient(data, w), l1dl::ContractError);
}

TEST_CASE("subgradient at the basis vector with orthogonal gram") {
    l1dl::SplitRng rng(5);
    const int n = 40, K = 5, k = 1;
    Eigen::MatrixXd beta(n, K);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < K; ++j) beta(i, j) = rng.next_gaussian();
    const SubproblemData data = l1dl::make_subproblem(beta, k, Eigen::VectorXd::Zero(K));
    Eigen::VectorXd w = Eigen::VectorXd::Zero(K);
    w(k) = 1.0;
    const Eigen::VectorXd g = l1dl::subgradient(data, w);
    // root-term derivative vanishes at w = I_k when m = 0
    for (int h = 0; h < K; ++h) {
        if (h == k) {
            REQUIRE(g(h) == 0.0);
            continue;
        }
        double expect = 0.0;
        for (int i = 0; i < n; ++i)
            expect += beta(i, h) * (beta(i, k) > 0 ? 1.0 : beta(i, k) < 0 ? -1.0 : 0.0);
        REQUIRE(g(h) == Catch::Approx(expect).margin(1e-12));
    }
}

TEST_CASE("subgradient of a single basis-vector sample") {
    const int K = 4, k = 2;
    Eigen::MatrixXd beta = Eigen::MatrixXd::Zero(1, K);
    beta(0, k) = 1.0;
    const SubproblemData data = l1dl::make_subproblem(beta, k, Eigen::VectorXd::Zero(K));
    Eigen::VectorXd w = Eigen::VectorXd::Zero(K);
    w(k) = 1.0;
    const Eigen::VectorXd g = l1dl::subgradient(data, w);
    REQUIRE(g.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("subgradient agrees with central differences at smooth points") {
    l1dl::SplitRng rng(6);
    int checked = 0;
    while (checked < 20) {
        const int K = 3 + static_cast<int>(rng.next_below(3));
        const int k = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(K)));
        const SubproblemData data = random_problem(30, K, k, rng);
        Eigen::VectorXd w(K);
        for (int j = 0; j < K; ++j) w(j) = 2.0 * rng.next_double() - 1.0;
        w(k) = 1.0;
        if ((data.beta * w).cwiseAbs().minCoeff() < 1e-3) continue;  // avoid kinks
        const Eigen::VectorXd g = l1dl::subgradient(data, w);
        const double h = 1e-6;
        for (int j = 0; j < K; ++j) {
            if (j == k) continue;
            Eigen::VectorXd wp = w, wm = w;
            wp(j) += h;
            wm(j) -= h;
            const double fd = (l1dl::objective(data, wp) - l1dl::objective(data, wm)) / (2 * h);
            REQUIRE(g(j) == Catch::Approx(fd).epsilon(1e-5).margin(1e-7));
        }
        ++checked;
    }
}

TEST_CASE("solve matches the one-dimensional grid oracle") {
    Eigen::MatrixXd beta(2, 2);
    beta << 1, 0, 0, 1;
    const SubproblemData data = l1dl::make_subproblem(beta, 0, Eigen::VectorXd::Zero(2));
    Eigen::VectorXd w0(2);
    w0 << 1.0, 0.0;
    const l1dl::SolveResult res = l1dl::solve(data, w0);
    REQUIRE(res.converged);

    double best = kInf, best_w = 0.0;
    for (double w2 = -2.0; w2 <= 2.0; w2 += 1e-4) {
        Eigen::VectorXd w(2);
        w << 1.0, w2;
        const double f = l1dl::objective(data, w);
        if (f < best) {
            best = f;
            best_w = w2;
        }
    }
    REQUIRE(res.objective_value == Catch::Approx(best).margin(1e-6));
    REQUIRE(res.w(1) == Catch::Approx(best_w).margin(1e-3));
    REQUIRE(res.objective_value == Catch::Approx(2.0).margin(1e-9));
    REQUIRE(res.w(0) == 1.0);
}

TEST_CASE("solve matches a dense two-dimensional grid oracle") {
    l1dl::SplitRng rng(7);
    for (int trial = 0; trial < 5; ++trial) {
        const SubproblemData data = random_problem(25, 3, 0, rng);
        Eigen::VectorXd w0(3);
        w0 << 1.0, 0.0, 0.0;
        const l1dl::SolveResult res = l1dl::solve(data, w0);
        REQUIRE(res.converged);

        double best = kInf;
        for (double a = -2.0; a <= 2.0; a += 1e-3) {
            for (double b = -2.0; b <= 2.0; b += 1e-3) {
                Eigen::VectorXd w(3);
                w << 1.0, a, b;
                best = std::min(best, l1dl::objective(data, w));
            }
        }
        REQUIRE(res.objective_value <= best + 1e-5);
    }
}

TEST_CASE("reference-dictionary subproblems are minimized at the basis vectors") {
    const int K = 20, s = 5, n = 5000;
    const double mu = 0.1;
    const auto ref = l1dl::constant_collinearity_dictionary(K, mu);
    const auto model = CoefficientModel::sparse_gaussian(s, K);
    const l1dl::SignalSet set = l1dl::make_signal_set(ref, model, n, kInf, 515);
    const Eigen::MatrixXd beta = set.signals * ref.inverse().transpose();
    const Eigen::MatrixXd gram = l1dl::collinearity(ref);
    for (int k = 0; k < K; ++k) {
        const SubproblemData data = l1dl::make_subproblem(beta, k, gram.row(k).transpose());
        Eigen::VectorXd w0 = Eigen::VectorXd::Zero(K);
        w0(k) = 1.0;
        const l1dl::SolveResult res = l1dl::solve(data, w0);
        REQUIRE(res.converged);
        Eigen::VectorXd diff = res.w;
        diff(k) -= 1.0;
        REQUIRE(diff.norm() < 1e-4);
    }
}

TEST_CASE("zero data returns the start point as optimal") {
    const Eigen::MatrixXd beta = Eigen::MatrixXd::Zero(4, 3);
    const SubproblemData data = l1dl::make_subproblem(beta, 2, Eigen::VectorXd::Zero(3));
    Eigen::VectorXd w0(3);
    w0 << 0.3, -0.2, 1.0;
    const l1dl::SolveResult res = l1dl::solve(data, w0);
    REQUIRE(res.converged);
    REQUIRE(res.w == w0);
    REQUIRE(res.objective_value == 0.0);
}

TEST_CASE("objective is convex along random chords") {
    l1dl::SplitRng rng(8);
    const SubproblemData data = random_problem(30, 5, 1, rng);
    for (int trial = 0; trial < 1000; ++trial) {
        Eigen::VectorXd a(4), b(4);
        for (int j = 0; j < 4; ++j) {
            a(j) = 3.0 * (rng.next_double() - 0.5);
            b(j) = 3.0 * (rng.next_double() - 0.5);
        }
        const double lam = rng.next_double();
        const Eigen::VectorXd wa = with_k(a, 1);
        const Eigen::VectorXd wb = with_k(b, 1);
        const Eigen::VectorXd wm = lam * wa + (1.0 - lam) * wb;
        REQUIRE(l1dl::objective(data, wm) <=
                lam * l1dl::objective(data, wa) + (1.0 - lam) * l1dl::objective(data, wb) + 1e-10);
    }
}

TEST_CASE("solution keeps the fixed coordinate exactly and tolerates max_iter") {
    l1dl::SplitRng rng(9);
    const SubproblemData data = random_problem(60, 6, 3, rng);
    Eigen::VectorXd w0 = Eigen::VectorXd::Zero(6);
    w0(3) = 1.0;
    l1dl::SolveOptions opt;
    opt.max_iter = 2;  // starved on purpose: best iterate returned, no throw
    const l1dl::SolveResult res = l1dl::solve(data, w0, opt);
    REQUIRE(res.w(3) == 1.0);
    REQUIRE(res.iterations <= 2);

    const l1dl::SolveResult full = l1dl::solve(data, w0);
    REQUIRE(full.converged);
    REQUIRE(full.w(3) == 1.0);
    REQUIRE(full.objective_value <= res.objective_value + 1e-12);
}

TEST_CASE("truncation masks both objective terms") {
    Eigen::MatrixXd beta(3, 2);
    beta << 0.2, 5.0,
            3.0, 0.1,
            0.3, 0.4;
    const double tau = 1.0;
    const SubproblemData data = l1dl::make_subproblem(beta, 0, Eigen::VectorXd::Zero(2), tau);
    // rows with |beta_k| >= tau drop from the data term
    REQUIRE(data.beta.rows() == 2);
    // weights sum |beta_h| over rows with |beta_h| < tau, independently per h
    REQUIRE(data.weights(0) == Catch::Approx(0.2 + 0.3).epsilon(1e-14));
    REQUIRE(data.weights(1) == Catch::Approx(0.1 + 0.4).epsilon(1e-14));
}
