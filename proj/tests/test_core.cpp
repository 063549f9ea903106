#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <numeric>
#include <vector>

#include "l1dl/csv.hpp"
#include "l1dl/dictionary.hpp"
#include "l1dl/hungarian.hpp"
#include "l1dl/rng.hpp"

using l1dl::Dictionary;
using l1dl::SplitRng;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

std::filesystem::path temp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("l1dl_core_" + name);
}

// Exhaustive minimum over all 2^K K! sign-permutations; the independent
// oracle for the assignment-based metric.
double nmse_bruteforce(const Eigen::MatrixXd& est, const Eigen::MatrixXd& ref) {
    const int K = static_cast<int>(ref.cols());
    std::vector<int> perm(static_cast<std::size_t>(K));
    std::iota(perm.begin(), perm.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
        for (unsigned mask = 0; mask < (1u << K); ++mask) {
            double total = 0.0;
            for (int j = 0; j < K; ++j) {
                const double sign = (mask >> j) & 1u ? -1.0 : 1.0;
                total += (sign * est.col(perm[static_cast<std::size_t>(j)]) - ref.col(j))
                             .squaredNorm();
            }
            best = std::min(best, total);
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best / K;
}

}  // namespace

TEST_CASE("splittable rng is deterministic and order independent") {
    SplitRng a(42), b(42);
    for (int i = 0; i < 100; ++i) REQUIRE(a.next_u64() == b.next_u64());

    SplitRng root(7);
    std::vector<double> forward, backward;
    for (int i = 0; i < 16; ++i) {
        SplitRng child = root.split(static_cast<std::uint64_t>(i));
        forward.push_back(child.next_gaussian());
    }
    for (int i = 15; i >= 0; --i) {
        SplitRng child = root.split(static_cast<std::uint64_t>(i));
        backward.push_back(child.next_gaussian());
    }
    std::reverse(backward.begin(), backward.end());
    REQUIRE(forward == backward);
}

TEST_CASE("rng moments are sane") {
    SplitRng rng(123);
    const int n = 200000;
    double mu = 0.0, mg = 0.0, vg = 0.0;
    for (int i = 0; i < n; ++i) {
        mu += rng.next_double();
        const double g = rng.next_gaussian();
        mg += g;
        vg += g * g;
    }
    mu /= n;
    mg /= n;
    vg /= n;
    REQUIRE(std::abs(mu - 0.5) < 4.0 / std::sqrt(12.0 * n));
    REQUIRE(std::abs(mg) < 4.0 / std::sqrt(static_cast<double>(n)));
    REQUIRE(std::abs(vg - 1.0) < 4.0 * std::sqrt(2.0 / n));
}

TEST_CASE("g17 formatting round-trips doubles") {
    for (double v : {0.1, 1.0 / 3.0, 1e-300, -2.5e17, 101.0, std::numbers::pi}) {
        REQUIRE(l1dl::parse_double(l1dl::format_g17(v)) == v);
    }
}

TEST_CASE("hungarian solves small assignments exactly") {
    Eigen::MatrixXd cost(3, 3);
    cost << 4, 1, 3,
            2, 0, 5,
            3, 2, 2;
    const auto a = l1dl::solve_assignment(cost);
    double total = 0.0;
    for (int i = 0; i < 3; ++i) total += cost(i, a[static_cast<std::size_t>(i)]);
    // brute force over 3! permutations
    std::vector<int> perm{0, 1, 2};
    double best = 1e18;
    do {
        double t = 0.0;
        for (int i = 0; i < 3; ++i) t += cost(i, perm[static_cast<std::size_t>(i)]);
        best = std::min(best, t);
    } while (std::next_permutation(perm.begin(), perm.end()));
    REQUIRE(total == Catch::Approx(best).margin(1e-12));
}

TEST_CASE("make_dictionary normalizes and validates") {
    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(4, 4);
    const Dictionary d = l1dl::make_dictionary(eye);
    REQUIRE(d.matrix() == eye);

    // scaling columns changes nothing
    Eigen::MatrixXd scaled = 5.0 * eye;
    const Dictionary d2 = l1dl::make_dictionary(scaled);
    REQUIRE((d2.matrix() - eye).norm() == 0.0);

    // idempotence on an already-feasible matrix
    const Dictionary g = l1dl::random_gaussian_dictionary(6, 3);
    const Dictionary g2 = l1dl::make_dictionary(g.matrix());
    REQUIRE((g.matrix() - g2.matrix()).norm() == 0.0);

    Eigen::MatrixXd dup = Eigen::MatrixXd::Random(3, 3);
    dup.col(1) = dup.col(0);
    REQUIRE_THROWS_AS(l1dl::make_dictionary(dup), l1dl::RankError);

    Eigen::MatrixXd zero_col = Eigen::MatrixXd::Identity(3, 3);
    zero_col.col(2).setZero();
    REQUIRE_THROWS_AS(l1dl::make_dictionary(zero_col), l1dl::NormalizationError);
}

TEST_CASE("cached inverse is accurate") {
    for (std::uint64_t seed : {1, 2, 3}) {
        const Dictionary d = l1dl::random_gaussian_dictionary(20, seed);
        const double err = (d.matrix() * d.inverse() - Eigen::MatrixXd::Identity(20, 20)).norm();
        REQUIRE(err < 1e-8 * 20);
    }
}

TEST_CASE("constant collinearity dictionary squares back to its gram") {
    const Dictionary id4 = l1dl::constant_collinearity_dictionary(4, 0.0);
    REQUIRE((id4.matrix() - Eigen::MatrixXd::Identity(4, 4)).norm() < 1e-14);

    const Dictionary d2 = l1dl::constant_collinearity_dictionary(2, 0.5);
    Eigen::MatrixXd gram2(2, 2);
    gram2 << 1.0, 0.5, 0.5, 1.0;
    REQUIRE((d2.matrix().transpose() * d2.matrix() - gram2).cwiseAbs().maxCoeff() < 1e-12);

    // spectral norm^2 equals the top Gram eigenvalue 1 + mu (K-1)
    const Dictionary d20 = l1dl::constant_collinearity_dictionary(20, 0.5);
    REQUIRE(d20.spectral_norm_sq() == Catch::Approx(1.0 + 0.5 * 19).epsilon(1e-12));

    // symmetric PSD square root
    for (double mu : {-0.04, 0.1, 0.3, 0.9}) {
        const Dictionary d = l1dl::constant_collinearity_dictionary(8, mu);
        REQUIRE((d.matrix() - d.matrix().transpose()).norm() < 1e-12);
        Eigen::MatrixXd gram = (1.0 - mu) * Eigen::MatrixXd::Identity(8, 8) +
                               mu * Eigen::MatrixXd::Ones(8, 8);
        REQUIRE((d.matrix() * d.matrix() - gram).cwiseAbs().maxCoeff() < 1e-10);
    }

    REQUIRE_THROWS_AS(l1dl::constant_collinearity_dictionary(4, 1.0), l1dl::ParameterError);
    REQUIRE_THROWS_AS(l1dl::constant_collinearity_dictionary(4, -0.4), l1dl::ParameterError);
}

TEST_CASE("random gaussian dictionaries are feasible and deterministic") {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const Dictionary d = l1dl::random_gaussian_dictionary(20, seed);
        for (int j = 0; j < 20; ++j)
            REQUIRE(std::abs(d.matrix().col(j).norm() - 1.0) < 1e-12);
        REQUIRE(l1dl::max_coherence(d) < 1.0);
    }
    const Dictionary a = l1dl::random_gaussian_dictionary(12, 99);
    const Dictionary b = l1dl::random_gaussian_dictionary(12, 99);
    REQUIRE(a.matrix() == b.matrix());
}

TEST_CASE("collinearity and coherence") {
    const Dictionary id = l1dl::make_dictionary(Eigen::MatrixXd::Identity(5, 5));
    REQUIRE((l1dl::collinearity(id) - Eigen::MatrixXd::Identity(5, 5)).norm() == 0.0);
    REQUIRE(l1dl::max_coherence(id) == 0.0);

    const Dictionary c = l1dl::constant_collinearity_dictionary(6, 0.3);
    const Eigen::MatrixXd m = l1dl::collinearity(c);
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j)
            REQUIRE(std::abs(m(i, j) - (i == j ? 1.0 : 0.3)) < 1e-10);

    const double theta = 0.7;
    Eigen::MatrixXd two(2, 2);
    two << 1.0, std::cos(theta), 0.0, std::sin(theta);
    REQUIRE(l1dl::max_coherence(l1dl::make_dictionary(two)) ==
            Catch::Approx(std::abs(std::cos(theta))).epsilon(1e-12));
}

TEST_CASE("nmse matches the exhaustive oracle") {
    SplitRng rng(404);
    for (int trial = 0; trial < 20; ++trial) {
        const int K = 2 + static_cast<int>(rng.next_below(3));  // 2..4
        const Dictionary est = l1dl::random_gaussian_dictionary(
            K, rng.next_u64());
        const Dictionary ref = l1dl::random_gaussian_dictionary(K, rng.next_u64());
        const double fast = l1dl::nmse(est, ref);
        const double slow = nmse_bruteforce(est.matrix(), ref.matrix());
        REQUIRE(fast == Catch::Approx(slow).margin(1e-12));
    }
}

TEST_CASE("nmse vanishes on the ambiguity class and is symmetric") {
    const Dictionary d = l1dl::random_gaussian_dictionary(6, 11);
    REQUIRE(l1dl::nmse(d, d) == Catch::Approx(0.0).margin(1e-12));

    Eigen::MatrixXd shuffled(6, 6);
    const int perm[6] = {3, 0, 5, 1, 4, 2};
    for (int j = 0; j < 6; ++j)
        shuffled.col(j) = (j % 2 ? -1.0 : 1.0) * d.matrix().col(perm[j]);
    REQUIRE(l1dl::nmse(l1dl::make_dictionary(shuffled), d) == Catch::Approx(0.0).margin(1e-12));

    const Dictionary e = l1dl::random_gaussian_dictionary(6, 12);
    REQUIRE(l1dl::nmse(d, e) == Catch::Approx(l1dl::nmse(e, d)).epsilon(1e-12));

    const Dictionary f = l1dl::random_gaussian_dictionary(7, 1);
    REQUIRE_THROWS_AS(l1dl::nmse(d, f), l1dl::ShapeError);
}

TEST_CASE("dictionary csv round-trips bit-exactly") {
    const Dictionary d = l1dl::random_gaussian_dictionary(9, 2024);
    const auto path = temp_file("dict.csv");
    l1dl::save_dictionary_csv(path.string(), d);
    const Dictionary loaded = l1dl::load_dictionary_csv(path.string());
    REQUIRE(loaded.matrix() == d.matrix());

    const auto path2 = temp_file("dict2.csv");
    l1dl::save_dictionary_csv(path2.string(), loaded);
    REQUIRE(slurp(path.string()) == slurp(path2.string()));
    std::filesystem::remove(path);
    std::filesystem::remove(path2);
}
