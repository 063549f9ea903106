#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <vector>

#include <json.hpp>

#include "l1dl/dictionary.hpp"
#include "l1dl/errors.hpp"
#include "l1dl/parallel.hpp"
#include "l1dl/rng.hpp"
#include "l1dl/subproblem.hpp"

namespace l1dl {

struct SharpTestConfig {
    double rho = 0.01;
    double threshold = 1e-6;
    std::uint64_t seed = 0;
    double solver_tol = 1e-9;
    // Generous cap: BFGS can crawl along kink ridges on very small samples
    // before the stationarity certificate fires.
    int solver_max_iter = 2000;
    int threads = 1;

    void validate() const {
        if (!(rho > 0.0)) throw ParameterError("rho must be positive");
        if (!(threshold > 0.0)) throw ParameterError("threshold must be positive");
    }
};

struct SharpTestReport {
    bool is_sharp = false;  // meaningful only when converged
    double r = 0.0;         // max_k ||w^(k) - I_k||^2
    Eigen::VectorXd per_coordinate;
    Eigen::MatrixXd perturbed_gram;
    bool converged = true;  // false: some subproblem failed, verdict undefined
};

/// Gram matrix of the column-perturbed dictionary D~_j = D_j + eps_j with
/// eps_j Gaussian scaled so that E||eps_j||_2^2 = rho^2. Off-diagonals are
/// clamped to |.| <= 1 - 1e-9; the diagonal is set to 1 and never enters the
/// subproblems.
inline Eigen::MatrixXd perturb_gram(const Dictionary& dict, double rho, std::uint64_t seed) {
    if (!(rho > 0.0)) throw ParameterError("rho must be positive");
    const int K = dict.dim();
    const double scale = rho / std::sqrt(static_cast<double>(K));
    Eigen::MatrixXd perturbed = dict.matrix();
    SplitRng root(seed);
    for (int j = 0; j < K; ++j) {
        SplitRng rng = root.split(static_cast<std::uint64_t>(j));
        for (int i = 0; i < K; ++i) perturbed(i, j) += scale * rng.next_gaussian();
    }
    Eigen::MatrixXd gram = perturbed.transpose() * perturbed;
    gram = gram.cwiseMax(-kGramClamp).cwiseMin(kGramClamp);
    gram.diagonal().setOnes();
    return gram;
}

/// Collinearity perturbation test against an explicit Gram matrix. Solves
/// the K per-coordinate problems on beta = D^{-1} y and reports the largest
/// squared distance of a minimizer from the corresponding basis vector.
inline SharpTestReport sharp_test_with_gram(const Dictionary& dict,
                                            const Eigen::MatrixXd& signals,
                                            const Eigen::MatrixXd& gram,
                                            const SharpTestConfig& config) {
    config.validate();
    const int K = dict.dim();
    if (signals.cols() != K) throw ShapeError("signal dimension must match dictionary");
    if (gram.rows() != K || gram.cols() != K) throw ShapeError("gram must be K x K");

    const Eigen::MatrixXd beta = signals * dict.inverse().transpose();

    SharpTestReport report;
    report.perturbed_gram = gram;
    report.per_coordinate = Eigen::VectorXd::Zero(K);
    std::vector<char> ok(static_cast<std::size_t>(K), 0);

    SolveOptions opt;
    opt.tol = config.solver_tol;
    opt.max_iter = config.solver_max_iter;

    parallel_for(K, config.threads, [&](int k) {
        const SubproblemData data = make_subproblem(beta, k, gram.row(k).transpose());
        Eigen::VectorXd w0 = Eigen::VectorXd::Zero(K);
        w0(k) = 1.0;
        const SolveResult res = solve(data, w0, opt);
        Eigen::VectorXd diff = res.w;
        diff(k) -= 1.0;
        report.per_coordinate(k) = diff.squaredNorm();
        ok[static_cast<std::size_t>(k)] = res.converged ? 1 : 0;
    });

    report.r = report.per_coordinate.maxCoeff();
    report.converged = true;
    for (char c : ok) report.converged = report.converged && c;
    report.is_sharp = report.r < config.threshold;
    return report;
}

/// Algorithm: perturb the dictionary columns at scale rho, then run the
/// per-coordinate test above. Deterministic given (dict, signals, config).
inline SharpTestReport sharp_test(const Dictionary& dict, const Eigen::MatrixXd& signals,
                                  const SharpTestConfig& config) {
    config.validate();
    const Eigen::MatrixXd gram = perturb_gram(dict, config.rho, config.seed);
    return sharp_test_with_gram(dict, signals, gram, config);
}

inline nlohmann::ordered_json sharp_report_to_json(const SharpTestReport& report,
                                                   const SharpTestConfig& config) {
    nlohmann::ordered_json j;
    j["is_sharp"] = report.is_sharp;
    j["r"] = report.r;
    std::vector<double> pc(report.per_coordinate.data(),
                           report.per_coordinate.data() + report.per_coordinate.size());
    j["per_coordinate"] = pc;
    j["rho"] = config.rho;
    j["T"] = config.threshold;
    j["seed"] = config.seed;
    j["converged"] = report.converged;
    return j;
}

}  // namespace l1dl
