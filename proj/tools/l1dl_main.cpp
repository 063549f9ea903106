// Command-line harness: data generation, sharpness testing, DL-BCD recovery
// and the simulation grids, emitting plot-ready CSV/JSON tables.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "l1dl/l1dl.hpp"

namespace {

struct CommonOpts {
    std::uint64_t seed = 1;
    std::string out = "-";
    std::string format = "csv";
    int threads = 0;  // 0: hardware concurrency
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--seed", opts.seed, "Master seed for the trial fan-out");
    cmd->add_option("--out", opts.out, "Output path ('-' for stdout)");
    cmd->add_option("--format", opts.format, "Output format")
        ->check(CLI::IsMember({"csv", "json"}));
    cmd->add_option("--threads", opts.threads, "Worker threads (0 = all cores)");
}

int resolved_threads(const CommonOpts& opts) {
    return opts.threads > 0 ? opts.threads : l1dl::default_thread_count();
}

void emit(const CommonOpts& opts, const std::string& text) {
    if (opts.out == "-")
        std::cout << text;
    else
        l1dl::write_text_file(opts.out, text);
}

std::string render(const CommonOpts& opts, const l1dl::Table& table,
                   const nlohmann::ordered_json* summary = nullptr) {
    if (opts.format == "csv") return table.to_csv();
    nlohmann::ordered_json doc = l1dl::table_to_json(table);
    if (summary) doc["summary"] = *summary;
    return doc.dump(2) + "\n";
}

double parse_snr(const std::string& text) {
    if (text == "inf" || text == "INF" || text == "Inf") return std::numeric_limits<double>::infinity();
    return l1dl::parse_double(text);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"l1-minimization complete dictionary learning toolkit"};
    app.require_subcommand(1);

    // ---- sharpness: rho-sensitivity grid -------------------------------
    CommonOpts sharp_opts;
    l1dl::SharpnessGridParams sharp_params;
    std::string sharp_snr = "inf";
    double sharp_mu_offset = std::numeric_limits<double>::quiet_NaN();
    auto* sharp_cmd = app.add_subcommand(
        "sharpness", "Perturbation test over a rho grid for a constant-collinearity setup");
    add_common(sharp_cmd, sharp_opts);
    sharp_cmd->add_option("--K", sharp_params.K, "Dictionary dimension");
    sharp_cmd->add_option("--s", sharp_params.s, "Sparsity of the SG coefficients");
    sharp_cmd->add_option("--n", sharp_params.n, "Sample count");
    sharp_cmd->add_option("--mu", sharp_params.mu, "Reference coherence");
    sharp_cmd->add_option("--mu-offset", sharp_mu_offset,
                          "Set mu = ((K-s)/(K-1) + offset)/sqrt(s) instead of --mu");
    sharp_cmd->add_option("--rho", sharp_params.rho_grid, "Perturbation levels (repeatable)");
    sharp_cmd->add_option("--seeds", sharp_params.seeds, "Trials per rho");
    sharp_cmd->add_option("--T", sharp_params.threshold, "Sharpness threshold");
    sharp_cmd->add_option("--snr", sharp_snr, "Signal-to-noise ratio or 'inf'");

    // ---- sample-size ----------------------------------------------------
    CommonOpts size_opts;
    l1dl::SampleSizeParams size_params;
    auto* size_cmd = app.add_subcommand(
        "sample-size", "Sharpness success rate vs sample size with a logistic fit");
    add_common(size_cmd, size_opts);
    size_cmd->add_option("--K", size_params.K_grid, "Dimensions (repeatable)");
    size_cmd->add_option("--n", size_params.n_grid, "Sample sizes (repeatable)");
    size_cmd->add_option("--s", size_params.s, "Sparsity");
    size_cmd->add_option("--mu", size_params.mu, "Reference coherence");
    size_cmd->add_option("--rho", size_params.rho, "Perturbation level");
    size_cmd->add_option("--T", size_params.threshold, "Sharpness threshold");
    size_cmd->add_option("--seeds", size_params.seeds, "Trials per cell");

    // ---- phase-diagram ---------------------------------------------------
    CommonOpts phase_opts;
    l1dl::PhaseDiagramParams phase_params;
    auto* phase_cmd = app.add_subcommand(
        "phase-diagram", "DL-BCD recovery rate over a (K, s) grid");
    add_common(phase_cmd, phase_opts);
    phase_cmd->add_option("--K", phase_params.K_grid, "Dimensions (repeatable)");
    phase_cmd->add_option("--s", phase_params.s_grid, "Sparsities (default 2..K)");
    phase_cmd->add_option("--tau", phase_params.cell.tau, "Truncation threshold");
    phase_cmd->add_option("--seeds", phase_params.cell.seeds, "Trials per cell");
    phase_cmd->add_option("--snr", phase_params.cell.snr, "Signal-to-noise ratio");
    phase_cmd->add_option("--n", phase_params.cell.n, "Samples per trial (0 = 100K)");
    phase_cmd->add_option("--restarts", phase_params.cell.restarts,
                          "Random inits per trial; best objective wins");
    phase_cmd->add_option("--nmse-threshold", phase_params.cell.nmse_threshold,
                          "Success threshold on NMSE");

    // ---- timing ----------------------------------------------------------
    CommonOpts timing_opts;
    l1dl::TimingParams timing_params;
    auto* timing_cmd = app.add_subcommand(
        "timing", "Wall-clock scaling of the sharpness test in n and K");
    add_common(timing_cmd, timing_opts);
    timing_cmd->add_option("--K-fixed", timing_params.K_fixed, "Dimension for the n sweep");
    timing_cmd->add_option("--n", timing_params.n_grid, "Sample sizes (repeatable)");
    timing_cmd->add_option("--n-fixed", timing_params.n_fixed, "Sample count for the K sweep");
    timing_cmd->add_option("--K", timing_params.K_grid, "Dimensions (repeatable)");
    timing_cmd->add_option("--mu", timing_params.mu, "Reference coherence");
    timing_cmd->add_option("--p", timing_params.p, "Bernoulli-Gaussian activation probability");
    timing_cmd->add_option("--repeats", timing_params.repeats, "Repetitions (median)");

    // ---- counterexample ---------------------------------------------------
    CommonOpts ce_opts;
    l1dl::CounterexampleParams ce_params;
    auto* ce_cmd = app.add_subcommand(
        "counterexample", "2-D objective surface for the mixture model");
    add_common(ce_cmd, ce_opts);
    ce_cmd->add_option("--n", ce_params.n, "Sample count");
    ce_cmd->add_option("--grid", ce_params.grid, "Angular resolution over [0, pi)");
    ce_cmd->add_option("--rho", ce_params.rho, "Perturbation level for the reference test");
    ce_cmd->add_option("--T", ce_params.threshold, "Sharpness threshold");

    // ---- recover -----------------------------------------------------------
    CommonOpts rec_opts;
    struct {
        int K = 10, s = 3, n = 0;
        std::string snr = "100";
        double tau = std::numeric_limits<double>::infinity();
        std::string tau_text = "inf";
        std::string init = "random";
        std::string signals_path;
        std::string dict_out;
        int max_sweeps = 100;
    } rec;
    auto* rec_cmd = app.add_subcommand("recover", "Single DL-BCD run");
    add_common(rec_cmd, rec_opts);
    rec_cmd->add_option("--K", rec.K, "Dimension (generated data)");
    rec_cmd->add_option("--s", rec.s, "Sparsity (generated data)");
    rec_cmd->add_option("--n", rec.n, "Sample count (0 = 100K)");
    rec_cmd->add_option("--snr", rec.snr, "Signal-to-noise ratio or 'inf'");
    rec_cmd->add_option("--tau", rec.tau_text, "Truncation threshold or 'inf'");
    rec_cmd->add_option("--init", rec.init, "Initialization")
        ->check(CLI::IsMember({"random", "data"}));
    rec_cmd->add_option("--signals", rec.signals_path,
                        "Load signals from CSV instead of generating");
    rec_cmd->add_option("--dict-out", rec.dict_out, "Write the final dictionary CSV here");
    rec_cmd->add_option("--max-sweeps", rec.max_sweeps, "Sweep cap");

    // ---- test-dict -----------------------------------------------------------
    CommonOpts td_opts;
    struct {
        std::string dict_path;
        std::string signals_path;
        double rho = 0.01;
        double threshold = 1e-6;
    } td;
    auto* td_cmd = app.add_subcommand("test-dict",
                                      "Sharpness test on a user-supplied dictionary");
    add_common(td_cmd, td_opts);
    td_cmd->add_option("--dict", td.dict_path, "Dictionary CSV (K x K)")->required();
    td_cmd->add_option("--signals", td.signals_path, "Signals CSV (one per row)")->required();
    td_cmd->add_option("--rho", td.rho, "Perturbation level");
    td_cmd->add_option("--T", td.threshold, "Sharpness threshold");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (sharp_cmd->parsed()) {
            sharp_params.master_seed = sharp_opts.seed;
            sharp_params.threads = resolved_threads(sharp_opts);
            sharp_params.snr = parse_snr(sharp_snr);
            if (!std::isnan(sharp_mu_offset))
                sharp_params.mu = (static_cast<double>(sharp_params.K - sharp_params.s) /
                                       (sharp_params.K - 1) +
                                   sharp_mu_offset) /
                                  std::sqrt(static_cast<double>(sharp_params.s));
            const auto rows = l1dl::run_sharpness_grid(sharp_params);
            emit(sharp_opts, render(sharp_opts, l1dl::sharpness_rows_to_table(rows)));
        } else if (size_cmd->parsed()) {
            size_params.master_seed = size_opts.seed;
            size_params.threads = resolved_threads(size_opts);
            const auto result = l1dl::run_sample_size(size_params);
            nlohmann::ordered_json fits = l1dl::table_to_json(l1dl::sample_size_fits_to_table(result));
            if (size_opts.format == "csv") {
                emit(size_opts, l1dl::sample_size_cells_to_table(result).to_csv());
                if (size_opts.out != "-")
                    l1dl::write_text_file(size_opts.out + ".fits.csv",
                                          l1dl::sample_size_fits_to_table(result).to_csv());
                else
                    std::cout << l1dl::sample_size_fits_to_table(result).to_csv();
            } else {
                emit(size_opts,
                     render(size_opts, l1dl::sample_size_cells_to_table(result), &fits));
            }
        } else if (phase_cmd->parsed()) {
            phase_params.cell.master_seed = phase_opts.seed;
            phase_params.cell.threads = resolved_threads(phase_opts);
            const auto cells = l1dl::run_phase_diagram(phase_params);
            emit(phase_opts,
                 render(phase_opts, l1dl::phase_diagram_to_table(cells, phase_params.cell.tau)));
        } else if (timing_cmd->parsed()) {
            timing_params.master_seed = timing_opts.seed;
            const auto result = l1dl::run_timing(timing_params);
            nlohmann::ordered_json summary;
            summary["slope_n"] = result.has_slope_n ? nlohmann::ordered_json(result.slope_n)
                                                    : nlohmann::ordered_json(nullptr);
            summary["slope_K"] = result.has_slope_K ? nlohmann::ordered_json(result.slope_K)
                                                    : nlohmann::ordered_json(nullptr);
            if (timing_opts.format == "csv") {
                emit(timing_opts, l1dl::timing_to_table(result).to_csv());
                std::cerr << summary.dump() << "\n";
            } else {
                emit(timing_opts, render(timing_opts, l1dl::timing_to_table(result), &summary));
            }
        } else if (ce_cmd->parsed()) {
            ce_params.master_seed = ce_opts.seed;
            ce_params.threads = resolved_threads(ce_opts);
            const auto result = l1dl::run_counterexample(ce_params);
            const nlohmann::ordered_json summary = l1dl::counterexample_summary_json(result);
            if (ce_opts.format == "csv") {
                if (ce_opts.out == "-")
                    throw l1dl::ParameterError("counterexample in csv mode needs --out");
                l1dl::write_text_file(ce_opts.out,
                                      l1dl::counterexample_surface_to_table(result).to_csv());
                l1dl::write_text_file(ce_opts.out + ".slice.csv",
                                      l1dl::counterexample_slice_to_table(result).to_csv());
                l1dl::write_text_file(ce_opts.out + ".summary.json", summary.dump(2) + "\n");
                std::cout << summary.dump(2) << "\n";
            } else {
                nlohmann::ordered_json doc;
                doc["summary"] = summary;
                doc["surface"] = l1dl::table_to_json(l1dl::counterexample_surface_to_table(result));
                doc["slice"] = l1dl::table_to_json(l1dl::counterexample_slice_to_table(result));
                emit(ce_opts, doc.dump(2) + "\n");
            }
        } else if (rec_cmd->parsed()) {
            l1dl::BcdConfig cfg;
            cfg.tau = rec.tau_text == "inf" ? std::numeric_limits<double>::infinity()
                                            : l1dl::parse_double(rec.tau_text);
            cfg.max_sweeps = rec.max_sweeps;
            cfg.seed = rec_opts.seed;
            cfg.init = rec.init == "data" ? l1dl::BcdInit::data_columns
                                          : l1dl::BcdInit::random_gaussian;
            Eigen::MatrixXd signals;
            std::optional<l1dl::Dictionary> reference;
            if (!rec.signals_path.empty()) {
                signals = l1dl::read_matrix_csv(rec.signals_path);
            } else {
                const int n = rec.n > 0 ? rec.n : 100 * rec.K;
                const l1dl::Dictionary ref =
                    l1dl::random_gaussian_dictionary(rec.K, l1dl::mix64(rec_opts.seed ^ 0xD1C7ull));
                const auto model = l1dl::CoefficientModel::sparse_gaussian(rec.s, rec.K);
                signals = l1dl::make_signal_set(ref, model, n, parse_snr(rec.snr),
                                                l1dl::mix64(rec_opts.seed ^ 0xDA7Aull))
                              .signals;
                reference = ref;
            }
            const l1dl::BcdResult result = l1dl::bcd_run(signals, cfg, std::nullopt, reference);
            l1dl::Table trace({"sweep", "objective", "nmse"});
            for (std::size_t i = 0; i < result.trace.objective_per_sweep.size(); ++i) {
                const double e = i < result.trace.nmse_per_sweep.size()
                                     ? result.trace.nmse_per_sweep[i]
                                     : std::numeric_limits<double>::quiet_NaN();
                trace.add_row({std::to_string(i + 1),
                               l1dl::format_g17(result.trace.objective_per_sweep[i]),
                               l1dl::format_g17(e)});
            }
            nlohmann::ordered_json summary;
            summary["ok"] = result.ok;
            summary["sweeps"] = result.trace.sweeps_run;
            if (!result.trace.objective_per_sweep.empty())
                summary["final_objective"] = result.trace.objective_per_sweep.back();
            if (!result.trace.nmse_per_sweep.empty())
                summary["final_nmse"] = result.trace.nmse_per_sweep.back();
            if (!result.trace.message.empty()) summary["message"] = result.trace.message;
            emit(rec_opts, render(rec_opts, trace, &summary));
            if (rec_opts.format == "csv") std::cerr << summary.dump() << "\n";
            if (!rec.dict_out.empty())
                l1dl::save_dictionary_csv(rec.dict_out, result.dictionary);
            if (!result.ok) return 1;
        } else if (td_cmd->parsed()) {
            const l1dl::Dictionary dict = l1dl::load_dictionary_csv(td.dict_path);
            const Eigen::MatrixXd signals = l1dl::read_matrix_csv(td.signals_path);
            l1dl::SharpTestConfig cfg;
            cfg.rho = td.rho;
            cfg.threshold = td.threshold;
            cfg.seed = td_opts.seed;
            cfg.threads = resolved_threads(td_opts);
            const l1dl::SharpTestReport report = l1dl::sharp_test(dict, signals, cfg);
            emit(td_opts, l1dl::sharp_report_to_json(report, cfg).dump(2) + "\n");
            if (!report.converged) return 1;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
