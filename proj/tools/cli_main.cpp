#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "penlik/errors.hpp"
#include "penlik/inference.hpp"
#include "penlik/model.hpp"
#include "penlik/optimizer.hpp"
#include "penlik/penalty.hpp"
#include "penlik/sim.hpp"
#include "penlik/tuning.hpp"

namespace {

using ordered_json = nlohmann::ordered_json;

struct Options {
    std::string input;
    std::string output;
    std::string response;
    bool no_header = false;
    std::string penalty = "scad";
    double lambda = 0.0;
    double a = 3.7;
    double q = 1.0;
    double sigma2 = 1.0;
    double gamma = 1.0;
    int grid_points = 50;
    int max_iter = 200;
    double tol = 1e-8;
    double drop_threshold = 0.0;  // 0 = library default
    std::string init = "ols";
    double ridge_epsilon = 1e-6;
    bool per_covariate = false;
    std::string zero_list;
    std::string experiment = "table";
    int n = 400;
    int replicates = 100;
    std::uint64_t seed = 0;
    double noise_sd = 1.0;
    int burn_in = 500;
    double zero_tolerance = 1e-2;
    int threads = 1;
    int bins = 30;
    std::string format = "json";
};

std::string fmt9(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

void write_output(const std::string& path, const std::string& content) {
    if (path.empty()) {
        std::cout << content;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw penlik::input_error("cannot open output file: " + path);
    out << content;
}

penlik::PenaltySpec penalty_family(const Options& o) {
    penlik::PenaltySpec spec;
    spec.kind = penlik::penalty_kind_from_string(o.penalty);
    spec.lambda = o.lambda;
    spec.a = o.a;
    spec.q = o.q;
    penlik::validate(spec);
    return spec;
}

penlik::FitConfig fit_config(const Options& o) {
    penlik::FitConfig cfg;
    cfg.max_iterations = o.max_iter;
    cfg.convergence_tol = o.tol;
    if (o.drop_threshold > 0.0) cfg.drop_threshold = o.drop_threshold;
    cfg.ridge_epsilon = o.ridge_epsilon;
    if (o.init == "ols")
        cfg.init = penlik::InitKind::OLS;
    else if (o.init == "ridge")
        cfg.init = penlik::InitKind::Ridge;
    else if (o.init == "zeros")
        cfg.init = penlik::InitKind::Zeros;
    else
        throw penlik::input_error("unknown init '" + o.init + "' (expected ols, ridge, or zeros)");
    return cfg;
}

std::vector<std::string> effective_names(const penlik::Dataset& data) {
    if (!data.column_names.empty()) return data.column_names;
    std::vector<std::string> names;
    names.reserve(data.p());
    for (int j = 1; j <= data.p(); ++j) names.push_back("beta" + std::to_string(j));
    return names;
}

// OLS standard errors sqrt(sigma2_ols * (X^T X)^-1_jj), used for the optional
// per-covariate penalty scaling.
Eigen::VectorXd ols_standard_errors(const penlik::GaussianModel& model) {
    const Eigen::MatrixXd& X = model.data.design;
    const int n = model.data.n();
    const int p = model.data.p();
    if (n <= p) throw penlik::input_error("per-covariate scaling needs n > p");
    Eigen::LDLT<Eigen::MatrixXd> ldlt(X.transpose() * X);
    const Eigen::MatrixXd inv = ldlt.solve(Eigen::MatrixXd::Identity(p, p));
    if (ldlt.info() != Eigen::Success || !inv.allFinite())
        throw penlik::numeric_error("per-covariate scaling: singular design");
    const Eigen::VectorXd beta = ldlt.solve(X.transpose() * model.data.response);
    const double rss = (model.data.response - X * beta).squaredNorm();
    const double sigma2 = rss / (n - p);
    return (sigma2 * inv.diagonal().array()).sqrt();
}

void apply_per_covariate(const Options& o, const penlik::GaussianModel& model,
                         penlik::FitConfig& cfg, double base_lambda) {
    if (!o.per_covariate) return;
    cfg.per_coordinate_lambdas =
        penlik::per_covariate_lambdas(base_lambda, ols_standard_errors(model));
}

std::vector<int> resolve_indices(const std::string& list, const std::vector<std::string>& names) {
    std::vector<int> idx;
    std::stringstream ss(list);
    std::string token;
    while (std::getline(ss, token, ',')) {
        const auto begin = token.find_first_not_of(" \t");
        if (begin == std::string::npos) continue;
        token = token.substr(begin, token.find_last_not_of(" \t") - begin + 1);
        const auto it = std::find(names.begin(), names.end(), token);
        if (it != names.end()) {
            idx.push_back(static_cast<int>(it - names.begin()));
            continue;
        }
        char* end = nullptr;
        const long v = std::strtol(token.c_str(), &end, 10);
        if (end != token.c_str() && *end == '\0' && v >= 1 &&
            v <= static_cast<long>(names.size())) {
            idx.push_back(static_cast<int>(v - 1));
            continue;
        }
        throw penlik::input_error("unknown coefficient '" + token + "'");
    }
    std::sort(idx.begin(), idx.end());
    idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
    if (idx.empty()) throw penlik::input_error("--zero needs at least one coefficient");
    return idx;
}

ordered_json penalty_json(const penlik::PenaltySpec& spec) {
    ordered_json j;
    j["kind"] = penlik::to_string(spec.kind);
    j["lambda"] = spec.lambda;
    if (spec.kind == penlik::PenaltyKind::Scad) j["a"] = spec.a;
    if (spec.kind == penlik::PenaltyKind::Lq) j["q"] = spec.q;
    return j;
}

int run_fit(const Options& o) {
    const penlik::Dataset data = penlik::read_csv_file(o.input, !o.no_header, o.response);
    const penlik::GaussianModel model(data, o.sigma2);
    const penlik::PenaltySpec family = penalty_family(o);
    penlik::FitConfig cfg = fit_config(o);
    apply_per_covariate(o, model, cfg, o.lambda);

    const penlik::FitResult fit = penlik::fit_penalized(model, family, cfg);
    const std::vector<std::string> names = effective_names(data);

    ordered_json j;
    j["command"] = "fit";
    j["input"] = o.input;
    j["penalty"] = penalty_json(family);
    j["converged"] = fit.converged;
    j["iterations"] = fit.iterations;
    j["objective"] = fit.objective;
    j["stationarity_residual"] = fit.stationarity_residual;
    ordered_json coef;
    for (int k = 0; k < data.p(); ++k) coef[names[k]] = fit.beta[k];
    j["coefficients"] = coef;
    ordered_json active = ordered_json::array();
    for (int k : fit.active_set) active.push_back(names[k]);
    j["active_set"] = active;
    ordered_json ses = ordered_json::object();
    if (!fit.active_set.empty()) {
        const penlik::CovarianceEstimate cov = penlik::sandwich_covariance(model, fit, family);
        for (std::size_t c = 0; c < cov.active_indices.size(); ++c)
            ses[names[cov.active_indices[c]]] = cov.standard_errors[c];
        j["sigma2_hat"] = cov.sigma2_hat;
    }
    j["standard_errors"] = ses;
    write_output(o.output, j.dump(2) + "\n");
    return 0;
}

int run_gcv(const Options& o) {
    const penlik::Dataset data = penlik::read_csv_file(o.input, !o.no_header, o.response);
    const penlik::GaussianModel model(data, o.sigma2);
    const penlik::PenaltySpec family = penalty_family(o);
    penlik::FitConfig cfg = fit_config(o);
    apply_per_covariate(o, model, cfg, 1.0);  // multipliers; the scan scales by lambda

    const std::vector<double> grid = penlik::default_lambda_grid(model, o.grid_points);
    const penlik::GcvScan scan = penlik::gcv_scan(model, family, grid, o.gamma, cfg);

    std::string csv = "lambda,gcv,effective_df,rss\n";
    for (const penlik::GcvResult& point : scan.profile)
        csv += fmt9(point.lambda) + "," + fmt9(point.gcv) + "," + fmt9(point.effective_df) + "," +
               fmt9(point.rss) + "\n";
    csv += "# chosen_lambda " + fmt9(scan.best.lambda) + "\n";
    write_output(o.output, csv);
    return 0;
}

int run_test(const Options& o) {
    const penlik::Dataset data = penlik::read_csv_file(o.input, !o.no_header, o.response);
    const penlik::GaussianModel model(data, o.sigma2);
    const penlik::PenaltySpec family = penalty_family(o);
    penlik::FitConfig cfg = fit_config(o);
    apply_per_covariate(o, model, cfg, o.lambda);

    const std::vector<std::string> names = effective_names(data);
    const std::vector<int> zero_idx = resolve_indices(o.zero_list, names);
    Eigen::MatrixXd constraints = Eigen::MatrixXd::Zero(zero_idx.size(), data.p());
    for (std::size_t r = 0; r < zero_idx.size(); ++r) constraints(r, zero_idx[r]) = 1.0;

    const penlik::LrTestResult res = penlik::lr_test(model, family, constraints, cfg);

    ordered_json j;
    j["command"] = "test";
    j["input"] = o.input;
    j["penalty"] = penalty_json(family);
    ordered_json zeroed = ordered_json::array();
    for (int k : zero_idx) zeroed.push_back(names[k]);
    j["null_hypothesis_zeroes"] = zeroed;
    j["statistic"] = res.statistic;
    j["df"] = res.df;
    j["p_value"] = res.p_value;
    j["unconstrained_objective"] = res.unconstrained_objective;
    j["constrained_objective"] = res.constrained_objective;
    ordered_json ua = ordered_json::array(), ca = ordered_json::array();
    for (int k : res.unconstrained_active) ua.push_back(names[k]);
    for (int k : res.constrained_active) ca.push_back(names[k]);
    j["unconstrained_active"] = ua;
    j["constrained_active"] = ca;
    j["local_optimum_warning"] = res.local_optimum_warning;
    write_output(o.output, j.dump(2) + "\n");
    return 0;
}

int run_diag(const Options& o) {
    const penlik::Dataset data = penlik::read_csv_file(o.input, !o.no_header, o.response);
    const penlik::GaussianModel model(data, o.sigma2);
    const penlik::PenaltySpec family = penalty_family(o);
    penlik::FitConfig cfg = fit_config(o);
    apply_per_covariate(o, model, cfg, o.lambda);

    const penlik::FitResult fit = penlik::fit_penalized(model, family, cfg);
    std::vector<double> active_coeffs;
    for (int k : fit.active_set) active_coeffs.push_back(fit.beta[k]);
    const penlik::PenaltyDiagnostics diag = penlik::condition_diagnostics(family, active_coeffs);

    ordered_json j;
    j["command"] = "diag";
    j["input"] = o.input;
    j["penalty"] = penalty_json(family);
    j["active_count"] = fit.active_set.size();
    j["a_n"] = diag.a_n;
    j["b_n"] = diag.b_n;
    j["singular_at_origin"] = diag.singular_at_origin;
    j["lipschitz_ok"] = diag.lipschitz_ok;
    // +infinity (lambda = 0 case) is not representable in JSON; emit null.
    if (std::isfinite(diag.separation_ratio))
        j["separation_ratio"] = diag.separation_ratio;
    else
        j["separation_ratio"] = nullptr;
    j["empty_input"] = diag.empty_input;
    write_output(o.output, j.dump(2) + "\n");
    return 0;
}

int run_simulate(const Options& o) {
    const penlik::PenaltySpec family = penalty_family(o);
    if (o.experiment == "table") {
        penlik::ExperimentOptions opts;
        opts.noise_sd = o.noise_sd;
        opts.burn_in = o.burn_in;
        opts.zero_tolerance = o.zero_tolerance;
        opts.grid_points = o.grid_points;
        opts.threads = o.threads;
        opts.fit = fit_config(o);
        const penlik::SimulationReport report =
            penlik::run_table_experiment(o.n, o.replicates, family, o.gamma, o.seed, opts);
        write_output(o.output, o.format == "csv" ? penlik::to_table_csv(report)
                                                 : penlik::to_json_string(report));
        return 0;
    }
    if (o.experiment == "lr") {
        penlik::LrExperimentOptions opts;
        opts.noise_sd = o.noise_sd;
        opts.burn_in = o.burn_in;
        opts.lambda = o.lambda;
        opts.bins = o.bins;
        opts.threads = o.threads;
        opts.fit = fit_config(o);
        const penlik::LrNullReport report =
            penlik::run_lr_null_experiment(o.n, o.replicates, family, o.seed, opts);
        write_output(o.output, o.format == "csv" ? penlik::density_csv(report)
                                                 : penlik::to_json_string(report));
        return 0;
    }
    throw penlik::input_error("unknown experiment '" + o.experiment + "' (expected table or lr)");
}

void add_data_options(CLI::App* sub, Options& o) {
    sub->add_option("--input", o.input, "input CSV file")->required();
    sub->add_option("--response", o.response, "response column (header name or 1-based index)")
        ->required();
    sub->add_flag("--no-header", o.no_header, "treat the first CSV row as data");
    sub->add_option("--sigma2", o.sigma2, "noise variance of the Gaussian model (default 1)");
    sub->add_option("--output", o.output, "output path (default: stdout)");
}

void add_penalty_options(CLI::App* sub, Options& o) {
    sub->add_option("--penalty", o.penalty, "penalty kind: scad, hard, soft, lq (default scad)");
    sub->add_option("--lambda", o.lambda, "penalty level (default 0)");
    sub->add_option("--a", o.a, "scad shape parameter (default 3.7)");
    sub->add_option("--q", o.q, "lq exponent (default 1)");
}

void add_fit_options(CLI::App* sub, Options& o) {
    sub->add_option("--max-iter", o.max_iter, "iteration cap (default 200)");
    sub->add_option("--tol", o.tol, "convergence tolerance on max |delta beta| (default 1e-8)");
    sub->add_option("--drop-threshold", o.drop_threshold,
                    "coefficient magnitude treated as zero (default 1e-8 x sd(response))");
    sub->add_option("--init", o.init, "initialization: ols, ridge, zeros (default ols)");
    sub->add_option("--ridge-epsilon", o.ridge_epsilon, "ridge initialization level (default 1e-6)");
    sub->add_flag("--per-covariate", o.per_covariate,
                  "scale the penalty per coordinate by OLS standard errors");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Penalized-likelihood regression: fitting, tuning, testing, simulation"};
    app.require_subcommand(1);
    Options o;

    CLI::App* fit = app.add_subcommand("fit", "penalized fit with sandwich standard errors (JSON)");
    add_data_options(fit, o);
    add_penalty_options(fit, o);
    add_fit_options(fit, o);

    CLI::App* gcv = app.add_subcommand("gcv", "GCV profile over the default lambda grid (CSV)");
    add_data_options(gcv, o);
    add_penalty_options(gcv, o);
    add_fit_options(gcv, o);
    gcv->add_option("--gamma", o.gamma, "GCV df inflation factor (default 1)");
    gcv->add_option("--grid-points", o.grid_points, "lambda grid size (default 50)");

    CLI::App* test = app.add_subcommand("test", "penalized likelihood-ratio test (JSON)");
    add_data_options(test, o);
    add_penalty_options(test, o);
    add_fit_options(test, o);
    test->add_option("--zero", o.zero_list,
                     "comma-separated coefficients forced to zero under the null")
        ->required();

    CLI::App* diag = app.add_subcommand("diag", "penalty regularity diagnostics at the fit (JSON)");
    add_data_options(diag, o);
    add_penalty_options(diag, o);
    add_fit_options(diag, o);

    CLI::App* simulate = app.add_subcommand("simulate", "Monte Carlo study on the benchmark process");
    add_penalty_options(simulate, o);
    add_fit_options(simulate, o);
    simulate->add_option("--experiment", o.experiment, "table or lr (default table)");
    simulate->add_option("--n", o.n, "sample size (default 400)");
    simulate->add_option("--replicates", o.replicates, "Monte Carlo replicates (default 100)");
    simulate->add_option("--seed", o.seed, "base RNG seed")->envname("PENLIK_SEED");
    simulate->add_option("--gamma", o.gamma, "GCV df inflation factor (default 1)");
    simulate->add_option("--grid-points", o.grid_points, "lambda grid size (default 50)");
    simulate->add_option("--noise-sd", o.noise_sd, "innovation standard deviation (default 1)");
    simulate->add_option("--burn-in", o.burn_in, "discarded warmup samples (default 500)");
    simulate->add_option("--zero-tolerance", o.zero_tolerance,
                         "post-fit zeroization magnitude (default 1e-2)");
    simulate->add_option("--threads", o.threads, "worker threads (default 1)");
    simulate->add_option("--bins", o.bins, "density histogram bins for the lr experiment");
    simulate->add_option("--format", o.format, "json or csv (default json)");
    simulate->add_option("--output", o.output, "output path (default: stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        std::cerr << "error: input: " << e.what() << std::endl;
        return 1;
    }

    try {
        if (app.got_subcommand(fit)) return run_fit(o);
        if (app.got_subcommand(gcv)) return run_gcv(o);
        if (app.got_subcommand(test)) return run_test(o);
        if (app.got_subcommand(diag)) return run_diag(o);
        return run_simulate(o);
    } catch (const penlik::input_error& e) {
        std::cerr << "error: input: " << e.what() << std::endl;
        return 1;
    } catch (const penlik::numeric_error& e) {
        std::cerr << "error: numeric: " << e.what() << std::endl;
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: numeric: " << e.what() << std::endl;
        return 2;
    }
}
