#include "penlik/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <numeric>
#include <thread>
#include <utility>

#include <json.hpp>

#include "penlik/errors.hpp"
#include "penlik/inference.hpp"
#include "penlik/rng.hpp"
#include "penlik/tuning.hpp"

namespace penlik {

namespace {

using ordered_json = nlohmann::ordered_json;

struct Rational {
    long long num = 0;
    long long den = 1;

    void reduce() {
        if (den < 0) {
            num = -num;
            den = -den;
        }
        const long long g = std::gcd(std::abs(num), den);
        if (g > 1) {
            num /= g;
            den /= g;
        }
    }
    Rational operator*(const Rational& o) const {
        Rational r{num * o.num, den * o.den};
        r.reduce();
        return r;
    }
    Rational operator+(const Rational& o) const {
        Rational r{num * o.den + o.num * den, den * o.den};
        r.reduce();
        return r;
    }
    double value() const { return static_cast<double>(num) / static_cast<double>(den); }
};

std::vector<Rational> poly_multiply(const std::vector<Rational>& a, const std::vector<Rational>& b) {
    std::vector<Rational> out(a.size() + b.size() - 1);
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j) out[i + j] = out[i + j] + a[i] * b[j];
    return out;
}

// Spectral radius of the recursion's companion matrix; the characteristic
// polynomial's root moduli are its reciprocals.
double companion_spectral_radius(const Eigen::VectorXd& coeffs) {
    const Eigen::Index m = coeffs.size();
    if (m == 0 || coeffs.isZero(0.0)) return 0.0;
    Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(m, m);
    companion.row(0) = coeffs.transpose();
    for (Eigen::Index i = 1; i < m; ++i) companion(i, i - 1) = 1.0;
    const Eigen::VectorXcd eigs = Eigen::EigenSolver<Eigen::MatrixXd>(companion, false).eigenvalues();
    return eigs.cwiseAbs().maxCoeff();
}

double median_of(std::vector<double> values) {
    if (values.empty()) throw numeric_error("median of empty sample");
    std::sort(values.begin(), values.end());
    const std::size_t m = values.size() / 2;
    return values.size() % 2 == 1 ? values[m] : 0.5 * (values[m - 1] + values[m]);
}

double population_sd_of(const std::vector<double>& values) {
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / values.size();
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return std::sqrt(ss / values.size());
}

std::string fmt9(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

std::vector<double> to_std(const Eigen::VectorXd& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
}

void run_strided(int total, int threads, const std::function<void(int)>& body) {
    if (threads <= 1) {
        for (int r = 0; r < total; ++r) body(r);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t)
        pool.emplace_back([&, t]() {
            for (int r = t; r < total; r += threads) body(r);
        });
    for (auto& th : pool) th.join();
}

}  // namespace

ArProcessSpec::ArProcessSpec()
    : ArProcessSpec(verify_ar_polynomial().coefficients, 1.0, 500, 0) {}

ArProcessSpec::ArProcessSpec(Eigen::VectorXd coeffs, double noise_sd_in, int burn_in_in,
                             std::uint64_t seed_in)
    : coefficients(std::move(coeffs)), noise_sd(noise_sd_in), burn_in(burn_in_in), seed(seed_in) {
    if (!(noise_sd > 0.0) || !std::isfinite(noise_sd))
        throw input_error("ar process: noise_sd must be positive and finite");
    if (burn_in < 0) throw input_error("ar process: burn_in must be nonnegative");
    if (!coefficients.allFinite()) throw input_error("ar process: coefficients must be finite");
    if (companion_spectral_radius(coefficients) >= 1.0)
        throw input_error("ar process: characteristic polynomial has a zero inside or on the unit circle");
}

PolynomialCheck verify_ar_polynomial() {
    // (1 - 3B/4) (1 - B + 2B^2/3)^2, expanded exactly.
    const std::vector<Rational> linear{{1, 1}, {-3, 4}};
    const std::vector<Rational> quad{{1, 1}, {-1, 1}, {2, 3}};
    const std::vector<Rational> expanded = poly_multiply(linear, poly_multiply(quad, quad));

    PolynomialCheck check;
    check.coefficients.resize(5);
    for (int k = 1; k <= 5; ++k) {
        Rational b{-expanded[k].num, expanded[k].den};  // 1 - sum b_k B^k
        b.reduce();
        check.numerators[k - 1] = b.num;
        check.denominators[k - 1] = b.den;
        check.coefficients[k - 1] = b.value();
    }
    // Root moduli straight from the factors. The companion eigensolver loses
    // half the significant digits on the repeated quadratic pair, so instead
    // use that a conjugate pair's common modulus is sqrt(constant / leading).
    const double linear_root = std::abs(
        static_cast<double>(linear[0].num * linear[1].den) /
        static_cast<double>(linear[0].den * linear[1].num));
    const double quad_modulus = std::sqrt(
        static_cast<double>(quad[0].num * quad[2].den) /
        static_cast<double>(quad[0].den * quad[2].num));
    check.min_root_modulus = std::min(linear_root, quad_modulus);
    return check;
}

int dimension_rule(int n) {
    if (n < 100) throw input_error("dimension_rule: sample size must be at least 100");
    const int p = static_cast<int>(std::floor(4.0 * std::pow(static_cast<double>(n), 0.25))) - 5;
    if (p < 6) throw input_error("dimension_rule: dimension must exceed the five true signals");
    return p;
}

Dataset simulate_ar(const ArProcessSpec& spec, int n, int p) {
    if (n < 1) throw input_error("simulate_ar: n must be positive");
    if (p < 5) throw input_error("simulate_ar: need at least five lags");
    const int m = static_cast<int>(spec.coefficients.size());
    const int total = spec.burn_in + n + p;
    NormalSampler normal(spec.seed);

    std::vector<double> w(total);
    for (int t = 0; t < total; ++t) {
        double value = spec.noise_sd * normal();
        for (int j = 1; j <= m && j <= t; ++j) value += spec.coefficients[j - 1] * w[t - j];
        w[t] = value;
    }

    Dataset data;
    data.design.resize(n, p);
    data.response.resize(n);
    const double* v = w.data() + spec.burn_in;
    for (int i = 0; i < n; ++i) {
        data.response[i] = v[p + i];
        for (int k = 0; k < p; ++k) data.design(i, k) = v[p + i - 1 - k];
    }
    data.column_names.reserve(p);
    for (int k = 1; k <= p; ++k) data.column_names.push_back("lag" + std::to_string(k));
    return data;
}

Eigen::MatrixXd population_gram(const ArProcessSpec& spec, int p) {
    if (p < 1) throw input_error("population_gram: p must be positive");
    const int m = static_cast<int>(spec.coefficients.size());
    const int K = std::max(p, m + 1);

    // Yule-Walker: gamma(k) - sum_j phi_j gamma(|k-j|) = sigma^2 * [k == 0].
    Eigen::MatrixXd system = Eigen::MatrixXd::Zero(K, K);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(K);
    for (int k = 0; k < K; ++k) {
        system(k, k) += 1.0;
        for (int j = 1; j <= m; ++j) system(k, std::abs(k - j)) -= spec.coefficients[j - 1];
        if (k == 0) rhs[k] = spec.noise_sd * spec.noise_sd;
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(system);
    if (!lu.isInvertible())
        throw numeric_error("population_gram: Yule-Walker system singular (non-stationary spec?)");
    const Eigen::VectorXd gamma = lu.solve(rhs);

    Eigen::MatrixXd gram(p, p);
    for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j) gram(i, j) = gamma[std::abs(i - j)];
    return gram;
}

double model_error(const Eigen::VectorXd& beta_hat, const Eigen::VectorXd& beta_true,
                   const Eigen::MatrixXd& gram) {
    if (beta_hat.size() != beta_true.size() || gram.rows() != beta_hat.size() ||
        gram.cols() != beta_hat.size())
        throw input_error("model_error: dimension mismatch");
    const Eigen::VectorXd d = beta_hat - beta_true;
    return std::max(0.0, d.dot(gram * d));
}

namespace {

struct TableOutcome {
    bool failed = true;
    Eigen::VectorXd beta;
    double rme_pls = 0.0;
    double rme_oracle = 0.0;
    double ratio_oracle_pls = 0.0;
    double lambda = 0.0;
    int correct_zeros = 0;
    int incorrect_zeros = 0;
    std::array<double, 5> se{};
};

}  // namespace

SimulationReport run_table_experiment(int n, int replicates, const PenaltySpec& family,
                                      double gamma, std::uint64_t seed,
                                      const ExperimentOptions& options) {
    validate(family);
    if (replicates < 1) throw input_error("run_table_experiment: replicates must be >= 1");
    if (!(gamma > 0.0) || !std::isfinite(gamma))
        throw input_error("run_table_experiment: gamma must be positive and finite");
    if (!(options.zero_tolerance >= 0.0))
        throw input_error("run_table_experiment: zero_tolerance must be nonnegative");
    if (options.threads < 1) throw input_error("run_table_experiment: threads must be >= 1");
    const int p = dimension_rule(n);

    const PolynomialCheck poly = verify_ar_polynomial();
    Eigen::VectorXd beta_true = Eigen::VectorXd::Zero(p);
    beta_true.head(5) = poly.coefficients;
    const ArProcessSpec base(poly.coefficients, options.noise_sd, options.burn_in, 0);
    const Eigen::MatrixXd gram = population_gram(base, p);

    std::vector<TableOutcome> outcomes(replicates);
    auto run_one = [&](int r) {
        TableOutcome out;
        out.se.fill(std::numeric_limits<double>::quiet_NaN());
        try {
            const ArProcessSpec spec(poly.coefficients, options.noise_sd, options.burn_in,
                                     substream_seed(seed, static_cast<std::uint64_t>(r)));
            const GaussianModel model(simulate_ar(spec, n, p), 1.0);

            std::vector<int> all(p);
            std::iota(all.begin(), all.end(), 0);
            const FitResult ls = fit_oracle(model, all);
            const double me_ls = model_error(ls.beta, beta_true, gram);
            if (!(me_ls > 0.0)) throw numeric_error("degenerate least-squares model error");

            const GcvScan scan =
                gcv_scan(model, family, default_lambda_grid(model, options.grid_points), gamma,
                         options.fit);
            out.lambda = scan.best.lambda;

            Eigen::VectorXd selected = scan.best.fit.beta;
            for (int j = 0; j < p; ++j)
                if (std::abs(selected[j]) < options.zero_tolerance) selected[j] = 0.0;
            out.beta = selected;

            const FitResult oracle = fit_oracle(model, {0, 1, 2, 3, 4});
            const double me_pls = model_error(selected, beta_true, gram);
            const double me_oracle = model_error(oracle.beta, beta_true, gram);
            out.rme_pls = me_pls / me_ls;
            out.rme_oracle = me_oracle / me_ls;
            out.ratio_oracle_pls = me_pls > 0.0 ? me_oracle / me_pls : 1.0;
            for (int j = 5; j < p; ++j)
                if (selected[j] == 0.0) ++out.correct_zeros;
            for (int j = 0; j < 5; ++j)
                if (selected[j] == 0.0) ++out.incorrect_zeros;

            try {
                const CovarianceEstimate cov = sandwich_covariance(model, scan.best.fit, family);
                for (std::size_t c = 0; c < cov.active_indices.size(); ++c) {
                    const int j = cov.active_indices[c];
                    if (j < 5 && selected[j] != 0.0) out.se[j] = cov.standard_errors[c];
                }
            } catch (const std::exception&) {
                // SE summary loses this replicate; selection results stand.
            }
            out.failed = false;
        } catch (const std::exception&) {
            out.failed = true;
        }
        outcomes[r] = std::move(out);
    };
    run_strided(replicates, options.threads, run_one);

    SimulationReport report;
    report.n = n;
    report.p_n = p;
    report.replicates = replicates;
    report.gamma = gamma;
    report.seed = seed;
    report.penalty_kind = to_string(family.kind);
    report.penalty_a = family.a;
    report.penalty_q = family.q;
    report.noise_sd = options.noise_sd;
    report.burn_in = options.burn_in;
    report.zero_tolerance = options.zero_tolerance;
    report.grid_points = options.grid_points;
    report.rng_algorithm = rng_algorithm_id();

    std::vector<double> rme_pls, rme_oracle, ratio, lambdas;
    std::array<std::vector<double>, 5> estimates, ses;
    long correct_total = 0, incorrect_total = 0;
    for (const TableOutcome& out : outcomes) {
        if (out.failed) {
            ++report.failures;
            continue;
        }
        ++report.completed;
        rme_pls.push_back(out.rme_pls);
        rme_oracle.push_back(out.rme_oracle);
        ratio.push_back(out.ratio_oracle_pls);
        lambdas.push_back(out.lambda);
        correct_total += out.correct_zeros;
        incorrect_total += out.incorrect_zeros;
        for (int j = 0; j < 5; ++j) {
            estimates[j].push_back(out.beta[j]);
            if (std::isfinite(out.se[j])) ses[j].push_back(out.se[j]);
        }
    }
    if (report.failures * 10 > replicates)
        throw numeric_error("run_table_experiment: more than 10% of replicates failed");

    report.mrme_pls_vs_ls = 100.0 * median_of(rme_pls);
    report.mrme_oracle_vs_ls = 100.0 * median_of(rme_oracle);
    report.mrme_oracle_vs_pls = 100.0 * median_of(ratio);
    report.avg_correct_zeros = static_cast<double>(correct_total) / report.completed;
    report.avg_incorrect_zeros = static_cast<double>(incorrect_total) / report.completed;
    report.median_selected_lambda = median_of(lambdas);
    report.coefficient_medians.resize(5);
    report.sd_true.resize(5);
    report.sd_median_estimated.resize(5);
    report.sd_mad.resize(5);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (int j = 0; j < 5; ++j) {
        report.coefficient_medians[j] = median_of(estimates[j]);
        report.sd_true[j] = 1000.0 * population_sd_of(estimates[j]);
        report.sd_median_estimated[j] = ses[j].empty() ? nan : 1000.0 * median_of(ses[j]);
        report.sd_mad[j] = ses[j].size() < 2
                               ? nan
                               : 1000.0 * (quantile_type7(ses[j], 0.75) - quantile_type7(ses[j], 0.25)) /
                                     1.349;
    }
    return report;
}

LrNullReport run_lr_null_experiment(int n, int replicates, const PenaltySpec& family,
                                    std::uint64_t seed, const LrExperimentOptions& options) {
    validate(family);
    if (replicates < 1) throw input_error("run_lr_null_experiment: replicates must be >= 1");
    if (options.bins < 1) throw input_error("run_lr_null_experiment: bins must be >= 1");
    if (options.threads < 1) throw input_error("run_lr_null_experiment: threads must be >= 1");
    if (!(options.lambda >= 0.0) || !std::isfinite(options.lambda))
        throw input_error("run_lr_null_experiment: lambda must be nonnegative and finite");
    const int p = dimension_rule(n);
    if (p < 8)
        throw input_error("run_lr_null_experiment: dimension rule gives fewer than 8 lags; "
                          "coordinates 6 and 7 must be true zeros with headroom");

    const PolynomialCheck poly = verify_ar_polynomial();
    const PenaltySpec pen = family.with_lambda(options.lambda);
    Eigen::MatrixXd constraints = Eigen::MatrixXd::Zero(2, p);
    constraints(0, 5) = 1.0;  // coefficient 6
    constraints(1, 6) = 1.0;  // coefficient 7

    struct LrOutcome {
        bool failed = true;
        double statistic = 0.0;
    };
    std::vector<LrOutcome> outcomes(replicates);
    auto run_one = [&](int r) {
        LrOutcome out;
        try {
            const ArProcessSpec spec(poly.coefficients, options.noise_sd, options.burn_in,
                                     substream_seed(seed, static_cast<std::uint64_t>(r)));
            const GaussianModel model(simulate_ar(spec, n, p), 1.0);
            out.statistic = lr_test(model, pen, constraints, options.fit).statistic;
            out.failed = false;
        } catch (const std::exception&) {
            out.failed = true;
        }
        outcomes[r] = out;
    };
    run_strided(replicates, options.threads, run_one);

    LrNullReport report;
    report.n = n;
    report.p_n = p;
    report.replicates = replicates;
    report.df = 2;
    report.lambda = options.lambda;
    report.seed = seed;
    report.penalty_kind = to_string(family.kind);
    report.penalty_a = family.a;
    report.penalty_q = family.q;
    report.noise_sd = options.noise_sd;
    report.burn_in = options.burn_in;
    report.rng_algorithm = rng_algorithm_id();
    for (const LrOutcome& out : outcomes) {
        if (out.failed) {
            ++report.failures;
            continue;
        }
        ++report.completed;
        report.statistics.push_back(out.statistic);
    }
    if (report.failures * 10 > replicates)
        throw numeric_error("run_lr_null_experiment: more than 10% of replicates failed");

    const std::size_t N = report.statistics.size();
    const double mean =
        std::accumulate(report.statistics.begin(), report.statistics.end(), 0.0) / N;
    double ss = 0.0;
    for (double t : report.statistics) ss += (t - mean) * (t - mean);
    report.mean_statistic = mean;
    report.variance_statistic = ss / N;

    std::vector<double> sorted = report.statistics;
    std::sort(sorted.begin(), sorted.end());
    double ks = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
        const double cdf = 1.0 - chisq_sf(sorted[i], report.df);
        ks = std::max(ks, std::abs(static_cast<double>(i + 1) / N - cdf));
        ks = std::max(ks, std::abs(cdf - static_cast<double>(i) / N));
    }
    report.ks_distance = ks;

    double hi = sorted.back();
    if (!(hi > 0.0)) hi = 1.0;
    const double width = hi / options.bins;
    std::vector<int> counts(options.bins, 0);
    for (double t : report.statistics) {
        int b = static_cast<int>(t / width);
        if (b >= options.bins) b = options.bins - 1;
        ++counts[b];
    }
    for (int b = 0; b < options.bins; ++b) {
        report.density_lower.push_back(b * width);
        report.density_upper.push_back((b + 1) * width);
        report.density_value.push_back(counts[b] / (N * width));
    }
    return report;
}

std::string to_json_string(const SimulationReport& report) {
    ordered_json j;
    j["experiment"] = "table";
    j["n"] = report.n;
    j["p_n"] = report.p_n;
    j["replicates"] = report.replicates;
    j["completed"] = report.completed;
    j["failures"] = report.failures;
    j["penalty"] = {{"kind", report.penalty_kind}, {"a", report.penalty_a}, {"q", report.penalty_q}};
    j["gamma"] = report.gamma;
    j["seed"] = report.seed;
    j["noise_sd"] = report.noise_sd;
    j["burn_in"] = report.burn_in;
    j["zero_tolerance"] = report.zero_tolerance;
    j["grid_points"] = report.grid_points;
    j["rng_algorithm"] = report.rng_algorithm;
    j["mrme_oracle_vs_ls"] = report.mrme_oracle_vs_ls;
    j["mrme_pls_vs_ls"] = report.mrme_pls_vs_ls;
    j["mrme_oracle_vs_pls"] = report.mrme_oracle_vs_pls;
    j["avg_correct_zeros"] = report.avg_correct_zeros;
    j["avg_incorrect_zeros"] = report.avg_incorrect_zeros;
    j["median_selected_lambda"] = report.median_selected_lambda;
    j["coefficient_medians"] = to_std(report.coefficient_medians);
    j["sd_true"] = to_std(report.sd_true);
    j["sd_median_estimated"] = to_std(report.sd_median_estimated);
    j["sd_mad"] = to_std(report.sd_mad);
    return j.dump(2) + "\n";
}

std::string to_json_string(const LrNullReport& report) {
    ordered_json j;
    j["experiment"] = "lr_null";
    j["n"] = report.n;
    j["p_n"] = report.p_n;
    j["replicates"] = report.replicates;
    j["completed"] = report.completed;
    j["failures"] = report.failures;
    j["df"] = report.df;
    j["penalty"] = {{"kind", report.penalty_kind}, {"a", report.penalty_a}, {"q", report.penalty_q}};
    j["lambda"] = report.lambda;
    j["seed"] = report.seed;
    j["noise_sd"] = report.noise_sd;
    j["burn_in"] = report.burn_in;
    j["rng_algorithm"] = report.rng_algorithm;
    j["mean_statistic"] = report.mean_statistic;
    j["variance_statistic"] = report.variance_statistic;
    j["ks_distance"] = report.ks_distance;
    j["statistics"] = report.statistics;
    j["density_lower"] = report.density_lower;
    j["density_upper"] = report.density_upper;
    j["density_value"] = report.density_value;
    return j.dump(2) + "\n";
}

std::string to_table_csv(const SimulationReport& report) {
    std::string csv = "section,name,value\n";
    csv += "mrme,oracle_vs_ls," + fmt9(report.mrme_oracle_vs_ls) + "\n";
    csv += "mrme,pls_vs_ls," + fmt9(report.mrme_pls_vs_ls) + "\n";
    csv += "mrme,oracle_vs_pls," + fmt9(report.mrme_oracle_vs_pls) + "\n";
    csv += "zeros,avg_correct," + fmt9(report.avg_correct_zeros) + "\n";
    csv += "zeros,avg_incorrect," + fmt9(report.avg_incorrect_zeros) + "\n";
    csv += "lambda,median_selected," + fmt9(report.median_selected_lambda) + "\n";
    for (int j = 0; j < 5; ++j)
        csv += "median,beta" + std::to_string(j + 1) + "," + fmt9(report.coefficient_medians[j]) + "\n";
    for (int j = 0; j < 5; ++j)
        csv += "sd_true,beta" + std::to_string(j + 1) + "," + fmt9(report.sd_true[j]) + "\n";
    for (int j = 0; j < 5; ++j)
        csv += "sd_median_estimated,beta" + std::to_string(j + 1) + "," +
               fmt9(report.sd_median_estimated[j]) + "\n";
    for (int j = 0; j < 5; ++j)
        csv += "sd_mad,beta" + std::to_string(j + 1) + "," + fmt9(report.sd_mad[j]) + "\n";
    return csv;
}

std::string density_csv(const LrNullReport& report) {
    std::string csv = "bin_lower,bin_upper,density\n";
    for (std::size_t b = 0; b < report.density_value.size(); ++b)
        csv += fmt9(report.density_lower[b]) + "," + fmt9(report.density_upper[b]) + "," +
               fmt9(report.density_value[b]) + "\n";
    return csv;
}

}  // namespace penlik
