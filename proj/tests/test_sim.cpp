#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <penlik/errors.hpp>
#include <penlik/model.hpp>
#include <penlik/penalty.hpp>
#include <penlik/sim.hpp>

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

using penlik::ArProcessSpec;
using penlik::Dataset;
using penlik::LrExperimentOptions;
using penlik::LrNullReport;
using penlik::PenaltySpec;
using penlik::PolynomialCheck;
using penlik::SimulationReport;
using penlik::input_error;

namespace {

double sample_correlation(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
    const double mx = x.mean();
    const double my = y.mean();
    const Eigen::VectorXd cx = x.array() - mx;
    const Eigen::VectorXd cy = y.array() - my;
    return cx.dot(cy) / std::sqrt(cx.squaredNorm() * cy.squaredNorm());
}

}  // namespace

TEST_CASE("autoregression coefficients expand to the pinned exact rationals") {
    const PolynomialCheck check = penlik::verify_ar_polynomial();

    const std::array<long long, 5> expected_num{11, -23, 37, -13, 1};
    const std::array<long long, 5> expected_den{4, 6, 12, 9, 3};
    for (int k = 0; k < 5; ++k) {
        CHECK(check.numerators[k] == expected_num[k]);
        CHECK(check.denominators[k] == expected_den[k]);
        CHECK(check.coefficients[k]
              == static_cast<double>(expected_num[k]) / static_cast<double>(expected_den[k]));
    }

    // The factored form has a real zero at 4/3, so the lag polynomial
    // 1 - sum b_k B^k must vanish there.
    double at_four_thirds = 1.0;
    double power = 1.0;
    for (int k = 0; k < 5; ++k) {
        power *= 4.0 / 3.0;
        at_four_thirds -= check.coefficients[k] * power;
    }
    CHECK(std::abs(at_four_thirds) < 1e-12);

    // Closest zero to the unit circle comes from the quadratic factor.
    CHECK(std::abs(check.min_root_modulus - std::sqrt(1.5)) < 1e-12);
    CHECK(check.min_root_modulus > 1.0);

    // The default process spec is built from exactly these coefficients.
    const ArProcessSpec benchmark;
    REQUIRE(benchmark.coefficients.size() == 5);
    for (int k = 0; k < 5; ++k) CHECK(benchmark.coefficients[k] == check.coefficients[k]);
}

TEST_CASE("dimension rule reproduces pinned values and rejects small samples") {
    CHECK(penlik::dimension_rule(100) == 7);
    CHECK(penlik::dimension_rule(112) == 8);
    CHECK(penlik::dimension_rule(200) == 10);
    CHECK(penlik::dimension_rule(400) == 12);
    CHECK(penlik::dimension_rule(800) == 16);

    CHECK_THROWS_AS((void)penlik::dimension_rule(99), input_error);
    CHECK_THROWS_AS((void)penlik::dimension_rule(10), input_error);
    CHECK_THROWS_AS((void)penlik::dimension_rule(0), input_error);
}

TEST_CASE("process spec validation rejects unstable or malformed inputs") {
    Eigen::VectorXd unstable(1);
    unstable << 1.1;
    CHECK_THROWS_AS((void)ArProcessSpec{unstable}, input_error);

    // A unit root is on the circle and equally inadmissible.
    Eigen::VectorXd unit_root(1);
    unit_root << 1.0;
    CHECK_THROWS_AS((void)ArProcessSpec{unit_root}, input_error);

    Eigen::VectorXd fine(1);
    fine << 0.5;
    CHECK_THROWS_AS(ArProcessSpec(fine, 0.0), input_error);
    CHECK_THROWS_AS(ArProcessSpec(fine, -1.0), input_error);
    CHECK_THROWS_AS(ArProcessSpec(fine, 1.0, -1), input_error);

    Eigen::VectorXd with_nan(2);
    with_nan << 0.1, std::nan("");
    CHECK_THROWS_AS((void)ArProcessSpec{with_nan}, input_error);

    CHECK_NOTHROW(ArProcessSpec(fine, 2.0, 0, 7));
}

TEST_CASE("simulated designs are lagged copies of the response path") {
    ArProcessSpec spec;
    spec.seed = 31;
    const int n = 60;
    const int p = 7;
    const Dataset data = penlik::simulate_ar(spec, n, p);

    REQUIRE(data.n() == n);
    REQUIRE(data.p() == p);
    REQUIRE(static_cast<int>(data.column_names.size()) == p);
    for (int j = 0; j < p; ++j) CHECK(data.column_names[j] == "lag" + std::to_string(j + 1));

    // Row i regresses y_i on its own recent past: shifting one row down
    // shifts every lag column over by one.
    for (int i = 1; i < n; ++i) {
        CHECK(data.design(i, 0) == data.response[i - 1]);
        for (int k = 1; k < p; ++k) CHECK(data.design(i, k) == data.design(i - 1, k - 1));
    }

    // Same spec, same seed: the draw is reproducible bit for bit.
    const Dataset again = penlik::simulate_ar(spec, n, p);
    CHECK(again.response == data.response);
    CHECK(again.design == data.design);

    ArProcessSpec other = spec;
    other.seed = 32;
    const Dataset different = penlik::simulate_ar(other, n, p);
    CHECK(different.response != data.response);

    CHECK_THROWS_AS((void)penlik::simulate_ar(spec, 0, p), input_error);
    CHECK_THROWS_AS((void)penlik::simulate_ar(spec, n, 4), input_error);
}

TEST_CASE("white noise data shows no lag-one autocorrelation") {
    const ArProcessSpec spec(Eigen::VectorXd::Zero(5), 1.0, 100, 2024);
    const int n = 10000;
    const Dataset data = penlik::simulate_ar(spec, n, 5);

    const double r1 = sample_correlation(data.response, data.design.col(0));
    CHECK(std::abs(r1) <= 3.0 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("population Gram matches closed forms and long-run empirical moments") {
    // No dependence: the covariance is just the noise variance on the diagonal.
    const ArProcessSpec white(Eigen::VectorXd::Zero(2), 1.1, 0, 0);
    const Eigen::MatrixXd gram_white = penlik::population_gram(white, 3);
    REQUIRE(gram_white.rows() == 3);
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c)
            CHECK(std::abs(gram_white(r, c) - (r == c ? 1.21 : 0.0)) < 1e-12);

    // Order-1 closed form: gamma(k) = sd^2 * phi^k / (1 - phi^2).
    Eigen::VectorXd phi(1);
    phi << 0.6;
    const ArProcessSpec order1(phi, 1.3, 0, 0);
    const Eigen::MatrixXd gram1 = penlik::population_gram(order1, 4);
    const double gamma0 = 1.69 / (1.0 - 0.36);
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) {
            const double expected = gamma0 * std::pow(0.6, std::abs(r - c));
            CHECK(gram1(r, c) == doctest::Approx(expected).epsilon(1e-10));
        }

    // Benchmark process: symmetric Toeplitz and strictly positive definite.
    const ArProcessSpec benchmark;
    const Eigen::MatrixXd gram8 = penlik::population_gram(benchmark, 8);
    for (int r = 0; r < 8; ++r)
        for (int c = 0; c < 8; ++c) CHECK(gram8(r, c) == gram8(0, std::abs(r - c)));
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram8);
    CHECK(eig.eigenvalues().minCoeff() > 0.0);

    // A long simulated path reproduces the Gram entrywise within 2 percent.
    ArProcessSpec sampler;
    sampler.seed = 424242;
    const int big_n = 1000000;
    const Dataset path = penlik::simulate_ar(sampler, big_n, 5);
    const Eigen::MatrixXd empirical =
        path.design.transpose() * path.design / static_cast<double>(big_n);
    const Eigen::MatrixXd gram5 = penlik::population_gram(benchmark, 5);
    for (int r = 0; r < 5; ++r)
        for (int c = 0; c < 5; ++c)
            CHECK(std::abs(empirical(r, c) - gram5(r, c)) <= 0.02 * std::abs(gram5(r, c)));

    CHECK_THROWS_AS((void)penlik::population_gram(benchmark, 0), input_error);
}

TEST_CASE("model error reduces to weighted squared distance") {
    Eigen::VectorXd truth(3);
    truth << 1.0, -2.0, 0.5;

    CHECK(penlik::model_error(truth, truth, Eigen::MatrixXd::Identity(3, 3)) == 0.0);

    Eigen::VectorXd est(3);
    est << 1.5, -2.0, 0.0;
    const double identity_error =
        penlik::model_error(est, truth, Eigen::MatrixXd::Identity(3, 3));
    CHECK(identity_error == doctest::Approx(0.25 + 0.25).epsilon(1e-12));

    // Hand-weighted 2x2 case: d' G d with d = (1, -1).
    Eigen::VectorXd a(2), b(2);
    a << 2.0, 0.0;
    b << 1.0, 1.0;
    Eigen::MatrixXd gram(2, 2);
    gram << 2.0, 0.5, 0.5, 1.0;
    CHECK(penlik::model_error(a, b, gram) == doctest::Approx(2.0 - 1.0 + 1.0).epsilon(1e-12));

    // Relative error of an estimator against itself is exactly one.
    const Eigen::MatrixXd bench = penlik::population_gram(ArProcessSpec(), 3);
    const double me = penlik::model_error(est, truth, bench);
    CHECK(me / penlik::model_error(est, truth, bench) == 1.0);

    Eigen::VectorXd short_vec(2);
    short_vec << 1.0, 2.0;
    CHECK_THROWS_AS((void)penlik::model_error(short_vec, truth, Eigen::MatrixXd::Identity(3, 3)),
                    input_error);
    CHECK_THROWS_AS((void)penlik::model_error(truth, truth, Eigen::MatrixXd::Identity(2, 2)),
                    input_error);
}

TEST_CASE("table experiment report is coherent, deterministic and thread-invariant") {
    const PenaltySpec family = PenaltySpec::scad(1.0);
    const std::uint64_t seed = 99;
    const SimulationReport report = penlik::run_table_experiment(100, 10, family, 1.0, seed);

    CHECK(report.n == 100);
    CHECK(report.p_n == 7);
    CHECK(report.replicates == 10);
    CHECK(report.completed + report.failures == 10);
    CHECK(report.completed >= 1);
    CHECK(report.gamma == 1.0);
    CHECK(report.seed == seed);
    CHECK(report.penalty_kind == "scad");
    CHECK(report.penalty_a == 3.7);
    CHECK(report.noise_sd == 1.0);
    CHECK(report.burn_in == 500);
    CHECK(report.zero_tolerance == 0.01);
    CHECK(report.grid_points == 50);
    CHECK(report.rng_algorithm == "splitmix64/mt19937_64/box-muller");

    CHECK(report.mrme_pls_vs_ls > 0.0);
    CHECK(report.mrme_oracle_vs_ls > 0.0);
    CHECK(report.mrme_oracle_vs_pls > 0.0);
    CHECK(report.avg_correct_zeros >= 0.0);
    CHECK(report.avg_correct_zeros <= 2.0);  // p_n = 7 leaves two noise lags
    CHECK(report.avg_incorrect_zeros >= 0.0);
    CHECK(report.avg_incorrect_zeros <= 5.0);
    CHECK(report.median_selected_lambda > 0.0);
    CHECK(report.coefficient_medians.size() == 5);
    CHECK(report.sd_true.size() == 5);
    CHECK(report.sd_median_estimated.size() == 5);
    CHECK(report.sd_mad.size() == 5);

    // Re-running with identical inputs reproduces the serialized report byte
    // for byte, and so does splitting the replicates across threads.
    const std::string json_once = penlik::to_json_string(report);
    const SimulationReport rerun = penlik::run_table_experiment(100, 10, family, 1.0, seed);
    CHECK(penlik::to_json_string(rerun) == json_once);

    penlik::ExperimentOptions threaded;
    threaded.threads = 3;
    const SimulationReport parallel =
        penlik::run_table_experiment(100, 10, family, 1.0, seed, threaded);
    CHECK(penlik::to_json_string(parallel) == json_once);

    const std::string csv = penlik::to_table_csv(report);
    CHECK(csv.rfind("section,name,value\n", 0) == 0);
    CHECK(csv.find("zeros,avg_correct,") != std::string::npos);
    CHECK(csv.find("zeros,avg_incorrect,") != std::string::npos);
    CHECK(csv.find("lambda,median_selected,") != std::string::npos);
    CHECK(csv.find("median,beta1,") != std::string::npos);
    CHECK(csv.find("sd_true,beta5,") != std::string::npos);

    CHECK_THROWS_AS((void)penlik::run_table_experiment(100, 0, family, 1.0, seed), input_error);
    CHECK_THROWS_AS((void)penlik::run_table_experiment(100, 10, family, 0.0, seed), input_error);
    penlik::ExperimentOptions bad;
    bad.threads = 0;
    CHECK_THROWS_AS((void)penlik::run_table_experiment(100, 10, family, 1.0, seed, bad),
                    input_error);
    bad.threads = 1;
    bad.zero_tolerance = -0.1;
    CHECK_THROWS_AS((void)penlik::run_table_experiment(100, 10, family, 1.0, seed, bad),
                    input_error);
}

TEST_CASE("selected penalties remove most noise lags at moderate sample size") {
    const SimulationReport report =
        penlik::run_table_experiment(400, 50, PenaltySpec::scad(1.0), 1.0, 20260825);
    CHECK(report.p_n == 12);
    CHECK(report.completed == 50);
    // Seven of the twelve lags are pure noise; tuning should drop most of them.
    CHECK(report.avg_correct_zeros >= 3.0);
}

TEST_CASE("likelihood ratio null experiment yields calibrated summaries") {
    const PenaltySpec family = PenaltySpec::scad(1.0);
    const LrNullReport report = penlik::run_lr_null_experiment(200, 30, family, 7);

    CHECK(report.n == 200);
    CHECK(report.p_n == 10);
    CHECK(report.replicates == 30);
    CHECK(report.completed + report.failures == 30);
    CHECK(report.df == 2);
    CHECK(report.lambda == 0.0);
    CHECK(report.seed == 7);
    CHECK(report.rng_algorithm == "splitmix64/mt19937_64/box-muller");
    REQUIRE(static_cast<int>(report.statistics.size()) == report.completed);

    double mean = 0.0;
    for (double t : report.statistics) {
        CHECK(t >= 0.0);
        mean += t;
    }
    mean /= report.completed;
    CHECK(report.mean_statistic == doctest::Approx(mean).epsilon(1e-12));
    double var = 0.0;
    for (double t : report.statistics) var += (t - mean) * (t - mean);
    var /= report.completed;
    CHECK(report.variance_statistic == doctest::Approx(var).epsilon(1e-12));

    CHECK(report.ks_distance >= 0.0);
    CHECK(report.ks_distance <= 1.0);

    // The reported histogram is a proper density over increasing bins.
    const int bins = static_cast<int>(report.density_value.size());
    REQUIRE(bins == 30);
    REQUIRE(static_cast<int>(report.density_lower.size()) == bins);
    REQUIRE(static_cast<int>(report.density_upper.size()) == bins);
    double integral = 0.0;
    for (int b = 0; b < bins; ++b) {
        CHECK(report.density_upper[b] > report.density_lower[b]);
        if (b > 0) CHECK(report.density_lower[b] == report.density_upper[b - 1]);
        CHECK(report.density_value[b] >= 0.0);
        integral += (report.density_upper[b] - report.density_lower[b]) * report.density_value[b];
    }
    CHECK(integral == doctest::Approx(1.0).epsilon(1e-6));

    const std::string json_once = penlik::to_json_string(report);
    const LrNullReport rerun = penlik::run_lr_null_experiment(200, 30, family, 7);
    CHECK(penlik::to_json_string(rerun) == json_once);

    LrExperimentOptions threaded;
    threaded.threads = 3;
    const LrNullReport parallel = penlik::run_lr_null_experiment(200, 30, family, 7, threaded);
    CHECK(penlik::to_json_string(parallel) == json_once);

    const std::string csv = penlik::density_csv(report);
    CHECK(csv.rfind("bin_lower,bin_upper,density\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == bins + 1);

    // The rule of thumb needs at least eight lags to leave room for the
    // two-coefficient null hypothesis; n = 100 only yields seven.
    CHECK_THROWS_AS((void)penlik::run_lr_null_experiment(100, 30, family, 7), input_error);
    CHECK_THROWS_AS((void)penlik::run_lr_null_experiment(200, 0, family, 7), input_error);
    LrExperimentOptions bad;
    bad.bins = 0;
    CHECK_THROWS_AS((void)penlik::run_lr_null_experiment(200, 30, family, 7, bad), input_error);
    bad.bins = 30;
    bad.lambda = -1.0;
    CHECK_THROWS_AS((void)penlik::run_lr_null_experiment(200, 30, family, 7, bad), input_error);
}
