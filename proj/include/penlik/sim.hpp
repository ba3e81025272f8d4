#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "penlik/model.hpp"
#include "penlik/optimizer.hpp"
#include "penlik/penalty.hpp"

namespace penlik {

// Autoregressive data-generating process. Construction verifies stationarity:
// the characteristic polynomial 1 - b1 B - ... - bm B^m must have all zeros
// strictly outside the unit circle.
struct ArProcessSpec {
    Eigen::VectorXd coefficients;
    double noise_sd = 1.0;
    int burn_in = 500;
    std::uint64_t seed = 0;

    ArProcessSpec();  // order-5 benchmark process (11/4, -23/6, 37/12, -13/9, 1/3)
    ArProcessSpec(Eigen::VectorXd coeffs, double noise_sd_in = 1.0, int burn_in_in = 500,
                  std::uint64_t seed_in = 0);
};

// Exact-rational expansion of the benchmark factorization
// (1 - 3B/4)(1 - B + 2B^2/3)^2 into 1 - b1 B - ... - b5 B^5. The bk are
// returned both as reduced fractions and as doubles, together with the
// smallest root modulus of the characteristic polynomial.
struct PolynomialCheck {
    std::array<long long, 5> numerators;
    std::array<long long, 5> denominators;
    Eigen::VectorXd coefficients;  // bk as doubles
    double min_root_modulus = 0.0;
};
PolynomialCheck verify_ar_polynomial();

// Candidate-model dimension for sample size n: floor(4 n^(1/4)) - 5.
// Throws input_error for n < 100 or when the result would not exceed the
// five true signals.
int dimension_rule(int n);

// Generates burn_in + n + p values of the recursion, discards the burn-in,
// and returns the lag design: row i = (X_{i-1}, ..., X_{i-p}) with response
// X_i. Deterministic given spec.seed.
Dataset simulate_ar(const ArProcessSpec& spec, int n, int p);

// Population second-moment matrix E X^T X of the lag design: the Toeplitz
// matrix of autocovariances gamma(|j-k|) obtained from the Yule-Walker
// equations.
Eigen::MatrixXd population_gram(const ArProcessSpec& spec, int p);

// Quadratic loss (beta_hat - beta_true)^T gram (beta_hat - beta_true).
double model_error(const Eigen::VectorXd& beta_hat, const Eigen::VectorXd& beta_true,
                   const Eigen::MatrixXd& gram);

struct ExperimentOptions {
    double noise_sd = 1.0;
    int burn_in = 500;
    // Post-fit zeroization: selected coefficients below this magnitude are
    // reported as exact zeros (selection step of the fitting recipe).
    double zero_tolerance = 1e-2;
    int grid_points = 50;
    int threads = 1;
    FitConfig fit;
};

struct SimulationReport {
    int n = 0;
    int p_n = 0;
    int replicates = 0;  // requested
    int completed = 0;   // replicates that produced a usable fit
    int failures = 0;
    double gamma = 1.0;
    std::uint64_t seed = 0;
    std::string penalty_kind;
    double penalty_a = 0.0;
    double penalty_q = 0.0;
    double noise_sd = 1.0;
    int burn_in = 0;
    double zero_tolerance = 0.0;
    int grid_points = 0;
    std::string rng_algorithm;

    double mrme_oracle_vs_ls = 0.0;   // percent
    double mrme_pls_vs_ls = 0.0;      // percent
    double mrme_oracle_vs_pls = 0.0;  // percent
    double avg_correct_zeros = 0.0;
    double avg_incorrect_zeros = 0.0;
    double median_selected_lambda = 0.0;
    Eigen::VectorXd coefficient_medians;   // 5 signal coefficients
    Eigen::VectorXd sd_true;               // empirical SD of estimates x1000
    Eigen::VectorXd sd_median_estimated;   // median sandwich SE x1000
    Eigen::VectorXd sd_mad;                // IQR/1.349 of sandwich SEs x1000
};

// Monte Carlo study over the benchmark process: per replicate, fit least
// squares, the GCV-tuned penalized estimator, and the oracle; aggregate
// median relative model errors, zero counts, coefficient medians, and
// standard-error accuracy summaries. Replicates draw from per-index RNG
// substreams so results are identical for any thread count. More than 10%
// failed replicates raises numeric_error.
SimulationReport run_table_experiment(int n, int replicates, const PenaltySpec& family,
                                      double gamma, std::uint64_t seed,
                                      const ExperimentOptions& options = {});

struct LrExperimentOptions {
    double noise_sd = 1.0;
    int burn_in = 500;
    double lambda = 0.0;  // penalty level for both fits of the ratio test
    int bins = 30;
    int threads = 1;
    FitConfig fit;
};

struct LrNullReport {
    int n = 0;
    int p_n = 0;
    int replicates = 0;
    int completed = 0;
    int failures = 0;
    int df = 2;
    double lambda = 0.0;
    std::uint64_t seed = 0;
    std::string penalty_kind;
    double penalty_a = 0.0;
    double penalty_q = 0.0;
    double noise_sd = 1.0;
    int burn_in = 0;
    std::string rng_algorithm;

    std::vector<double> statistics;  // one per completed replicate, run order
    double mean_statistic = 0.0;
    double variance_statistic = 0.0;
    double ks_distance = 0.0;  // against the chi-square(df) law
    std::vector<double> density_lower;   // histogram bin edges
    std::vector<double> density_upper;
    std::vector<double> density_value;   // normalized: sum(width * value) = 1
};

// Null-distribution study of the penalized likelihood-ratio statistic for
// H0: coefficients 6 and 7 vanish (true zeros of the benchmark process).
LrNullReport run_lr_null_experiment(int n, int replicates, const PenaltySpec& family,
                                    std::uint64_t seed, const LrExperimentOptions& options = {});

// Deterministic serializations (stable key order, shortest round-trip floats).
std::string to_json_string(const SimulationReport& report);
std::string to_json_string(const LrNullReport& report);
std::string to_table_csv(const SimulationReport& report);  // section,name,value rows
std::string density_csv(const LrNullReport& report);       // bin edges + density

}  // namespace penlik
