#pragma once

#include <string>
#include <vector>

namespace penlik {

enum class PenaltyKind { Scad, Hard, SoftL1, Lq };

// Stable names for reports and the command line: "scad", "hard", "soft",
// "lq". Parsing throws input_error on anything else.
std::string to_string(PenaltyKind kind);
PenaltyKind penalty_kind_from_string(const std::string& name);

// Penalty family descriptor. `lambda` is in coefficient units. `a` applies to
// Scad only (must be > 2); `q` applies to Lq only (must be > 0).
struct PenaltySpec {
    PenaltyKind kind = PenaltyKind::Scad;
    double lambda = 0.0;
    double a = 3.7;
    double q = 1.0;

    static PenaltySpec scad(double lambda, double a = 3.7);
    static PenaltySpec hard(double lambda);
    static PenaltySpec soft_l1(double lambda);
    static PenaltySpec lq(double lambda, double q);

    PenaltySpec with_lambda(double new_lambda) const {
        PenaltySpec s = *this;
        s.lambda = new_lambda;
        return s;
    }
};

// Throws input_error unless lambda >= 0 (finite), Scad a > 2, Lq q > 0.
void validate(const PenaltySpec& spec);

// p_lambda(theta) for theta >= 0. Continuous, nondecreasing, p(0) = 0.
// Scad uses the exact antiderivative of its derivative (three pieces,
// constant (a+1)lambda^2/2 beyond a*lambda); Hard is lambda^2 - (theta-lambda)^2
// below lambda and constant lambda^2 beyond.
double penalty_value(const PenaltySpec& spec, double theta);

// p'_lambda(theta) for theta > 0 (theta == 0 is a domain error: the derivative
// is one-sided there; see condition_diagnostics for the origin behaviour).
double penalty_deriv(const PenaltySpec& spec, double theta);

// p''_lambda(theta) for theta > 0. At derivative kinks (Scad: lambda and
// a*lambda; Hard: lambda) the right-hand limit is returned.
double penalty_second_deriv(const PenaltySpec& spec, double theta);

// Univariate thresholding rule theta_hat(z). For Scad, SoftL1 and Lq this is
// the global minimizer of (1/2)(z - theta)^2 + p_lambda(|theta|) (closed form
// except Lq, which is solved numerically with tolerance 1e-10). Hard applies
// its defining rule z * I(|z| > lambda), equivalently the global minimizer of
// the unscaled loss (z - theta)^2 + p_lambda(|theta|). Ties between 0 and a
// nonzero candidate resolve to 0 (sparser solution).
double univariate_threshold(const PenaltySpec& spec, double z);

// Regularity-condition diagnostics evaluated at a set of nonzero coefficients.
struct PenaltyDiagnostics {
    double a_n = 0.0;               // max_j p'(|beta_j|)
    double b_n = 0.0;               // max_j |p''(|beta_j|)|
    bool singular_at_origin = false;  // p'(theta)/lambda bounded away from 0 as theta -> 0+
    bool lipschitz_ok = true;         // p'' Lipschitz on a sampled grid beyond C*lambda
    double separation_ratio = 0.0;    // min_j |beta_j| / lambda (+inf when lambda = 0)
    bool empty_input = false;         // no coefficients supplied; a_n = b_n = 0
};

// Throws input_error if any supplied coefficient is exactly zero.
PenaltyDiagnostics condition_diagnostics(const PenaltySpec& spec,
                                         const std::vector<double>& nonzero_coeffs);

}  // namespace penlik
