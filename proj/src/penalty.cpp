#include "penlik/penalty.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "penlik/errors.hpp"

namespace penlik {

PenaltySpec PenaltySpec::scad(double lambda, double a) {
    PenaltySpec s;
    s.kind = PenaltyKind::Scad;
    s.lambda = lambda;
    s.a = a;
    validate(s);
    return s;
}

PenaltySpec PenaltySpec::hard(double lambda) {
    PenaltySpec s;
    s.kind = PenaltyKind::Hard;
    s.lambda = lambda;
    validate(s);
    return s;
}

PenaltySpec PenaltySpec::soft_l1(double lambda) {
    PenaltySpec s;
    s.kind = PenaltyKind::SoftL1;
    s.lambda = lambda;
    validate(s);
    return s;
}

PenaltySpec PenaltySpec::lq(double lambda, double q) {
    PenaltySpec s;
    s.kind = PenaltyKind::Lq;
    s.lambda = lambda;
    s.q = q;
    validate(s);
    return s;
}

std::string to_string(PenaltyKind kind) {
    switch (kind) {
        case PenaltyKind::Scad: return "scad";
        case PenaltyKind::Hard: return "hard";
        case PenaltyKind::SoftL1: return "soft";
        case PenaltyKind::Lq: return "lq";
    }
    return "scad";
}

PenaltyKind penalty_kind_from_string(const std::string& name) {
    if (name == "scad") return PenaltyKind::Scad;
    if (name == "hard") return PenaltyKind::Hard;
    if (name == "soft") return PenaltyKind::SoftL1;
    if (name == "lq") return PenaltyKind::Lq;
    throw input_error("unknown penalty kind '" + name + "' (expected scad, hard, soft, or lq)");
}

void validate(const PenaltySpec& spec) {
    if (!(spec.lambda >= 0.0) || !std::isfinite(spec.lambda))
        throw input_error("penalty: lambda must be finite and nonnegative");
    if (spec.kind == PenaltyKind::Scad && !(spec.a > 2.0))
        throw input_error("penalty: SCAD shape parameter a must exceed 2");
    if (spec.kind == PenaltyKind::Lq && !(spec.q > 0.0))
        throw input_error("penalty: Lq exponent q must be positive");
}

double penalty_value(const PenaltySpec& spec, double theta) {
    validate(spec);
    const double lam = spec.lambda;
    if (theta < 0.0) throw input_error("penalty_value: theta must be nonnegative");
    if (lam == 0.0) return 0.0;
    switch (spec.kind) {
        case PenaltyKind::Scad: {
            const double a = spec.a;
            if (theta <= lam) return lam * theta;
            if (theta <= a * lam)
                return -(theta * theta - 2.0 * a * lam * theta + lam * lam) /
                       (2.0 * (a - 1.0));
            return (a + 1.0) * lam * lam / 2.0;
        }
        case PenaltyKind::Hard: {
            if (theta < lam) return lam * lam - (theta - lam) * (theta - lam);
            return lam * lam;
        }
        case PenaltyKind::SoftL1:
            return lam * theta;
        case PenaltyKind::Lq:
            return lam * std::pow(theta, spec.q);
    }
    return 0.0;
}

double penalty_deriv(const PenaltySpec& spec, double theta) {
    validate(spec);
    if (!(theta > 0.0))
        throw input_error("penalty_deriv: theta must be strictly positive");
    const double lam = spec.lambda;
    if (lam == 0.0) return 0.0;
    switch (spec.kind) {
        case PenaltyKind::Scad: {
            const double a = spec.a;
            if (theta <= lam) return lam;
            return std::max(a * lam - theta, 0.0) / (a - 1.0);
        }
        case PenaltyKind::Hard:
            return 2.0 * std::max(lam - theta, 0.0);
        case PenaltyKind::SoftL1:
            return lam;
        case PenaltyKind::Lq:
            return spec.q * lam * std::pow(theta, spec.q - 1.0);
    }
    return 0.0;
}

double penalty_second_deriv(const PenaltySpec& spec, double theta) {
    validate(spec);
    if (!(theta > 0.0))
        throw input_error("penalty_second_deriv: theta must be strictly positive");
    const double lam = spec.lambda;
    if (lam == 0.0) return 0.0;
    switch (spec.kind) {
        case PenaltyKind::Scad: {
            const double a = spec.a;
            if (theta < lam) return 0.0;
            if (theta < a * lam) return -1.0 / (a - 1.0);  // right limit at theta == lam
            return 0.0;                                    // right limit at theta == a*lam
        }
        case PenaltyKind::Hard:
            return theta < lam ? -2.0 : 0.0;  // right limit at theta == lam
        case PenaltyKind::SoftL1:
            return 0.0;
        case PenaltyKind::Lq:
            return spec.q * (spec.q - 1.0) * lam * std::pow(theta, spec.q - 2.0);
    }
    return 0.0;
}

namespace {

double soft_rule(double z, double lam) {
    const double mag = std::abs(z) - lam;
    return mag > 0.0 ? (z > 0.0 ? mag : -mag) : 0.0;
}

// Lq objective in |theta|, with |z| passed as a positive magnitude.
double lq_objective(double theta, double az, double lam, double q) {
    const double d = az - theta;
    return 0.5 * d * d + lam * std::pow(theta, q);
}

// q > 1: the objective is strictly convex with derivative
// g(theta) = theta - |z| + q*lam*theta^(q-1), negative at 0 and positive at
// |z|; bisect the sign change.
double lq_threshold_convex(double az, double lam, double q) {
    double lo = 0.0, hi = az;
    for (int it = 0; it < 200 && hi - lo > 1e-12 * std::max(1.0, az); ++it) {
        const double mid = 0.5 * (lo + hi);
        const double g = mid - az + q * lam * std::pow(mid, q - 1.0);
        (g < 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

// q < 1: the stationarity function h(theta) = theta + q*lam*theta^(q-1) - |z|
// is minimized at theta_min = (q(1-q)lam)^(1/(2-q)); a stationary point exists
// only when h(theta_min) <= 0, and the larger root is the candidate local
// minimizer. Compare its objective against theta = 0 (ties resolve to 0).
double lq_threshold_concave(double az, double lam, double q) {
    const double theta_min = std::pow(q * (1.0 - q) * lam, 1.0 / (2.0 - q));
    auto h = [&](double t) { return t - az + q * lam * std::pow(t, q - 1.0); };
    if (theta_min >= az || h(theta_min) > 0.0) return 0.0;
    double lo = theta_min, hi = az;
    for (int it = 0; it < 200 && hi - lo > 1e-12 * std::max(1.0, az); ++it) {
        const double mid = 0.5 * (lo + hi);
        (h(mid) <= 0.0 ? lo : hi) = mid;
    }
    const double root = 0.5 * (lo + hi);
    return lq_objective(root, az, lam, q) < lq_objective(0.0, az, lam, q) ? root : 0.0;
}

}  // namespace

double univariate_threshold(const PenaltySpec& spec, double z) {
    validate(spec);
    if (!std::isfinite(z)) throw input_error("univariate_threshold: z must be finite");
    const double lam = spec.lambda;
    if (lam == 0.0) return z;
    const double az = std::abs(z);
    const double sgn = z > 0.0 ? 1.0 : (z < 0.0 ? -1.0 : 0.0);
    switch (spec.kind) {
        case PenaltyKind::Scad: {
            const double a = spec.a;
            if (az <= 2.0 * lam) return soft_rule(z, lam);
            if (az <= a * lam) return ((a - 1.0) * z - sgn * a * lam) / (a - 2.0);
            return z;
        }
        case PenaltyKind::Hard:
            return az > lam ? z : 0.0;
        case PenaltyKind::SoftL1:
            return soft_rule(z, lam);
        case PenaltyKind::Lq: {
            if (az == 0.0) return 0.0;
            if (spec.q == 1.0) return soft_rule(z, lam);
            if (spec.q > 1.0) return sgn * lq_threshold_convex(az, lam, spec.q);
            return sgn * lq_threshold_concave(az, lam, spec.q);
        }
    }
    return 0.0;
}

PenaltyDiagnostics condition_diagnostics(const PenaltySpec& spec,
                                         const std::vector<double>& nonzero_coeffs) {
    validate(spec);
    PenaltyDiagnostics d;
    const double lam = spec.lambda;

    // Singularity-at-origin proxy: p'(theta)/lambda evaluated near 0. The
    // cutoff 1e-4 separates families whose derivative stays on the lambda
    // scale (Scad/Hard/SoftL1, Lq with q <= 1) from those vanishing at the
    // origin (Lq with q > 1).
    if (lam > 0.0) {
        d.singular_at_origin = penalty_deriv(spec, 1e-8) / lam > 1e-4;
    }

    // Lipschitz proxy for the second derivative on [C*lambda, 10*C*lambda]
    // with C = a for Scad and C = 1 otherwise; flags explosive slope only.
    d.lipschitz_ok = true;
    if (lam > 0.0) {
        const double c = spec.kind == PenaltyKind::Scad ? spec.a : 1.0;
        const int grid = 64;
        double prev_theta = c * lam;
        double prev_val = penalty_second_deriv(spec, prev_theta);
        for (int i = 1; i < grid; ++i) {
            const double theta = c * lam * (1.0 + 9.0 * i / (grid - 1.0));
            const double val = penalty_second_deriv(spec, theta);
            if (std::abs(val - prev_val) > 1e6 * (theta - prev_theta)) {
                d.lipschitz_ok = false;
                break;
            }
            prev_theta = theta;
            prev_val = val;
        }
    }

    if (nonzero_coeffs.empty()) {
        d.empty_input = true;
        d.separation_ratio = std::numeric_limits<double>::infinity();
        return d;
    }

    double min_abs = std::numeric_limits<double>::infinity();
    for (double c : nonzero_coeffs) {
        if (c == 0.0)
            throw input_error("condition_diagnostics: coefficients must be nonzero");
        const double t = std::abs(c);
        min_abs = std::min(min_abs, t);
        d.a_n = std::max(d.a_n, penalty_deriv(spec, t));
        d.b_n = std::max(d.b_n, std::abs(penalty_second_deriv(spec, t)));
    }
    d.separation_ratio =
        lam == 0.0 ? std::numeric_limits<double>::infinity() : min_abs / lam;
    return d;
}

}  // namespace penlik
