#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <penlik/errors.hpp>
#include <penlik/inference.hpp>
#include <penlik/model.hpp>
#include <penlik/optimizer.hpp>
#include <penlik/penalty.hpp>

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <string>
#include <vector>

using penlik::Dataset;
using penlik::FitConfig;
using penlik::FitResult;
using penlik::GaussianModel;
using penlik::PenaltySpec;

namespace {

GaussianModel make_instance(std::mt19937_64& eng, int n, int p,
                            const std::vector<double>& signal, double noise_sd = 1.0) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Dataset data;
    data.design.resize(n, p);
    data.response.resize(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < p; ++j) data.design(i, j) = gauss(eng);
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    for (std::size_t j = 0; j < signal.size() && j < std::size_t(p); ++j) beta[j] = signal[j];
    for (int i = 0; i < n; ++i)
        data.response[i] = data.design.row(i).dot(beta) + noise_sd * gauss(eng);
    return GaussianModel(std::move(data), 1.0);
}

}  // namespace

TEST_CASE("sandwich at lambda = 0 tracks the classical least-squares covariance") {
    std::mt19937_64 eng(1001);
    GaussianModel model = make_instance(eng, 2000, 3, {1.0, -2.0, 0.5}, 1.5);
    const FitResult fit = penlik::fit_penalized(model, PenaltySpec::scad(0.0));
    const auto est = penlik::sandwich_covariance(model, fit, PenaltySpec::scad(0.0));
    REQUIRE(est.active_indices.size() == 3);

    const Eigen::MatrixXd gram_n = model.data.design.transpose() * model.data.design / 2000.0;
    const Eigen::MatrixXd classical = est.sigma2_hat * gram_n.inverse() / 2000.0;
    // Entrywise 15% band; near-zero off-diagonal targets get a floor at 15%
    // of the dominant diagonal scale so the comparison stays meaningful.
    const double floor = 0.15 * classical.diagonal().maxCoeff();
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c)
            CHECK(std::fabs(est.matrix(r, c) - classical(r, c)) <=
                  std::max(0.15 * std::fabs(classical(r, c)), floor));
}

TEST_CASE("sandwich for Scad beyond a*lambda coincides exactly with the lambda = 0 formula") {
    std::mt19937_64 eng(1002);
    GaussianModel model = make_instance(eng, 300, 3, {5.0, -6.0, 4.0});
    const PenaltySpec scad = PenaltySpec::scad(0.5, 3.7);  // a*lambda = 1.85 << min |beta|
    const FitResult fit_scad = penlik::fit_penalized(model, scad);
    const FitResult fit_ols = penlik::fit_penalized(model, PenaltySpec::scad(0.0));
    REQUIRE(fit_scad.active_set.size() == 3);
    CHECK((fit_scad.beta - fit_ols.beta).cwiseAbs().maxCoeff() == 0.0);

    const auto cov_scad = penlik::sandwich_covariance(model, fit_scad, scad);
    const auto cov_ols = penlik::sandwich_covariance(model, fit_ols, PenaltySpec::scad(0.0));
    CHECK((cov_scad.matrix - cov_ols.matrix).cwiseAbs().maxCoeff() == 0.0);
    CHECK(cov_scad.sigma2_hat == cov_ols.sigma2_hat);
}

TEST_CASE("sandwich on a ones column reproduces the hand-computed variance of the mean") {
    // With an intercept-only design the sandwich collapses to
    // sum((y_i - ybar)^2) / n^2: residuals are centered, so the score
    // covariance is RSS/(n sigma^4) and each bracket contributes sigma^2/n.
    Dataset data;
    data.design = Eigen::MatrixXd::Ones(5, 1);
    data.response.resize(5);
    data.response << 1.0, 2.0, 4.0, 4.5, 8.5;
    GaussianModel model(data, 1.0);
    const FitResult fit = penlik::fit_penalized(model, PenaltySpec::scad(0.0));
    const auto est = penlik::sandwich_covariance(model, fit, PenaltySpec::scad(0.0));

    const double ybar = data.response.mean();
    const double rss = (data.response.array() - ybar).square().sum();
    REQUIRE(est.matrix.rows() == 1);
    CHECK(est.matrix(0, 0) == doctest::Approx(rss / 25.0).epsilon(1e-10));
    CHECK(est.standard_errors[0] == doctest::Approx(std::sqrt(rss / 25.0)).epsilon(1e-10));
    CHECK(est.sigma2_hat == doctest::Approx(rss / 4.0).epsilon(1e-12));
}

TEST_CASE("sandwich estimates are symmetric and positive semidefinite when well conditioned") {
    std::mt19937_64 eng(1003);
    for (int rep = 0; rep < 25; ++rep) {
        GaussianModel model = make_instance(eng, 150, 5, {2.0, -1.5, 1.0});
        const PenaltySpec spec =
            rep % 2 ? PenaltySpec::scad(0.1 + 0.05 * (rep % 5), 3.7) : PenaltySpec::soft_l1(0.1);
        const FitResult fit = penlik::fit_penalized(model, spec);
        if (fit.active_set.empty()) continue;
        const auto est = penlik::sandwich_covariance(model, fit, spec);
        if (est.bracket_condition >= 1e8) continue;
        CHECK((est.matrix - est.matrix.transpose()).cwiseAbs().maxCoeff() < 1e-10);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(est.matrix);
        CHECK(eig.eigenvalues().minCoeff() >= -1e-8);
        for (int j = 0; j < est.standard_errors.size(); ++j)
            CHECK(est.standard_errors[j] >= 0.0);
    }
}

TEST_CASE("sandwich rejects empty active sets and near-singular brackets") {
    std::mt19937_64 eng(1004);
    GaussianModel model = make_instance(eng, 60, 3, {});
    model.data.response.setZero();
    const FitResult empty = penlik::fit_penalized(model, PenaltySpec::scad(0.5));
    REQUIRE(empty.active_set.empty());
    CHECK_THROWS_AS(penlik::sandwich_covariance(model, empty, PenaltySpec::scad(0.5)),
                    penlik::input_error);

    // Collinear active columns make the bracket numerically singular; the
    // error message reports the measured condition number.
    GaussianModel collinear = make_instance(eng, 60, 2, {1.0, 1.0});
    collinear.data.design.col(1) =
        collinear.data.design.col(0) +
        1e-10 * Eigen::VectorXd::Ones(60);
    collinear.data.response = collinear.data.design.col(0) * 2.0 +
                              0.1 * Eigen::VectorXd::Random(60);
    FitResult synthetic;
    synthetic.beta = Eigen::VectorXd::Ones(2);
    synthetic.active_set = {0, 1};
    synthetic.lambda_used = Eigen::VectorXd::Zero(2);
    synthetic.converged = true;
    try {
        penlik::sandwich_covariance(collinear, synthetic, PenaltySpec::scad(0.0));
        FAIL("expected a numeric error for the singular bracket");
    } catch (const penlik::numeric_error& err) {
        CHECK(std::string(err.what()).find("condition") != std::string::npos);
    }
}

TEST_CASE("asymptotic covariance: closed-form reductions") {
    // sigma_lambda = 0: plain inverse information.
    Eigen::MatrixXd info(2, 2);
    info << 2.0, 0.3, 0.3, 1.0;
    const Eigen::MatrixXd plain =
        penlik::asymptotic_covariance(info, Eigen::VectorXd::Zero(2));
    CHECK((plain - info.inverse()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((plain * info - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-8);

    // Identity information with unit curvature: (1/4) I.
    const Eigen::MatrixXd quarter = penlik::asymptotic_covariance(
        Eigen::MatrixXd::Identity(3, 3), Eigen::VectorXd::Ones(3));
    CHECK((quarter - 0.25 * Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-12);

    // Diagonal information: elementwise I_jj / (I_jj + s_j)^2.
    Eigen::MatrixXd diag = Eigen::Vector3d(4.0, 9.0, 0.5).asDiagonal();
    Eigen::VectorXd s(3);
    s << 1.0, -0.37, 0.0;
    const Eigen::MatrixXd out = penlik::asymptotic_covariance(diag, s);
    for (int j = 0; j < 3; ++j) {
        const double expected = diag(j, j) / std::pow(diag(j, j) + s[j], 2);
        CHECK(out(j, j) == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("asymptotic summary vanishes for Scad estimates beyond a*lambda") {
    std::mt19937_64 eng(1005);
    GaussianModel model = make_instance(eng, 250, 4, {5.0, -4.0, 3.0});
    const PenaltySpec scad = PenaltySpec::scad(0.4, 3.7);
    const FitResult fit = penlik::fit_penalized(model, scad);
    REQUIRE(!fit.active_set.empty());
    double min_active = 1e300;
    for (int j : fit.active_set) min_active = std::min(min_active, std::fabs(fit.beta[j]));
    REQUIRE(min_active > 3.7 * 0.4);

    const auto summary = penlik::asymptotic_summary(model, fit, scad);
    CHECK(summary.sigma_lambda.cwiseAbs().maxCoeff() == 0.0);
    CHECK(summary.bias_vector.cwiseAbs().maxCoeff() == 0.0);
    // Covariance then reduces to the inverse information on the active set.
    Eigen::MatrixXd Xa(250, int(fit.active_set.size()));
    for (std::size_t c = 0; c < fit.active_set.size(); ++c)
        Xa.col(int(c)) = model.data.design.col(fit.active_set[c]);
    const Eigen::MatrixXd info = Xa.transpose() * Xa / 250.0;
    CHECK((summary.asymptotic_cov - info.inverse()).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("likelihood-ratio test: vacuous constraints give a unit p-value") {
    std::mt19937_64 eng(1006);
    // beta_3 and beta_4 are true (and estimated) zeros at this penalty level.
    GaussianModel model = make_instance(eng, 200, 5, {3.0, -2.0});
    const PenaltySpec spec = PenaltySpec::scad(0.5, 3.7);
    const FitResult fit = penlik::fit_penalized(model, spec);
    REQUIRE(fit.beta[3] == 0.0);
    REQUIRE(fit.beta[4] == 0.0);

    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(2, 5);
    A(0, 3) = 1.0;
    A(1, 4) = 1.0;
    const auto test = penlik::lr_test(model, spec, A);
    CHECK(test.statistic == 0.0);
    CHECK(test.p_value == 1.0);
    CHECK(test.df == 2);
    CHECK_FALSE(test.local_optimum_warning);
}

TEST_CASE("likelihood-ratio test: strong violated constraint is detected") {
    std::mt19937_64 eng(1007);
    GaussianModel model = make_instance(eng, 200, 4, {4.0, -3.0});
    const PenaltySpec spec = PenaltySpec::scad(0.2, 3.7);
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(1, 4);
    A(0, 0) = 1.0;  // zeroes the strongest coefficient
    const auto test = penlik::lr_test(model, spec, A);
    CHECK(test.statistic > 0.0);
    CHECK(test.p_value < 1e-6);
    CHECK(test.df == 1);
    CHECK(test.statistic ==
          doctest::Approx(2.0 * (test.unconstrained_objective - test.constrained_objective)));
    CHECK(test.p_value == doctest::Approx(penlik::chisq_sf(test.statistic, 1)).epsilon(1e-12));
}

TEST_CASE("likelihood-ratio test: nesting and row-scaling invariance") {
    std::mt19937_64 eng(1008);
    GaussianModel model = make_instance(eng, 150, 5, {2.5, -1.5, 1.0, 0.4});
    const PenaltySpec spec = PenaltySpec::soft_l1(0.05);

    Eigen::MatrixXd A1 = Eigen::MatrixXd::Zero(1, 5);
    A1(0, 3) = 1.0;
    Eigen::MatrixXd A2 = Eigen::MatrixXd::Zero(2, 5);
    A2(0, 3) = 1.0;
    A2(1, 2) = 1.0;
    const auto t1 = penlik::lr_test(model, spec, A1);
    const auto t2 = penlik::lr_test(model, spec, A2);
    CHECK(t2.statistic >= t1.statistic - 1e-6);  // larger nested constraint set

    // The constraint defines a subspace: rescaling rows must not move T.
    const auto scaled = penlik::lr_test(model, spec, 3.25 * A1);
    CHECK(scaled.statistic == doctest::Approx(t1.statistic).epsilon(1e-9));

    CHECK_THROWS_AS(penlik::lr_test(model, spec, Eigen::MatrixXd(0, 5)), penlik::input_error);
}

TEST_CASE("chi-square survival function: pinned values and closed forms") {
    CHECK(penlik::chisq_sf(0.0, 1) == 1.0);
    CHECK(penlik::chisq_sf(0.0, 7) == 1.0);
    // Two degrees of freedom: exactly exp(-x/2).
    CHECK(penlik::chisq_sf(1.386294, 2) == doctest::Approx(0.5).epsilon(1e-6));
    for (double x : {0.01, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 25.0, 60.0})
        CHECK(std::fabs(penlik::chisq_sf(x, 2) - std::exp(-x / 2.0)) < 1e-12);
    // One degree of freedom: two-sided normal tail, 3.841459 -> 0.05.
    const double normal_tail = std::erfc(1.959964 / std::sqrt(2.0));
    CHECK(penlik::chisq_sf(3.841459, 1) == doctest::Approx(normal_tail).epsilon(1e-6));
    CHECK(penlik::chisq_sf(3.841459, 1) == doctest::Approx(0.05).epsilon(1e-4));
    for (double x : {0.05, 0.3, 1.0, 4.0, 9.0, 16.0})
        CHECK(std::fabs(penlik::chisq_sf(x, 1) - std::erfc(std::sqrt(x / 2.0))) < 1e-10);
    // Four degrees of freedom: exp(-x/2) (1 + x/2).
    for (double x : {0.2, 1.0, 3.0, 8.0, 20.0})
        CHECK(std::fabs(penlik::chisq_sf(x, 4) - std::exp(-x / 2.0) * (1.0 + x / 2.0)) < 1e-10);

    CHECK_THROWS_AS(penlik::chisq_sf(-0.1, 2), penlik::input_error);
    CHECK_THROWS_AS(penlik::chisq_sf(1.0, 0), penlik::input_error);
}

TEST_CASE("chi-square survival function is strictly decreasing and well ranged") {
    for (int q : {1, 2, 3, 5, 10, 30}) {
        double prev = 1.0;
        for (int i = 1; i <= 200; ++i) {
            const double x = 0.05 * i * q;
            const double s = penlik::chisq_sf(x, q);
            CHECK(s >= 0.0);
            CHECK(s <= 1.0);
            CHECK(s < prev);
            prev = s;
        }
        // The median of a chi-square sits close to its mean for moderate q.
        const double at_mean = penlik::chisq_sf(double(q), q);
        CHECK(at_mean > 0.25);
        CHECK(at_mean < 0.75);
    }
}
