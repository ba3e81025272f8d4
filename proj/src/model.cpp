#include "penlik/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "penlik/errors.hpp"

namespace penlik {

void validate(const Dataset& data) {
    if (data.design.rows() < 1 || data.design.cols() < 1)
        throw input_error("dataset: design matrix must be at least 1x1");
    if (data.design.rows() != data.response.size())
        throw input_error("dataset: design row count does not match response length");
    if (!data.design.allFinite() || !data.response.allFinite())
        throw input_error("dataset: all entries must be finite");
    if (!data.column_names.empty() &&
        static_cast<int>(data.column_names.size()) != data.design.cols())
        throw input_error("dataset: column name count does not match design columns");
}

GaussianModel::GaussianModel(Dataset d, double sigma2_in)
    : data(std::move(d)), sigma2(sigma2_in) {
    validate(data);
    if (!(sigma2 > 0.0) || !std::isfinite(sigma2))
        throw input_error("model: sigma2 must be positive and finite");
}

namespace {
void check_beta(const GaussianModel& model, const Eigen::VectorXd& beta) {
    if (beta.size() != model.data.design.cols())
        throw input_error("model: coefficient vector length does not match design");
}
}  // namespace

double log_likelihood(const GaussianModel& model, const Eigen::VectorXd& beta) {
    check_beta(model, beta);
    const Eigen::VectorXd resid = model.data.response - model.data.design * beta;
    return -resid.squaredNorm() / (2.0 * model.sigma2);
}

Eigen::VectorXd score(const GaussianModel& model, const Eigen::VectorXd& beta) {
    check_beta(model, beta);
    const Eigen::VectorXd resid = model.data.response - model.data.design * beta;
    return model.data.design.transpose() * resid / model.sigma2;
}

Eigen::MatrixXd hessian(const GaussianModel& model) {
    return -(model.data.design.transpose() * model.data.design) / model.sigma2;
}

Eigen::MatrixXd information(const GaussianModel& model) {
    // Computed as -hessian/n so the identity holds bit-exactly.
    const double n = static_cast<double>(model.data.design.rows());
    return -hessian(model) / n;
}

Eigen::MatrixXd spline_basis(const Eigen::VectorXd& x, const SplineSpec& spec) {
    for (std::size_t k = 1; k < spec.knots.size(); ++k)
        if (!(spec.knots[k] > spec.knots[k - 1]))
            throw input_error("spline_basis: knots must be strictly increasing");
    const int n = static_cast<int>(x.size());
    const int K = static_cast<int>(spec.knots.size());
    Eigen::MatrixXd basis(n, 2 + K);
    basis.col(0) = x;
    basis.col(1) = x.array().square();
    for (int k = 0; k < K; ++k) {
        basis.col(2 + k) =
            (x.array() - spec.knots[k]).max(0.0).square();
    }
    return basis;
}

double quantile_type7(std::vector<double> values, double prob) {
    if (values.empty()) throw input_error("quantile: empty sample");
    if (!(prob >= 0.0 && prob <= 1.0))
        throw input_error("quantile: probability must lie in [0,1]");
    std::sort(values.begin(), values.end());
    const double h = (static_cast<double>(values.size()) - 1.0) * prob;
    const std::size_t lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = h - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

SplineSpec knots_from_septile_quantiles(const Eigen::VectorXd& x) {
    std::vector<double> sample(x.data(), x.data() + x.size());
    SplineSpec spec;
    for (int i = 2; i <= 6; ++i)
        spec.knots.push_back(quantile_type7(sample, i / 7.0));
    return spec;
}

Eigen::VectorXd per_covariate_lambdas(double base_lambda,
                                      const Eigen::VectorXd& ols_standard_errors) {
    if (!(base_lambda >= 0.0))
        throw input_error("per_covariate_lambdas: base lambda must be nonnegative");
    for (int j = 0; j < ols_standard_errors.size(); ++j)
        if (!(ols_standard_errors[j] > 0.0))
            throw input_error("per_covariate_lambdas: standard errors must be positive");
    return base_lambda * ols_standard_errors;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        // trim surrounding whitespace
        const auto b = cell.find_first_not_of(" \t\r");
        const auto e = cell.find_last_not_of(" \t\r");
        cells.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
    }
    if (!line.empty() && line.back() == ',') cells.push_back("");
    return cells;
}

double parse_cell(const std::string& cell, std::size_t row, std::size_t col) {
    const char* begin = cell.c_str();
    char* end = nullptr;
    const double value = std::strtod(begin, &end);
    if (cell.empty() || end != begin + cell.size())
        throw input_error("csv: row " + std::to_string(row) + " column " +
                          std::to_string(col) + ": not numeric: \"" + cell + "\"");
    return value;
}

}  // namespace

Dataset read_csv(std::istream& in, bool header, const std::string& response_selector) {
    std::string line;
    std::vector<std::string> names;
    std::vector<std::vector<double>> rows;
    std::size_t lineno = 0;

    if (header) {
        if (!std::getline(in, line)) throw input_error("csv: empty input");
        ++lineno;
        names = split_csv_line(line);
    }

    std::size_t width = names.size();
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto cells = split_csv_line(line);
        if (width == 0) width = cells.size();
        if (cells.size() != width)
            throw input_error("csv: row " + std::to_string(lineno) + " has " +
                              std::to_string(cells.size()) + " cells, expected " +
                              std::to_string(width));
        std::vector<double> parsed(width);
        for (std::size_t c = 0; c < width; ++c)
            parsed[c] = parse_cell(cells[c], lineno, c + 1);
        rows.push_back(std::move(parsed));
    }
    if (rows.empty()) throw input_error("csv: no data rows");

    // Resolve the response column: by header name first, else 1-based index.
    std::size_t resp = width;
    if (!names.empty()) {
        for (std::size_t c = 0; c < names.size(); ++c)
            if (names[c] == response_selector) resp = c;
    }
    if (resp == width) {
        char* end = nullptr;
        const long idx = std::strtol(response_selector.c_str(), &end, 10);
        if (end == response_selector.c_str() + response_selector.size() && idx >= 1 &&
            static_cast<std::size_t>(idx) <= width) {
            resp = static_cast<std::size_t>(idx - 1);
        } else {
            throw input_error("csv: response column \"" + response_selector +
                              "\" not found");
        }
    }

    Dataset data;
    const std::size_t n = rows.size();
    data.design.resize(static_cast<int>(n), static_cast<int>(width - 1));
    data.response.resize(static_cast<int>(n));
    for (std::size_t r = 0; r < n; ++r) {
        int jc = 0;
        for (std::size_t c = 0; c < width; ++c) {
            if (c == resp)
                data.response[static_cast<int>(r)] = rows[r][c];
            else
                data.design(static_cast<int>(r), jc++) = rows[r][c];
        }
    }
    if (!names.empty()) {
        for (std::size_t c = 0; c < width; ++c)
            if (c != resp) data.column_names.push_back(names[c]);
    }
    validate(data);
    return data;
}

Dataset read_csv_file(const std::string& path, bool header,
                      const std::string& response_selector) {
    std::ifstream in(path);
    if (!in) throw input_error("csv: cannot open " + path);
    return read_csv(in, header, response_selector);
}

}  // namespace penlik
