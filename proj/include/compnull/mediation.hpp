#pragma once

// From raw mediation data to a standardized statistic pair (Zx, Zy) via the
// product method: an OLS fit of the mediator on the exposure gives delta_y,
// an OLS fit of the outcome on exposure and mediator gives delta_x.

#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "compnull/error.hpp"
#include "compnull/regions.hpp"

namespace compnull {

struct OlsFit {
    Eigen::VectorXd coefficients;
    /// sigma^2 (X'X)^{-1}.
    Eigen::MatrixXd covariance;
    double sigma2 = 0.0;
    double rss = 0.0;
    Eigen::Index n = 0;
    Eigen::Index p = 0;

    double se(Eigen::Index j) const { return std::sqrt(covariance(j, j)); }
};

/// Least squares by column-pivoted Householder QR. Rank deficiency is an
/// error naming the columns that are linear combinations of the others.
inline OlsFit fit_ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                      const std::vector<std::string>& column_names = {}) {
    const Eigen::Index n = X.rows(), p = X.cols();
    if (y.size() != n) throw InvalidArgument("fit_ols: design and response row counts differ");
    if (n <= p) throw DataError("fit_ols: need more rows than columns");

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    qr.setThreshold(1e-10);
    if (qr.rank() < p) {
        std::string names;
        const auto& perm = qr.colsPermutation().indices();
        for (Eigen::Index k = qr.rank(); k < p; ++k) {
            const Eigen::Index col = perm[k];
            if (!names.empty()) names += ", ";
            names += static_cast<std::size_t>(col) < column_names.size() ? column_names[col] : "column " + std::to_string(col);
        }
        throw DataError("fit_ols: design matrix is rank deficient; collinear column(s): " + names);
    }

    OlsFit fit;
    fit.n = n;
    fit.p = p;
    fit.coefficients = qr.solve(y);
    fit.rss = (y - X * fit.coefficients).squaredNorm();
    fit.sigma2 = fit.rss / static_cast<double>(n - p);

    // (X'X)^{-1} = P R^{-1} R^{-T} P'.
    const Eigen::MatrixXd R = qr.matrixR().topLeftCorner(p, p).template triangularView<Eigen::Upper>();
    const Eigen::MatrixXd Rinv =
        R.template triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(p, p));
    const Eigen::MatrixXd inner = Rinv * Rinv.transpose();
    const auto P = qr.colsPermutation();
    fit.covariance = fit.sigma2 * (P * inner * P.transpose());
    return fit;
}

struct MediationDataset {
    std::vector<double> y;
    std::vector<double> a;
    std::vector<double> m;
    /// n x k covariates.
    Eigen::MatrixXd c;
    std::vector<std::string> covariate_names;

    std::size_t size() const noexcept { return y.size(); }
};

struct MediationModel {
    enum class Type { main_effects, interaction };
    Type type = Type::main_effects;
    double a_prime = 1.0;
    double a_dblprime = 0.0;
};

struct FitResult {
    double delta_x_hat = 0.0;
    double delta_y_hat = 0.0;
    double se_x = 0.0;
    double se_y = 0.0;
    std::size_t n = 0;
    MediationModel model;
};

struct ProductMethodResult {
    FitResult fit;
    TestStatisticPair z;
    OlsFit mediator_fit;
    OlsFit outcome_fit;
};

inline ProductMethodResult product_method_stats(const MediationDataset& d, const MediationModel& model = {}) {
    const auto n = static_cast<Eigen::Index>(d.size());
    const Eigen::Index k = d.c.cols();
    if (static_cast<Eigen::Index>(d.a.size()) != n || static_cast<Eigen::Index>(d.m.size()) != n ||
        (k > 0 && d.c.rows() != n))
        throw InvalidArgument("product_method_stats: column lengths differ");
    const bool inter = model.type == MediationModel::Type::interaction;
    const Eigen::Index outcome_cols = 3 + (inter ? 1 : 0) + k;
    if (n <= outcome_cols + 2)
        throw DataError("product_method_stats: need more than " + std::to_string(outcome_cols + 2) + " rows, got " +
                        std::to_string(n));
    if (inter && model.a_prime == model.a_dblprime)
        throw InvalidArgument("product_method_stats: interaction model needs a_prime != a_dblprime");

    const Eigen::Map<const Eigen::VectorXd> Y(d.y.data(), n), A(d.a.data(), n), M(d.m.data(), n);

    // Mediator model: M ~ 1 + A + C.
    Eigen::MatrixXd Xm(n, 2 + k);
    Xm.col(0).setOnes();
    Xm.col(1) = A;
    if (k > 0) Xm.rightCols(k) = d.c;
    std::vector<std::string> names_m{"(intercept)", "a"};
    names_m.insert(names_m.end(), d.covariate_names.begin(), d.covariate_names.end());

    // Outcome model: Y ~ 1 + A + M [+ A*M] + C.
    Eigen::MatrixXd Xy(n, outcome_cols);
    Xy.col(0).setOnes();
    Xy.col(1) = A;
    Xy.col(2) = M;
    std::vector<std::string> names_y{"(intercept)", "a", "m"};
    if (inter) {
        Xy.col(3) = A.cwiseProduct(M);
        names_y.push_back("a:m");
    }
    if (k > 0) Xy.rightCols(k) = d.c;
    names_y.insert(names_y.end(), d.covariate_names.begin(), d.covariate_names.end());

    ProductMethodResult out;
    out.mediator_fit = fit_ols(Xm, M, names_m);
    out.outcome_fit = fit_ols(Xy, Y, names_y);
    const auto& fm = out.mediator_fit;
    const auto& fy = out.outcome_fit;

    FitResult& f = out.fit;
    f.n = d.size();
    f.model = model;
    if (inter) {
        const double ap = model.a_prime;
        f.delta_x_hat = fy.coefficients[2] + fy.coefficients[3] * ap;
        f.se_x = std::sqrt(fy.covariance(2, 2) + ap * ap * fy.covariance(3, 3) + 2.0 * ap * fy.covariance(2, 3));
        const double contrast = model.a_prime - model.a_dblprime;
        f.delta_y_hat = fm.coefficients[1] * contrast;
        f.se_y = std::fabs(contrast) * fm.se(1);
    } else {
        f.delta_x_hat = fy.coefficients[2];
        f.se_x = fy.se(2);
        f.delta_y_hat = fm.coefficients[1];
        f.se_y = fm.se(1);
    }
    if (!(f.se_x > 0.0 && f.se_y > 0.0))
        throw DataError("product_method_stats: a standard error is zero (the data are fitted exactly)");

    const double rn = std::sqrt(static_cast<double>(n));
    out.z.zx = f.delta_x_hat / f.se_x;
    out.z.zy = f.delta_y_hat / f.se_y;
    out.z.provenance = Provenance{f.delta_x_hat, f.delta_y_hat, f.se_x * rn, f.se_y * rn, static_cast<double>(n)};
    return out;
}

/// Standardize estimates whose covariance is diagonal. A nonzero covariance
/// between the two estimates is refused rather than whitened.
inline TestStatisticPair standardize_pair(double delta_x_hat, double delta_y_hat, double var_x, double var_y,
                                          double cov_xy = 0.0) {
    if (!(var_x > 0.0 && var_y > 0.0)) throw InvalidArgument("standardize_pair: variances must be positive");
    if (std::fabs(cov_xy) > 1e-12 * std::sqrt(var_x * var_y))
        throw InvalidArgument("standardize_pair: only a diagonal covariance between the two estimates is supported");
    return {delta_x_hat / std::sqrt(var_x), delta_y_hat / std::sqrt(var_y), std::nullopt};
}

struct CsvSchema {
    std::string y;
    std::string a;
    std::string m;
    std::vector<std::string> covariates;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (char ch : line) {
        if (ch == '"') {
            quoted = !quoted;
        } else if (ch == ',' && !quoted) {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    out.push_back(cur);
    for (auto& s : out) {
        const auto b = s.find_first_not_of(" \t");
        const auto e = s.find_last_not_of(" \t");
        s = b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
    }
    return out;
}

inline std::optional<double> parse_double(std::string_view s) {
    if (s.empty()) return std::nullopt;
    if (s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

} // namespace detail

inline MediationDataset parse_mediation_csv(std::istream& in, const CsvSchema& schema, const std::string& source = "<input>") {
    std::string line;
    if (!std::getline(in, line)) throw DataError(source + ": empty file (no header row)");
    const auto header = detail::split_csv_line(line);
    const auto find = [&](const std::string& name) {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        throw DataError(source + ": missing column \"" + name + "\"");
    };
    const std::size_t iy = find(schema.y), ia = find(schema.a), im = find(schema.m);
    std::vector<std::size_t> ic;
    for (const auto& c : schema.covariates) ic.push_back(find(c));

    MediationDataset d;
    d.covariate_names = schema.covariates;
    std::vector<double> cov;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto cells = detail::split_csv_line(line);
        const auto get = [&](std::size_t col) {
            if (col >= cells.size())
                throw DataError(source + ": line " + std::to_string(lineno) + ", column \"" + header[col] + "\": missing value");
            const auto v = detail::parse_double(cells[col]);
            if (!v)
                throw DataError(source + ": line " + std::to_string(lineno) + ", column \"" + header[col] +
                                "\": not a finite number: \"" + cells[col] + "\"");
            return *v;
        };
        d.y.push_back(get(iy));
        d.a.push_back(get(ia));
        d.m.push_back(get(im));
        for (auto c : ic) cov.push_back(get(c));
    }
    if (d.y.empty()) throw DataError(source + ": no data rows after the header");
    const auto n = static_cast<Eigen::Index>(d.y.size());
    const auto k = static_cast<Eigen::Index>(ic.size());
    d.c.resize(n, k);
    for (Eigen::Index r = 0; r < n; ++r)
        for (Eigen::Index j = 0; j < k; ++j) d.c(r, j) = cov[static_cast<std::size_t>(r * k + j)];
    return d;
}

inline MediationDataset load_csv(const std::string& path, const CsvSchema& schema) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    return parse_mediation_csv(in, schema, path);
}

} // namespace compnull
