#pragma once

// Bounded-variable revised primal simplex for
//
//     minimize c'x  subject to  A x <= b,  0 <= x <= u,
//
// with A sparse and few rows compared to columns. Bounds are handled
// implicitly (nonbasic variables sit at either bound), so the box
// constraints never enter the basis. The basis inverse is kept dense
// and updated by elementary row operations, with periodic refactoring.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "compnull/error.hpp"

namespace compnull {

enum class LpStatus { optimal, infeasible, unbounded, iteration_limit };

inline std::string_view to_string(LpStatus s) {
    switch (s) {
    case LpStatus::optimal: return "optimal";
    case LpStatus::infeasible: return "infeasible";
    case LpStatus::unbounded: return "unbounded";
    case LpStatus::iteration_limit: return "iteration_limit";
    }
    return "unknown";
}

struct SimplexOptions {
    long max_iterations = 500000;
    int refactor_interval = 64;
    /// Columns are priced in this many rotating segments.
    int pricing_segments = 8;
    double optimality_tol = 1e-11;
    double feasibility_tol = 1e-10;
    double pivot_tol = 1e-10;
    /// Optional fast A'w for the unscaled constraint matrix. When given, every
    /// column is priced on each iteration instead of one segment.
    std::function<void(const Eigen::VectorXd& w, Eigen::VectorXd& out)> transpose_product;
};

struct SimplexResult {
    LpStatus status = LpStatus::iteration_limit;
    Eigen::VectorXd x;
    /// Row multipliers (<= 0 for a minimization with <= rows).
    Eigen::VectorXd duals;
    double objective = 0.0;
    double dual_bound = -std::numeric_limits<double>::infinity();
    /// (objective - dual_bound) / (1 + |objective|).
    double relative_gap = std::numeric_limits<double>::infinity();
    long iterations = 0;
    long bound_flips = 0;
};

namespace detail {

class BoundedSimplex {
public:
    using SpMat = Eigen::SparseMatrix<double, Eigen::ColMajor>;

    BoundedSimplex(const SpMat& A, const Eigen::VectorXd& b, const Eigen::VectorXd& c, const Eigen::VectorXd& upper,
                   const SimplexOptions& opt)
        : opt_(opt), m_(A.rows()), n_(A.cols()) {
        // Row and cost scaling keep tolerances meaningful.
        row_scale_ = Eigen::VectorXd::Zero(m_);
        for (Eigen::Index j = 0; j < A.outerSize(); ++j)
            for (SpMat::InnerIterator it(A, j); it; ++it)
                row_scale_[it.row()] = std::max(row_scale_[it.row()], std::fabs(it.value()));
        for (Eigen::Index i = 0; i < m_; ++i) row_scale_[i] = row_scale_[i] > 0.0 ? 1.0 / row_scale_[i] : 1.0;
        A_ = row_scale_.asDiagonal() * A;
        A_.makeCompressed();
        b_ = row_scale_.cwiseProduct(b);
        const double cmax = c.size() ? c.cwiseAbs().maxCoeff() : 0.0;
        cost_scale_ = cmax > 0.0 ? 1.0 / cmax : 1.0;
        c_ = c * cost_scale_;

        n_art_ = 0;
        for (Eigen::Index i = 0; i < m_; ++i)
            if (b_[i] < 0.0) ++n_art_;
        total_ = n_ + m_ + n_art_;
        lower_.assign(static_cast<std::size_t>(total_), 0.0);
        upper_.assign(static_cast<std::size_t>(total_), kInfD);
        for (Eigen::Index j = 0; j < n_; ++j) upper_[j] = upper[j];
        art_row_.assign(static_cast<std::size_t>(n_art_), 0);
        x_.assign(static_cast<std::size_t>(total_), 0.0);
        at_upper_.assign(static_cast<std::size_t>(total_), 0);
        basis_pos_.assign(static_cast<std::size_t>(total_), -1);
        basis_.resize(static_cast<std::size_t>(m_));
        Eigen::Index a = 0;
        for (Eigen::Index i = 0; i < m_; ++i) {
            if (b_[i] < 0.0) {
                art_row_[a] = i;
                basis_[i] = n_ + m_ + a;
                ++a;
            } else {
                basis_[i] = n_ + i;
            }
            basis_pos_[basis_[i]] = i;
        }
    }

    SimplexResult run() {
        SimplexResult res;
        refactor();
        if (n_art_ > 0) {
            cost_.assign(static_cast<std::size_t>(total_), 0.0);
            for (Eigen::Index a = 0; a < n_art_; ++a) cost_[n_ + m_ + a] = 1.0;
            const auto st = iterate(res);
            if (st == LpStatus::iteration_limit) return finish(res, st);
            double infeas = 0.0;
            for (Eigen::Index a = 0; a < n_art_; ++a) infeas += x_[n_ + m_ + a];
            if (infeas > opt_.feasibility_tol * std::max<double>(1.0, static_cast<double>(m_)))
                return finish(res, LpStatus::infeasible);
            for (Eigen::Index a = 0; a < n_art_; ++a) upper_[n_ + m_ + a] = 0.0;
        }
        cost_.assign(static_cast<std::size_t>(total_), 0.0);
        for (Eigen::Index j = 0; j < n_; ++j) cost_[j] = c_[j];
        return finish(res, iterate(res));
    }

private:
    static constexpr double kInfD = std::numeric_limits<double>::infinity();

    // Column j of [A I -E] scattered into a dense vector.
    void load_column(Eigen::Index j, Eigen::VectorXd& out) const {
        out.setZero(m_);
        if (j < n_) {
            for (SpMat::InnerIterator it(A_, j); it; ++it) out[it.row()] = it.value();
        } else if (j < n_ + m_) {
            out[j - n_] = 1.0;
        } else {
            out[art_row_[j - n_ - m_]] = -1.0;
        }
    }

    double column_dot(Eigen::Index j, const Eigen::VectorXd& v) const {
        if (j < n_) {
            double s = 0.0;
            for (SpMat::InnerIterator it(A_, j); it; ++it) s += it.value() * v[it.row()];
            return s;
        }
        if (j < n_ + m_) return v[j - n_];
        return -v[art_row_[j - n_ - m_]];
    }

    void refactor() {
        Eigen::MatrixXd B(m_, m_);
        Eigen::VectorXd col(m_);
        for (Eigen::Index i = 0; i < m_; ++i) {
            load_column(basis_[i], col);
            B.col(i) = col;
        }
        binv_ = Eigen::PartialPivLU<Eigen::MatrixXd>(B).inverse();
        // x_B = B^{-1}(b - N x_N)
        Eigen::VectorXd rhs = b_;
        for (Eigen::Index j = 0; j < total_; ++j) {
            if (basis_pos_[j] >= 0 || x_[j] == 0.0) continue;
            if (j < n_) {
                for (SpMat::InnerIterator it(A_, j); it; ++it) rhs[it.row()] -= it.value() * x_[j];
            } else if (j < n_ + m_) {
                rhs[j - n_] -= x_[j];
            } else {
                rhs[art_row_[j - n_ - m_]] += x_[j];
            }
        }
        const Eigen::VectorXd xb = binv_ * rhs;
        for (Eigen::Index i = 0; i < m_; ++i) x_[basis_[i]] = xb[i];
        pivots_since_refactor_ = 0;
    }

    Eigen::VectorXd compute_duals() const {
        Eigen::VectorXd cb(m_);
        for (Eigen::Index i = 0; i < m_; ++i) cb[i] = cost_[basis_[i]];
        return binv_.transpose() * cb;
    }

    double reduced_cost(Eigen::Index j, const Eigen::VectorXd& y) const { return cost_[j] - column_dot(j, y); }

    // Attractiveness of moving nonbasic j off its bound; 0 if not eligible.
    double eligibility(Eigen::Index j, double d) const {
        if (basis_pos_[j] >= 0 || !(upper_[j] > lower_[j])) return 0.0;
        if (at_upper_[j]) return d > opt_.optimality_tol ? d : 0.0;
        return d < -opt_.optimality_tol ? -d : 0.0;
    }

    Eigen::Index price(const Eigen::VectorXd& y, bool bland) {
        if (opt_.transpose_product) return price_full(y, bland);
        if (bland) {
            for (Eigen::Index j = 0; j < total_; ++j)
                if (eligibility(j, reduced_cost(j, y)) > 0.0) return j;
            return -1;
        }
        const int segs = std::max(1, opt_.pricing_segments);
        const Eigen::Index seg_len = (total_ + segs - 1) / segs;
        for (int s = 0; s < segs; ++s) {
            const int seg = (segment_ + s) % segs;
            const Eigen::Index lo = seg * seg_len, hi = std::min(total_, lo + seg_len);
            Eigen::Index best = -1;
            double best_score = 0.0;
            for (Eigen::Index j = lo; j < hi; ++j) {
                const double score = eligibility(j, reduced_cost(j, y));
                if (score > best_score) {
                    best_score = score;
                    best = j;
                }
            }
            if (best >= 0) {
                segment_ = seg;
                return best;
            }
        }
        return -1;
    }

    Eigen::Index price_full(const Eigen::VectorXd& y, bool bland) {
        opt_.transpose_product(row_scale_.cwiseProduct(y), aty_);
        if (aty_.size() != n_) throw InvalidArgument("transpose_product: wrong output length");
        Eigen::Index best = -1;
        double best_score = 0.0;
        for (Eigen::Index j = 0; j < total_; ++j) {
            const double d = j < n_ ? cost_[j] - aty_[j] : reduced_cost(j, y);
            const double score = eligibility(j, d);
            if (score > best_score) {
                if (bland) return j;
                best_score = score;
                best = j;
            }
        }
        return best;
    }

    LpStatus iterate(SimplexResult& res) {
        Eigen::VectorXd col(m_), alpha(m_);
        long degenerate_run = 0;
        bool verified = false;
        while (true) {
            if (res.iterations >= opt_.max_iterations) return LpStatus::iteration_limit;
            const bool bland = degenerate_run > 200;
            const Eigen::VectorXd y = compute_duals();
            const Eigen::Index q = price(y, bland);
            if (q < 0) {
                if (verified) return LpStatus::optimal;
                // Confirm optimality on a fresh factorization.
                refactor();
                verified = true;
                continue;
            }
            verified = false;
            ++res.iterations;

            load_column(q, col);
            alpha.noalias() = binv_ * col;
            const double dir = at_upper_[q] ? -1.0 : 1.0;

            // Harris two-pass ratio test.
            const double tol = opt_.feasibility_tol;
            double theta_max = upper_[q] - lower_[q];
            for (Eigen::Index i = 0; i < m_; ++i) {
                const double a = dir * alpha[i];
                const Eigen::Index v = basis_[i];
                if (a > opt_.pivot_tol)
                    theta_max = std::min(theta_max, (x_[v] - lower_[v] + tol) / a);
                else if (a < -opt_.pivot_tol && upper_[v] < kInfD)
                    theta_max = std::min(theta_max, (upper_[v] - x_[v] + tol) / -a);
            }
            if (theta_max == kInfD) return LpStatus::unbounded;

            Eigen::Index leave = -1;
            double best_piv = 0.0, theta = 0.0;
            for (Eigen::Index i = 0; i < m_; ++i) {
                const double a = dir * alpha[i];
                const Eigen::Index v = basis_[i];
                double ratio;
                if (a > opt_.pivot_tol)
                    ratio = (x_[v] - lower_[v]) / a;
                else if (a < -opt_.pivot_tol && upper_[v] < kInfD)
                    ratio = (upper_[v] - x_[v]) / -a;
                else
                    continue;
                if (ratio <= theta_max && std::fabs(a) > best_piv) {
                    best_piv = std::fabs(a);
                    leave = i;
                    theta = std::max(ratio, 0.0);
                }
            }

            const double flip = upper_[q] - lower_[q];
            if (leave < 0 || flip <= theta) {
                // Bound flip: entering variable crosses its box without a basis change.
                for (Eigen::Index i = 0; i < m_; ++i) x_[basis_[i]] -= dir * flip * alpha[i];
                at_upper_[q] = !at_upper_[q];
                x_[q] = at_upper_[q] ? upper_[q] : lower_[q];
                ++res.bound_flips;
                degenerate_run = 0;
                continue;
            }

            degenerate_run = theta <= 1e-14 ? degenerate_run + 1 : 0;
            for (Eigen::Index i = 0; i < m_; ++i) x_[basis_[i]] -= dir * theta * alpha[i];
            x_[q] += dir * theta;

            const Eigen::Index v = basis_[leave];
            const bool to_lower = dir * alpha[leave] > 0.0;
            x_[v] = to_lower ? lower_[v] : upper_[v];
            at_upper_[v] = !to_lower;
            basis_pos_[v] = -1;
            basis_[leave] = q;
            basis_pos_[q] = leave;
            at_upper_[q] = 0;

            const double piv = alpha[leave];
            binv_.row(leave) /= piv;
            for (Eigen::Index i = 0; i < m_; ++i)
                if (i != leave && alpha[i] != 0.0) binv_.row(i).noalias() -= alpha[i] * binv_.row(leave);

            if (++pivots_since_refactor_ >= opt_.refactor_interval) refactor();
        }
    }

    SimplexResult& finish(SimplexResult& res, LpStatus st) {
        res.status = st;
        res.x.resize(n_);
        for (Eigen::Index j = 0; j < n_; ++j) res.x[j] = std::clamp(x_[j], lower_[j], upper_[j]);
        if (st != LpStatus::optimal) return res;

        // Unscaled objective, duals, and a Lagrangian dual bound from the clamped duals.
        const Eigen::VectorXd c = c_ / cost_scale_;
        res.objective = c.dot(res.x);
        Eigen::VectorXd y = compute_duals();
        y = (row_scale_.cwiseProduct(y) / cost_scale_).cwiseMin(0.0);
        res.duals = y;
        const Eigen::VectorXd b = b_.cwiseQuotient(row_scale_);
        double dual = b.dot(y);
        for (Eigen::Index j = 0; j < n_; ++j) {
            double aty = 0.0;
            for (SpMat::InnerIterator it(A_, j); it; ++it) aty += it.value() / row_scale_[it.row()] * y[it.row()];
            const double d = c[j] - aty;
            if (d < 0.0) dual += upper_[j] < kInfD ? d * upper_[j] : -kInfD;
        }
        res.dual_bound = dual;
        res.relative_gap = (res.objective - dual) / (1.0 + std::fabs(res.objective));
        return res;
    }

    SimplexOptions opt_;
    Eigen::Index m_, n_, n_art_ = 0, total_ = 0;
    SpMat A_;
    Eigen::VectorXd b_, c_, row_scale_;
    double cost_scale_ = 1.0;
    std::vector<double> lower_, upper_, x_, cost_;
    std::vector<Eigen::Index> art_row_;
    std::vector<char> at_upper_;
    std::vector<Eigen::Index> basis_pos_;
    std::vector<Eigen::Index> basis_;
    Eigen::MatrixXd binv_;
    Eigen::VectorXd aty_;
    int pivots_since_refactor_ = 0;
    int segment_ = 0;
};

} // namespace detail

/// Solve min c'x s.t. A x <= b, 0 <= x <= upper (entries of upper may be +inf).
inline SimplexResult solve_bounded_lp(const Eigen::SparseMatrix<double>& A, const Eigen::VectorXd& b,
                                      const Eigen::VectorXd& c, const Eigen::VectorXd& upper,
                                      const SimplexOptions& opt = {}) {
    if (A.rows() != b.size() || A.cols() != c.size() || upper.size() != c.size())
        throw InvalidArgument("solve_bounded_lp: dimension mismatch");
    for (Eigen::Index j = 0; j < upper.size(); ++j)
        if (!(upper[j] >= 0.0)) throw InvalidArgument("solve_bounded_lp: upper bounds must be nonnegative");
    detail::BoundedSimplex s(A, b, c, upper, opt);
    return s.run();
}

} // namespace compnull
