#pragma once

// Linear systems x' = P(t) x + b(t): fundamental matrix, solution operator
// S(t, tau) = Phi(t) Phi(tau)^-1, and Duhamel's formula
//
//   x(t) = Phi(t) Phi(t0)^-1 x0 + Phi(t) int_t0^t Phi(s)^-1 b(s) ds.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "vop/basis.hpp"
#include "vop/csv.hpp"
#include "vop/dense.hpp"
#include "vop/expr.hpp"
#include "vop/problem.hpp"
#include "vop/quadrature.hpp"

namespace vop {

using Vector = std::vector<double>;

/// Small dense square matrix, row-major.
class Matrix {
public:
    Matrix() = default;
    explicit Matrix(std::size_t n, double fill = 0.0) : n_(n), d_(n * n, fill) {}
    Matrix(std::size_t n, std::vector<double> data) : n_(n), d_(std::move(data)) {
        if (d_.size() != n * n) throw std::invalid_argument("matrix data must have n*n entries");
    }

    static Matrix identity(std::size_t n) {
        Matrix m(n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    std::size_t size() const { return n_; }
    double& operator()(std::size_t i, std::size_t j) { return d_[i * n_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return d_[i * n_ + j]; }
    const std::vector<double>& data() const { return d_; }

    friend Matrix operator*(const Matrix& a, const Matrix& b) {
        Matrix out(a.n_);
        for (std::size_t i = 0; i < a.n_; ++i)
            for (std::size_t k = 0; k < a.n_; ++k) {
                const double aik = a(i, k);
                for (std::size_t j = 0; j < a.n_; ++j) out(i, j) += aik * b(k, j);
            }
        return out;
    }
    friend Vector operator*(const Matrix& a, const Vector& x) {
        Vector out(a.n_, 0.0);
        for (std::size_t i = 0; i < a.n_; ++i)
            for (std::size_t j = 0; j < a.n_; ++j) out[i] += a(i, j) * x[j];
        return out;
    }
    friend Matrix operator-(Matrix a, const Matrix& b) {
        for (std::size_t i = 0; i < a.d_.size(); ++i) a.d_[i] -= b.d_[i];
        return a;
    }

    /// Max absolute row sum.
    double norm_inf() const {
        double best = 0.0;
        for (std::size_t i = 0; i < n_; ++i) {
            double row = 0.0;
            for (std::size_t j = 0; j < n_; ++j) row += std::fabs((*this)(i, j));
            best = std::max(best, row);
        }
        return best;
    }

private:
    std::size_t n_ = 0;
    std::vector<double> d_;
};

/// LU factorization with partial pivoting, P A = L U.
class LuDecomposition {
public:
    explicit LuDecomposition(const Matrix& a) : lu_(a), perm_(a.size()) {
        const std::size_t n = a.size();
        if (n == 0) throw std::invalid_argument("LU of empty matrix");
        std::vector<double> scale(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            perm_[i] = i;
            for (std::size_t j = 0; j < n; ++j) scale[i] = std::max(scale[i], std::fabs(a(i, j)));
        }
        for (std::size_t k = 0; k < n; ++k) {
            std::size_t piv = k;
            for (std::size_t i = k + 1; i < n; ++i)
                if (std::fabs(lu_(i, k)) > std::fabs(lu_(piv, k))) piv = i;
            if (piv != k) {
                for (std::size_t j = 0; j < n; ++j) std::swap(lu_(k, j), lu_(piv, j));
                std::swap(perm_[k], perm_[piv]);
                sign_ = -sign_;
            }
            const double p = lu_(k, k);
            if (!(std::fabs(p) > 1e-14 * scale[perm_[k]]))
                throw SolverError("matrix is numerically singular (pivot " + render_number(p) + " in column " +
                                  std::to_string(k) + ")");
            for (std::size_t i = k + 1; i < n; ++i) {
                const double f = lu_(i, k) / p;
                lu_(i, k) = f;
                for (std::size_t j = k + 1; j < n; ++j) lu_(i, j) -= f * lu_(k, j);
            }
        }
    }

    Vector solve(const Vector& b) const {
        const std::size_t n = lu_.size();
        Vector x(n);
        for (std::size_t i = 0; i < n; ++i) {
            double s = b[perm_[i]];
            for (std::size_t j = 0; j < i; ++j) s -= lu_(i, j) * x[j];
            x[i] = s;
        }
        for (std::size_t i = n; i-- > 0;) {
            double s = x[i];
            for (std::size_t j = i + 1; j < n; ++j) s -= lu_(i, j) * x[j];
            x[i] = s / lu_(i, i);
        }
        return x;
    }

    Matrix inverse() const {
        const std::size_t n = lu_.size();
        Matrix inv(n);
        Vector e(n, 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            std::fill(e.begin(), e.end(), 0.0);
            e[j] = 1.0;
            const Vector col = solve(e);
            for (std::size_t i = 0; i < n; ++i) inv(i, j) = col[i];
        }
        return inv;
    }

    double determinant() const {
        double d = sign_;
        for (std::size_t i = 0; i < lu_.size(); ++i) d *= lu_(i, i);
        return d;
    }

private:
    Matrix lu_;
    std::vector<std::size_t> perm_;
    double sign_ = 1.0;
};

inline Matrix invert(const Matrix& m) { return LuDecomposition(m).inverse(); }

/// Phi(t) with Phi(t0) = I, dense output per entry.
class FundamentalMatrix {
public:
    FundamentalMatrix(std::size_t n, DenseTrajectory traj) : n_(n), traj_(std::make_shared<DenseTrajectory>(std::move(traj))) {}

    std::size_t dimension() const { return n_; }
    double t0() const { return traj_->front(); }
    double t_end() const { return traj_->back(); }
    const DenseTrajectory& trajectory() const { return *traj_; }

    Matrix operator()(double t) const {
        Matrix m(n_);
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t j = 0; j < n_; ++j) m(i, j) = traj_->value(i * n_ + j, t);
        return m;
    }
    Matrix at_node(std::size_t k) const {
        Matrix m(n_);
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t j = 0; j < n_; ++j) m(i, j) = traj_->node_value(k, i * n_ + j);
        return m;
    }
    Matrix inverse(double t) const { return invert((*this)(t)); }

private:
    std::size_t n_;
    std::shared_ptr<const DenseTrajectory> traj_;
};

/// Integrates Phi' = P Phi from Phi(t0) = I with RK4 and certifies
/// |det Phi| > 1e-12 * prod(row norms) at every node.
inline FundamentalMatrix solve_fundamental(const SystemProblem& problem, std::size_t steps) {
    require_regular(problem.singular_points, "solve_fundamental");
    if (steps < kMinSteps) throw std::invalid_argument("solve_fundamental: step count must be >= 16");
    const std::size_t n = problem.n;
    const UniformGrid grid{problem.interval.a, problem.interval.b, steps};
    std::vector<double> pv(n * n);
    auto rhs = [&](double t, std::span<const double> phi, std::span<double> dphi) {
        for (std::size_t k = 0; k < n * n; ++k) pv[k] = eval(problem.P[k], t);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                double s = 0.0;
                for (std::size_t k = 0; k < n; ++k) s += pv[i * n + k] * phi[k * n + j];
                dphi[i * n + j] = s;
            }
    };
    std::vector<double> init(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) init[i * n + i] = 1.0;
    std::vector<std::string> labels;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) labels.push_back("Phi[" + std::to_string(i) + "][" + std::to_string(j) + "]");
    FundamentalMatrix fund(n, integrate_rk4(rhs, std::move(init), grid, std::move(labels)));

    for (std::size_t k = 0; k < grid.size(); ++k) {
        const Matrix m = fund.at_node(k);
        double bound = 1.0;
        for (std::size_t i = 0; i < n; ++i) {
            double row = 0.0;
            for (std::size_t j = 0; j < n; ++j) row += m(i, j) * m(i, j);
            bound *= std::sqrt(row);
        }
        double det = 0.0;
        try {
            det = LuDecomposition(m).determinant();
        } catch (const SolverError&) {
            det = 0.0;
        }
        if (!(std::fabs(det) > kDegenerateRelTol * bound) || !std::isfinite(det))
            throw SolverError("fundamental matrix is singular at t=" + render_number(grid.node(k)));
    }
    return fund;
}

/// S(t, tau) = Phi(t) Phi(tau)^-1.
class SolutionOperator {
public:
    explicit SolutionOperator(FundamentalMatrix fund) : fund_(std::move(fund)) {}
    Matrix operator()(double t, double tau) const { return fund_(t) * fund_.inverse(tau); }
    const FundamentalMatrix& fundamental() const { return fund_; }

private:
    FundamentalMatrix fund_;
};

/// Matrix Green's function Phi(t) Phi(s)^-1. Causal by default: the zero
/// matrix for s > t.
inline Matrix matrix_green(const FundamentalMatrix& fund, double t, double s, bool causal = true) {
    if (causal && s > t) return Matrix(fund.dimension());
    return fund(t) * fund.inverse(s);
}

/// Duhamel solution. C(t) = int_t0^t Phi^-1(s) b(s) ds is accumulated by
/// composite Simpson on the integrator grid and only then premultiplied by
/// Phi(t).
class SystemSolution {
public:
    SystemSolution(SystemProblem problem, FundamentalMatrix fund, std::size_t panels)
        : problem_(std::move(problem)), fund_(std::move(fund)), grid_{problem_.interval.a, problem_.interval.b, panels} {
        const std::size_t n = problem_.n;
        c0_ = LuDecomposition(fund_(grid_.a)).solve(problem_.x0);
        at_even_.assign(panels / 2 + 1, Vector(n, 0.0));
        Vector prev = integrand(grid_.node(0));
        const double h = grid_.step();
        for (std::size_t k = 0; k < panels / 2; ++k) {
            const Vector mid = integrand(grid_.node(2 * k + 1));
            const Vector next = integrand(grid_.node(2 * k + 2));
            for (std::size_t i = 0; i < n; ++i)
                at_even_[k + 1][i] = at_even_[k][i] + h / 3.0 * (prev[i] + 4.0 * mid[i] + next[i]);
            prev = next;
        }
    }

    /// Phi^-1(s) b(s).
    Vector integrand(double s) const {
        Vector bs(problem_.n);
        for (std::size_t i = 0; i < problem_.n; ++i) bs[i] = eval(problem_.b[i], s);
        return LuDecomposition(fund_(s)).solve(bs);
    }

    /// C(t) = int_t0^t Phi^-1(s) b(s) ds.
    Vector coefficients(double t) const {
        const std::size_t n = problem_.n;
        if (t == grid_.b) return at_even_.back();
        const double h2 = 2.0 * grid_.step();
        double k = std::floor((t - grid_.a) / h2);
        k = std::clamp(k, 0.0, static_cast<double>(at_even_.size() - 1));
        auto idx = static_cast<std::size_t>(k);
        if (t < grid_.node(2 * idx) && idx > 0) --idx;
        const double base = grid_.node(2 * idx);
        Vector out = at_even_[idx];
        if (t == base) return out;
        const Vector f0 = integrand(base), fm = integrand(0.5 * (base + t)), f1 = integrand(t);
        for (std::size_t i = 0; i < n; ++i) out[i] += (t - base) / 6.0 * (f0[i] + 4.0 * fm[i] + f1[i]);
        return out;
    }

    Vector homogeneous_part(double t) const { return fund_(t) * c0_; }
    Vector particular_part(double t) const { return fund_(t) * coefficients(t); }

    Vector operator()(double t) const {
        Vector c = coefficients(t);
        for (std::size_t i = 0; i < c.size(); ++i) c[i] += c0_[i];
        return fund_(t) * c;
    }

    const SystemProblem& problem() const { return problem_; }
    const FundamentalMatrix& fundamental() const { return fund_; }
    const UniformGrid& grid() const { return grid_; }

private:
    SystemProblem problem_;
    FundamentalMatrix fund_;
    UniformGrid grid_;
    Vector c0_;
    std::vector<Vector> at_even_;
};

/// Uses an existing fundamental matrix of the same P on the same interval.
inline SystemSolution solve_system_ivp(const SystemProblem& problem, const FundamentalMatrix& fund, std::size_t panels) {
    if (panels < kMinSteps || panels % 2 != 0) throw std::invalid_argument("solve_system_ivp: step count must be even and >= 16");
    if (fund.dimension() != problem.n) throw std::invalid_argument("fundamental matrix dimension mismatch");
    return SystemSolution(problem, fund, panels);
}

inline SystemSolution solve_system_ivp(const SystemProblem& problem, std::size_t steps) {
    if (steps < kMinSteps || steps % 2 != 0) throw std::invalid_argument("solve_system_ivp: step count must be even and >= 16");
    return SystemSolution(problem, solve_fundamental(problem, steps), steps);
}

/// Trajectory CSV: header t,x0,x1,... and one row per grid node.
inline void write_system_csv(std::ostream& out, const SystemSolution& sol) {
    out << 't';
    for (std::size_t i = 0; i < sol.problem().n; ++i) out << ",x" << i;
    out << '\n';
    const auto& grid = sol.grid();
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const double t = grid.node(k);
        Vector row{t};
        const Vector x = sol(t);
        row.insert(row.end(), x.begin(), x.end());
        write_csv_row(out, row);
    }
}

} // namespace vop
