#pragma once

// Homogeneous basis solutions y1, y2 of y'' + p1 y' + p2 y = 0, their
// Wronskian, and the Abel-identity certificate.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "vop/dense.hpp"
#include "vop/expr.hpp"
#include "vop/problem.hpp"
#include "vop/quadrature.hpp"

namespace vop {

/// A solver could not produce a trustworthy result (singular interval,
/// degenerate basis, resonant boundary problem, ...).
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Relative threshold below which a Wronskian or determinant is treated as
/// zero.
inline constexpr double kDegenerateRelTol = 1e-12;

/// Minimum step count for the fixed-step integrators.
inline constexpr std::size_t kMinSteps = 16;

inline void require_regular(const std::vector<double>& singular, const char* what) {
    if (singular.empty()) return;
    std::string msg = std::string(what) + ": interval contains singular point(s) of the coefficients:";
    for (std::size_t i = 0; i < singular.size() && i < 5; ++i) msg += " " + render_number(singular[i]);
    if (singular.size() > 5) msg += " ...";
    throw SolverError(msg);
}

/// Callable value/slope pair.
struct ScalarTrack {
    std::function<double(double)> value;
    std::function<double(double)> slope;
};

enum class BasisOrigin { Numerical, Analytic, ReducedOrder };

/// Pair of linearly independent homogeneous solutions with derivatives.
/// Copies share the underlying immutable data.
class BasisSolution {
public:
    BasisSolution(Interval iv, BasisOrigin origin, ScalarTrack first, ScalarTrack second,
                  std::optional<DenseTrajectory> traj1 = std::nullopt, std::optional<DenseTrajectory> traj2 = std::nullopt)
        : data_(std::make_shared<Data>()) {
        data_->interval = iv;
        data_->origin = origin;
        data_->first = std::move(first);
        data_->second = std::move(second);
        data_->traj1 = std::move(traj1);
        data_->traj2 = std::move(traj2);
        data_->anchor = iv.a;
        data_->wronskian_at_anchor = wronskian(iv.a);
    }

    double y1(double x) const { return data_->first.value(x); }
    double dy1(double x) const { return data_->first.slope(x); }
    double y2(double x) const { return data_->second.value(x); }
    double dy2(double x) const { return data_->second.slope(x); }

    /// W(y1, y2) = y1 y2' - y1' y2.
    double wronskian(double x) const { return y1(x) * dy2(x) - dy1(x) * y2(x); }

    const Interval& interval() const { return data_->interval; }
    BasisOrigin origin() const { return data_->origin; }
    double anchor() const { return data_->anchor; }
    double wronskian_at_anchor() const { return data_->wronskian_at_anchor; }

    /// Dense output for numerically generated bases (y, y' per trajectory).
    const std::optional<DenseTrajectory>& traj1() const { return data_->traj1; }
    const std::optional<DenseTrajectory>& traj2() const { return data_->traj2; }

private:
    struct Data {
        Interval interval;
        BasisOrigin origin = BasisOrigin::Numerical;
        ScalarTrack first;
        ScalarTrack second;
        std::optional<DenseTrajectory> traj1;
        std::optional<DenseTrajectory> traj2;
        double anchor = 0.0;
        double wronskian_at_anchor = 0.0;
    };
    std::shared_ptr<Data> data_;
};

inline double wronskian(const BasisSolution& basis, double x) { return basis.wronskian(x); }

namespace detail {

/// Throws unless |W| stays above kDegenerateRelTol times the magnitude of
/// its two products at every sample.
inline void certify_independence(const BasisSolution& basis, std::span<const double> xs) {
    double scale = 0.0;
    double min_w = INFINITY;
    double at = xs.front();
    for (double x : xs) {
        const double a = std::fabs(basis.y1(x) * basis.dy2(x));
        const double b = std::fabs(basis.dy1(x) * basis.y2(x));
        scale = std::max(scale, a + b);
        const double w = std::fabs(basis.wronskian(x));
        if (w < min_w) {
            min_w = w;
            at = x;
        }
    }
    if (!(min_w >= kDegenerateRelTol * scale) || min_w == 0.0)
        throw SolverError("degenerate basis: Wronskian vanishes (|W|=" + render_number(min_w) +
                          ") at x=" + render_number(at));
}

inline std::vector<double> uniform_samples(const Interval& iv, std::size_t count) {
    std::vector<double> xs(count);
    for (std::size_t i = 0; i < count; ++i)
        xs[i] = i + 1 == count ? iv.b : iv.a + iv.length() * static_cast<double>(i) / static_cast<double>(count - 1);
    return xs;
}

} // namespace detail

/// Integrates the homogeneous equation as a first-order system with fixed
/// step RK4 from x = a, seeding (y, y') = (1, 0) and (0, 1), and wraps both
/// trajectories with cubic Hermite dense output.
inline BasisSolution solve_basis(const Ode2Problem& problem, std::size_t steps) {
    require_regular(problem.singular_points, "solve_basis");
    if (steps < kMinSteps) throw std::invalid_argument("solve_basis: step count must be >= 16");
    const UniformGrid grid{problem.interval.a, problem.interval.b, steps};
    const Expr p1 = problem.p1;
    const Expr p2 = problem.p2;
    auto rhs = [&](double x, std::span<const double> y, std::span<double> dy) {
        dy[0] = y[1];
        dy[1] = -eval(p1, x) * y[1] - eval(p2, x) * y[0];
    };
    auto t1 = std::make_shared<DenseTrajectory>(integrate_rk4(rhs, {1.0, 0.0}, grid, {"y1", "y1'"}));
    auto t2 = std::make_shared<DenseTrajectory>(integrate_rk4(rhs, {0.0, 1.0}, grid, {"y2", "y2'"}));

    ScalarTrack first{[t1](double x) { return t1->value(0, x); }, [t1](double x) { return t1->value(1, x); }};
    ScalarTrack second{[t2](double x) { return t2->value(0, x); }, [t2](double x) { return t2->value(1, x); }};
    BasisSolution basis(problem.interval, BasisOrigin::Numerical, std::move(first), std::move(second), *t1, *t2);
    detail::certify_independence(basis, t1->breakpoints());
    return basis;
}

/// Wraps closed-form homogeneous solutions. Each must satisfy the
/// homogeneous equation at 64 sample points (residual <= 1e-8 relative to
/// the size of its terms) and the pair must have a nonvanishing Wronskian.
inline BasisSolution adopt_analytic_basis(const Ode2Problem& problem, const Expr& y1, const Expr& y2) {
    require_regular(problem.singular_points, "adopt_analytic_basis");
    const Expr d1 = differentiate(y1), dd1 = differentiate(d1);
    const Expr d2 = differentiate(y2), dd2 = differentiate(d2);
    const auto xs = detail::uniform_samples(problem.interval, 64);

    auto check = [&](const Expr& y, const Expr& dy, const Expr& ddy, const char* name) {
        for (double x : xs) {
            const double a = eval(ddy, x);
            const double b = eval(problem.p1, x) * eval(dy, x);
            const double c = eval(problem.p2, x) * eval(y, x);
            const double r = std::fabs(a + b + c);
            const double scale = std::max({1.0, std::fabs(a), std::fabs(b), std::fabs(c)});
            if (r > 1e-8 * scale)
                throw SolverError(std::string("adopt_analytic_basis: ") + name +
                                  " is not a homogeneous solution (residual " + render_number(r) + " at x=" +
                                  render_number(x) + ")");
        }
    };
    check(y1, d1, dd1, "y1");
    check(y2, d2, dd2, "y2");

    ScalarTrack first{[y1](double x) { return eval(y1, x); }, [d1](double x) { return eval(d1, x); }};
    ScalarTrack second{[y2](double x) { return eval(y2, x); }, [d2](double x) { return eval(d2, x); }};
    BasisSolution basis(problem.interval, BasisOrigin::Analytic, std::move(first), std::move(second));
    detail::certify_independence(basis, xs);
    return basis;
}

/// Second solution from a known nonvanishing one by reduction of order:
/// y2 = y1 v with v' = exp(-int_a^x p1) / y1^2 and v(a) = 0, so W(a) = 1.
inline BasisSolution reduce_order(const Ode2Problem& problem, const Expr& y1, std::size_t panels) {
    require_regular(problem.singular_points, "reduce_order");
    if (panels < kMinSteps || panels % 2 != 0) throw std::invalid_argument("reduce_order: panel count must be even and >= 16");
    const Expr d1 = differentiate(y1);
    const UniformGrid grid{problem.interval.a, problem.interval.b, panels};
    for (double x : detail::uniform_samples(problem.interval, 64))
        if (eval(y1, x) == 0.0) throw SolverError("reduce_order: known solution vanishes at x=" + render_number(x));

    const Expr p1 = problem.p1;
    auto abel = std::make_shared<CumulativeIntegral<std::function<double(double)>>>(
        std::function<double(double)>([p1](double x) { return eval(p1, x); }), grid);
    std::function<double(double)> vprime = [abel, y1](double x) {
        const double u = eval(y1, x);
        return std::exp(-(*abel)(x)) / (u * u);
    };
    auto v = std::make_shared<CumulativeIntegral<std::function<double(double)>>>(vprime, grid);

    ScalarTrack first{[y1](double x) { return eval(y1, x); }, [d1](double x) { return eval(d1, x); }};
    ScalarTrack second{[y1, v](double x) { return eval(y1, x) * (*v)(x); },
                       [y1, d1, v, vprime](double x) { return eval(d1, x) * (*v)(x) + eval(y1, x) * vprime(x); }};
    BasisSolution basis(problem.interval, BasisOrigin::ReducedOrder, std::move(first), std::move(second));
    detail::certify_independence(basis, grid.nodes());
    return basis;
}

/// Max relative deviation of W(x) from W(a) exp(-int_a^x p1) over 256
/// uniform samples; the exponent is integrated by composite Simpson on the
/// same samples.
inline double abel_check(const BasisSolution& basis, const Ode2Problem& problem) {
    constexpr std::size_t kPanels = 256;
    const UniformGrid grid{problem.interval.a, problem.interval.b, kPanels};
    const auto xs = grid.nodes();
    std::vector<double> p(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) p[i] = eval(problem.p1, xs[i]);
    const auto integral = cumulative_simpson(p, grid.step());
    const double w0 = basis.wronskian(xs.front());
    double worst = 0.0;
    for (std::size_t i = 1; i < xs.size(); ++i) {
        const double predicted = w0 * std::exp(-integral[i]);
        worst = std::max(worst, std::fabs(basis.wronskian(xs[i]) - predicted) / std::fabs(predicted));
    }
    return worst;
}

} // namespace vop
