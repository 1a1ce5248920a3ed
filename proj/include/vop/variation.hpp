#pragma once

// Variation of parameters: particular integrals of first- and second-order
// linear equations, the latter under an arbitrary gauge
//
//   c1' y1  + c2' y2  = A(x)
//   c1' y1' + c2' y2' = q(x) - A'(x) - p1(x) A(x)
//
// whose solution (c1', c2') is integrated from x = a with c1(a) = c2(a) = 0.

#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <stdexcept>
#include <utility>

#include "vop/basis.hpp"
#include "vop/expr.hpp"
#include "vop/problem.hpp"
#include "vop/quadrature.hpp"

namespace vop {

using ScalarFn = std::function<double(double)>;

inline void require_even_panels(std::size_t n, std::size_t minimum, const char* what) {
    if (n < minimum || n % 2 != 0)
        throw std::invalid_argument(std::string(what) + ": panel count must be even and >= " + std::to_string(minimum));
}

// ---------------------------------------------------------------------------
// First order

/// Solution of y' + p y = q, y(a) = y0, as y = yc (y0 + d1) with
/// yc = exp(-int_a^x p) and d1 = int_a^x q / yc.
class FirstOrderSolution {
public:
    FirstOrderSolution(Ode1Problem problem, std::size_t panels) : problem_(std::move(problem)) {
        const UniformGrid grid{problem_.interval.a, problem_.interval.b, panels};
        const Expr p = problem_.p;
        const Expr q = problem_.q;
        exponent_ = std::make_shared<CumulativeIntegral<ScalarFn>>(ScalarFn([p](double x) { return eval(p, x); }), grid);
        auto exponent = exponent_;
        ScalarFn forcing = [q, exponent](double x) { return eval(q, x) * std::exp((*exponent)(x)); };
        d1_ = std::make_shared<CumulativeIntegral<ScalarFn>>(std::move(forcing), grid);
    }

    /// exp(-int_a^x p).
    double complementary(double x) const { return std::exp(-(*exponent_)(x)); }
    double value(double x) const { return complementary(x) * (problem_.y0 + (*d1_)(x)); }
    double derivative(double x) const { return eval(problem_.q, x) - eval(problem_.p, x) * value(x); }
    double operator()(double x) const { return value(x); }

    const Ode1Problem& problem() const { return problem_; }

private:
    Ode1Problem problem_;
    std::shared_ptr<CumulativeIntegral<ScalarFn>> exponent_;
    std::shared_ptr<CumulativeIntegral<ScalarFn>> d1_;
};

/// Composite Simpson on `panels` uniform panels for both integrals.
inline FirstOrderSolution solve_first_order(const Ode1Problem& problem, std::size_t panels) {
    require_regular(problem.singular_points, "solve_first_order");
    require_even_panels(panels, 2, "solve_first_order");
    return FirstOrderSolution(problem, panels);
}

// ---------------------------------------------------------------------------
// Second order

/// c1'(x), c2'(x) from the gauged 2x2 system, solved by Cramer's rule with
/// denominator W(x).
class GaugeDerivatives {
public:
    struct Pair {
        double c1;
        double c2;
    };

    GaugeDerivatives(Ode2Problem problem, BasisSolution basis, Gauge gauge)
        : problem_(std::move(problem)), basis_(std::move(basis)), gauge_(std::move(gauge)) {}

    /// Right-hand side of the second equation: q - A' - p1 A.
    double second_rhs(double x) const {
        return eval(problem_.q, x) - eval(gauge_.Aprime, x) - eval(problem_.p1, x) * eval(gauge_.A, x);
    }

    Pair at(double x) const {
        const double y1 = basis_.y1(x), y2 = basis_.y2(x);
        const double d1 = basis_.dy1(x), d2 = basis_.dy2(x);
        const double w = y1 * d2 - d1 * y2;
        if (!(std::fabs(w) > kDegenerateRelTol * (std::fabs(y1 * d2) + std::fabs(d1 * y2))))
            throw SolverError("Wronskian below threshold at x=" + render_number(x));
        const double r1 = eval(gauge_.A, x);
        const double r2 = second_rhs(x);
        return {(r1 * d2 - y2 * r2) / w, (y1 * r2 - d1 * r1) / w};
    }

    double c1prime(double x) const { return at(x).c1; }
    double c2prime(double x) const { return at(x).c2; }

    const Ode2Problem& problem() const { return problem_; }
    const BasisSolution& basis() const { return basis_; }
    const Gauge& gauge() const { return gauge_; }

private:
    Ode2Problem problem_;
    BasisSolution basis_;
    Gauge gauge_;
};

inline GaugeDerivatives gauge_coefficient_derivatives(const Ode2Problem& problem, const BasisSolution& basis,
                                                      const Gauge& gauge) {
    return GaugeDerivatives(problem, basis, gauge);
}

/// y_p = c1 y1 + c2 y2 with c_i(x) = int_a^x c_i'. Its derivative is
/// c1 y1' + c2 y2' + A because c1' y1 + c2' y2 = A.
class ParticularSolution {
public:
    ParticularSolution(GaugeDerivatives derivs, std::size_t panels) : derivs_(std::make_shared<GaugeDerivatives>(std::move(derivs))) {
        const auto& iv = derivs_->problem().interval;
        grid_ = UniformGrid{iv.a, iv.b, panels};
        auto d = derivs_;
        c1_ = std::make_shared<CumulativeIntegral<ScalarFn>>(ScalarFn([d](double x) { return d->c1prime(x); }), grid_);
        c2_ = std::make_shared<CumulativeIntegral<ScalarFn>>(ScalarFn([d](double x) { return d->c2prime(x); }), grid_);
    }

    double c1(double x) const { return (*c1_)(x); }
    double c2(double x) const { return (*c2_)(x); }

    double value(double x) const {
        const auto& b = derivs_->basis();
        return c1(x) * b.y1(x) + c2(x) * b.y2(x);
    }
    double derivative(double x) const {
        const auto& b = derivs_->basis();
        return c1(x) * b.dy1(x) + c2(x) * b.dy2(x) + eval(derivs_->gauge().A, x);
    }
    double operator()(double x) const { return value(x); }

    const Gauge& gauge_used() const { return derivs_->gauge(); }
    const GaugeDerivatives& derivatives() const { return *derivs_; }
    const UniformGrid& grid() const { return grid_; }

private:
    std::shared_ptr<const GaugeDerivatives> derivs_;
    UniformGrid grid_;
    std::shared_ptr<CumulativeIntegral<ScalarFn>> c1_;
    std::shared_ptr<CumulativeIntegral<ScalarFn>> c2_;
};

/// Composite Simpson with `panels` uniform panels (even, >= 16).
inline ParticularSolution particular_integral(const Ode2Problem& problem, const BasisSolution& basis, const Gauge& gauge,
                                              std::size_t panels) {
    require_regular(problem.singular_points, "particular_integral");
    require_even_panels(panels, kMinSteps, "particular_integral");
    return ParticularSolution(gauge_coefficient_derivatives(problem, basis, gauge), panels);
}

/// Solves [y1 y2; y1' y2'](x) [u; v] = [r1; r2].
inline std::pair<double, double> solve_basis_system(const BasisSolution& basis, double x, double r1, double r2) {
    const double y1 = basis.y1(x), y2 = basis.y2(x), d1 = basis.dy1(x), d2 = basis.dy2(x);
    const double w = y1 * d2 - d1 * y2;
    if (!(std::fabs(w) > kDegenerateRelTol * (std::fabs(y1 * d2) + std::fabs(d1 * y2))))
        throw SolverError("singular basis matrix at x=" + render_number(x));
    return {(r1 * d2 - y2 * r2) / w, (y1 * r2 - d1 * r1) / w};
}

/// y = y_p + k1 y1 + k2 y2 where (k1, k2) absorb both the initial data and
/// whatever initial data the gauged particular integral carries, so
/// y(a) = y0 and y'(a) = y0' for every gauge.
class IvpSolution {
public:
    IvpSolution(ParticularSolution particular, double k1, double k2)
        : particular_(std::move(particular)), k1_(k1), k2_(k2) {}

    double value(double x) const {
        const auto& b = basis();
        return particular_.value(x) + k1_ * b.y1(x) + k2_ * b.y2(x);
    }
    double derivative(double x) const {
        const auto& b = basis();
        return particular_.derivative(x) + k1_ * b.dy1(x) + k2_ * b.dy2(x);
    }
    double operator()(double x) const { return value(x); }

    const ParticularSolution& particular() const { return particular_; }
    const BasisSolution& basis() const { return particular_.derivatives().basis(); }
    double k1() const { return k1_; }
    double k2() const { return k2_; }

private:
    ParticularSolution particular_;
    double k1_;
    double k2_;
};

inline IvpSolution solve_ivp(const Ode2Problem& problem, const BasisSolution& basis, const Gauge& gauge,
                             std::size_t panels) {
    const InitialConditions& ic = problem.ivp();
    ParticularSolution yp = particular_integral(problem, basis, gauge, panels);
    const double a = problem.interval.a;
    const auto [k1, k2] = solve_basis_system(basis, a, ic.y0 - yp.value(a), ic.dy0 - yp.derivative(a));
    return IvpSolution(std::move(yp), k1, k2);
}

} // namespace vop
