#pragma once

// Green's functions for y'' + p1 y' + p2 y = q: the causal kernel of the
// initial value problem with zero data at a, and the two-sided kernel of the
// Dirichlet problem y(a) = y(b) = 0.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <ostream>
#include <stdexcept>
#include <utility>
#include <vector>

#include "vop/basis.hpp"
#include "vop/csv.hpp"
#include "vop/expr.hpp"
#include "vop/problem.hpp"
#include "vop/quadrature.hpp"

namespace vop {

enum class KernelKind { IvpCausal, BvpDirichlet };

/// Relative size of the boundary determinant below which the Dirichlet
/// problem is treated as resonant. Looser than kDegenerateRelTol because a
/// numerically integrated basis only reaches the boundary to within the
/// integrator's global error.
inline constexpr double kResonanceRelTol = 1e-8;

class GreensKernel {
public:
    /// Causal kernel G(x,s) = (y1(s) y2(x) - y1(x) y2(s)) / W(s) for s <= x,
    /// zero otherwise.
    static GreensKernel causal(BasisSolution basis) { return GreensKernel(KernelKind::IvpCausal, std::move(basis), {}); }

    /// Two-sided kernel G(x,s) = u(min(x,s)) v(max(x,s)) / W(u,v)(s) with
    /// u = alpha y1 + beta y2 vanishing at a and v = gamma y1 + delta y2
    /// vanishing at b.
    static GreensKernel dirichlet(BasisSolution basis, double alpha, double beta, double gamma, double delta) {
        return GreensKernel(KernelKind::BvpDirichlet, std::move(basis), {alpha, beta, gamma, delta});
    }

    KernelKind kind() const { return kind_; }
    const BasisSolution& basis() const { return basis_; }
    const Interval& interval() const { return basis_.interval(); }

    double operator()(double x, double s) const {
        if (kind_ == KernelKind::IvpCausal) {
            if (s > x) return 0.0;
            return (basis_.y1(s) * basis_.y2(x) - basis_.y1(x) * basis_.y2(s)) / basis_.wronskian(s);
        }
        const double w = bc_.det() * basis_.wronskian(s);
        if (x <= s) return u(x) * v(s) / w;
        return u(s) * v(x) / w;
    }

    /// Partial derivative in x. On the diagonal this is the limit from
    /// x > s (the right derivative), which differs from the left one by 1.
    double dx(double x, double s) const { return s < x || s == x ? dx_below(x, s) : dx_above(x, s); }

    /// dG/dx using the formula valid for s <= x.
    double dx_below(double x, double s) const {
        if (kind_ == KernelKind::IvpCausal)
            return (basis_.y1(s) * basis_.dy2(x) - basis_.dy1(x) * basis_.y2(s)) / basis_.wronskian(s);
        return u(s) * dv(x) / (bc_.det() * basis_.wronskian(s));
    }

    /// dG/dx using the formula valid for s >= x.
    double dx_above(double x, double s) const {
        if (kind_ == KernelKind::IvpCausal) return 0.0;
        return du(x) * v(s) / (bc_.det() * basis_.wronskian(s));
    }

    /// Boundary-adapted combination coefficients (alpha, beta, gamma, delta);
    /// zero for causal kernels.
    std::array<double, 4> boundary_coefficients() const { return {bc_.alpha, bc_.beta, bc_.gamma, bc_.delta}; }

private:
    struct Boundary {
        double alpha = 0.0, beta = 0.0, gamma = 0.0, delta = 0.0;
        double det() const { return alpha * delta - beta * gamma; }
    };

    GreensKernel(KernelKind kind, BasisSolution basis, Boundary bc) : kind_(kind), basis_(std::move(basis)), bc_(bc) {}

    double u(double x) const { return bc_.alpha * basis_.y1(x) + bc_.beta * basis_.y2(x); }
    double v(double x) const { return bc_.gamma * basis_.y1(x) + bc_.delta * basis_.y2(x); }
    double du(double x) const { return bc_.alpha * basis_.dy1(x) + bc_.beta * basis_.dy2(x); }
    double dv(double x) const { return bc_.gamma * basis_.dy1(x) + bc_.delta * basis_.dy2(x); }

    KernelKind kind_;
    BasisSolution basis_;
    Boundary bc_;
};

inline GreensKernel build_ivp_kernel(const BasisSolution& basis) { return GreensKernel::causal(basis); }

/// Throws SolverError when the homogeneous Dirichlet problem has a nontrivial
/// solution (boundary matrix [y1(a) y2(a); y1(b) y2(b)] singular).
inline GreensKernel build_bvp_kernel(const BasisSolution& basis, const Ode2Problem& problem) {
    if (!problem.is_bvp()) throw ProblemError("build_bvp_kernel requires Dirichlet boundary conditions", "bvp");
    const double a = problem.interval.a, b = problem.interval.b;
    const double y1a = basis.y1(a), y2a = basis.y2(a), y1b = basis.y1(b), y2b = basis.y2(b);
    const double det = y1a * y2b - y2a * y1b;
    // Relative to the Hadamard bound of the boundary matrix.
    const double bound = std::hypot(y1a, y2a) * std::hypot(y1b, y2b);
    if (!(std::fabs(det) > kResonanceRelTol * bound))
        throw SolverError("resonant boundary problem: boundary matrix [y1(a) y2(a); y1(b) y2(b)] is singular");
    // u(a) = y2(a) y1(a) - y1(a) y2(a) = 0, v(b) = 0 likewise.
    return GreensKernel::dirichlet(basis, y2a, -y1a, y2b, -y1b);
}

/// y(x) = int_a^b G(x,s) q(s) ds with the s-range split at s = x so no
/// Simpson panel straddles the diagonal kink.
class KernelSolution {
public:
    KernelSolution(GreensKernel kernel, Expr q, std::size_t panels)
        : kernel_(std::move(kernel)), q_(std::move(q)), panels_(panels) {}

    double value(double x) const {
        auto g = [this](double xx, double s) { return kernel_(xx, s); };
        return integrate(x, g, g);
    }
    /// Differentiates under the integral; G is continuous on the diagonal so
    /// no boundary term appears.
    double derivative(double x) const {
        return integrate(
            x, [this](double xx, double s) { return kernel_.dx_below(xx, s); },
            [this](double xx, double s) { return kernel_.dx_above(xx, s); });
    }
    double operator()(double x) const { return value(x); }

    const GreensKernel& kernel() const { return kernel_; }

private:
    static std::size_t even_at_least_two(double v) {
        auto n = static_cast<std::size_t>(std::llround(v / 2.0)) * 2;
        return std::max<std::size_t>(n, 2);
    }

    // `below` is used for s in [a, x] and `above` for s in [x, b].
    template <class Below, class Above>
    double integrate(double x, const Below& below, const Above& above) const {
        const auto& iv = kernel_.interval();
        const double frac = (x - iv.a) / iv.length();
        const std::size_t left = even_at_least_two(static_cast<double>(panels_) * frac);
        const std::size_t right = panels_ > left + 2 ? even_at_least_two(static_cast<double>(panels_ - left)) : 2;
        double total = 0.0;
        if (x > iv.a) total += simpson([&](double s) { return below(x, s) * eval(q_, s); }, iv.a, x, left);
        if (kernel_.kind() == KernelKind::BvpDirichlet && x < iv.b)
            total += simpson([&](double s) { return above(x, s) * eval(q_, s); }, x, iv.b, right);
        return total;
    }

    GreensKernel kernel_;
    Expr q_;
    std::size_t panels_;
};

inline KernelSolution apply_kernel(const GreensKernel& kernel, const Expr& q, std::size_t panels) {
    if (panels < kMinSteps || panels % 2 != 0) throw std::invalid_argument("apply_kernel: panel count must be even and >= 16");
    return KernelSolution(kernel, q, panels);
}

struct KernelSample {
    double x;
    double s;
    double G;
};

/// Uniform nx-by-ns grid over [a,b]^2, row-major in x then s.
inline std::vector<KernelSample> sample_kernel(const GreensKernel& kernel, std::size_t nx, std::size_t ns) {
    if (nx < 2 || ns < 2) throw std::invalid_argument("sample_kernel: nx and ns must be >= 2");
    const auto& iv = kernel.interval();
    auto at = [&](std::size_t i, std::size_t n) {
        return i + 1 == n ? iv.b : iv.a + iv.length() * static_cast<double>(i) / static_cast<double>(n - 1);
    };
    std::vector<KernelSample> out;
    out.reserve(nx * ns);
    for (std::size_t i = 0; i < nx; ++i)
        for (std::size_t j = 0; j < ns; ++j) {
            const double x = at(i, nx), s = at(j, ns);
            out.push_back({x, s, kernel(x, s)});
        }
    return out;
}

inline void write_kernel_csv(std::ostream& out, const std::vector<KernelSample>& grid) {
    out << "x,s,G\n";
    for (const auto& g : grid) write_csv_row(out, {g.x, g.s, g.G});
}

} // namespace vop
