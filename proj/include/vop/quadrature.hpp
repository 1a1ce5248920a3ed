#pragma once

// Composite Simpson quadrature on uniform grids, including a cumulative
// form that can be evaluated at arbitrary points of the interval.

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace vop {

/// Uniform grid with `panels` intervals on [a, b].
struct UniformGrid {
    double a = 0.0;
    double b = 1.0;
    std::size_t panels = 2;

    double step() const { return (b - a) / static_cast<double>(panels); }
    double node(std::size_t i) const {
        // Pin the last node to b so endpoint evaluations are exact.
        if (i == panels) return b;
        return a + static_cast<double>(i) * step();
    }
    std::size_t size() const { return panels + 1; }

    std::vector<double> nodes() const {
        std::vector<double> out(size());
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = node(i);
        return out;
    }
};

/// Single Simpson panel on [lo, hi].
template <class F>
double simpson_panel(const F& f, double lo, double hi) {
    if (hi == lo) return 0.0;
    const double mid = 0.5 * (lo + hi);
    return (hi - lo) / 6.0 * (f(lo) + 4.0 * f(mid) + f(hi));
}

/// Composite Simpson with `panels` (even) sub-intervals on [lo, hi].
template <class F>
double simpson(const F& f, double lo, double hi, std::size_t panels) {
    if (panels < 2 || panels % 2 != 0) throw std::invalid_argument("Simpson requires an even panel count >= 2");
    if (hi == lo) return 0.0;
    const double h = (hi - lo) / static_cast<double>(panels);
    double odd = 0.0;
    double even = 0.0;
    for (std::size_t i = 1; i < panels; ++i) {
        const double x = lo + static_cast<double>(i) * h;
        (i % 2 ? odd : even) += f(x);
    }
    return h / 3.0 * (f(lo) + 4.0 * odd + 2.0 * even + f(hi));
}

/// Composite Simpson on pre-sampled values at uniform spacing `h`.
/// Returns the cumulative integral at every sample; odd samples use the
/// three-point partial rule h/12 (5 f0 + 8 f1 - f2).
inline std::vector<double> cumulative_simpson(const std::vector<double>& f, double h) {
    const std::size_t n = f.size();
    if (n < 3 || (n - 1) % 2 != 0) throw std::invalid_argument("cumulative Simpson requires an even panel count >= 2");
    std::vector<double> out(n, 0.0);
    for (std::size_t i = 0; i + 2 < n; i += 2) {
        out[i + 1] = out[i] + h / 12.0 * (5.0 * f[i] + 8.0 * f[i + 1] - f[i + 2]);
        out[i + 2] = out[i] + h / 3.0 * (f[i] + 4.0 * f[i + 1] + f[i + 2]);
    }
    return out;
}

/// x -> integral of f from grid.a to x.
///
/// Composite Simpson over pairs of grid panels up to the last even node
/// not exceeding x, then one Simpson panel on the remainder. The integrand
/// is sampled at the grid nodes plus the remainder points only, and the
/// summation order is fixed, so results are reproducible bit for bit.
template <class F>
class CumulativeIntegral {
public:
    CumulativeIntegral(F f, UniformGrid grid) : f_(std::move(f)), grid_(grid) {
        if (grid_.panels < 2 || grid_.panels % 2 != 0)
            throw std::invalid_argument("cumulative integral requires an even panel count >= 2");
        const std::size_t pairs = grid_.panels / 2;
        at_even_.resize(pairs + 1, 0.0);
        const double h = grid_.step();
        double prev = f_(grid_.node(0));
        for (std::size_t k = 0; k < pairs; ++k) {
            const double mid = f_(grid_.node(2 * k + 1));
            const double next = f_(grid_.node(2 * k + 2));
            at_even_[k + 1] = at_even_[k] + h / 3.0 * (prev + 4.0 * mid + next);
            prev = next;
        }
    }

    double operator()(double x) const {
        if (x == grid_.b) return at_even_.back();
        const double h2 = 2.0 * grid_.step();
        double t = std::floor((x - grid_.a) / h2);
        const double max_pair = static_cast<double>(at_even_.size() - 1);
        if (t < 0.0) t = 0.0;
        if (t > max_pair) t = max_pair;
        auto k = static_cast<std::size_t>(t);
        const double xk = grid_.node(2 * k);
        if (x == xk) return at_even_[k];
        if (x < xk && k > 0) {
            --k;
        }
        const double base = grid_.node(2 * k);
        return at_even_[k] + simpson_panel(f_, base, x);
    }

    const UniformGrid& grid() const { return grid_; }
    const F& integrand() const { return f_; }

private:
    F f_;
    UniformGrid grid_;
    std::vector<double> at_even_;
};

} // namespace vop
