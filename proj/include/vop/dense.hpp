#pragma once

// Fixed-step classical Runge-Kutta integration with piecewise cubic Hermite
// dense output.

#include <algorithm>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "vop/quadrature.hpp"

namespace vop {

/// Piecewise cubic Hermite trajectory of several components. Each interval
/// carries value and slope at both ends, so the interpolant is C1 and
/// reproduces node values exactly.
class DenseTrajectory {
public:
    DenseTrajectory() = default;

    DenseTrajectory(std::vector<double> breakpoints, std::vector<std::string> labels, std::vector<double> values,
                    std::vector<double> slopes)
        : x_(std::move(breakpoints)), labels_(std::move(labels)), values_(std::move(values)), slopes_(std::move(slopes)) {
        const std::size_t n = labels_.size();
        if (x_.size() < 2) throw std::invalid_argument("dense trajectory needs at least two breakpoints");
        if (n == 0 || values_.size() != x_.size() * n || slopes_.size() != x_.size() * n)
            throw std::invalid_argument("dense trajectory data does not match breakpoints/components");
        for (std::size_t i = 1; i < x_.size(); ++i)
            if (!(x_[i] > x_[i - 1])) throw std::invalid_argument("breakpoints must be strictly increasing");
    }

    std::size_t components() const { return labels_.size(); }
    std::size_t nodes() const { return x_.size(); }
    const std::vector<double>& breakpoints() const { return x_; }
    const std::vector<std::string>& labels() const { return labels_; }
    double front() const { return x_.front(); }
    double back() const { return x_.back(); }

    double node_value(std::size_t node, std::size_t comp) const { return values_[node * components() + comp]; }
    double node_slope(std::size_t node, std::size_t comp) const { return slopes_[node * components() + comp]; }

    double value(std::size_t comp, double x) const {
        const auto [i, t, h] = locate(x);
        const std::size_t n = components();
        const double y0 = values_[i * n + comp], y1 = values_[(i + 1) * n + comp];
        const double m0 = slopes_[i * n + comp], m1 = slopes_[(i + 1) * n + comp];
        if (t == 0.0) return y0;
        if (t == 1.0) return y1;
        const double s = 1.0 - t;
        const double h00 = (1.0 + 2.0 * t) * s * s;
        const double h10 = t * s * s;
        const double h01 = t * t * (3.0 - 2.0 * t);
        const double h11 = t * t * (t - 1.0);
        return h00 * y0 + h10 * h * m0 + h01 * y1 + h11 * h * m1;
    }

    double derivative(std::size_t comp, double x) const {
        const auto [i, t, h] = locate(x);
        const std::size_t n = components();
        const double y0 = values_[i * n + comp], y1 = values_[(i + 1) * n + comp];
        const double m0 = slopes_[i * n + comp], m1 = slopes_[(i + 1) * n + comp];
        if (t == 0.0) return m0;
        if (t == 1.0) return m1;
        const double d00 = 6.0 * t * t - 6.0 * t;
        const double d10 = 3.0 * t * t - 4.0 * t + 1.0;
        const double d11 = 3.0 * t * t - 2.0 * t;
        return d00 * (y0 - y1) / h + d10 * m0 + d11 * m1;
    }

private:
    struct Location {
        std::size_t index;
        double t;
        double h;
    };

    Location locate(double x) const {
        const double span = x_.back() - x_.front();
        const double slack = 1e-12 * span;
        if (x < x_.front() - slack || x > x_.back() + slack)
            throw std::out_of_range("evaluation point outside dense trajectory range");
        x = std::clamp(x, x_.front(), x_.back());
        auto it = std::upper_bound(x_.begin(), x_.end(), x);
        std::size_t i = it == x_.begin() ? 0 : static_cast<std::size_t>(it - x_.begin()) - 1;
        if (i >= x_.size() - 1) i = x_.size() - 2;
        const double h = x_[i + 1] - x_[i];
        double t = (x - x_[i]) / h;
        if (x == x_[i]) t = 0.0;
        else if (x == x_[i + 1]) t = 1.0;
        return {i, t, h};
    }

    std::vector<double> x_;
    std::vector<std::string> labels_;
    std::vector<double> values_;
    std::vector<double> slopes_;
};

/// Integrates y' = rhs(x, y) with classical RK4 on `grid` starting from
/// `y0` at grid.a. `rhs(x, span<const double> y, span<double> dydx)`.
template <class Rhs>
DenseTrajectory integrate_rk4(const Rhs& rhs, std::vector<double> y0, const UniformGrid& grid,
                              std::vector<std::string> labels) {
    const std::size_t n = y0.size();
    if (labels.size() != n) throw std::invalid_argument("one label per component required");
    const std::size_t nodes = grid.size();
    std::vector<double> values(nodes * n);
    std::vector<double> slopes(nodes * n);
    std::vector<double> y = std::move(y0), k1(n), k2(n), k3(n), k4(n), tmp(n);

    auto call = [&](double x, const std::vector<double>& state, std::vector<double>& out) {
        rhs(x, std::span<const double>(state), std::span<double>(out));
    };

    const double h = grid.step();
    for (std::size_t i = 0;; ++i) {
        const double x = grid.node(i);
        call(x, y, k1);
        std::copy(y.begin(), y.end(), values.begin() + static_cast<std::ptrdiff_t>(i * n));
        std::copy(k1.begin(), k1.end(), slopes.begin() + static_cast<std::ptrdiff_t>(i * n));
        if (i + 1 == nodes) break;
        for (std::size_t c = 0; c < n; ++c) tmp[c] = y[c] + 0.5 * h * k1[c];
        call(x + 0.5 * h, tmp, k2);
        for (std::size_t c = 0; c < n; ++c) tmp[c] = y[c] + 0.5 * h * k2[c];
        call(x + 0.5 * h, tmp, k3);
        for (std::size_t c = 0; c < n; ++c) tmp[c] = y[c] + h * k3[c];
        call(grid.node(i + 1), tmp, k4);
        for (std::size_t c = 0; c < n; ++c) y[c] += h / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
    }
    return DenseTrajectory(grid.nodes(), std::move(labels), std::move(values), std::move(slopes));
}

} // namespace vop
