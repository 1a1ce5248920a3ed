#include <cmath>
#include <span>
#include <vector>

#include <gtest/gtest.h>

#include "vop/dense.hpp"
#include "vop/quadrature.hpp"

using namespace vop;

TEST(Simpson, ExactForCubics) {
    auto f = [](double x) { return 4 * x * x * x - 3 * x * x + 1; };
    EXPECT_NEAR(simpson(f, 0.0, 2.0, 2), 10.0, 1e-13);
    EXPECT_NEAR(simpson_panel(f, -1.0, 1.0), 0.0, 1e-13);
    EXPECT_THROW(simpson(f, 0.0, 1.0, 3), std::invalid_argument);
}

TEST(Simpson, CumulativeMatchesClosedForm) {
    const UniformGrid grid{0.0, 1.0, 64};
    std::vector<double> v;
    for (double x : grid.nodes()) v.push_back(std::exp(x));
    const auto c = cumulative_simpson(v, grid.step());
    for (std::size_t i = 0; i < c.size(); ++i) EXPECT_NEAR(c[i], std::exp(grid.node(i)) - 1.0, 1e-8);

    CumulativeIntegral<double (*)(double)> ci([](double x) { return std::cos(x); }, UniformGrid{0.0, 2.0, 100});
    for (double x : {0.0, 0.013, 0.5, 1.0, 1.234567, 1.99, 2.0}) EXPECT_NEAR(ci(x), std::sin(x), 1e-9) << x;
}

TEST(DenseOutput, HarmonicGrowth) {
    // y'' = y with y(0) = 1, y'(0) = 0: cosh and sinh.
    const UniformGrid grid{0.0, 1.0, 1000};
    auto rhs = [](double, std::span<const double> y, std::span<double> dy) {
        dy[0] = y[1];
        dy[1] = y[0];
    };
    const DenseTrajectory t = integrate_rk4(rhs, {1.0, 0.0}, grid, {"y", "y'"});
    double worst = 0.0;
    for (int k = 0; k < 1000; ++k) {
        const double x = (k + 0.37) / 1000.0;
        worst = std::max(worst, std::fabs(t.value(0, x) - std::cosh(x)));
        worst = std::max(worst, std::fabs(t.value(1, x) - std::sinh(x)));
    }
    EXPECT_LE(worst, 1e-8);

    for (std::size_t i = 0; i < t.nodes(); i += 97) {
        EXPECT_EQ(t.value(0, t.breakpoints()[i]), t.node_value(i, 0));
        EXPECT_EQ(t.derivative(0, t.breakpoints()[i]), t.node_slope(i, 0));
    }
    EXPECT_THROW(t.value(0, 1.5), std::out_of_range);
}

TEST(DenseOutput, ContinuousDerivativeAtBreakpoints) {
    const DenseTrajectory t({0.0, 1.0, 3.0}, {"y"}, {0.0, 1.0, 0.0}, {2.0, -1.0, 0.5});
    const double eps = 1e-7;
    EXPECT_NEAR(t.derivative(0, 1.0 - eps), t.derivative(0, 1.0 + eps), 1e-5);
    EXPECT_NEAR(t.derivative(0, 1.0 - eps), -1.0, 1e-5);
    EXPECT_THROW(DenseTrajectory({0.0, 0.0}, {"y"}, {0, 0}, {0, 0}), std::invalid_argument);
}
