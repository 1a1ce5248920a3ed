#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "vop/system.hpp"
#include "vop/variation.hpp"

using namespace vop;

namespace {

std::vector<Expr> exprs(std::initializer_list<const char*> src) {
    std::vector<Expr> out;
    for (const char* s : src) out.push_back(parse(s, "t"));
    return out;
}

SystemProblem rotation(std::vector<double> x0 = {1, 0}) {
    return SystemProblem::make(2, exprs({"0", "1", "-1", "0"}), exprs({"0", "0"}), {0, 3}, std::move(x0));
}

SystemProblem companion() {
    return SystemProblem::make(2, exprs({"0", "1", "2", "1"}), exprs({"0", "2*exp(-t)"}), {0, 2},
                               {-2.0 / 9.0, -4.0 / 9.0});
}

double max_abs_diff(const Matrix& a, const Matrix& b) { return (a - b).norm_inf(); }

} // namespace

TEST(Invert, Examples) {
    EXPECT_EQ(max_abs_diff(invert(Matrix::identity(3)), Matrix::identity(3)), 0.0);
    const Matrix d(2, {2, 0, 0, 4});
    EXPECT_EQ(max_abs_diff(invert(d), Matrix(2, {0.5, 0, 0, 0.25})), 0.0);
    EXPECT_THROW(invert(Matrix(2, {1, 2, 2, 4})), SolverError);
    EXPECT_NEAR(LuDecomposition(Matrix(2, {0, 1, 1, 0})).determinant(), -1.0, 0.0);
}

TEST(Invert, RandomWellConditioned) {
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int trial = 0; trial < 20; ++trial) {
        Matrix m(5);
        for (std::size_t i = 0; i < 5; ++i)
            for (std::size_t j = 0; j < 5; ++j) m(i, j) = u(rng) + (i == j ? 5.0 : 0.0);
        EXPECT_LE(max_abs_diff(m * invert(m), Matrix::identity(5)), 1e-10);
    }
}

TEST(Fundamental, ZeroMatrixIsIdentity) {
    const auto p = SystemProblem::make(3, exprs({"0", "0", "0", "0", "0", "0", "0", "0", "0"}), exprs({"0", "0", "0"}),
                                       {0, 1}, {1, 2, 3});
    const auto f = solve_fundamental(p, 32);
    for (double t : {0.0, 0.33, 1.0}) EXPECT_EQ(max_abs_diff(f(t), Matrix::identity(3)), 0.0);
    EXPECT_EQ(max_abs_diff(matrix_green(f, 0.8, 0.2), Matrix::identity(3)), 0.0);
}

TEST(Fundamental, ScalarExponential) {
    const auto p = SystemProblem::make(1, exprs({"-1"}), exprs({"0"}), {0, 2}, {1});
    const auto f = solve_fundamental(p, 1000);
    for (int k = 0; k <= 100; ++k) {
        const double t = 2.0 * k / 100.0 + (k < 100 ? 0.0071 : 0.0);
        EXPECT_NEAR(f(t)(0, 0), std::exp(-t), 1e-8);
    }
}

TEST(Fundamental, RotationIsOrthogonal) {
    const auto f = solve_fundamental(rotation(), 2000);
    EXPECT_EQ(max_abs_diff(f(0.0), Matrix::identity(2)), 0.0);
    for (double t : {0.5, 1.7, 3.0}) {
        const Matrix m = f(t);
        Matrix mt(2);
        for (std::size_t i = 0; i < 2; ++i)
            for (std::size_t j = 0; j < 2; ++j) mt(i, j) = m(j, i);
        EXPECT_LE(max_abs_diff(mt * m, Matrix::identity(2)), 1e-8);
        EXPECT_NEAR(m(0, 0), std::cos(t), 1e-8);
        EXPECT_NEAR(m(0, 1), std::sin(t), 1e-8);
    }
    // Causal matrix Green's function is rotation by t - s.
    for (auto [t, s] : {std::pair{2.0, 0.5}, std::pair{1.0, 0.9}}) {
        const Matrix g = matrix_green(f, t, s);
        EXPECT_NEAR(g(0, 0), std::cos(t - s), 1e-8);
        EXPECT_NEAR(g(0, 1), std::sin(t - s), 1e-8);
        EXPECT_NEAR(g(1, 0), -std::sin(t - s), 1e-8);
    }
    EXPECT_EQ(matrix_green(f, 0.5, 2.0).norm_inf(), 0.0);
    EXPECT_NEAR(matrix_green(f, 0.5, 2.0, false)(0, 1), std::sin(-1.5), 1e-8);
}

TEST(SolutionOperator, IdentityAndCocycle) {
    const auto p = SystemProblem::make(2, exprs({"sin(t)", "1", "-t", "0.5"}), exprs({"0", "0"}), {0, 2}, {1, 0});
    const SolutionOperator S(solve_fundamental(p, 2000));
    std::mt19937 rng(17);
    std::uniform_real_distribution<double> pick(0, 2);
    for (int k = 0; k < 64; ++k) {
        const double t = pick(rng), tau = pick(rng), sigma = pick(rng);
        EXPECT_LE(max_abs_diff(S(t, t), Matrix::identity(2)), 1e-10);
        EXPECT_LE(max_abs_diff(S(t, tau) * S(tau, sigma), S(t, sigma)), 1e-8);
    }
}

TEST(Duhamel, ScalarClosedForm) {
    const auto p = SystemProblem::make(1, exprs({"-1"}), exprs({"1"}), {0, 2}, {0});
    const auto sol = solve_system_ivp(p, 1000);
    double worst = 0.0;
    for (int k = 0; k <= 1000; ++k) {
        const double t = 2.0 * k / 1000.0 + (k < 1000 ? 0.00093 : 0.0);
        worst = std::max(worst, std::fabs(sol(t)[0] - (1.0 - std::exp(-t))));
    }
    EXPECT_LE(worst, 1e-8);
}

TEST(Duhamel, HomogeneousPropagation) {
    const auto sol = solve_system_ivp(rotation({0.3, -0.7}), 1000);
    for (double t : {0.0, 1.0, 2.5}) {
        const Vector expect = sol.fundamental()(t) * Vector{0.3, -0.7};
        EXPECT_EQ(sol(t), expect);
    }
}

TEST(Duhamel, CompanionMatchesScalarSolver) {
    const auto sys = solve_system_ivp(companion(), 2000);
    const auto p = Ode2Problem::make(parse("-1"), parse("-2"), parse("2*exp(-x)"), {0, 2},
                                     InitialConditions{-2.0 / 9.0, -4.0 / 9.0});
    const auto scalar = solve_ivp(p, solve_basis(p, 2000), Gauge::zero(), 2000);
    for (int k = 0; k <= 200; ++k) {
        const double t = 2.0 * k / 200.0;
        const Vector x = sys(t);
        EXPECT_NEAR(x[0], scalar.value(t), 1e-6);
        EXPECT_NEAR(x[1], scalar.derivative(t), 1e-6);
    }
}

TEST(Duhamel, AgreesWithDirectIntegration) {
    const std::vector<SystemProblem> problems = {
        companion(),
        SystemProblem::make(3, exprs({"0", "1", "0", "0", "0", "1", "-1", "-t", "-0.5"}), exprs({"1", "0", "sin(3*t)"}),
                            {0, 2}, {1, 0, -1}),
        SystemProblem::make(2, exprs({"-2", "cos(t)", "0.1*t", "-1"}), exprs({"exp(-t)", "t^2"}), {1, 3}, {0.5, 2}),
    };
    for (const auto& p : problems) {
        const auto sol = solve_system_ivp(p, 2000);
        const std::size_t n = p.n;
        const auto path = oracle::rk4_path(
            [&](double t, const std::vector<double>& x, std::vector<double>& dx) {
                for (std::size_t i = 0; i < n; ++i) {
                    dx[i] = eval(p.b[i], t);
                    for (std::size_t j = 0; j < n; ++j) dx[i] += eval(p.coefficient(i, j), t) * x[j];
                }
            },
            p.x0, p.interval.a, p.interval.b, 4000);
        double worst = 0.0;
        for (std::size_t k = 0; k < path.size(); k += 20) {
            const double t = p.interval.a + p.interval.length() * static_cast<double>(k) / 4000.0;
            const Vector x = sol(k == 4000 ? p.interval.b : t);
            for (std::size_t i = 0; i < n; ++i) worst = std::max(worst, std::fabs(x[i] - path[k][i]));
        }
        EXPECT_LE(worst, 1e-6) << "n=" << n;
    }
}

TEST(Duhamel, Superposition) {
    const auto p = companion();
    const auto fund = solve_fundamental(p, 2000);
    const auto full = solve_system_ivp(p, fund, 2000);
    const auto homog = solve_system_ivp(p.with_forcing(exprs({"0", "0"})), fund, 2000);
    const auto forced = solve_system_ivp(p.with_initial({0, 0}), fund, 2000);
    for (int k = 0; k <= 64; ++k) {
        const double t = 2.0 * k / 64.0;
        const Vector a = full(t), b = homog(t), c = forced(t);
        for (std::size_t i = 0; i < 2; ++i) EXPECT_NEAR(a[i], b[i] + c[i], 1e-12);
    }
}

TEST(Duhamel, CsvLayout) {
    const auto p = SystemProblem::make(1, exprs({"0"}), exprs({"1"}), {0, 1}, {2});
    std::ostringstream out;
    write_system_csv(out, solve_system_ivp(p, 16));
    const std::string s = out.str();
    EXPECT_EQ(s.substr(0, s.find('\n')), "t,x0");
    EXPECT_NE(s.find("\n1,3\n"), std::string::npos);
    EXPECT_THROW(solve_system_ivp(p, 15), std::invalid_argument);
}
