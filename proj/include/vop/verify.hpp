#pragma once

// Independent checks on computed solutions: ODE residuals, gauge
// invariance of initial value solutions, and complementary-shift fits of
// raw particular integrals.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "vop/basis.hpp"
#include "vop/csv.hpp"
#include "vop/expr.hpp"
#include "vop/problem.hpp"
#include "vop/quadrature.hpp"
#include "vop/variation.hpp"

namespace vop {

struct CheckResult {
    std::string name;
    double deviation = 0.0;
    double tolerance = 0.0;
    bool passed = false;
    std::size_t grid = 0;
};

struct VerificationReport {
    std::vector<CheckResult> checks;

    void add(std::string name, double deviation, double tolerance, std::size_t grid) {
        // NaN deviations fail.
        checks.push_back({std::move(name), deviation, tolerance, deviation <= tolerance, grid});
    }
    bool passed() const {
        return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
    }
};

inline void render_text(std::ostream& out, const VerificationReport& report) {
    std::size_t width = 5;
    for (const auto& c : report.checks) width = std::max(width, c.name.size());
    out << std::left << std::setw(static_cast<int>(width)) << "check" << "  " << std::setw(24) << "deviation" << "  "
        << std::setw(24) << "tolerance" << "  " << std::setw(6) << "grid" << "  result\n";
    for (const auto& c : report.checks) {
        out << std::left << std::setw(static_cast<int>(width)) << c.name << "  " << std::setw(24) << format_full(c.deviation)
            << "  " << std::setw(24) << format_full(c.tolerance) << "  " << std::setw(6) << c.grid << "  "
            << (c.passed ? "PASS" : "FAIL") << '\n';
    }
    out << "overall: " << (report.passed() ? "PASS" : "FAIL") << '\n';
}

inline void render_csv(std::ostream& out, const VerificationReport& report) {
    out << "check,deviation,tolerance,pass\n";
    for (const auto& c : report.checks)
        out << c.name << ',' << format_full(c.deviation) << ',' << format_full(c.tolerance) << ','
            << (c.passed ? "true" : "false") << '\n';
}

/// max |y'' + p1 y' + p2 y - q| over the interior of `grid` uniform sample
/// points, with y'' taken from y' by fourth-order central differences at
/// step (b - a) / (8 grid).
inline double residual(const Ode2Problem& problem, const ScalarFn& y, const ScalarFn& yprime, std::size_t grid) {
    if (grid < 3) throw std::invalid_argument("residual: grid must be >= 3");
    const auto& iv = problem.interval;
    const double h = iv.length() / (8.0 * static_cast<double>(grid));
    double worst = 0.0;
    for (std::size_t i = 1; i + 1 < grid; ++i) {
        const double x = iv.a + iv.length() * static_cast<double>(i) / static_cast<double>(grid - 1);
        const double ypp = (-yprime(x + 2 * h) + 8.0 * yprime(x + h) - 8.0 * yprime(x - h) + yprime(x - 2 * h)) / (12.0 * h);
        const double r = ypp + eval(problem.p1, x) * yprime(x) + eval(problem.p2, x) * y(x) - eval(problem.q, x);
        worst = std::max(worst, std::fabs(r));
        if (std::isnan(r)) return r;
    }
    return worst;
}

struct ShiftFit {
    double alpha = 0.0;
    double beta = 0.0;
    double misfit = 0.0;
};

/// Fits d = ypA - yp0 to alpha y1 + beta y2 at two interior anchors
/// (1/3 and 2/3 of the interval, falling back to 1/4 and 3/4) and reports
/// the worst misfit over `samples` uniform points.
inline ShiftFit complementary_shift_fit(const ScalarFn& ypA, const ScalarFn& yp0, const BasisSolution& basis,
                                        std::size_t samples = 257) {
    const auto& iv = basis.interval();
    auto d = [&](double x) { return ypA(x) - yp0(x); };
    const std::pair<double, double> anchors[] = {{1.0 / 3.0, 2.0 / 3.0}, {0.25, 0.75}};
    for (const auto& [fa, fb] : anchors) {
        const double xa = iv.a + fa * iv.length(), xb = iv.a + fb * iv.length();
        const double m11 = basis.y1(xa), m12 = basis.y2(xa), m21 = basis.y1(xb), m22 = basis.y2(xb);
        const double det = m11 * m22 - m12 * m21;
        if (!(std::fabs(det) > kDegenerateRelTol * (std::fabs(m11 * m22) + std::fabs(m12 * m21)))) continue;
        const double da = d(xa), db = d(xb);
        ShiftFit fit;
        fit.alpha = (da * m22 - m12 * db) / det;
        fit.beta = (m11 * db - m21 * da) / det;
        for (std::size_t i = 0; i < samples; ++i) {
            const double x = i + 1 == samples ? iv.b
                                              : iv.a + iv.length() * static_cast<double>(i) / static_cast<double>(samples - 1);
            const double r = std::fabs(d(x) - fit.alpha * basis.y1(x) - fit.beta * basis.y2(x));
            fit.misfit = std::max(fit.misfit, r);
            if (std::isnan(r)) fit.misfit = r;
        }
        return fit;
    }
    throw SolverError("complementary_shift_fit: anchor system singular after re-anchoring");
}

/// Tolerance shared by the invariance and residual checks: 1e-5 (1 + scale).
inline double mixed_tolerance(double scale) { return 1e-5 * (1.0 + scale); }

/// Solves the initial value problem once per gauge and compares every pair
/// of solutions in sup-norm over the panel grid.
inline VerificationReport gauge_invariance_sweep(const Ode2Problem& problem, const BasisSolution& basis,
                                                 const std::vector<Gauge>& gauges, std::size_t panels) {
    if (gauges.size() < 2) throw std::invalid_argument("gauge_invariance_sweep: need at least two gauges");
    const UniformGrid grid{problem.interval.a, problem.interval.b, panels};
    const auto xs = grid.nodes();
    std::vector<std::vector<double>> values;
    double ymax = 0.0;
    for (const auto& g : gauges) {
        const IvpSolution sol = solve_ivp(problem, basis, g, panels);
        std::vector<double> v(xs.size());
        for (std::size_t i = 0; i < xs.size(); ++i) {
            v[i] = sol.value(xs[i]);
            ymax = std::max(ymax, std::fabs(v[i]));
        }
        values.push_back(std::move(v));
    }
    VerificationReport report;
    const double tol = mixed_tolerance(ymax);
    for (std::size_t i = 0; i < gauges.size(); ++i)
        for (std::size_t j = i + 1; j < gauges.size(); ++j) {
            double dev = 0.0;
            for (std::size_t k = 0; k < xs.size(); ++k) dev = std::max(dev, std::fabs(values[i][k] - values[j][k]));
            report.add("invariance[A=" + render(gauges[i].A) + " vs A=" + render(gauges[j].A) + "]", dev, tol, xs.size());
        }
    return report;
}

inline VerificationReport gauge_invariance_sweep(const Ode2Problem& problem, const std::vector<Gauge>& gauges,
                                                 std::size_t panels) {
    return gauge_invariance_sweep(problem, solve_basis(problem, panels), gauges, panels);
}

/// Full battery used by the `check` command for an initial value problem:
/// Abel identity, residual of each gauged solution, pairwise invariance, and
/// the complementary-shift fit of each raw particular integral against the
/// first gauge's.
inline VerificationReport run_checks(const Ode2Problem& problem, const BasisSolution& basis,
                                     const std::vector<Gauge>& gauges, std::size_t panels) {
    VerificationReport report;
    report.add("abel", abel_check(basis, problem), 1e-5, 256);

    double qmax = 0.0;
    for (double x : UniformGrid{problem.interval.a, problem.interval.b, 256}.nodes())
        qmax = std::max(qmax, std::fabs(eval(problem.q, x)));
    constexpr std::size_t kResidualGrid = 257;
    std::vector<ParticularSolution> particulars;
    for (const auto& g : gauges) {
        const IvpSolution sol = solve_ivp(problem, basis, g, panels);
        const double r = residual(
            problem, [&](double x) { return sol.value(x); }, [&](double x) { return sol.derivative(x); }, kResidualGrid);
        report.add("residual[A=" + render(g.A) + "]", r, mixed_tolerance(qmax), kResidualGrid);
        particulars.push_back(sol.particular());
    }
    if (gauges.size() >= 2) {
        for (auto& c : gauge_invariance_sweep(problem, basis, gauges, panels).checks) report.checks.push_back(std::move(c));
        const auto& ref = particulars.front();
        for (std::size_t i = 1; i < particulars.size(); ++i) {
            const auto& p = particulars[i];
            const ShiftFit fit = complementary_shift_fit([&](double x) { return p.value(x); },
                                                         [&](double x) { return ref.value(x); }, basis);
            report.add("shift[A=" + render(gauges[i].A) + " vs A=" + render(gauges.front().A) + "]", fit.misfit, 1e-5, 257);
        }
    }
    return report;
}

} // namespace vop
