#pragma once

// Command-line front end. `run` is the whole program; tools/vopsolve.cpp only
// forwards argv.
//
// Exit codes: 0 success, 1 usage or input error, 2 solver or verification
// failure.

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <CLI11.hpp>

#include "vop/basis.hpp"
#include "vop/csv.hpp"
#include "vop/expr.hpp"
#include "vop/greens.hpp"
#include "vop/problem.hpp"
#include "vop/system.hpp"
#include "vop/variation.hpp"
#include "vop/verify.hpp"

namespace vop::cli {

enum class Command { Solve, Greens, System, Check, Wronskian };

struct CliConfig {
    Command command = Command::Solve;
    std::string problem_path;
    std::string gauge = "0";
    std::size_t steps = 2000;
    std::string output; // empty: stdout
    std::string mode;   // greens: ivp | bvp
    std::string gauges = "0;1;x;x^2;sin(x)";
    std::optional<std::string> y1;
    std::optional<std::string> y2;
};

/// Grid size of the kernel CSV written by `greens`.
inline constexpr std::size_t kKernelGrid = 65;

/// Usage or input problem; maps to exit code 1.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Failed verification; maps to exit code 2.
class CheckFailed : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline Expr parse_flag_expr(const std::string& flag, const std::string& text) {
    try {
        return parse(text);
    } catch (const ParseError& e) {
        throw UsageError("flag " + flag + ": " + e.what());
    }
}

inline std::vector<Gauge> parse_gauge_list(const std::string& text) {
    std::vector<Gauge> out;
    std::string_view rest = text;
    while (true) {
        const auto semi = rest.find(';');
        const std::string item(vop::detail::trim(rest.substr(0, semi)));
        if (item.empty()) throw UsageError("flag --gauges: empty gauge expression");
        out.emplace_back(parse_flag_expr("--gauges", item));
        if (semi == std::string_view::npos) break;
        rest = rest.substr(semi + 1);
    }
    return out;
}

inline Ode2Problem expect_ode2(const Problem& p, const std::string& path, const char* command) {
    if (const auto* o = std::get_if<Ode2Problem>(&p)) return *o;
    throw UsageError(std::string(command) + ": '" + path + "' is not an ode2 problem");
}

inline BasisSolution make_basis(const Ode2Problem& problem, const CliConfig& cfg) {
    if (cfg.y2 && !cfg.y1) throw UsageError("flag --y2 requires --y1");
    if (cfg.y1 && cfg.y2)
        return adopt_analytic_basis(problem, parse_flag_expr("--y1", *cfg.y1), parse_flag_expr("--y2", *cfg.y2));
    if (cfg.y1) return reduce_order(problem, parse_flag_expr("--y1", *cfg.y1), cfg.steps);
    return solve_basis(problem, cfg.steps);
}

inline void write_xy(std::ostream& out, const UniformGrid& grid, const ScalarFn& y, const ScalarFn& dy) {
    out << "x,y,yprime\n";
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double x = grid.node(i);
        write_csv_row(out, {x, y(x), dy(x)});
    }
}

inline void cmd_solve(const CliConfig& cfg, const Problem& problem, std::ostream& out) {
    if (const auto* p1 = std::get_if<Ode1Problem>(&problem)) {
        const auto sol = solve_first_order(*p1, cfg.steps);
        write_xy(out, UniformGrid{p1->interval.a, p1->interval.b, cfg.steps}, [&](double x) { return sol.value(x); },
                 [&](double x) { return sol.derivative(x); });
        return;
    }
    const Ode2Problem p = expect_ode2(problem, cfg.problem_path, "solve");
    const BasisSolution basis = make_basis(p, cfg);
    const UniformGrid grid{p.interval.a, p.interval.b, cfg.steps};
    if (p.is_bvp()) {
        if (cfg.gauge != "0") throw UsageError("flag --gauge applies to initial value problems only");
        const auto sol = apply_kernel(build_bvp_kernel(basis, p), p.q, cfg.steps);
        write_xy(out, grid, [&](double x) { return sol.value(x); }, [&](double x) { return sol.derivative(x); });
        return;
    }
    const Gauge gauge(parse_flag_expr("--gauge", cfg.gauge));
    const auto sol = solve_ivp(p, basis, gauge, cfg.steps);
    write_xy(out, grid, [&](double x) { return sol.value(x); }, [&](double x) { return sol.derivative(x); });
}

inline void cmd_greens(const CliConfig& cfg, const Problem& problem, std::ostream& out) {
    const Ode2Problem p = expect_ode2(problem, cfg.problem_path, "greens");
    const BasisSolution basis = make_basis(p, cfg);
    const GreensKernel kernel =
        cfg.mode == "ivp" ? build_ivp_kernel(basis) : build_bvp_kernel(basis, p.with_conditions(DirichletZero{}));
    write_kernel_csv(out, sample_kernel(kernel, kKernelGrid, kKernelGrid));
}

inline void cmd_system(const CliConfig& cfg, const Problem& problem, std::ostream& out) {
    const auto* p = std::get_if<SystemProblem>(&problem);
    if (!p) throw UsageError("system: '" + cfg.problem_path + "' is not a system problem");
    write_system_csv(out, solve_system_ivp(*p, cfg.steps));
}

inline void cmd_check(const CliConfig& cfg, const Problem& problem, std::ostream& out) {
    const Ode2Problem p = expect_ode2(problem, cfg.problem_path, "check");
    const BasisSolution basis = make_basis(p, cfg);
    VerificationReport report;
    if (p.is_ivp()) {
        report = run_checks(p, basis, parse_gauge_list(cfg.gauges), cfg.steps);
    } else {
        report.add("abel", abel_check(basis, p), 1e-5, 256);
        const auto sol = apply_kernel(build_bvp_kernel(basis, p), p.q, cfg.steps);
        double qmax = 0.0;
        for (double x : UniformGrid{p.interval.a, p.interval.b, 256}.nodes()) qmax = std::max(qmax, std::fabs(eval(p.q, x)));
        const double r = residual(p, [&](double x) { return sol.value(x); }, [&](double x) { return sol.derivative(x); }, 257);
        report.add("residual[bvp]", r, mixed_tolerance(qmax), 257);
        report.add("boundary[a]", std::fabs(sol.value(p.interval.a)), 1e-10, 1);
        report.add("boundary[b]", std::fabs(sol.value(p.interval.b)), 1e-10, 1);
    }
    if (cfg.output.empty()) {
        render_text(out, report);
    } else {
        render_csv(out, report);
    }
    if (!report.passed()) throw CheckFailed("verification failed");
}

inline void cmd_wronskian(const CliConfig& cfg, const Problem& problem, std::ostream& out) {
    const Ode2Problem p = expect_ode2(problem, cfg.problem_path, "wronskian");
    const BasisSolution basis = make_basis(p, cfg);
    out << "x,W\n";
    for (std::size_t i = 0; i < 9; ++i) {
        const double x = i == 8 ? p.interval.b : p.interval.a + p.interval.length() * static_cast<double>(i) / 8.0;
        write_csv_row(out, {x, basis.wronskian(x)});
    }
    out << "abel_deviation," << format_full(abel_check(basis, p)) << '\n';
}

/// Writes `text` to `path` through a temporary file renamed on success.
inline void write_atomically(const std::string& path, const std::string& text) {
    const std::filesystem::path target(path);
    std::filesystem::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw UsageError("cannot open output '" + path + "'");
        f << text;
        f.flush();
        if (!f) throw UsageError("cannot write output '" + path + "'");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, target, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw UsageError("cannot write output '" + path + "'");
    }
}

} // namespace detail

inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Linear ODE solver by variation of parameters", "vopsolve"};
    app.require_subcommand(1);
    CliConfig cfg;

    auto positive_even = [](const std::string& s) -> std::string {
        try {
            std::size_t pos = 0;
            const long long v = std::stoll(s, &pos);
            if (pos != s.size() || v < 16 || v % 2 != 0) return "N must be an even integer >= 16";
        } catch (const std::exception&) {
            return "N must be an even integer >= 16";
        }
        return {};
    };

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("problem", cfg.problem_path, "Problem file")->required();
        sub->add_option("-N", cfg.steps, "Step / panel count (even, >= 16)")->check(CLI::Validator(positive_even, "EVEN>=16"));
        sub->add_option("-o,--output", cfg.output, "Output path (default: stdout)");
    };
    auto add_basis = [&](CLI::App* sub) {
        sub->add_option("--y1", cfg.y1, "Closed-form first basis solution");
        sub->add_option("--y2", cfg.y2, "Closed-form second basis solution");
    };

    CLI::App* solve = app.add_subcommand("solve", "Solve a first- or second-order problem; CSV x,y,yprime");
    add_common(solve);
    add_basis(solve);
    solve->add_option("--gauge", cfg.gauge, "Gauge A(x) for the auxiliary constraint");

    CLI::App* greens = app.add_subcommand("greens", "Sample the Green's kernel; CSV x,s,G");
    add_common(greens);
    add_basis(greens);
    greens->add_option("--mode", cfg.mode, "Kernel kind")->required()->check(CLI::IsMember({"ivp", "bvp"}));

    CLI::App* system = app.add_subcommand("system", "Solve a linear system by Duhamel's formula; CSV t,x0,...");
    add_common(system);

    CLI::App* check = app.add_subcommand("check", "Run verification checks");
    add_common(check);
    add_basis(check);
    check->add_option("--gauges", cfg.gauges, "Semicolon-separated gauge expressions");

    CLI::App* wr = app.add_subcommand("wronskian", "Wronskian at 9 points and Abel deviation");
    add_common(wr);
    add_basis(wr);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }

    if (solve->parsed()) cfg.command = Command::Solve;
    else if (greens->parsed()) cfg.command = Command::Greens;
    else if (system->parsed()) cfg.command = Command::System;
    else if (check->parsed()) cfg.command = Command::Check;
    else cfg.command = Command::Wronskian;

    std::ostringstream buffer;
    int code = 0;
    try {
        Problem problem = load_problem_file(cfg.problem_path);
        switch (cfg.command) {
        case Command::Solve: detail::cmd_solve(cfg, problem, buffer); break;
        case Command::Greens: detail::cmd_greens(cfg, problem, buffer); break;
        case Command::System: detail::cmd_system(cfg, problem, buffer); break;
        case Command::Check: detail::cmd_check(cfg, problem, buffer); break;
        case Command::Wronskian: detail::cmd_wronskian(cfg, problem, buffer); break;
        }
    } catch (const CheckFailed& e) {
        // The report itself is still emitted so the failing checks are visible.
        err << "error: " << cfg.problem_path << ": " << e.what() << '\n';
        code = 2;
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    } catch (const ProblemError& e) {
        err << "error: " << cfg.problem_path << ": " << e.what() << '\n';
        return 1;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << cfg.problem_path << ": " << e.what() << '\n';
        return 2;
    }

    if (code == 2 && !cfg.output.empty()) {
        // No output file on failure.
        out << buffer.str();
        return code;
    }
    try {
        if (cfg.output.empty()) out << buffer.str();
        else detail::write_atomically(cfg.output, buffer.str());
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return code;
}

} // namespace vop::cli
