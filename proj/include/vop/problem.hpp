#pragma once

// Problem definitions for scalar first/second order equations and linear
// first-order systems, plus the line-oriented problem file reader.
//
// Problem file example:
//
//   [problem]
//   kind = ode2
//   interval = 0 2
//   p1 = "-1"
//   p2 = "-2"
//   q = "2*exp(-x)"
//   ivp = 0 0

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "vop/expr.hpp"

namespace vop {

/// Input problem is malformed or unusable. `key()` names the offending entry
/// when there is one.
class ProblemError : public std::runtime_error {
public:
    explicit ProblemError(const std::string& what, std::string key = {})
        : std::runtime_error(what), key_(std::move(key)) {}
    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

struct Interval {
    double a = 0.0;
    double b = 1.0;

    double length() const { return b - a; }
    bool contains(double x) const { return x >= a && x <= b; }
};

struct InitialConditions {
    double y0 = 0.0;
    double dy0 = 0.0;
};

/// y(a) = y(b) = 0.
struct DirichletZero {};

using Conditions = std::variant<InitialConditions, DirichletZero>;

inline void validate_interval(const Interval& iv) {
    if (!std::isfinite(iv.a) || !std::isfinite(iv.b)) throw ProblemError("interval endpoints must be finite", "interval");
    if (!(iv.a < iv.b)) throw ProblemError("interval requires a < b", "interval");
}

namespace detail {

inline void collect_denominators(const Expr& e, std::vector<Expr>& out) {
    if (e.kind() == NodeKind::Div) out.push_back(e.child(1));
    for (std::size_t i = 0; i < e.arity(); ++i) collect_denominators(e.child(i), out);
}

inline std::optional<double> try_eval(const Expr& e, double x) {
    try {
        return eval(e, x);
    } catch (const DomainError&) {
        return std::nullopt;
    }
}

} // namespace detail

/// Points in [a, b] where any of `exprs` is undefined. Samples `samples`
/// uniform points, flags those that fail to evaluate, and bisects sign
/// changes of every division denominator to locate poles between samples.
inline std::vector<double> find_singular_points(const std::vector<Expr>& exprs, const Interval& iv,
                                                std::size_t samples = 1024) {
    std::vector<double> xs(samples);
    for (std::size_t i = 0; i < samples; ++i)
        xs[i] = i + 1 == samples ? iv.b : iv.a + iv.length() * static_cast<double>(i) / static_cast<double>(samples - 1);

    std::set<double> found;
    for (const auto& e : exprs)
        for (double x : xs)
            if (!detail::try_eval(e, x)) found.insert(x);

    std::vector<Expr> dens;
    for (const auto& e : exprs) detail::collect_denominators(e, dens);
    for (const auto& d : dens) {
        for (std::size_t i = 0; i + 1 < samples; ++i) {
            auto lo_v = detail::try_eval(d, xs[i]);
            auto hi_v = detail::try_eval(d, xs[i + 1]);
            if (!lo_v || !hi_v || *lo_v == 0.0 || *hi_v == 0.0) continue;
            if ((*lo_v < 0.0) == (*hi_v < 0.0)) continue;
            double lo = xs[i], hi = xs[i + 1];
            double flo = *lo_v;
            for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
                const double mid = 0.5 * (lo + hi);
                if (mid == lo || mid == hi) break;
                auto fm = detail::try_eval(d, mid);
                if (!fm) {
                    lo = hi = mid;
                    break;
                }
                if (*fm == 0.0) {
                    lo = hi = mid;
                    break;
                }
                if ((*fm < 0.0) == (flo < 0.0)) {
                    lo = mid;
                    flo = *fm;
                } else {
                    hi = mid;
                }
            }
            found.insert(0.5 * (lo + hi));
        }
    }
    return {found.begin(), found.end()};
}

/// y' + p(x) y = q(x), y(a) = y0.
struct Ode1Problem {
    Expr p;
    Expr q;
    Interval interval;
    double y0 = 0.0;
    std::vector<double> singular_points;

    static Ode1Problem make(Expr p, Expr q, Interval iv, double y0) {
        validate_interval(iv);
        if (!std::isfinite(y0)) throw ProblemError("initial value must be finite", "ivp");
        Ode1Problem out{std::move(p), std::move(q), iv, y0, {}};
        out.singular_points = find_singular_points({out.p}, iv);
        return out;
    }
};

/// y'' + p1(x) y' + p2(x) y = q(x) in standard form (unit leading
/// coefficient) on [a, b] with IVP or Dirichlet-zero BVP conditions.
struct Ode2Problem {
    Expr p1;
    Expr p2;
    Expr q;
    Interval interval;
    Conditions conditions = InitialConditions{};
    std::vector<double> singular_points;

    /// Builds a problem, dividing through by `lead` when given, and detects
    /// singular points of p1/p2 on the interval.
    static Ode2Problem make(Expr p1, Expr p2, Expr q, Interval iv, Conditions conds = InitialConditions{},
                            std::optional<Expr> lead = std::nullopt) {
        validate_interval(iv);
        if (const auto* ic = std::get_if<InitialConditions>(&conds))
            if (!std::isfinite(ic->y0) || !std::isfinite(ic->dy0)) throw ProblemError("initial data must be finite", "ivp");
        if (lead) {
            p1 = Expr::binary(NodeKind::Div, p1, *lead);
            p2 = Expr::binary(NodeKind::Div, p2, *lead);
            q = Expr::binary(NodeKind::Div, q, *lead);
        }
        Ode2Problem out{std::move(p1), std::move(p2), std::move(q), iv, conds, {}};
        out.singular_points = find_singular_points({out.p1, out.p2}, iv);
        return out;
    }

    bool is_ivp() const { return std::holds_alternative<InitialConditions>(conditions); }
    bool is_bvp() const { return std::holds_alternative<DirichletZero>(conditions); }
    const InitialConditions& ivp() const {
        if (!is_ivp()) throw ProblemError("problem has no initial conditions", "ivp");
        return std::get<InitialConditions>(conditions);
    }
    Ode2Problem with_rhs(Expr rhs) const {
        Ode2Problem out = *this;
        out.q = std::move(rhs);
        return out;
    }
    Ode2Problem with_conditions(Conditions c) const {
        Ode2Problem out = *this;
        out.conditions = c;
        return out;
    }
};

/// x'(t) = P(t) x(t) + b(t), x(t0) = x0, on [t0, t_end]. Expressions use
/// the variable `t`.
struct SystemProblem {
    static constexpr std::size_t kMaxDimension = 8;

    std::size_t n = 1;
    std::vector<Expr> P; // row-major n*n
    std::vector<Expr> b;
    Interval interval;
    std::vector<double> x0;
    std::vector<double> singular_points;

    const Expr& coefficient(std::size_t i, std::size_t j) const { return P.at(i * n + j); }

    static SystemProblem make(std::size_t n, std::vector<Expr> P, std::vector<Expr> b, Interval iv, std::vector<double> x0) {
        validate_interval(iv);
        if (n < 1 || n > kMaxDimension) throw ProblemError("system dimension must be in 1..8", "n");
        if (P.size() != n * n) throw ProblemError("matrix P must have n*n entries", "P");
        if (b.size() != n) throw ProblemError("forcing b must have n entries", "b");
        if (x0.size() != n) throw ProblemError("x0 must have n entries", "x0");
        for (double v : x0)
            if (!std::isfinite(v)) throw ProblemError("x0 entries must be finite", "x0");
        SystemProblem out{n, std::move(P), std::move(b), iv, std::move(x0), {}};
        out.singular_points = find_singular_points(out.P, iv);
        return out;
    }

    SystemProblem with_initial(std::vector<double> v) const {
        SystemProblem out = *this;
        if (v.size() != n) throw ProblemError("x0 must have n entries", "x0");
        out.x0 = std::move(v);
        return out;
    }
    SystemProblem with_forcing(std::vector<Expr> f) const {
        SystemProblem out = *this;
        if (f.size() != n) throw ProblemError("forcing b must have n entries", "b");
        out.b = std::move(f);
        return out;
    }
};

/// Auxiliary constraint c1' y1 + c2' y2 = A(x) with its exact derivative.
struct Gauge {
    Expr A;
    Expr Aprime;

    explicit Gauge(Expr a) : A(std::move(a)), Aprime(differentiate(A)) {}
    explicit Gauge(std::string_view source) : Gauge(parse(source)) {}
    Gauge() : Gauge(Expr::constant(0.0)) {}

    static Gauge zero() { return Gauge(); }
};

using Problem = std::variant<Ode1Problem, Ode2Problem, SystemProblem>;

// ---------------------------------------------------------------------------
// Problem file reader

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

struct Entry {
    std::string value;
    std::size_t line = 0;
};

inline std::vector<double> parse_numbers(const std::string& key, const Entry& e) {
    std::vector<double> out;
    std::string_view rest = e.value;
    for (;;) {
        rest = trim(rest);
        if (rest.empty()) break;
        std::size_t end = 0;
        while (end < rest.size() && !std::isspace(static_cast<unsigned char>(rest[end]))) ++end;
        const std::string_view tok = rest.substr(0, end);
        double v = 0.0;
        const char* first = tok.data();
        if (!tok.empty() && tok.front() == '+') ++first;
        const auto res = std::from_chars(first, tok.data() + tok.size(), v);
        if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size() || !std::isfinite(v))
            throw ProblemError("line " + std::to_string(e.line) + ": key '" + key + "': invalid number '" +
                                   std::string(tok) + "'",
                               key);
        out.push_back(v);
        rest.remove_prefix(end);
    }
    return out;
}

inline std::vector<double> parse_numbers(const std::string& key, const Entry& e, std::size_t count) {
    auto v = parse_numbers(key, e);
    if (v.size() != count)
        throw ProblemError("line " + std::to_string(e.line) + ": key '" + key + "' expects " + std::to_string(count) +
                               " number(s), got " + std::to_string(v.size()),
                           key);
    return v;
}

inline Expr parse_expr_value(const std::string& key, const Entry& e, std::string_view var) {
    std::string_view v = trim(e.value);
    if (v.size() < 2 || v.front() != '"' || v.back() != '"')
        throw ProblemError("line " + std::to_string(e.line) + ": key '" + key + "': expression must be double-quoted", key);
    v = v.substr(1, v.size() - 2);
    try {
        return parse(v, var);
    } catch (const ParseError& err) {
        throw ProblemError("line " + std::to_string(e.line) + ": key '" + key + "': " + err.what(), key);
    }
}

class EntryTable {
public:
    explicit EntryTable(std::map<std::string, Entry> entries) : entries_(std::move(entries)) {}

    const Entry& require(const std::string& key) {
        auto it = entries_.find(key);
        if (it == entries_.end()) throw ProblemError("missing key '" + key + "'", key);
        used_.insert(key);
        return it->second;
    }
    const Entry* optional(const std::string& key) {
        auto it = entries_.find(key);
        if (it == entries_.end()) return nullptr;
        used_.insert(key);
        return &it->second;
    }
    void reject_unused() const {
        for (const auto& [k, e] : entries_)
            if (!used_.count(k))
                throw ProblemError("line " + std::to_string(e.line) + ": unknown key '" + k + "'", k);
    }

private:
    std::map<std::string, Entry> entries_;
    std::set<std::string> used_;
};

} // namespace detail

/// Parses problem-file text. Deterministic: equal input yields structurally
/// equal problems.
inline Problem load_problem(std::string_view text) {
    using detail::Entry;
    std::map<std::string, Entry> entries;
    bool in_problem = false;
    bool saw_problem = false;
    std::size_t line_no = 0;
    std::string_view rest = text;
    while (!rest.empty() || line_no == 0) {
        ++line_no;
        const std::size_t nl = rest.find('\n');
        std::string_view line = rest.substr(0, nl);
        rest = nl == std::string_view::npos ? std::string_view{} : rest.substr(nl + 1);

        // Strip comments that are not inside a quoted value.
        bool quoted = false;
        for (std::size_t i = 0; i < line.size(); ++i) {
            if (line[i] == '"') quoted = !quoted;
            else if (line[i] == '#' && !quoted) {
                line = line.substr(0, i);
                break;
            }
        }
        line = detail::trim(line);
        if (line.empty()) {
            if (rest.empty()) break;
            continue;
        }
        const std::string where = "line " + std::to_string(line_no) + ": ";
        if (line.front() == '[') {
            if (line.back() != ']') throw ProblemError(where + "malformed section header");
            const auto name = detail::trim(line.substr(1, line.size() - 2));
            if (name != "problem") throw ProblemError(where + "unknown section [" + std::string(name) + "]");
            if (saw_problem) throw ProblemError(where + "duplicate section [problem]");
            in_problem = saw_problem = true;
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string_view::npos) throw ProblemError(where + "expected 'key = value'");
        std::string key(detail::trim(line.substr(0, eq)));
        std::string value(detail::trim(line.substr(eq + 1)));
        if (key.empty()) throw ProblemError(where + "empty key");
        if (!in_problem) throw ProblemError(where + "key '" + key + "' outside of section [problem]", key);
        if (entries.count(key)) throw ProblemError(where + "duplicate key '" + key + "'", key);
        entries.emplace(key, Entry{std::move(value), line_no});
    }
    if (!saw_problem) throw ProblemError("missing section [problem]");

    detail::EntryTable table(std::move(entries));
    const std::string kind = table.require("kind").value;
    const auto iv_vals = detail::parse_numbers("interval", table.require("interval"), 2);
    const Interval iv{iv_vals[0], iv_vals[1]};
    validate_interval(iv);

    if (kind == "ode1") {
        Expr p = detail::parse_expr_value("p", table.require("p"), "x");
        Expr q = detail::parse_expr_value("q", table.require("q"), "x");
        const auto y0 = detail::parse_numbers("ivp", table.require("ivp"), 1);
        table.reject_unused();
        return Ode1Problem::make(std::move(p), std::move(q), iv, y0[0]);
    }
    if (kind == "ode2") {
        std::optional<Expr> lead;
        if (const Entry* e = table.optional("lead")) lead = detail::parse_expr_value("lead", *e, "x");
        Expr p1 = detail::parse_expr_value("p1", table.require("p1"), "x");
        Expr p2 = detail::parse_expr_value("p2", table.require("p2"), "x");
        Expr q = detail::parse_expr_value("q", table.require("q"), "x");
        const Entry* ivp = table.optional("ivp");
        const Entry* bvp = table.optional("bvp");
        if (ivp && bvp) throw ProblemError("keys 'ivp' and 'bvp' are mutually exclusive", "bvp");
        if (!ivp && !bvp) throw ProblemError("missing key 'ivp' or 'bvp'", "ivp");
        Conditions conds;
        if (ivp) {
            const auto v = detail::parse_numbers("ivp", *ivp, 2);
            conds = InitialConditions{v[0], v[1]};
        } else {
            if (detail::trim(bvp->value) != "dirichlet0")
                throw ProblemError("line " + std::to_string(bvp->line) + ": key 'bvp' supports only 'dirichlet0'", "bvp");
            conds = DirichletZero{};
        }
        table.reject_unused();
        return Ode2Problem::make(std::move(p1), std::move(p2), std::move(q), iv, conds, std::move(lead));
    }
    if (kind == "system") {
        const auto nv = detail::parse_numbers("n", table.require("n"), 1);
        if (nv[0] != std::trunc(nv[0]) || nv[0] < 1 || nv[0] > static_cast<double>(SystemProblem::kMaxDimension))
            throw ProblemError("key 'n' must be an integer in 1..8", "n");
        const auto n = static_cast<std::size_t>(nv[0]);
        std::vector<Expr> P;
        P.reserve(n * n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                const std::string key = "P[" + std::to_string(i) + "][" + std::to_string(j) + "]";
                P.push_back(detail::parse_expr_value(key, table.require(key), "t"));
            }
        std::vector<Expr> b;
        for (std::size_t i = 0; i < n; ++i) {
            const std::string key = "b[" + std::to_string(i) + "]";
            b.push_back(detail::parse_expr_value(key, table.require(key), "t"));
        }
        auto x0 = detail::parse_numbers("x0", table.require("x0"), n);
        table.reject_unused();
        return SystemProblem::make(n, std::move(P), std::move(b), iv, std::move(x0));
    }
    throw ProblemError("key 'kind' must be one of ode1, ode2, system; got '" + kind + "'", "kind");
}

/// Reads and parses a problem file from disk.
inline Problem load_problem_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ProblemError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return load_problem(ss.str());
}

} // namespace vop
