#pragma once

// Scalar expressions in one real variable: parsing, evaluation, symbolic
// differentiation and rendering.
//
// Grammar:
//   expr    := term (("+"|"-") term)*
//   term    := factor (("*"|"/") factor)*
//   factor  := "-" factor | primary ("^" factor)?
//   primary := NUMBER | VAR | IDENT "(" expr ")" | "(" expr ")"
//
// `^` is right-associative and binds tighter than a leading minus, so
// "-x^2" is -(x^2). There is no implicit multiplication.

#include <array>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <memory>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

namespace vop {

enum class NodeKind { Constant, Variable, Negate, Add, Sub, Mul, Div, Pow, Call };

enum class Function { Exp, Ln, Sin, Cos, Tan, Sinh, Cosh, Sqrt, Abs };

inline constexpr std::array<std::pair<std::string_view, Function>, 9> kFunctionNames{{
    {"exp", Function::Exp},
    {"ln", Function::Ln},
    {"sin", Function::Sin},
    {"cos", Function::Cos},
    {"tan", Function::Tan},
    {"sinh", Function::Sinh},
    {"cosh", Function::Cosh},
    {"sqrt", Function::Sqrt},
    {"abs", Function::Abs},
}};

inline std::string_view function_name(Function f) {
    for (const auto& [name, fn] : kFunctionNames)
        if (fn == f) return name;
    return "?";
}

inline std::optional<Function> lookup_function(std::string_view name) {
    for (const auto& [n, fn] : kFunctionNames)
        if (n == name) return fn;
    return std::nullopt;
}

/// Raised when evaluation leaves the real domain of an operation.
class DomainError : public std::domain_error {
public:
    DomainError(const std::string& what, double x)
        : std::domain_error(what + " at x=" + format_x(x)), x_(x) {}

    double x() const noexcept { return x_; }

private:
    static std::string format_x(double x) {
        std::array<char, 32> buf{};
        auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x);
        return std::string(buf.data(), res.ptr);
    }
    double x_;
};

/// Structured parse failure.
class ParseError : public std::runtime_error {
public:
    enum class Kind { Syntax, UnknownFunction, MalformedNumber };

    ParseError(Kind kind, std::size_t offset, std::vector<std::string> expected, const std::string& detail)
        : std::runtime_error(compose(offset, expected, detail)),
          kind_(kind),
          offset_(offset),
          expected_(std::move(expected)) {}

    Kind kind() const noexcept { return kind_; }
    std::size_t offset() const noexcept { return offset_; }
    const std::vector<std::string>& expected() const noexcept { return expected_; }

private:
    static std::string compose(std::size_t offset, const std::vector<std::string>& expected,
                               const std::string& detail) {
        std::string msg = detail + " at offset " + std::to_string(offset);
        if (!expected.empty()) {
            msg += "; expected one of:";
            for (const auto& e : expected) msg += " " + e;
        }
        return msg;
    }

    Kind kind_;
    std::size_t offset_;
    std::vector<std::string> expected_;
};

/// Immutable expression tree. Copies share structure.
class Expr {
public:
    Expr() : Expr(constant(0.0)) {}

    static Expr constant(double v) {
        if (!std::isfinite(v)) throw std::invalid_argument("expression constants must be finite");
        return Expr(std::make_shared<const Node>(Node{NodeKind::Constant, v, Function::Exp, {}}));
    }
    static Expr variable() {
        return Expr(std::make_shared<const Node>(Node{NodeKind::Variable, 0.0, Function::Exp, {}}));
    }
    static Expr negate(Expr a) { return Expr(std::make_shared<const Node>(Node{NodeKind::Negate, 0.0, Function::Exp, {std::move(a)}})); }
    static Expr binary(NodeKind kind, Expr l, Expr r) {
        return Expr(std::make_shared<const Node>(Node{kind, 0.0, Function::Exp, {std::move(l), std::move(r)}}));
    }
    static Expr call(Function f, Expr arg) {
        return Expr(std::make_shared<const Node>(Node{NodeKind::Call, 0.0, f, {std::move(arg)}}));
    }

    NodeKind kind() const noexcept { return node_->kind; }
    double value() const noexcept { return node_->value; }
    Function function() const noexcept { return node_->fn; }
    const Expr& child(std::size_t i) const { return node_->children.at(i); }
    std::size_t arity() const noexcept { return node_->children.size(); }

    bool is_constant() const noexcept { return kind() == NodeKind::Constant; }
    bool is_constant(double v) const noexcept { return is_constant() && value() == v; }

    /// True when the variable does not occur anywhere in the tree.
    bool is_free_of_variable() const {
        if (kind() == NodeKind::Variable) return false;
        for (const auto& c : node_->children)
            if (!c.is_free_of_variable()) return false;
        return true;
    }

    double operator()(double x) const;

    friend bool operator==(const Expr& a, const Expr& b) {
        if (a.node_ == b.node_) return true;
        if (a.kind() != b.kind() || a.arity() != b.arity()) return false;
        if (a.kind() == NodeKind::Constant && a.value() != b.value()) return false;
        if (a.kind() == NodeKind::Call && a.function() != b.function()) return false;
        for (std::size_t i = 0; i < a.arity(); ++i)
            if (!(a.child(i) == b.child(i))) return false;
        return true;
    }

private:
    struct Node {
        NodeKind kind;
        double value;
        Function fn;
        std::vector<Expr> children;
    };

    explicit Expr(std::shared_ptr<const Node> n) : node_(std::move(n)) {}

    std::shared_ptr<const Node> node_;
};

// ---------------------------------------------------------------------------
// Evaluation

namespace detail {

inline double checked(double v, const char* what, double x) {
    if (!std::isfinite(v)) throw DomainError(std::string("non-finite result of ") + what, x);
    return v;
}

inline double eval_at(const Expr& e, double x) {
    switch (e.kind()) {
    case NodeKind::Constant: return e.value();
    case NodeKind::Variable: return x;
    case NodeKind::Negate: return -eval_at(e.child(0), x);
    case NodeKind::Add: return checked(eval_at(e.child(0), x) + eval_at(e.child(1), x), "addition", x);
    case NodeKind::Sub: return checked(eval_at(e.child(0), x) - eval_at(e.child(1), x), "subtraction", x);
    case NodeKind::Mul: return checked(eval_at(e.child(0), x) * eval_at(e.child(1), x), "multiplication", x);
    case NodeKind::Div: {
        const double num = eval_at(e.child(0), x);
        const double den = eval_at(e.child(1), x);
        if (den == 0.0) throw DomainError("division by zero", x);
        return checked(num / den, "division", x);
    }
    case NodeKind::Pow: {
        const double base = eval_at(e.child(0), x);
        const double ex = eval_at(e.child(1), x);
        if (base == 0.0 && ex < 0.0) throw DomainError("zero raised to a negative power", x);
        if (base < 0.0 && ex != std::trunc(ex)) throw DomainError("negative base with non-integer exponent", x);
        return checked(std::pow(base, ex), "power", x);
    }
    case NodeKind::Call: {
        const double u = eval_at(e.child(0), x);
        switch (e.function()) {
        case Function::Exp: return checked(std::exp(u), "exp", x);
        case Function::Ln:
            if (u <= 0.0) throw DomainError("ln of non-positive argument", x);
            return std::log(u);
        case Function::Sin: return std::sin(u);
        case Function::Cos: return std::cos(u);
        case Function::Tan: return checked(std::tan(u), "tan", x);
        case Function::Sinh: return checked(std::sinh(u), "sinh", x);
        case Function::Cosh: return checked(std::cosh(u), "cosh", x);
        case Function::Sqrt:
            if (u < 0.0) throw DomainError("sqrt of negative argument", x);
            return std::sqrt(u);
        case Function::Abs: return std::fabs(u);
        }
    }
    }
    throw std::logic_error("unreachable expression kind");
}

} // namespace detail

/// IEEE double evaluation. Domain violations throw DomainError; the result is
/// never NaN or infinite.
inline double eval(const Expr& e, double x) {
    if (!std::isfinite(x)) throw DomainError("non-finite evaluation point", x);
    return detail::eval_at(e, x);
}

inline double Expr::operator()(double x) const { return eval(*this, x); }

// ---------------------------------------------------------------------------
// Parsing

namespace detail {

class Parser {
public:
    Parser(std::string_view src, std::string_view var) : src_(src), var_(var) {}

    Expr parse_all() {
        skip_ws();
        if (pos_ >= src_.size()) fail({"expression"}, "empty input");
        Expr e = parse_expr();
        skip_ws();
        if (pos_ < src_.size()) fail({"'+'", "'-'", "'*'", "'/'", "'^'", "end of input"}, "unexpected character");
        return e;
    }

private:
    // Guards against stack exhaustion on adversarial nesting.
    static constexpr int kMaxDepth = 200;

    struct DepthGuard {
        Parser& p;
        explicit DepthGuard(Parser& parser) : p(parser) {
            if (++p.depth_ > kMaxDepth) p.fail({}, "nesting too deep");
        }
        ~DepthGuard() { --p.depth_; }
    };

    [[noreturn]] void fail(std::vector<std::string> expected, const std::string& detail) const {
        throw ParseError(ParseError::Kind::Syntax, pos_, std::move(expected), "syntax error: " + detail);
    }

    void skip_ws() {
        while (pos_ < src_.size() && (src_[pos_] == ' ' || src_[pos_] == '\t' || src_[pos_] == '\n' || src_[pos_] == '\r'))
            ++pos_;
    }

    bool accept(char c) {
        skip_ws();
        if (pos_ < src_.size() && src_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    Expr parse_expr() {
        DepthGuard guard(*this);
        Expr lhs = parse_term();
        for (;;) {
            if (accept('+')) lhs = Expr::binary(NodeKind::Add, lhs, parse_term());
            else if (accept('-')) lhs = Expr::binary(NodeKind::Sub, lhs, parse_term());
            else return lhs;
        }
    }

    Expr parse_term() {
        Expr lhs = parse_factor();
        for (;;) {
            if (accept('*')) lhs = Expr::binary(NodeKind::Mul, lhs, parse_factor());
            else if (accept('/')) lhs = Expr::binary(NodeKind::Div, lhs, parse_factor());
            else return lhs;
        }
    }

    // A leading minus applies to the whole power: -x^2 is -(x^2).
    Expr parse_factor() {
        DepthGuard guard(*this);
        if (accept('-')) return Expr::negate(parse_factor());
        Expr base = parse_primary();
        if (accept('^')) return Expr::binary(NodeKind::Pow, base, parse_factor());
        return base;
    }

    static bool is_digit(char c) { return c >= '0' && c <= '9'; }
    static bool is_alpha(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; }

    Expr parse_primary() {
        skip_ws();
        if (pos_ >= src_.size()) fail({"number", std::string(var_), "function", "'('"}, "unexpected end of input");
        const char c = src_[pos_];
        if (is_digit(c)) return parse_number();
        if (c == '(') {
            ++pos_;
            Expr inner = parse_expr();
            if (!accept(')')) fail({"')'"}, "unbalanced parenthesis");
            return inner;
        }
        if (is_alpha(c)) {
            const std::size_t start = pos_;
            while (pos_ < src_.size() && (is_alpha(src_[pos_]) || is_digit(src_[pos_]))) ++pos_;
            const std::string_view ident = src_.substr(start, pos_ - start);
            if (ident == var_) return Expr::variable();
            const auto fn = lookup_function(ident);
            if (!fn) {
                std::vector<std::string> names{std::string(var_)};
                for (const auto& [n, f] : kFunctionNames) names.emplace_back(n);
                throw ParseError(ParseError::Kind::UnknownFunction, start, std::move(names),
                                 "unknown identifier '" + std::string(ident) + "'");
            }
            if (!accept('(')) fail({"'('"}, "function name must be followed by '('");
            Expr arg = parse_expr();
            if (!accept(')')) fail({"')'"}, "unbalanced parenthesis");
            return Expr::call(*fn, arg);
        }
        fail({"number", std::string(var_), "function", "'('", "'-'"}, "unexpected character");
    }

    Expr parse_number() {
        const std::size_t start = pos_;
        auto malformed = [&](const std::string& why) -> ParseError {
            return ParseError(ParseError::Kind::MalformedNumber, start, {"digit"}, "malformed number literal: " + why);
        };
        while (pos_ < src_.size() && is_digit(src_[pos_])) ++pos_;
        if (pos_ < src_.size() && src_[pos_] == '.') {
            ++pos_;
            if (pos_ >= src_.size() || !is_digit(src_[pos_])) throw malformed("missing digits after '.'");
            while (pos_ < src_.size() && is_digit(src_[pos_])) ++pos_;
        }
        if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
            ++pos_;
            if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
            if (pos_ >= src_.size() || !is_digit(src_[pos_])) throw malformed("missing exponent digits");
            while (pos_ < src_.size() && is_digit(src_[pos_])) ++pos_;
        }
        if (pos_ < src_.size() && src_[pos_] == '.') throw malformed("unexpected '.'");
        double v = 0.0;
        const auto res = std::from_chars(src_.data() + start, src_.data() + pos_, v);
        if (res.ec != std::errc{} || res.ptr != src_.data() + pos_ || !std::isfinite(v))
            throw malformed("value out of range");
        return Expr::constant(v);
    }

    std::string_view src_;
    std::string_view var_;
    std::size_t pos_ = 0;
    int depth_ = 0;
};

} // namespace detail

/// Parses `source` under the grammar above. `var` names the independent
/// variable ("x" for scalar problems, "t" for systems).
inline Expr parse(std::string_view source, std::string_view var = "x") {
    return detail::Parser(source, var).parse_all();
}

// ---------------------------------------------------------------------------
// Rendering

inline std::string render_number(double v) {
    std::array<char, 32> buf{};
    auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

/// Fully parenthesized text; parse(render(e)) is structurally equal to e for
/// every tree with non-negative constants (which is every parsed tree).
inline std::string render(const Expr& e, std::string_view var = "x") {
    switch (e.kind()) {
    case NodeKind::Constant:
        if (e.value() < 0.0 || std::signbit(e.value())) return "(-" + render_number(-e.value()) + ")";
        return render_number(e.value());
    case NodeKind::Variable: return std::string(var);
    case NodeKind::Negate: return "(-" + render(e.child(0), var) + ")";
    case NodeKind::Call:
        return std::string(function_name(e.function())) + "(" + render(e.child(0), var) + ")";
    case NodeKind::Add:
    case NodeKind::Sub:
    case NodeKind::Mul:
    case NodeKind::Div:
    case NodeKind::Pow: {
        static constexpr std::string_view ops = "+-*/^";
        const char op = ops[static_cast<int>(e.kind()) - static_cast<int>(NodeKind::Add)];
        return "(" + render(e.child(0), var) + op + render(e.child(1), var) + ")";
    }
    }
    return {};
}

inline std::ostream& operator<<(std::ostream& os, const Expr& e) { return os << render(e); }

// ---------------------------------------------------------------------------
// Differentiation

namespace build {

// Smart constructors with constant folding and identity elimination. Used
// for generated trees only; the parser never folds.

inline std::optional<double> try_fold(NodeKind k, double a, double b) {
    double r = 0.0;
    switch (k) {
    case NodeKind::Add: r = a + b; break;
    case NodeKind::Sub: r = a - b; break;
    case NodeKind::Mul: r = a * b; break;
    case NodeKind::Div:
        if (b == 0.0) return std::nullopt;
        r = a / b;
        break;
    case NodeKind::Pow:
        if ((a == 0.0 && b < 0.0) || (a < 0.0 && b != std::trunc(b))) return std::nullopt;
        r = std::pow(a, b);
        break;
    default: return std::nullopt;
    }
    if (!std::isfinite(r)) return std::nullopt;
    return r;
}

inline Expr num(double v) { return Expr::constant(v); }

inline Expr neg(const Expr& a) {
    if (a.is_constant()) return num(-a.value());
    if (a.kind() == NodeKind::Negate) return a.child(0);
    return Expr::negate(a);
}

inline Expr bin(NodeKind k, const Expr& a, const Expr& b) {
    if (a.is_constant() && b.is_constant())
        if (auto v = try_fold(k, a.value(), b.value())) return num(*v);
    return Expr::binary(k, a, b);
}

inline Expr add(const Expr& a, const Expr& b) {
    if (a.is_constant(0.0)) return b;
    if (b.is_constant(0.0)) return a;
    return bin(NodeKind::Add, a, b);
}

inline Expr sub(const Expr& a, const Expr& b) {
    if (b.is_constant(0.0)) return a;
    if (a.is_constant(0.0)) return neg(b);
    return bin(NodeKind::Sub, a, b);
}

inline Expr mul(const Expr& a, const Expr& b) {
    if (a.is_constant(0.0) || b.is_constant(0.0)) return num(0.0);
    if (a.is_constant(1.0)) return b;
    if (b.is_constant(1.0)) return a;
    if (a.is_constant(-1.0)) return neg(b);
    if (b.is_constant(-1.0)) return neg(a);
    return bin(NodeKind::Mul, a, b);
}

inline Expr div(const Expr& a, const Expr& b) {
    if (b.is_constant(1.0)) return a;
    if (a.is_constant(0.0) && !b.is_constant(0.0)) return num(0.0);
    return bin(NodeKind::Div, a, b);
}

inline Expr pow(const Expr& a, const Expr& b) {
    if (b.is_constant(1.0)) return a;
    if (b.is_constant(0.0)) return num(1.0);
    return bin(NodeKind::Pow, a, b);
}

inline Expr call(Function f, const Expr& a) { return Expr::call(f, a); }

} // namespace build

/// Exact symbolic derivative with respect to the variable.
///
/// f^g with g depending on the variable uses the exp(g ln f) rule and is
/// therefore valid only where f > 0. abs(u) differentiates to u/abs(u) * u',
/// which is undefined at u = 0.
inline Expr differentiate(const Expr& e) {
    using namespace build;
    switch (e.kind()) {
    case NodeKind::Constant: return num(0.0);
    case NodeKind::Variable: return num(1.0);
    case NodeKind::Negate: return neg(differentiate(e.child(0)));
    case NodeKind::Add: return add(differentiate(e.child(0)), differentiate(e.child(1)));
    case NodeKind::Sub: return sub(differentiate(e.child(0)), differentiate(e.child(1)));
    case NodeKind::Mul: {
        const Expr& u = e.child(0);
        const Expr& v = e.child(1);
        return add(mul(differentiate(u), v), mul(u, differentiate(v)));
    }
    case NodeKind::Div: {
        const Expr& u = e.child(0);
        const Expr& v = e.child(1);
        const Expr du = differentiate(u);
        const Expr dv = differentiate(v);
        if (dv.is_constant(0.0)) return div(du, v);
        return div(sub(mul(du, v), mul(u, dv)), pow(v, num(2.0)));
    }
    case NodeKind::Pow: {
        const Expr& base = e.child(0);
        const Expr& ex = e.child(1);
        const Expr dbase = differentiate(base);
        if (ex.is_free_of_variable()) {
            // n * u^(n-1) * u'
            return mul(mul(ex, pow(base, sub(ex, num(1.0)))), dbase);
        }
        // d/dx exp(g ln f) = f^g * (g' ln f + g f'/f)
        const Expr dex = differentiate(ex);
        const Expr inner = add(mul(dex, call(Function::Ln, base)), div(mul(ex, dbase), base));
        return mul(e, inner);
    }
    case NodeKind::Call: {
        const Expr& u = e.child(0);
        const Expr du = differentiate(u);
        if (du.is_constant(0.0)) return num(0.0);
        switch (e.function()) {
        case Function::Exp: return mul(e, du);
        case Function::Ln: return div(du, u);
        case Function::Sin: return mul(call(Function::Cos, u), du);
        case Function::Cos: return neg(mul(call(Function::Sin, u), du));
        case Function::Tan: return div(du, pow(call(Function::Cos, u), num(2.0)));
        case Function::Sinh: return mul(call(Function::Cosh, u), du);
        case Function::Cosh: return mul(call(Function::Sinh, u), du);
        case Function::Sqrt: return div(du, mul(num(2.0), e));
        case Function::Abs: return mul(div(u, e), du);
        }
    }
    }
    throw std::logic_error("unreachable expression kind");
}

} // namespace vop
