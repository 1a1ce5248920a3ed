#include <cmath>
#include <string>

#include <gtest/gtest.h>

#include "vop/problem.hpp"

using namespace vop;

namespace {

const char* kExample1 = R"P(
[problem]
kind = ode2
interval = 0 2
p1 = "-1"
p2 = "-2"
q = "2*exp(-x)"   # forcing
ivp = 0 0
)P";

const char* kExample2 = R"P(
[problem]
kind = ode2
interval = 1 2
lead = "x"
p1 = "-(x+1)"
p2 = "1"
q = "x^2"
ivp = -5 -4
)P";

std::string error_of(const std::string& text) {
    try {
        load_problem(text);
    } catch (const ProblemError& e) {
        return e.what();
    }
    return "";
}

} // namespace

TEST(LoadProblem, ExampleOne) {
    const auto p = std::get<Ode2Problem>(load_problem(kExample1));
    EXPECT_EQ(p.interval.a, 0.0);
    EXPECT_EQ(p.interval.b, 2.0);
    EXPECT_EQ(p.p1, parse("-1"));
    EXPECT_EQ(p.q, parse("2*exp(-x)"));
    EXPECT_TRUE(p.is_ivp());
    EXPECT_TRUE(p.singular_points.empty());
}

TEST(LoadProblem, LeadingCoefficientIsDividedThrough) {
    const auto p = std::get<Ode2Problem>(load_problem(kExample2));
    EXPECT_DOUBLE_EQ(eval(p.p1, 2.0), -1.5);
    EXPECT_DOUBLE_EQ(eval(p.p2, 2.0), 0.5);
    EXPECT_DOUBLE_EQ(eval(p.q, 2.0), 2.0);
    EXPECT_TRUE(p.singular_points.empty());
    EXPECT_DOUBLE_EQ(p.ivp().y0, -5.0);
    EXPECT_DOUBLE_EQ(p.ivp().dy0, -4.0);
}

TEST(LoadProblem, SingularPointDetected) {
    std::string text = kExample2;
    text.replace(text.find("interval = 1 2"), 14, "interval = -1 1");
    const auto p = std::get<Ode2Problem>(load_problem(text));
    ASSERT_FALSE(p.singular_points.empty());
    bool near_zero = false;
    for (double s : p.singular_points) near_zero = near_zero || std::fabs(s) < 1e-9;
    EXPECT_TRUE(near_zero);

    // Pole strictly between samples is found by bisection.
    const auto q = Ode2Problem::make(parse("1/(x-0.3141)"), parse("0"), parse("0"), {0, 1});
    ASSERT_EQ(q.singular_points.size(), 1u);
    EXPECT_NEAR(q.singular_points[0], 0.3141, 1e-12);
}

TEST(LoadProblem, Errors) {
    EXPECT_EQ(error_of(""), "missing section [problem]");
    EXPECT_NE(error_of("[problem]\nkind = ode2\ninterval = 0 1\np1 = \"0\"\np2 = \"0\"\nivp = 0 0\n").find("'q'"),
              std::string::npos);
    EXPECT_NE(error_of(std::string(kExample1) + "colour = \"red\"\n").find("unknown key 'colour'"), std::string::npos);
    EXPECT_NE(error_of(std::string(kExample1) + "p1 = \"1\"\n").find("duplicate key"), std::string::npos);
    EXPECT_NE(error_of("[problem]\nkind = ode1\ninterval = 1 1\np = \"0\"\nq = \"0\"\nivp = 0\n").find("a < b"),
              std::string::npos);
    EXPECT_NE(error_of("[problem]\nkind = ode1\ninterval = 0 1\np = \"2x\"\nq = \"0\"\nivp = 0\n").find("key 'p'"),
              std::string::npos);
    EXPECT_NE(error_of("[problem]\nkind = ode3\ninterval = 0 1\n").find("kind"), std::string::npos);
    EXPECT_NE(error_of("[problem]\nkind = ode2\ninterval = 0 1\np1 = \"0\"\np2 = \"0\"\nq = \"0\"\nbvp = neumann\n")
                  .find("dirichlet0"),
              std::string::npos);
    EXPECT_NE(error_of("[problem]\nkind = ode1\ninterval = 0 1\np = 0\nq = \"0\"\nivp = 0\n").find("quoted"),
              std::string::npos);
    EXPECT_NE(error_of("[problem]\nkind = ode1\ninterval = 0 1\np = \"0\"\nq = \"0\"\nivp = 0 1\n").find("expects 1"),
              std::string::npos);

    try {
        load_problem(std::string(kExample1) + "extra = 1\n");
        FAIL();
    } catch (const ProblemError& e) {
        EXPECT_EQ(e.key(), "extra");
    }
    EXPECT_THROW(load_problem_file("/nonexistent/problem.prob"), ProblemError);
}

TEST(LoadProblem, FirstOrderAndBvp) {
    const auto p1 = std::get<Ode1Problem>(load_problem("[problem]\nkind=ode1\ninterval=0 1\np=\"1\"\nq=\"1\"\nivp=0.5\n"));
    EXPECT_EQ(p1.y0, 0.5);
    const auto p2 = std::get<Ode2Problem>(
        load_problem("[problem]\nkind = ode2\ninterval = 0 1\np1 = \"0\"\np2 = \"0\"\nq = \"1\"\nbvp = dirichlet0\n"));
    EXPECT_TRUE(p2.is_bvp());
    EXPECT_THROW(p2.ivp(), ProblemError);
}

TEST(LoadProblem, System) {
    const char* text = R"P([problem]
kind = system
interval = 0 1
n = 2
P[0][0] = "0"
P[0][1] = "1"
P[1][0] = "-1"
P[1][1] = "t"
b[0] = "sin(t)"
b[1] = "0"
x0 = 1 2
)P";
    const auto s = std::get<SystemProblem>(load_problem(text));
    EXPECT_EQ(s.n, 2u);
    EXPECT_EQ(eval(s.coefficient(1, 1), 0.25), 0.25);
    EXPECT_EQ(s.x0, (std::vector<double>{1, 2}));

    std::string missing = text;
    missing.erase(missing.find("P[1][0]"), std::string("P[1][0] = \"-1\"\n").size());
    EXPECT_NE(error_of(missing).find("P[1][0]"), std::string::npos);
    std::string bad_n = text;
    bad_n.replace(bad_n.find("n = 2"), 5, "n = 9");
    EXPECT_NE(error_of(bad_n).find("1..8"), std::string::npos);
}

TEST(LoadProblem, Deterministic) {
    const auto a = std::get<Ode2Problem>(load_problem(kExample2));
    const auto b = std::get<Ode2Problem>(load_problem(kExample2));
    EXPECT_EQ(a.p1, b.p1);
    EXPECT_EQ(a.p2, b.p2);
    EXPECT_EQ(a.q, b.q);
    EXPECT_EQ(a.singular_points, b.singular_points);
}

TEST(Gauge, DerivativeIsSymbolic) {
    const Gauge g("x^2");
    EXPECT_DOUBLE_EQ(eval(g.Aprime, 3.0), 6.0);
    EXPECT_EQ(eval(Gauge::zero().Aprime, 1.0), 0.0);
}
