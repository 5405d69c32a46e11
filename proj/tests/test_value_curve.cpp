#include "doctest.h"

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "storval/value_curve.hpp"

using namespace storval;

namespace {

ValueCurve random_curve(std::mt19937_64& g, std::size_t J, double cap, bool strict) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> v(J);
    double x = 50.0 + 100.0 * u(g);
    for (auto& y : v) {
        y = x;
        x -= strict ? 0.01 + 5.0 * u(g) : (u(g) < 0.3 ? 0.0 : 5.0 * u(g));
    }
    return ValueCurve(cap, v);
}

}  // namespace

TEST_CASE("nearest lookup examples") {
    const ValueCurve c(2.0, {100.0, 50.0, 0.0});
    CHECK(c.step() == 1.0);
    CHECK(c.eval(0.0) == 100.0);
    CHECK(c.eval(0.49) == 100.0);
    CHECK(c.eval(0.51) == 50.0);
    CHECK(c.eval(0.5) == 100.0);
    CHECK(c.eval(1.5) == 50.0);
    CHECK(c.eval(2.0) == 0.0);
    CHECK_THROWS_AS(c.eval(2.1), std::out_of_range);
    CHECK_THROWS_AS(c.eval(-0.1), std::out_of_range);
}

TEST_CASE("inverse examples") {
    const ValueCurve c(2.0, {100.0, 50.0, 0.0});
    CHECK(c.inverse(50.0, 0.0, 2.0) == 1.0);
    CHECK(c.inverse(200.0, 0.0, 2.0) == 0.0);
    CHECK(c.inverse(-5.0, 0.0, 2.0) == 2.0);
    const ValueCurve flat(2.0, {80.0, 80.0, 0.0});
    CHECK(flat.inverse(80.0, 0.0, 2.0) == 0.0);
}

TEST_CASE("linear lookup") {
    const ValueCurve c(2.0, {100.0, 50.0, 0.0}, Lookup::linear);
    CHECK(c.eval(0.5) == 75.0);
    CHECK(c.eval(1.25) == 37.5);
    CHECK(c.inverse(75.0, 0.0, 2.0) == doctest::Approx(0.5));
    CHECK(c.inverse(10.0, 0.0, 2.0) == doctest::Approx(1.8));
}

TEST_CASE("from_function examples") {
    const auto zero = ValueCurve::from_function([](double) { return 0.0; }, 4.0, 0.5);
    for (double v : zero.values()) CHECK(v == 0.0);

    const auto step = ValueCurve::from_function([](double e) { return e <= 0.9 * 4.0 ? 100.0 : 0.0; }, 4.0, 0.1);
    CHECK(step.size() == 41);
    CHECK(step.eval(3.6) == 100.0);
    CHECK(step.eval(3.7) == 0.0);

    const auto rising = ValueCurve::from_function([](double e) { return 10.0 + e; }, 2.0, 0.5);
    for (double v : rising.values()) CHECK(v == 10.0);

    CHECK_THROWS(ValueCurve::from_function([](double) { return 0.0; }, 1.0, 0.3));
}

TEST_CASE("constructor validation") {
    CHECK_THROWS(ValueCurve(2.0, {1.0}));
    CHECK_THROWS(ValueCurve(2.0, {1.0, 2.0}));
    CHECK_THROWS(ValueCurve(2.0, {1.0, std::nan("")}));
    CHECK_THROWS(ValueCurve(0.0, {1.0, 0.0}));
}

TEST_CASE("eval is non-increasing") {
    std::mt19937_64 g(3);
    for (int trial = 0; trial < 20; ++trial) {
        for (Lookup mode : {Lookup::nearest, Lookup::linear}) {
            const auto base = random_curve(g, 31, 3.0, false);
            const ValueCurve c(3.0, std::vector<double>(base.values().begin(), base.values().end()), mode);
            double prev = std::numeric_limits<double>::infinity();
            for (double e = 0.0; e <= 3.0; e += 0.0137) {
                const double v = c.eval(e);
                CHECK(v <= prev);
                prev = v;
            }
        }
    }
}

TEST_CASE("inverse undoes eval at grid points of a strictly decreasing curve") {
    std::mt19937_64 g(4);
    for (int trial = 0; trial < 20; ++trial) {
        const auto c = random_curve(g, 41, 2.0, true);
        for (std::size_t j = 0; j < c.size(); ++j) CHECK(c.inverse(c[j], 0.0, 2.0) == doctest::Approx(c.soc(j)));
    }
}

TEST_CASE("from_function is idempotent on monotone input") {
    std::mt19937_64 g(5);
    for (int trial = 0; trial < 10; ++trial) {
        const auto c = random_curve(g, 21, 2.0, false);
        const auto again = ValueCurve::from_function([&c](double e) { return c.eval(e); }, 2.0, c.step());
        CHECK(again == c);
    }
}

TEST_CASE("integral matches the trapezoid at grid points") {
    const ValueCurve c(2.0, {100.0, 50.0, 0.0});
    CHECK(c.integral_to(0.0) == 0.0);
    CHECK(c.integral_to(1.0) == 75.0);
    CHECK(c.integral_to(2.0) == 100.0);
    // Inside a cell the nearest-sample step function is integrated exactly.
    CHECK(c.integral_to(0.25) == 25.0);
    CHECK(c.integral_to(0.75) == 50.0 + 12.5);
}

TEST_CASE("monotone repair") {
    std::vector<double> v{10.0, 5.0, 5.0 + 1e-7, 1.0};
    enforce_non_increasing(v);
    CHECK(v[2] == 5.0);
    std::vector<double> bad{10.0, 5.0, 6.0, 1.0};
    CHECK_THROWS(enforce_non_increasing(bad));
}
