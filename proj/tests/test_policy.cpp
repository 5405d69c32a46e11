#include "doctest.h"

#include <cmath>
#include <random>

#include "storval/oracle.hpp"
#include "storval/policy.hpp"

using namespace storval;

namespace {

const StorageSpec kSpec{0.5, 2.0, 0.9, 10.0};

ValueCurve linear_curve(double step = 0.1) {
    return ValueCurve::from_function([](double e) { return 100.0 - 50.0 * e; }, 2.0, step);
}

double q_value(const Dispatch& d, const oracle::PiecewiseLinear& V) { return d.period_profit + V.at(d.e_end); }

}  // namespace

TEST_CASE("no discharge at a negative price") {
    const auto v = linear_curve();
    for (double e = 0.0; e <= 2.0; e += 0.1) {
        const auto d = dispatch(e, -5.0, v, kSpec);
        CHECK(d.p_discharge == 0.0);
    }
    // Charging is still allowed and is paid for.
    const auto d = dispatch(1.0, -5.0, v, kSpec);
    CHECK(d.p_charge > 0.0);
    CHECK(d.period_profit > 0.0);
}

TEST_CASE("hold band") {
    const auto k = ValueCurve::constant(40.0, 2.0, 0.1);
    for (double lambda : {36.0 + 1e-9, 40.0, 44.4, 54.4}) {
        const auto d = dispatch(1.0, lambda, k, kSpec);
        CHECK(d.e_end == 1.0);
        CHECK(d.p_charge == 0.0);
        CHECK(d.p_discharge == 0.0);
        CHECK(d.period_profit == 0.0);
    }
    // Exactly at a threshold the policy holds.
    StorageSpec s = kSpec;
    s.discharge_cost = 0.0;
    CHECK(dispatch(1.0, 40.0 * 0.9, k, s).p_charge == 0.0);
    CHECK(dispatch(1.0, 40.0 / 0.9, k, s).p_discharge == 0.0);
}

TEST_CASE("decision matches a fine grid search") {
    const auto v = linear_curve();
    const auto V = oracle::step_integral(v.values(), 2.0);
    const auto d = dispatch(1.0, 120.0, v, kSpec);
    const auto best = oracle::single_stage_max_on_grid(1.0, 120.0, V, kSpec, 1e-3);
    CHECK(std::abs(q_value(d, V) - best.q) < 0.05);
    CHECK(d.p_discharge == doctest::Approx(best.p_discharge).epsilon(0.01));
}

TEST_CASE("single-period decisions match exhaustive search on random instances") {
    std::mt19937_64 g(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 1000; ++trial) {
        const double cap = 1.0 + 3.0 * u(g);
        const std::size_t J = 11 + static_cast<std::size_t>(40 * u(g));
        const StorageSpec s{cap * (0.05 + 0.6 * u(g)), cap, 0.75 + 0.25 * u(g), 15.0 * u(g)};
        std::vector<double> vals(J);
        double x = 20.0 + 100.0 * u(g);
        double max_drop = 0.0;
        for (auto& y : vals) {
            y = x;
            const double drop = 8.0 * u(g);
            max_drop = std::max(max_drop, drop);
            x -= drop;
        }
        const ValueCurve v(cap, vals);
        const auto V = oracle::step_integral(v.values(), cap);
        const double e = cap * u(g);
        const double lambda = -20.0 + 160.0 * u(g);
        const auto d = dispatch(e, lambda, v, s);
        const auto best = oracle::single_stage_max(e, lambda, V, s, true);
        CAPTURE(trial);
        // The policy lands on grid points; the loss is at most half a step at
        // the local slope of the curve.
        const double allowance = 0.5 * v.step() * (max_drop + 1e-9) + 1e-9;
        CHECK(q_value(d, V) <= best.q + 1e-9);
        CHECK(best.q - q_value(d, V) <= allowance);
    }
}

TEST_CASE("feasibility on random calls") {
    std::mt19937_64 g(12);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 20000; ++trial) {
        const double cap = 0.5 + 4.0 * u(g);
        const StorageSpec s{cap * 1.5 * u(g), cap, 0.5 + 0.5 * u(g), 20.0 * u(g)};
        std::vector<double> vals(21);
        double x = 150.0 * u(g) - 30.0;
        for (auto& y : vals) {
            y = x;
            x -= 10.0 * u(g);
        }
        const ValueCurve v(cap, vals);
        const double e = cap * u(g);
        const double lambda = -100.0 + 300.0 * u(g);
        const auto d = dispatch(e, lambda, v, s);
        CHECK(d.e_end >= 0.0);
        CHECK(d.e_end <= cap);
        CHECK(d.p_charge >= 0.0);
        CHECK(d.p_charge <= s.power);
        CHECK(d.p_discharge >= 0.0);
        CHECK(d.p_discharge <= s.power);
        CHECK((d.p_charge == 0.0 || d.p_discharge == 0.0));
        if (lambda < 0.0) CHECK(d.p_discharge == 0.0);
        CHECK(d.e_end == doctest::Approx(e - d.p_discharge / s.efficiency + d.p_charge * s.efficiency).scale(cap));
    }
}

TEST_CASE("simulate_path") {
    SUBCASE("hold-band prices never trade") {
        const auto k = ValueCurve::constant(40.0, 2.0, 0.1);
        ValuationResult r{{k, k, k, k}, {}};
        const std::vector<double> prices{40.0, 41.0, 39.0};
        const auto trace = simulate_path(0.7, prices, r, kSpec);
        CHECK(trace.profit == 0.0);
        CHECK(trace.final_soc == 0.7);
    }

    SUBCASE("cheap then expensive matches a deterministic dynamic program") {
        const StorageSpec s{0.5, 2.0, 0.9, 10.0};
        const auto term = ValueCurve::constant(0.0, 2.0, 0.01);
        const std::vector<double> prices{10.0, 200.0};
        const ValuationHorizon h{s, {PriceDistribution::point_mass(10.0), PriceDistribution::point_mass(200.0)}, term};
        const auto r = backward_pass(h);
        const auto trace = simulate_path(0.0, prices, r, s);
        REQUIRE(trace.steps.size() == 2);
        CHECK(trace.steps[0].p_charge > 0.0);
        CHECK(trace.steps[1].p_discharge > 0.0);
        const auto& a = trace.steps[0];
        const auto& b = trace.steps[1];
        CHECK(trace.profit == doctest::Approx(200.0 * b.p_discharge - 10.0 * b.p_discharge - 10.0 * a.p_charge));
        oracle::DiscreteInstance inst{s, 201, {}, std::vector<double>(201, 0.0)};
        const double best = oracle::deterministic_dp(inst, prices, 0.0);
        CHECK(trace.total() == doctest::Approx(best).epsilon(0.01));
    }

    SUBCASE("length mismatch") {
        const auto k = ValueCurve::constant(40.0, 2.0, 0.1);
        ValuationResult r{{k, k}, {}};
        const std::vector<double> prices{40.0, 41.0};
        CHECK_THROWS(simulate_path(0.7, prices, r, kSpec));
    }
}

TEST_CASE("monte carlo") {
    const auto term = ValueCurve::from_function([](double e) { return 60.0 - 10.0 * e; }, 2.0, 0.05);

    SUBCASE("point masses have no spread") {
        const ValuationHorizon h{kSpec, {PriceDistribution::point_mass(20.0), PriceDistribution::point_mass(90.0)},
                                 term};
        const auto r = backward_pass(h);
        const auto s = monte_carlo(1.0, h, r, 50, 3);
        CHECK(s.stderr_profit == 0.0);
        CHECK(s.stderr_total == 0.0);
        const std::vector<double> prices{20.0, 90.0};
        CHECK(s.mean_total == doctest::Approx(simulate_path(1.0, prices, r, kSpec).total()));
    }

    SUBCASE("fixed seed gives identical summaries") {
        const ValuationHorizon h{kSpec, {PriceDistribution::normal(40.0, 20.0), PriceDistribution::normal(50.0, 25.0)},
                                 term};
        const auto r = backward_pass(h);
        const auto a = monte_carlo(1.0, h, r, 500, 9);
        const auto b = monte_carlo(1.0, h, r, 500, 9);
        CHECK(a.mean_total == b.mean_total);
        CHECK(a.stderr_total == b.stderr_total);
        const auto c = monte_carlo(1.0, h, r, 500, 10);
        CHECK(a.mean_total != c.mean_total);
    }

    SUBCASE("finite-difference marginal of the simulated value") {
        const ValuationHorizon h{kSpec, {PriceDistribution::normal(40.0, 20.0), PriceDistribution::normal(50.0, 25.0)},
                                 term};
        const auto r = backward_pass(h);
        const double e0 = 1.0;
        const double delta = 2.0 * term.step();
        const auto up = monte_carlo(e0 + delta, h, r, 4000, 21);
        const auto down = monte_carlo(e0 - delta, h, r, 4000, 21);
        const double fd = (up.mean_total - down.mean_total) / (2.0 * delta);
        const double pooled = std::sqrt(up.stderr_total * up.stderr_total + down.stderr_total * down.stderr_total) /
                              (2.0 * delta);
        CHECK(std::abs(fd - r.curves[0].eval(e0)) <= 3.0 * pooled);
    }
}

TEST_CASE("mean and standard error") {
    const std::vector<double> xs{1.0, 2.0, 3.0, 4.0};
    const auto m = mean_stderr(xs);
    CHECK(m.mean == 2.5);
    CHECK(m.standard_error == doctest::Approx(std::sqrt(5.0 / 3.0 / 4.0)));
}
