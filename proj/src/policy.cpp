#include "storval/policy.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace storval {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace

Dispatch dispatch(double e_prev, double price, const ValueCurve& v_next, const StorageSpec& spec) {
    const double cap = spec.capacity;
    if (!(e_prev >= 0.0 && e_prev <= cap)) {
        std::ostringstream os;
        os << "dispatch: SoC " << e_prev << " outside [0, " << cap << "]";
        throw std::out_of_range(os.str());
    }
    if (!std::isfinite(price)) throw std::invalid_argument("dispatch: price must be finite");

    const double eta = spec.efficiency;
    const double c = spec.discharge_cost;
    const double value_here = v_next.eval(e_prev);

    Dispatch out;
    out.e_end = e_prev;
    if (price > 0.0 && value_here < (price - c) * eta) {
        const double target = v_next.inverse((price - c) * eta, 0.0, e_prev);
        out.e_end = std::max({target, e_prev - spec.power / eta, 0.0});
        out.p_discharge = std::min((e_prev - out.e_end) * eta, spec.power);
    } else if (value_here > price / eta) {
        const double target = v_next.inverse(price / eta, e_prev, cap);
        out.e_end = std::min({target, e_prev + spec.power * eta, cap});
        out.p_charge = std::min((out.e_end - e_prev) / eta, spec.power);
    }
    out.period_profit = price * (out.p_discharge - out.p_charge) - c * out.p_discharge;
    return out;
}

PathTrace simulate_path(double e0, std::span<const double> prices, const ValuationResult& result,
                        const StorageSpec& spec) {
    if (result.curves.size() != prices.size() + 1) {
        throw std::invalid_argument("simulate_path: " + std::to_string(prices.size()) + " prices for a " +
                                    std::to_string(result.curves.size() - 1) + "-stage valuation");
    }
    PathTrace trace;
    trace.steps.reserve(prices.size());
    double e = e0;
    for (std::size_t t = 1; t <= prices.size(); ++t) {
        try {
            trace.steps.push_back(dispatch(e, prices[t - 1], result.curves[t], spec));
        } catch (const std::exception& ex) {
            throw StageError(t, ex.what());
        }
        e = trace.steps.back().e_end;
        trace.profit += trace.steps.back().period_profit;
    }
    trace.final_soc = e;
    trace.terminal_value = result.curves.back().integral_to(e);
    return trace;
}

Rng path_rng(std::uint64_t seed, std::uint64_t path) {
    return Rng(splitmix64(seed ^ splitmix64(path)));
}

std::vector<double> sample_path(const std::vector<PriceDistribution>& stages, Rng& rng) {
    std::vector<double> prices;
    prices.reserve(stages.size());
    for (const auto& d : stages) prices.push_back(d.sample(rng));
    return prices;
}

MeanStderr mean_stderr(std::span<const double> xs) {
    MeanStderr out;
    if (xs.empty()) return out;
    // Identical samples give an exact mean and zero spread.
    const auto [lo, hi] = std::minmax_element(xs.begin(), xs.end());
    if (*lo == *hi) return {*lo, 0.0};
    double sum = 0.0;
    for (double x : xs) sum += x;
    out.mean = sum / static_cast<double>(xs.size());
    if (xs.size() < 2) return out;
    double ss = 0.0;
    for (double x : xs) ss += (x - out.mean) * (x - out.mean);
    const double n = static_cast<double>(xs.size());
    out.standard_error = std::sqrt(ss / (n - 1.0) / n);
    return out;
}

MonteCarloSummary monte_carlo(double e0, const ValuationHorizon& h, const ValuationResult& result,
                              std::size_t n, std::uint64_t seed) {
    if (n == 0) throw std::invalid_argument("monte_carlo: n must be at least 1");
    std::vector<double> profit(n);
    std::vector<double> total(n);
    for (std::size_t i = 0; i < n; ++i) {
        Rng rng = path_rng(seed, i);
        const auto prices = sample_path(h.stages, rng);
        const PathTrace trace = simulate_path(e0, prices, result, h.spec);
        profit[i] = trace.profit;
        total[i] = trace.total();
    }
    const MeanStderr p = mean_stderr(profit);
    const MeanStderr t = mean_stderr(total);
    return {n, seed, p.mean, p.standard_error, t.mean, t.standard_error};
}

}  // namespace storval
