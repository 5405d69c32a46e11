#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "storval/distributions.hpp"
#include "storval/recursion.hpp"
#include "storval/value_curve.hpp"

namespace storval {

/// One period's decision. Energies in MWh, profit in $.
struct Dispatch {
    double p_discharge = 0.0;
    double p_charge = 0.0;
    double e_end = 0.0;
    double period_profit = 0.0;
};

/// Threshold policy: discharge while the realized price net of cost beats the
/// marginal value of the ending SoC, charge while it is below it, otherwise
/// hold. Never discharges at a non-positive price.
Dispatch dispatch(double e_prev, double price, const ValueCurve& v_next, const StorageSpec& spec);

struct PathTrace {
    std::vector<Dispatch> steps;
    double profit = 0.0;        // trading profit, sum of period_profit
    double final_soc = 0.0;
    double terminal_value = 0.0;  // V_T(final_soc) - V_T(0) from the terminal curve

    double total() const { return profit + terminal_value; }
};

/// Runs dispatch through the horizon; curves[t] steers period t (1-based).
PathTrace simulate_path(double e0, std::span<const double> prices, const ValuationResult& result,
                        const StorageSpec& spec);

struct MonteCarloSummary {
    std::size_t n = 0;
    std::uint64_t seed = 0;
    double mean_profit = 0.0;
    double stderr_profit = 0.0;
    double mean_total = 0.0;   // profit plus terminal value
    double stderr_total = 0.0;
};

/// Deterministic per-path generator: paths draw from (seed, path index).
Rng path_rng(std::uint64_t seed, std::uint64_t path);

/// Draws one stage-wise independent price path.
std::vector<double> sample_path(const std::vector<PriceDistribution>& stages, Rng& rng);

MonteCarloSummary monte_carlo(double e0, const ValuationHorizon& h, const ValuationResult& result,
                              std::size_t n, std::uint64_t seed);

/// Sample mean and its standard error.
struct MeanStderr {
    double mean = 0.0;
    double standard_error = 0.0;
};
MeanStderr mean_stderr(std::span<const double> xs);

}  // namespace storval
