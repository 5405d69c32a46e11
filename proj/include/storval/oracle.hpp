#pragma once

// Brute-force stochastic dynamic programming on small discrete instances.
// Used as ground truth for the analytical recursion; intentionally shares no
// code with recursion or policy.

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "storval/distributions.hpp"
#include "storval/value_curve.hpp"

namespace storval::oracle {

/// Refusal raised when an instance is too large to enumerate.
class GuardError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr double kWorkLimit = 1e8;

/// Value function ($) as a continuous piecewise-linear function through
/// sorted breakpoints.
struct PiecewiseLinear {
    std::vector<double> x;
    std::vector<double> y;

    double at(double e) const;
};

/// Levels on a uniform grid from marginal values: the exact integral of the
/// nearest-sample step function, sampled at grid points (trapezoid rule).
std::vector<double> levels_from_marginals(std::span<const double> marginals, double capacity);

/// Exact integral of the nearest-sample step function with breakpoints at the
/// grid points and at the cell midpoints where the step changes.
PiecewiseLinear step_integral(std::span<const double> marginals, double capacity);

struct StageChoice {
    double e_end = 0.0;
    double p_discharge = 0.0;
    double p_charge = 0.0;
    double profit = 0.0;  // trading profit of the period
    double q = 0.0;       // profit + V_next(e_end)
};

/// Exhaustive single-period maximization over the ending SoCs reachable from
/// e_prev. Candidates are the breakpoints of v_next inside the feasible band,
/// the idle state, and (when requested) the band edges set by the power
/// limits. Discharge is only allowed at positive prices. Ties keep the
/// smallest move.
StageChoice single_stage_max(double e_prev, double price, const PiecewiseLinear& v_next,
                             const StorageSpec& spec, bool include_power_limits);

/// Ending SoC candidates on a uniform absolute action grid (plus idle), exact
/// power limits; V is evaluated through v_next.
StageChoice single_stage_max_on_grid(double e_prev, double price, const PiecewiseLinear& v_next,
                                     const StorageSpec& spec, double action_step);

/// Full-power moves measured in action-grid steps. Power limits are rounded
/// to the nearest step (charge ties round down, discharge ties round up), so
/// every action lands exactly on the grid.
struct GridReach {
    std::size_t charge_steps = 0;
    std::size_t discharge_steps = 0;
};
GridReach grid_reach(const StorageSpec& spec, double action_step);

struct DiscreteInstance {
    StorageSpec spec;
    std::size_t grid_points = 0;                 // J, SoC grid 0..E
    std::vector<PriceDistribution> stages;       // all discrete
    std::vector<double> terminal_levels;         // V_T on the grid ($)
    std::size_t action_refinement = 1;           // action step = SoC step / refinement

    double step() const { return spec.capacity / static_cast<double>(grid_points - 1); }
};

struct SdpSolution {
    std::vector<std::vector<double>> levels;     // levels[t][j] = V_t(e_j)
    std::vector<std::vector<double>> marginals;  // finite-difference slopes

    /// Expected optimal value from SoC e (linear interpolation of V_0).
    double value_at(double e, double capacity) const;
};

/// Throws GuardError when K * J^2 * T * refinement exceeds kWorkLimit.
void check_guard(const DiscreteInstance& inst);

SdpSolution sdp_solve(const DiscreteInstance& inst);

/// Central differences inside, second-order one-sided at the ends.
std::vector<double> finite_difference_marginals(std::span<const double> levels, double step);

/// Expected optimal total from e0 when SoC is continuous and the terminal
/// value is the exact integral of the nearest-sample terminal curve. Solved on
/// a SoC grid `factor` times finer than the instance grid; the factor is
/// lowered as needed to stay within the work limit.
double continuous_value(const DiscreteInstance& inst, std::span<const double> terminal_marginals, double e0,
                        std::size_t factor = 16);

/// Best total (profit + V_T) over every action sequence of a deterministic
/// price path starting from grid index j0; exponential, for T <= 4 only.
double enumerate_deterministic(const DiscreteInstance& inst, std::span<const double> prices, std::size_t j0);

/// Optimal total over a deterministic price path by backward induction on the
/// instance grid, starting from SoC e0.
double deterministic_dp(const DiscreteInstance& inst, std::span<const double> prices, double e0);

/// Empirical distribution function of sampled values.
class EmpiricalCdf {
public:
    explicit EmpiricalCdf(std::vector<double> samples);
    double operator()(double x) const;
    std::span<const double> samples() const { return samples_; }

private:
    std::vector<double> samples_;
};

/// Kolmogorov-Smirnov distance between an empirical CDF and a reference CDF.
/// Jumps closer than eps are treated as coincident, so float noise at an atom
/// of the reference law does not count as a mismatch of the atom's mass.
double ks_distance(const EmpiricalCdf& empirical, const std::function<double(double)>& reference, double eps);

/// Law of the finite-difference marginal (Q(e+delta) - Q(e-delta)) / (2 delta)
/// over n sampled prices, Q being the exact single-period optimum against
/// v_next with power-limit candidates included.
EmpiricalCdf empirical_q_cdf(double e, double delta, const PriceDistribution& d, const PiecewiseLinear& v_next,
                             const StorageSpec& spec, std::size_t n, std::uint64_t seed);

}  // namespace storval::oracle
