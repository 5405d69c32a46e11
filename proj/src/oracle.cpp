#include "storval/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace storval::oracle {

namespace {

// Grid points within this fraction of a step outside the reachable band still
// count as reachable (they are reachable in exact arithmetic).
constexpr double kReachSlack = 1e-9;

struct Band {
    double lo;
    double hi;
};

Band reachable_band(double e_prev, double price, const StorageSpec& spec) {
    Band b{std::max(0.0, e_prev - spec.power / spec.efficiency),
           std::min(spec.capacity, e_prev + spec.power * spec.efficiency)};
    if (!(price > 0.0)) b.lo = e_prev;
    return b;
}

StageChoice evaluate(double e_prev, double e_end, double price, const PiecewiseLinear& v_next,
                     const StorageSpec& spec) {
    StageChoice s;
    s.e_end = e_end;
    if (e_end < e_prev) {
        s.p_discharge = (e_prev - e_end) * spec.efficiency;
    } else if (e_end > e_prev) {
        s.p_charge = (e_end - e_prev) / spec.efficiency;
    }
    s.profit = price * (s.p_discharge - s.p_charge) - spec.discharge_cost * s.p_discharge;
    s.q = s.profit + v_next.at(e_end);
    return s;
}

template <typename Candidates>
StageChoice best_of(double e_prev, double price, const PiecewiseLinear& v_next, const StorageSpec& spec,
                    const Candidates& candidates) {
    StageChoice best = evaluate(e_prev, e_prev, price, v_next, spec);
    for (double e_end : candidates) {
        StageChoice s = evaluate(e_prev, e_end, price, v_next, spec);
        const bool better = s.q > best.q ||
                            (s.q == best.q && std::abs(e_end - e_prev) < std::abs(best.e_end - e_prev));
        if (better) best = s;
    }
    return best;
}

void check_soc(double e, double capacity) {
    if (!(e >= 0.0 && e <= capacity)) {
        std::ostringstream os;
        os << "oracle: SoC " << e << " outside [0, " << capacity << "]";
        throw std::out_of_range(os.str());
    }
}

}  // namespace

double PiecewiseLinear::at(double e) const {
    if (x.empty()) throw std::logic_error("empty piecewise-linear function");
    if (e <= x.front()) return y.front();
    if (e >= x.back()) return y.back();
    auto it = std::upper_bound(x.begin(), x.end(), e);
    const auto i = static_cast<std::size_t>(it - x.begin());
    const double t = (e - x[i - 1]) / (x[i] - x[i - 1]);
    return y[i - 1] + t * (y[i] - y[i - 1]);
}

std::vector<double> levels_from_marginals(std::span<const double> marginals, double capacity) {
    const double step = capacity / static_cast<double>(marginals.size() - 1);
    std::vector<double> levels(marginals.size(), 0.0);
    for (std::size_t j = 1; j < marginals.size(); ++j) {
        levels[j] = levels[j - 1] + 0.5 * step * (marginals[j - 1] + marginals[j]);
    }
    return levels;
}

PiecewiseLinear step_integral(std::span<const double> marginals, double capacity) {
    const std::size_t J = marginals.size();
    const double step = capacity / static_cast<double>(J - 1);
    PiecewiseLinear f;
    f.x.push_back(0.0);
    f.y.push_back(0.0);
    for (std::size_t j = 0; j + 1 < J; ++j) {
        const double mid = (static_cast<double>(j) + 0.5) * step;
        f.x.push_back(mid);
        f.y.push_back(f.y.back() + 0.5 * step * marginals[j]);
        f.x.push_back(j + 2 == J ? capacity : static_cast<double>(j + 1) * step);
        f.y.push_back(f.y.back() + 0.5 * step * marginals[j + 1]);
    }
    return f;
}

StageChoice single_stage_max(double e_prev, double price, const PiecewiseLinear& v_next,
                             const StorageSpec& spec, bool include_power_limits) {
    check_soc(e_prev, spec.capacity);
    const Band band = reachable_band(e_prev, price, spec);
    const double slack = kReachSlack * spec.capacity;
    StageChoice best = evaluate(e_prev, e_prev, price, v_next, spec);
    const auto consider = [&](double e_end, double level) {
        StageChoice s;
        s.e_end = e_end;
        if (e_end < e_prev) s.p_discharge = (e_prev - e_end) * spec.efficiency;
        if (e_end > e_prev) s.p_charge = (e_end - e_prev) / spec.efficiency;
        s.profit = price * (s.p_discharge - s.p_charge) - spec.discharge_cost * s.p_discharge;
        s.q = s.profit + level;
        if (s.q > best.q || (s.q == best.q && std::abs(e_end - e_prev) < std::abs(best.e_end - e_prev))) {
            best = s;
        }
    };
    if (include_power_limits) {
        consider(band.lo, v_next.at(band.lo));
        consider(band.hi, v_next.at(band.hi));
    }
    auto first = std::lower_bound(v_next.x.begin(), v_next.x.end(), band.lo - slack);
    auto last = std::upper_bound(v_next.x.begin(), v_next.x.end(), band.hi + slack);
    for (auto it = first; it != last; ++it) {
        const auto i = static_cast<std::size_t>(it - v_next.x.begin());
        consider(std::clamp(*it, 0.0, spec.capacity), v_next.y[i]);
    }
    return best;
}

StageChoice single_stage_max_on_grid(double e_prev, double price, const PiecewiseLinear& v_next,
                                     const StorageSpec& spec, double action_step) {
    check_soc(e_prev, spec.capacity);
    if (!(action_step > 0.0)) throw std::invalid_argument("oracle: action step must be positive");
    const Band band = reachable_band(e_prev, price, spec);
    const double slack = kReachSlack * action_step;
    const auto first = static_cast<long long>(std::ceil(band.lo / action_step - kReachSlack));
    const auto last = static_cast<long long>(std::floor(band.hi / action_step + kReachSlack));
    std::vector<double> candidates;
    for (long long k = first; k <= last; ++k) {
        const double x = static_cast<double>(k) * action_step;
        if (x >= band.lo - slack && x <= band.hi + slack) {
            candidates.push_back(std::clamp(x, 0.0, spec.capacity));
        }
    }
    return best_of(e_prev, price, v_next, spec, candidates);
}

double SdpSolution::value_at(double e, double capacity) const {
    PiecewiseLinear f;
    const auto& v0 = levels.front();
    for (std::size_t j = 0; j < v0.size(); ++j) {
        f.x.push_back(capacity * static_cast<double>(j) / static_cast<double>(v0.size() - 1));
    }
    f.y = v0;
    return f.at(e);
}

void check_guard(const DiscreteInstance& inst) {
    std::size_t support = 1;
    for (const auto& d : inst.stages) {
        if (!d.is_discrete()) throw GuardError("oracle: every stage distribution must have finite support");
        support = std::max(support, d.support().size());
    }
    const double J = static_cast<double>(inst.grid_points);
    const double work = static_cast<double>(support) * J * J * static_cast<double>(inst.stages.size()) *
                        static_cast<double>(std::max<std::size_t>(inst.action_refinement, 1));
    if (work > kWorkLimit) {
        std::ostringstream os;
        os << "oracle: instance too large (K=" << support << ", J=" << inst.grid_points
           << ", T=" << inst.stages.size() << ", refinement=" << inst.action_refinement << ", work " << work
           << " > " << kWorkLimit << ")";
        throw GuardError(os.str());
    }
}

std::vector<double> finite_difference_marginals(std::span<const double> levels, double step) {
    const std::size_t J = levels.size();
    std::vector<double> out(J);
    if (J < 2) return out;
    if (J == 2) {
        out[0] = out[1] = (levels[1] - levels[0]) / step;
        return out;
    }
    out.front() = (-3.0 * levels[0] + 4.0 * levels[1] - levels[2]) / (2.0 * step);
    out.back() = (3.0 * levels[J - 1] - 4.0 * levels[J - 2] + levels[J - 3]) / (2.0 * step);
    for (std::size_t j = 1; j + 1 < J; ++j) out[j] = (levels[j + 1] - levels[j - 1]) / (2.0 * step);
    return out;
}

namespace {

void validate(const DiscreteInstance& inst) {
    inst.spec.validate();
    if (inst.grid_points < 2) throw std::invalid_argument("oracle: need at least two grid points");
    if (inst.terminal_levels.size() != inst.grid_points) {
        throw std::invalid_argument("oracle: terminal levels do not match the grid");
    }
}

// Levels on the action grid (SoC grid refined r times), linear in between.
std::vector<double> refine(const std::vector<double>& levels, std::size_t r) {
    if (r == 1) return levels;
    std::vector<double> out((levels.size() - 1) * r + 1);
    for (std::size_t k = 0; k < out.size(); ++k) {
        const std::size_t j = std::min(k / r, levels.size() - 2);
        const double t = static_cast<double>(k - j * r) / static_cast<double>(r);
        out[k] = levels[j] + t * (levels[j + 1] - levels[j]);
    }
    return out;
}

// Best q over the reachable action indices from action index k0.
double grid_best(std::size_t k0, double price, const std::vector<double>& next, const GridReach& reach,
                 double action_step, const StorageSpec& spec) {
    const std::size_t last = next.size() - 1;
    const std::size_t lo = price > 0.0 ? (k0 > reach.discharge_steps ? k0 - reach.discharge_steps : 0) : k0;
    const std::size_t hi = std::min(last, k0 + reach.charge_steps);
    double best = next[k0];
    for (std::size_t k = lo; k <= hi; ++k) {
        double q = next[k];
        if (k < k0) {
            const double pd = static_cast<double>(k0 - k) * action_step * spec.efficiency;
            q += (price - spec.discharge_cost) * pd;
        } else if (k > k0) {
            q -= price * static_cast<double>(k - k0) * action_step / spec.efficiency;
        }
        best = std::max(best, q);
    }
    return best;
}

}  // namespace

GridReach grid_reach(const StorageSpec& spec, double action_step) {
    const double up = spec.power * spec.efficiency / action_step;
    const double down = spec.power / spec.efficiency / action_step;
    GridReach r;
    r.charge_steps = static_cast<std::size_t>(std::max(0.0, std::ceil(up - 0.5 - 1e-9)));
    r.discharge_steps = static_cast<std::size_t>(std::max(0.0, std::floor(down + 0.5 + 1e-9)));
    return r;
}

SdpSolution sdp_solve(const DiscreteInstance& inst) {
    validate(inst);
    check_guard(inst);
    const std::size_t T = inst.stages.size();
    const std::size_t J = inst.grid_points;
    const std::size_t r = std::max<std::size_t>(inst.action_refinement, 1);
    const double action_step = inst.step() / static_cast<double>(r);
    const GridReach reach = grid_reach(inst.spec, action_step);

    SdpSolution sol;
    sol.levels.assign(T + 1, std::vector<double>(J, 0.0));
    sol.levels[T] = inst.terminal_levels;
    for (std::size_t t = T; t >= 1; --t) {
        const std::vector<double> next = refine(sol.levels[t], r);
        const auto support = inst.stages[t - 1].support();
        for (std::size_t j = 0; j < J; ++j) {
            double expected = 0.0;
            for (const auto& [price, weight] : support) {
                expected += weight * grid_best(j * r, price, next, reach, action_step, inst.spec);
            }
            sol.levels[t - 1][j] = expected;
        }
    }
    sol.marginals.reserve(T + 1);
    for (const auto& lv : sol.levels) sol.marginals.push_back(finite_difference_marginals(lv, inst.step()));
    return sol;
}

namespace {

double enumerate_from(const DiscreteInstance& inst, std::span<const double> prices, std::size_t t, std::size_t j,
                      const GridReach& reach) {
    if (t == prices.size()) return inst.terminal_levels[j];
    const double price = prices[t];
    const double step = inst.step();
    const std::size_t lo = price > 0.0 ? (j > reach.discharge_steps ? j - reach.discharge_steps : 0) : j;
    const std::size_t hi = std::min(inst.grid_points - 1, j + reach.charge_steps);
    double best = -kInf;
    for (std::size_t k = lo; k <= hi; ++k) {
        double profit = 0.0;
        if (k < j) profit = (price - inst.spec.discharge_cost) * static_cast<double>(j - k) * step * inst.spec.efficiency;
        if (k > j) profit = -price * static_cast<double>(k - j) * step / inst.spec.efficiency;
        best = std::max(best, profit + enumerate_from(inst, prices, t + 1, k, reach));
    }
    return best;
}

}  // namespace

double enumerate_deterministic(const DiscreteInstance& inst, std::span<const double> prices, std::size_t j0) {
    validate(inst);
    if (prices.size() > 4) throw GuardError("oracle: enumeration is limited to T <= 4");
    if (inst.action_refinement > 1) throw std::invalid_argument("oracle: enumeration runs on the SoC grid only");
    if (j0 >= inst.grid_points) throw std::out_of_range("oracle: start index outside the grid");
    return enumerate_from(inst, prices, 0, j0, grid_reach(inst.spec, inst.step()));
}

double continuous_value(const DiscreteInstance& inst, std::span<const double> terminal_marginals, double e0,
                        std::size_t factor) {
    if (terminal_marginals.size() != inst.grid_points) {
        throw std::invalid_argument("oracle: terminal marginals do not match the grid");
    }
    const double cap = inst.spec.capacity;
    const PiecewiseLinear terminal = step_integral(terminal_marginals, cap);
    for (std::size_t f = std::max<std::size_t>(factor, 1); f >= 1; --f) {
        DiscreteInstance fine = inst;
        fine.grid_points = (inst.grid_points - 1) * f + 1;
        fine.action_refinement = 1;
        fine.terminal_levels.resize(fine.grid_points);
        for (std::size_t j = 0; j < fine.grid_points; ++j) {
            fine.terminal_levels[j] = terminal.at(cap * static_cast<double>(j) / static_cast<double>(fine.grid_points - 1));
        }
        try {
            check_guard(fine);
        } catch (const GuardError&) {
            if (f == 1) throw;
            continue;
        }
        return sdp_solve(fine).value_at(e0, cap);
    }
    throw GuardError("oracle: instance too large");
}

double deterministic_dp(const DiscreteInstance& inst, std::span<const double> prices, double e0) {
    DiscreteInstance det = inst;
    det.stages.clear();
    for (double p : prices) det.stages.push_back(PriceDistribution::point_mass(p));
    return sdp_solve(det).value_at(e0, inst.spec.capacity);
}

EmpiricalCdf::EmpiricalCdf(std::vector<double> samples) : samples_(std::move(samples)) {
    std::sort(samples_.begin(), samples_.end());
}

double EmpiricalCdf::operator()(double x) const {
    if (samples_.empty()) return 0.0;
    auto it = std::upper_bound(samples_.begin(), samples_.end(), x);
    return static_cast<double>(it - samples_.begin()) / static_cast<double>(samples_.size());
}

double ks_distance(const EmpiricalCdf& empirical, const std::function<double(double)>& reference, double eps) {
    const auto xs = empirical.samples();
    const double n = static_cast<double>(xs.size());
    double d = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i + 1 < xs.size() && xs[i + 1] == xs[i]) continue;
        // Empirical CDF just at and just left of the sample.
        const double right = static_cast<double>(i + 1) / n;
        const auto first = std::lower_bound(xs.begin(), xs.end(), xs[i]);
        const double left = static_cast<double>(first - xs.begin()) / n;
        d = std::max(d, right - reference(xs[i] + eps));
        d = std::max(d, reference(xs[i] - eps) - left);
    }
    return d;
}

EmpiricalCdf empirical_q_cdf(double e, double delta, const PriceDistribution& d, const PiecewiseLinear& v_next,
                             const StorageSpec& spec, std::size_t n, std::uint64_t seed) {
    if (!(delta > 0.0)) throw std::invalid_argument("empirical_q_cdf: delta must be positive");
    check_soc(e - delta, spec.capacity);
    check_soc(e + delta, spec.capacity);
    Rng rng(seed);
    std::vector<double> q(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double price = d.sample(rng);
        const double up = single_stage_max(e + delta, price, v_next, spec, true).q;
        const double down = single_stage_max(e - delta, price, v_next, spec, true).q;
        q[i] = (up - down) / (2.0 * delta);
    }
    return EmpiricalCdf(std::move(q));
}

}  // namespace storval::oracle
