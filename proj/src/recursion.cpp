#include "storval/recursion.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace storval {

namespace {

// SoC arguments beyond the grid by less than this (relative to E) are still
// treated as feasible full-power moves.
constexpr double kSaturationSlack = 1e-12;

// Marginal values of the three reachable ending states: full charge, hold,
// full discharge. A saturated side stands for the infinite value assigned to
// states outside [0, E]; its atom is dropped and the adjacent integral runs
// to the infinite bound.
struct Thresholds {
    double charged;
    double held;
    double discharged;
    bool charge_saturated;
    bool discharge_saturated;
};

Thresholds thresholds(double e, const ValueCurve& v_next, const StorageSpec& spec) {
    const double cap = v_next.capacity();
    if (!(e >= 0.0 && e <= cap)) {
        std::ostringstream os;
        os << "SoC " << e << " outside [0, " << cap << "]";
        throw std::out_of_range(os.str());
    }
    const double eta = spec.efficiency;
    const double up = e + spec.power * eta;
    const double down = e - spec.power / eta;

    Thresholds th{};
    th.held = v_next.eval(e);
    th.charge_saturated = up > cap * (1.0 + kSaturationSlack);
    th.discharge_saturated = down < -cap * kSaturationSlack;
    // min/max keep the ordering charged <= held <= discharged under lookup noise.
    th.charged = th.charge_saturated ? -kInf : std::min(v_next.eval(std::min(up, cap)), th.held);
    th.discharged = th.discharge_saturated ? kInf : std::max(v_next.eval(std::max(down, 0.0)), th.held);
    return th;
}

double positive_part(double x) { return x > 0.0 ? x : 0.0; }

}  // namespace

void ValuationHorizon::validate() const {
    spec.validate();
    if (stages.empty()) throw std::invalid_argument("valuation horizon needs at least one stage");
    if (std::abs(terminal.capacity() - spec.capacity) > 1e-12 * spec.capacity) {
        throw std::invalid_argument("terminal curve capacity differs from storage capacity");
    }
}

StageError::StageError(std::size_t stage, const std::string& what)
    : std::runtime_error("stage " + std::to_string(stage) + ": " + what), stage_(stage) {}

double soc_price_cdf(double x, double e, const ValueCurve& v_next, const PriceDistribution& d,
                     const StorageSpec& spec) {
    const Thresholds th = thresholds(e, v_next, spec);
    const double eta = spec.efficiency;
    if (!th.charge_saturated && x < th.charged) return 0.0;
    if (x < th.held) return d.cdf(x * eta);
    if (th.discharge_saturated || x < th.discharged) {
        return d.cdf(positive_part(x / eta + spec.discharge_cost));
    }
    return 1.0;
}

// The six terms of the expectation, regrouped around the hold value so that
// zero-width charge/discharge bands cancel exactly:
//   held
//   - (held - charged) * F(charged*eta)                         full charge atom
//   + (discharged - held) * (1 - F(dis_threshold))              full discharge atom
//   + (1/eta) * int_{charged*eta}^{held*eta} (u - held*eta) f(u) du          partial charge
//   + eta * int_{hold_threshold}^{dis_threshold} (w - c - held/eta) f(w) dw  partial discharge
double expected_marginal(double e, const ValueCurve& v_next, const PriceDistribution& d,
                         const StorageSpec& spec) {
    const Thresholds th = thresholds(e, v_next, spec);
    const double eta = spec.efficiency;
    const double c = spec.discharge_cost;

    const double charge_lo = th.charge_saturated ? -kInf : th.charged * eta;
    const double charge_hi = th.held * eta;
    const double hold_hi = positive_part(th.held / eta + c);
    const double discharge_hi = th.discharge_saturated ? kInf : positive_part(th.discharged / eta + c);

    const double f_charge_lo = d.cdf(charge_lo);
    const double f_charge_hi = d.cdf(charge_hi);
    const double f_hold_hi = d.cdf(hold_hi);
    const double f_discharge_hi = d.cdf(discharge_hi);

    double v = th.held;
    if (!th.charge_saturated) v -= (th.held - th.charged) * f_charge_lo;
    if (!th.discharge_saturated) v += (th.discharged - th.held) * (1.0 - f_discharge_hi);
    v += (d.partial_expectation(charge_lo, charge_hi) - charge_hi * (f_charge_hi - f_charge_lo)) / eta;
    v += eta * d.partial_expectation(hold_hi, discharge_hi) -
         (c * eta + th.held) * (f_discharge_hi - f_hold_hi);
    return v;
}

ValueCurve backward_step(const ValueCurve& v_next, const PriceDistribution& d, const StorageSpec& spec) {
    std::vector<double> out(v_next.size());
    for (std::size_t j = 0; j < out.size(); ++j) {
        out[j] = expected_marginal(v_next.soc(j), v_next, d, spec);
        if (!std::isfinite(out[j])) {
            throw std::runtime_error("non-finite marginal value at grid index " + std::to_string(j));
        }
    }
    enforce_non_increasing(out);
    return ValueCurve(v_next.capacity(), std::move(out), v_next.lookup());
}

ValueCurve backward_sweep(const ValuationHorizon& h,
                          const std::function<void(std::size_t, const ValueCurve&)>& on_curve) {
    h.validate();
    ValueCurve current = h.terminal;
    for (std::size_t t = h.stages.size(); t >= 1; --t) {
        try {
            current = backward_step(current, h.stages[t - 1], h.spec);
        } catch (const std::exception& ex) {
            throw StageError(t, ex.what());
        }
        if (on_curve) on_curve(t - 1, current);
    }
    return current;
}

ValuationResult backward_pass(const ValuationHorizon& h) {
    h.validate();
    const std::size_t T = h.stages.size();
    ValuationResult result;
    result.stage_time.resize(T);

    std::vector<ValueCurve> reversed;
    reversed.reserve(T + 1);
    reversed.push_back(h.terminal);
    for (std::size_t t = T; t >= 1; --t) {
        const auto start = std::chrono::steady_clock::now();
        try {
            reversed.push_back(backward_step(reversed.back(), h.stages[t - 1], h.spec));
        } catch (const std::exception& ex) {
            throw StageError(t, ex.what());
        }
        result.stage_time[t - 1] = std::chrono::steady_clock::now() - start;
    }
    result.curves.assign(std::make_move_iterator(reversed.rbegin()),
                         std::make_move_iterator(reversed.rend()));
    return result;
}

}  // namespace storval
