#pragma once

#include <chrono>
#include <functional>
#include <vector>

#include "storval/distributions.hpp"
#include "storval/value_curve.hpp"

namespace storval {

/// Stage distributions for periods 1..T plus the end-of-horizon marginal
/// value curve. stages[t - 1] is the price law of period t.
struct ValuationHorizon {
    StorageSpec spec;
    std::vector<PriceDistribution> stages;
    ValueCurve terminal;

    void validate() const;
    std::size_t length() const { return stages.size(); }
};

/// curves[t] is the marginal value of SoC held at the end of period t;
/// curves.back() is the terminal curve.
struct ValuationResult {
    std::vector<ValueCurve> curves;
    std::vector<std::chrono::nanoseconds> stage_time;  // stage_time[t - 1] for period t
};

/// Thrown by backward_pass with the failing period attached.
class StageError : public std::runtime_error {
public:
    StageError(std::size_t stage, const std::string& what);
    std::size_t stage() const { return stage_; }

private:
    std::size_t stage_;
};

/// Pr[q(e) <= x] for the marginal value q(e) of SoC e at the start of a
/// period whose price follows d, given the next curve.
double soc_price_cdf(double x, double e, const ValueCurve& v_next, const PriceDistribution& d,
                     const StorageSpec& spec);

/// Expected marginal value E[q(e)] at a single SoC.
double expected_marginal(double e, const ValueCurve& v_next, const PriceDistribution& d,
                         const StorageSpec& spec);

/// One backward step: the curve at the start of a period from the curve at
/// its end and the period's price law.
ValueCurve backward_step(const ValueCurve& v_next, const PriceDistribution& d, const StorageSpec& spec);

ValuationResult backward_pass(const ValuationHorizon& h);

/// Streaming backward pass holding only the current curve. The callback sees
/// each curve as it is produced (stage index T-1 down to 0) and the returned
/// curve is the one for stage 0.
ValueCurve backward_sweep(const ValuationHorizon& h,
                          const std::function<void(std::size_t, const ValueCurve&)>& on_curve = {});

}  // namespace storval
