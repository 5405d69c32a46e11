#pragma once

#include <functional>
#include <span>
#include <vector>

namespace storval {

/// Device parameters. Power is expressed as energy per period (MWh/period)
/// since period durations are folded into the charge/discharge quantities.
struct StorageSpec {
    double power = 0.0;       // P, MWh per period
    double capacity = 1.0;    // E, MWh
    double efficiency = 1.0;  // one-way, in (0, 1]
    double discharge_cost = 0.0;  // $/MWh discharged

    /// Throws std::invalid_argument when a field is out of range.
    void validate() const;
};

enum class Lookup { nearest, linear };

/// Marginal value of stored energy ($/MWh) sampled on a uniform SoC grid
/// e_j = j * step, j = 0..J-1, with step * (J - 1) == capacity.
///
/// Values are non-increasing in j and finite. Lookups between samples either
/// snap to the nearest sample (halfway ties go to the lower index) or
/// interpolate linearly.
class ValueCurve {
public:
    ValueCurve(double capacity, std::vector<double> values, Lookup lookup = Lookup::nearest);

    /// Samples g on the grid and repairs monotonicity with a running minimum.
    static ValueCurve from_function(const std::function<double(double)>& g, double capacity,
                                    double step, Lookup lookup = Lookup::nearest);
    static ValueCurve constant(double value, double capacity, double step,
                               Lookup lookup = Lookup::nearest);

    double capacity() const { return capacity_; }
    double step() const { return step_; }
    std::size_t size() const { return values_.size(); }
    std::span<const double> values() const { return values_; }
    double operator[](std::size_t j) const { return values_[j]; }
    double soc(std::size_t j) const;
    Lookup lookup() const { return lookup_; }

    /// Index of the grid sample nearest to e (ties toward the lower index).
    std::size_t nearest_index(double e) const;

    /// Marginal value at SoC e in [0, E]; throws std::out_of_range otherwise.
    double eval(double e) const;

    /// SoC in [lo, hi] where the curve crosses y. Returns lo when
    /// y >= eval(lo), hi when y <= eval(hi); on a flat stretch equal to y the
    /// lowest SoC of the stretch is returned.
    double inverse(double y, double lo, double hi) const;

    /// Energy-weighted integral of the curve from 0 to e (trapezoid on the
    /// grid, matching the nearest-sample step function at grid points).
    double integral_to(double e) const;

    friend bool operator==(const ValueCurve&, const ValueCurve&) = default;

private:
    double clamp_soc(double e) const;

    double capacity_;
    double step_;
    std::vector<double> values_;
    Lookup lookup_;
};

/// Running-minimum repair of small upward violations. Violations larger
/// than tolerance_scale * max|v| throw std::runtime_error.
void enforce_non_increasing(std::vector<double>& values, double tolerance_scale = 1e-7);

}  // namespace storval
