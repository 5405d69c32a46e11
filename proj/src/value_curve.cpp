#include "storval/value_curve.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace storval {

namespace {

// Relative slack accepted on SoC arguments that were produced by arithmetic
// such as e - P/eta landing a few ulps outside [0, E].
constexpr double kSocSlack = 1e-9;

}  // namespace

void StorageSpec::validate() const {
    if (!(power >= 0.0) || !std::isfinite(power)) throw std::invalid_argument("storage power must be >= 0");
    if (!(capacity > 0.0) || !std::isfinite(capacity)) throw std::invalid_argument("storage capacity must be > 0");
    if (!(efficiency > 0.0 && efficiency <= 1.0)) throw std::invalid_argument("efficiency must lie in (0, 1]");
    if (!(discharge_cost >= 0.0) || !std::isfinite(discharge_cost)) {
        throw std::invalid_argument("discharge cost must be >= 0");
    }
}

ValueCurve::ValueCurve(double capacity, std::vector<double> values, Lookup lookup)
    : capacity_(capacity), step_(0.0), values_(std::move(values)), lookup_(lookup) {
    if (!(capacity_ > 0.0) || !std::isfinite(capacity_)) {
        throw std::invalid_argument("value curve capacity must be positive");
    }
    if (values_.size() < 2) throw std::invalid_argument("value curve needs at least two samples");
    step_ = capacity_ / static_cast<double>(values_.size() - 1);
    for (std::size_t j = 0; j < values_.size(); ++j) {
        if (!std::isfinite(values_[j])) throw std::invalid_argument("value curve entries must be finite");
        if (j > 0 && values_[j] > values_[j - 1]) {
            std::ostringstream os;
            os << "value curve must be non-increasing (index " << j << ": " << values_[j - 1] << " -> "
               << values_[j] << ")";
            throw std::invalid_argument(os.str());
        }
    }
}

ValueCurve ValueCurve::from_function(const std::function<double(double)>& g, double capacity,
                                     double step, Lookup lookup) {
    if (!(step > 0.0) || !(capacity > 0.0)) throw std::invalid_argument("grid step and capacity must be positive");
    const double cells = std::round(capacity / step);
    if (cells < 1.0 || std::abs(cells * step - capacity) > 1e-9 * capacity) {
        throw std::invalid_argument("capacity must be an integer multiple of the grid step");
    }
    const auto count = static_cast<std::size_t>(cells) + 1;
    std::vector<double> values(count);
    for (std::size_t j = 0; j < count; ++j) {
        const double e = (j + 1 == count) ? capacity : capacity * static_cast<double>(j) / cells;
        values[j] = g(e);
    }
    for (std::size_t j = 1; j < count; ++j) values[j] = std::min(values[j], values[j - 1]);
    return ValueCurve(capacity, std::move(values), lookup);
}

ValueCurve ValueCurve::constant(double value, double capacity, double step, Lookup lookup) {
    return from_function([value](double) { return value; }, capacity, step, lookup);
}

double ValueCurve::soc(std::size_t j) const {
    return (j + 1 == values_.size()) ? capacity_ : static_cast<double>(j) * step_;
}

double ValueCurve::clamp_soc(double e) const {
    const double slack = kSocSlack * capacity_;
    if (!(e >= -slack && e <= capacity_ + slack)) {
        std::ostringstream os;
        os << "SoC " << e << " outside [0, " << capacity_ << "]";
        throw std::out_of_range(os.str());
    }
    return std::clamp(e, 0.0, capacity_);
}

std::size_t ValueCurve::nearest_index(double e) const {
    const double x = clamp_soc(e) / step_;
    const double j = std::ceil(x - 0.5);
    return std::min(static_cast<std::size_t>(std::max(j, 0.0)), values_.size() - 1);
}

double ValueCurve::eval(double e) const {
    if (lookup_ == Lookup::nearest) return values_[nearest_index(e)];
    const double x = clamp_soc(e) / step_;
    const auto j = std::min(static_cast<std::size_t>(x), values_.size() - 2);
    const double r = x - static_cast<double>(j);
    return values_[j] + r * (values_[j + 1] - values_[j]);
}

double ValueCurve::inverse(double y, double lo, double hi) const {
    if (std::isnan(y)) throw std::invalid_argument("inverse: NaN level");
    if (lo > hi) throw std::invalid_argument("inverse: lo exceeds hi");
    lo = clamp_soc(lo);
    hi = clamp_soc(hi);
    if (y >= eval(lo)) return lo;
    if (y <= eval(hi)) return hi;

    // eval(lo) > y > eval(hi): first sample at or below y after lo.
    const auto first_at_or_below = [&](std::size_t from, std::size_t to) {
        auto it = std::upper_bound(values_.begin() + static_cast<std::ptrdiff_t>(from),
                                   values_.begin() + static_cast<std::ptrdiff_t>(to) + 1, y,
                                   [](double level, double v) { return v <= level; });
        return static_cast<std::size_t>(it - values_.begin());
    };

    if (lookup_ == Lookup::nearest) {
        const std::size_t jl = nearest_index(lo);
        const std::size_t jh = nearest_index(hi);
        const std::size_t j = first_at_or_below(jl + 1, jh);
        return std::clamp(soc(j), lo, hi);
    }

    const auto jl = std::min(static_cast<std::size_t>(lo / step_), values_.size() - 2);
    const std::size_t jh = std::min(static_cast<std::size_t>(std::ceil(hi / step_)), values_.size() - 1);
    const std::size_t j = first_at_or_below(jl + 1, jh);
    const double upper = values_[j - 1];
    const double lower = values_[j];
    const double t = (upper - y) / (upper - lower);
    return std::clamp(soc(j - 1) + t * step_, lo, hi);
}

double ValueCurve::integral_to(double e) const {
    e = clamp_soc(e);
    const double x = e / step_;
    const auto j = std::min(static_cast<std::size_t>(x), values_.size() - 1);
    double total = 0.0;
    for (std::size_t k = 0; k < j; ++k) total += 0.5 * (values_[k] + values_[k + 1]) * step_;
    if (j + 1 >= values_.size()) return total;
    const double r = e - static_cast<double>(j) * step_;
    if (lookup_ == Lookup::nearest) {
        const double half = 0.5 * step_;
        return r <= half ? total + r * values_[j]
                         : total + half * values_[j] + (r - half) * values_[j + 1];
    }
    return total + r * values_[j] + 0.5 * r * r / step_ * (values_[j + 1] - values_[j]);
}

void enforce_non_increasing(std::vector<double>& values, double tolerance_scale) {
    double scale = 0.0;
    for (double v : values) scale = std::max(scale, std::abs(v));
    const double tol = tolerance_scale * scale;
    for (std::size_t j = 1; j < values.size(); ++j) {
        if (values[j] > values[j - 1]) {
            if (values[j] - values[j - 1] > tol) {
                std::ostringstream os;
                os << "monotonicity violated at index " << j << " by " << values[j] - values[j - 1]
                   << " (tolerance " << tol << ")";
                throw std::runtime_error(os.str());
            }
            values[j] = values[j - 1];
        }
    }
}

}  // namespace storval
