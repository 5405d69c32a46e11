#include "storval/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <boost/math/special_functions/erf.hpp>

namespace storval {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

// Uniform in [0, 1) from the top 53 bits; identical on every platform.
double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

double standard_normal_cdf(double z) {
    if (z == -kInf) return 0.0;
    if (z == kInf) return 1.0;
    return 0.5 * std::erfc(-z * kInvSqrt2);
}

double standard_normal_pdf(double z) {
    if (std::isinf(z)) return 0.0;
    return kInvSqrt2Pi * std::exp(-0.5 * z * z);
}

double standard_normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw std::domain_error("standard_normal_quantile: p must lie in (0, 1)");
    }
    return -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * p);
}

PriceDistribution PriceDistribution::normal(double mean, double stddev) {
    if (!std::isfinite(mean) || !std::isfinite(stddev) || !(stddev > 0.0)) {
        throw std::invalid_argument("normal distribution needs a finite mean and stddev > 0");
    }
    PriceDistribution d;
    d.kind_ = Kind::normal;
    d.a_ = mean;
    d.b_ = stddev;
    return d;
}

PriceDistribution PriceDistribution::point_mass(double location) {
    if (!std::isfinite(location)) {
        throw std::invalid_argument("point mass location must be finite");
    }
    PriceDistribution d;
    d.kind_ = Kind::point_mass;
    d.a_ = location;
    return d;
}

PriceDistribution PriceDistribution::empirical(std::vector<double> values,
                                               std::vector<double> weights) {
    if (values.empty() || values.size() != weights.size()) {
        throw std::invalid_argument("empirical distribution needs matching, non-empty values and weights");
    }
    double total = 0.0;
    for (std::size_t k = 0; k < values.size(); ++k) {
        if (!std::isfinite(values[k])) throw std::invalid_argument("empirical value is not finite");
        if (!(weights[k] >= 0.0) || !std::isfinite(weights[k])) {
            throw std::invalid_argument("empirical weights must be non-negative");
        }
        total += weights[k];
    }
    if (std::abs(total - 1.0) > 1e-9) {
        throw std::invalid_argument("empirical weights must sum to 1");
    }

    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return values[i] < values[j]; });

    PriceDistribution d;
    d.kind_ = Kind::empirical;
    for (std::size_t idx : order) {
        if (weights[idx] == 0.0) continue;
        if (!d.values_.empty() && d.values_.back() == values[idx]) {
            d.weights_.back() += weights[idx];
        } else {
            d.values_.push_back(values[idx]);
            d.weights_.push_back(weights[idx]);
        }
    }
    d.cum_weight_.assign(d.values_.size() + 1, 0.0);
    d.cum_moment_.assign(d.values_.size() + 1, 0.0);
    for (std::size_t k = 0; k < d.values_.size(); ++k) {
        d.cum_weight_[k + 1] = d.cum_weight_[k] + d.weights_[k];
        d.cum_moment_[k + 1] = d.cum_moment_[k] + d.weights_[k] * d.values_[k];
    }
    // Pin the total so that cdf(+inf) and cdf(max value) agree exactly.
    d.cum_weight_.back() = 1.0;
    return d;
}

PriceDistribution PriceDistribution::from_samples(std::vector<double> samples) {
    if (samples.empty()) throw std::invalid_argument("from_samples: no samples");
    std::vector<double> w(samples.size(), 1.0 / static_cast<double>(samples.size()));
    return empirical(std::move(samples), std::move(w));
}

PriceDistribution PriceDistribution::shifted(PriceDistribution base, double offset) {
    if (!std::isfinite(offset)) throw std::invalid_argument("shift offset must be finite");
    PriceDistribution d;
    d.kind_ = Kind::shifted;
    d.a_ = offset;
    d.base_ = std::make_shared<const PriceDistribution>(std::move(base));
    return d;
}

double PriceDistribution::cdf(double x) const {
    if (x == -kInf) return 0.0;
    if (x == kInf) return 1.0;
    switch (kind_) {
    case Kind::normal:
        return standard_normal_cdf((x - a_) / b_);
    case Kind::point_mass:
        return x >= a_ ? 1.0 : 0.0;
    case Kind::empirical: {
        auto it = std::upper_bound(values_.begin(), values_.end(), x);
        return cum_weight_[static_cast<std::size_t>(it - values_.begin())];
    }
    case Kind::shifted:
        return base_->cdf(x - a_);
    }
    return 0.0;
}

double PriceDistribution::partial_expectation(double a, double b) const {
    if (std::isnan(a) || std::isnan(b)) throw std::invalid_argument("partial_expectation: NaN bound");
    if (a > b) throw std::invalid_argument("partial_expectation: lower bound exceeds upper bound");
    if (a == b) return 0.0;
    switch (kind_) {
    case Kind::normal: {
        const double za = (a - a_) / b_;
        const double zb = (b - a_) / b_;
        const double mass = standard_normal_cdf(zb) - standard_normal_cdf(za);
        return a_ * mass - b_ * (standard_normal_pdf(zb) - standard_normal_pdf(za));
    }
    case Kind::point_mass:
        return (a < a_ && a_ <= b) ? a_ : 0.0;
    case Kind::empirical: {
        auto lo = std::upper_bound(values_.begin(), values_.end(), a);
        auto hi = std::upper_bound(values_.begin(), values_.end(), b);
        return cum_moment_[static_cast<std::size_t>(hi - values_.begin())] -
               cum_moment_[static_cast<std::size_t>(lo - values_.begin())];
    }
    case Kind::shifted: {
        const double lo = a - a_;
        const double hi = b - a_;
        return base_->partial_expectation(lo, hi) + a_ * (base_->cdf(hi) - base_->cdf(lo));
    }
    }
    return 0.0;
}

double PriceDistribution::mean() const {
    switch (kind_) {
    case Kind::normal:
    case Kind::point_mass:
        return a_;
    case Kind::empirical:
        return cum_moment_.back();
    case Kind::shifted:
        return base_->mean() + a_;
    }
    return 0.0;
}

double PriceDistribution::quantile(double p) const {
    if (!(p > 0.0 && p < 1.0)) throw std::domain_error("quantile: p must lie in (0, 1)");
    switch (kind_) {
    case Kind::normal:
        return a_ + b_ * standard_normal_quantile(p);
    case Kind::point_mass:
        return a_;
    case Kind::empirical: {
        auto it = std::lower_bound(cum_weight_.begin() + 1, cum_weight_.end(), p);
        std::size_t k = static_cast<std::size_t>(it - cum_weight_.begin()) - 1;
        return values_[std::min(k, values_.size() - 1)];
    }
    case Kind::shifted:
        return base_->quantile(p) + a_;
    }
    return 0.0;
}

double PriceDistribution::pdf(double x) const {
    switch (kind_) {
    case Kind::normal:
        return standard_normal_pdf((x - a_) / b_) / b_;
    case Kind::point_mass:
    case Kind::empirical:
        return 0.0;
    case Kind::shifted:
        return base_->pdf(x - a_);
    }
    return 0.0;
}

double PriceDistribution::sample(Rng& rng) const {
    switch (kind_) {
    case Kind::normal: {
        double u = uniform01(rng);
        while (u == 0.0) u = uniform01(rng);
        return a_ + b_ * standard_normal_quantile(u);
    }
    case Kind::point_mass:
        return a_;
    case Kind::empirical: {
        const double u = uniform01(rng);
        auto it = std::upper_bound(cum_weight_.begin() + 1, cum_weight_.end(), u);
        std::size_t k = static_cast<std::size_t>(it - cum_weight_.begin()) - 1;
        return values_[std::min(k, values_.size() - 1)];
    }
    case Kind::shifted:
        return base_->sample(rng) + a_;
    }
    return 0.0;
}

bool PriceDistribution::is_discrete() const {
    switch (kind_) {
    case Kind::normal:
        return false;
    case Kind::point_mass:
    case Kind::empirical:
        return true;
    case Kind::shifted:
        return base_->is_discrete();
    }
    return false;
}

std::vector<std::pair<double, double>> PriceDistribution::support() const {
    std::vector<std::pair<double, double>> out;
    switch (kind_) {
    case Kind::normal:
        throw std::logic_error("support: normal distribution has no finite support");
    case Kind::point_mass:
        out.emplace_back(a_, 1.0);
        break;
    case Kind::empirical:
        for (std::size_t k = 0; k < values_.size(); ++k) out.emplace_back(values_[k], weights_[k]);
        break;
    case Kind::shifted:
        out = base_->support();
        for (auto& [v, w] : out) v += a_;
        break;
    }
    return out;
}

std::string PriceDistribution::describe() const {
    std::ostringstream os;
    os.precision(17);
    switch (kind_) {
    case Kind::normal:
        os << "normal(" << a_ << ", " << b_ << ")";
        break;
    case Kind::point_mass:
        os << "point_mass(" << a_ << ")";
        break;
    case Kind::empirical:
        os << "empirical[" << values_.size() << "]";
        break;
    case Kind::shifted:
        os << "shifted(" << base_->describe() << ", " << a_ << ")";
        break;
    }
    return os.str();
}

bool operator==(const PriceDistribution& lhs, const PriceDistribution& rhs) {
    if (lhs.kind_ != rhs.kind_) return false;
    switch (lhs.kind_) {
    case PriceDistribution::Kind::normal:
        return lhs.a_ == rhs.a_ && lhs.b_ == rhs.b_;
    case PriceDistribution::Kind::point_mass:
        return lhs.a_ == rhs.a_;
    case PriceDistribution::Kind::empirical:
        return lhs.values_ == rhs.values_ && lhs.weights_ == rhs.weights_;
    case PriceDistribution::Kind::shifted:
        return lhs.a_ == rhs.a_ && *lhs.base_ == *rhs.base_;
    }
    return false;
}

PriceDistribution discretize(const PriceDistribution& d, std::size_t n) {
    if (n == 0) throw std::invalid_argument("discretize: n must be at least 1");
    std::vector<double> values(n);
    for (std::size_t k = 0; k < n; ++k) {
        values[k] = d.quantile((static_cast<double>(k) + 0.5) / static_cast<double>(n));
    }
    return PriceDistribution::from_samples(std::move(values));
}

}  // namespace storval
