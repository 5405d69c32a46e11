#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace storval {

using Rng = std::mt19937_64;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// One stage's random price ($/MWh).
///
/// A small closed family: normal, point mass, weighted empirical samples and
/// a shift of any of these. Instances are immutable; copies share the wrapped
/// distribution of a shifted kind.
///
/// Every query accepts -inf/+inf as bounds. Empirical partial expectations
/// use the half-open interval (a, b], matching the right-continuous CDF.
class PriceDistribution {
public:
    enum class Kind { normal, point_mass, empirical, shifted };

    static PriceDistribution normal(double mean, double stddev);
    static PriceDistribution point_mass(double location);
    /// Values need not be sorted; duplicates are merged. Weights must be
    /// non-negative and sum to 1 within 1e-9.
    static PriceDistribution empirical(std::vector<double> values, std::vector<double> weights);
    /// Equal-weight empirical distribution over the given samples.
    static PriceDistribution from_samples(std::vector<double> samples);
    static PriceDistribution shifted(PriceDistribution base, double offset);

    Kind kind() const { return kind_; }

    double cdf(double x) const;
    /// Integral of u f(u) du over (a, b]; a <= b, either may be infinite.
    double partial_expectation(double a, double b) const;
    double mean() const;
    /// Smallest x with cdf(x) >= p, p in (0, 1).
    double quantile(double p) const;
    /// Density for the smooth kinds; zero for atomic kinds.
    double pdf(double x) const;
    double sample(Rng& rng) const;

    /// True when the law has finite support (point mass, empirical, or a
    /// shift of one of those).
    bool is_discrete() const;
    /// Support points (sorted) and weights for discrete laws.
    std::vector<std::pair<double, double>> support() const;

    // Parameters, meaningful per kind.
    double normal_mean() const { return a_; }
    double normal_stddev() const { return b_; }
    double location() const { return a_; }
    double offset() const { return a_; }
    std::span<const double> values() const { return values_; }
    std::span<const double> weights() const { return weights_; }
    const PriceDistribution& base() const { return *base_; }

    std::string describe() const;

    friend bool operator==(const PriceDistribution& lhs, const PriceDistribution& rhs);

private:
    PriceDistribution() = default;

    Kind kind_ = Kind::point_mass;
    double a_ = 0.0;  // mean | location | offset
    double b_ = 0.0;  // stddev
    std::vector<double> values_;
    std::vector<double> weights_;
    std::vector<double> cum_weight_;  // cum_weight_[k] = sum of weights_[0..k)
    std::vector<double> cum_moment_;  // same for weight * value
    std::shared_ptr<const PriceDistribution> base_;
};

/// Quantile-based n-point approximation with equal weights; the k-th point
/// is the quantile at (k - 1/2)/n.
PriceDistribution discretize(const PriceDistribution& d, std::size_t n);

double standard_normal_cdf(double z);
double standard_normal_pdf(double z);
double standard_normal_quantile(double p);

}  // namespace storval
