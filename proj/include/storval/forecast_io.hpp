#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "storval/distributions.hpp"
#include "storval/recursion.hpp"
#include "storval/value_curve.hpp"

namespace storval {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// One hourly row of the price file.
struct PriceRecord {
    std::string timestamp;
    std::int64_t epoch_seconds = 0;  // UTC
    int hour_of_day = 0;             // local hour as written in the timestamp
    double da = 0.0;
    std::optional<double> rt;
};

/// Reads `timestamp,da,rt` CSV. Blank rt cells are allowed; timestamps must be
/// RFC-3339 and strictly increasing.
std::vector<PriceRecord> load_prices(const std::filesystem::path& path);
std::vector<PriceRecord> parse_prices(std::istream& in, const std::string& source = "<stream>");

/// Parses an RFC-3339 timestamp; returns UTC seconds and the local hour.
std::pair<std::int64_t, int> parse_timestamp(const std::string& text);

enum class ForecastMode { point_da, normal_residual, empirical_residual };
enum class ResidualGrouping { hour_of_day, pooled };
enum class TerminalKind { constant, step, table };

struct HorizonConfig {
    StorageSpec spec{1.0, 4.0, 0.9, 0.0};
    std::size_t horizon = 0;                     // T; 0 = 24 with a price file, else the profile length
    std::size_t grid_points = 1001;              // J
    Lookup lookup = Lookup::nearest;

    ForecastMode mode = ForecastMode::point_da;
    ResidualGrouping grouping = ResidualGrouping::hour_of_day;
    std::size_t window_days = 28;
    std::optional<double> sigma_override;
    std::vector<double> sigma_sweep;
    std::vector<std::pair<double, double>> residual_support;  // offset:weight
    std::vector<double> da_profile;
    std::vector<double> rt_profile;
    std::optional<std::string> horizon_start;

    TerminalKind terminal = TerminalKind::constant;
    double terminal_value = 0.0;
    double terminal_step_fraction = 0.9;
    std::optional<std::string> terminal_table;
    std::size_t extension_days = 0;

    std::optional<double> initial_soc_mwh;
    double initial_soc_fraction = 0.5;
    std::uint64_t seed = 0;
    std::size_t mc_paths = 1000;

    double initial_soc() const;
    double grid_step() const;
    void validate() const;
};

/// `key = value` lines, `#` comments. Unknown keys are rejected.
HorizonConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {});
HorizonConfig load_config(const std::filesystem::path& path);

/// A horizon built from data together with what the stages were built from.
struct Forecast {
    ValuationHorizon horizon;
    std::vector<std::string> labels;             // stage timestamps (or indices)
    std::vector<double> da;                      // DA price per stage
    std::vector<std::optional<double>> realized; // RT price per stage when known
    std::vector<std::string> warnings;
};

/// Terminal marginal-value curve described by the config.
ValueCurve build_terminal(const HorizonConfig& config);

Forecast build_forecast(const std::vector<PriceRecord>& records, const HorizonConfig& config);

/// Same as build_forecast but with the residual spread forced to sigma.
Forecast build_forecast_with_sigma(const std::vector<PriceRecord>& records, HorizonConfig config, double sigma);

nlohmann::json distribution_to_json(const PriceDistribution& d);
PriceDistribution distribution_from_json(const nlohmann::json& j);
nlohmann::json horizon_to_json(const ValuationHorizon& h);
ValuationHorizon horizon_from_json(const nlohmann::json& j);

/// CSV with columns soc_mwh,value_per_mwh.
void write_curve_csv(std::ostream& out, const ValueCurve& curve);
ValueCurve read_curve_csv(const std::filesystem::path& path, double capacity, std::size_t grid_points,
                          Lookup lookup = Lookup::nearest);

}  // namespace storval
