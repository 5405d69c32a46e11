#include "storval/forecast_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace storval {

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

std::optional<double> to_double(const std::string& s) {
    if (s.empty()) return std::nullopt;
    double v = 0.0;
    const char* begin = s.data();
    const char* end = s.data() + s.size();
    if (*begin == '+') ++begin;
    auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc() || ptr != end || !std::isfinite(v)) return std::nullopt;
    return v;
}

// Days since 1970-01-01 for a proleptic Gregorian date.
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const auto yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

int digits(const std::string& s, std::size_t pos, std::size_t n) {
    if (pos + n > s.size()) throw DataError("malformed timestamp '" + s + "'");
    int v = 0;
    for (std::size_t i = pos; i < pos + n; ++i) {
        if (s[i] < '0' || s[i] > '9') throw DataError("malformed timestamp '" + s + "'");
        v = v * 10 + (s[i] - '0');
    }
    return v;
}

void expect_char(const std::string& s, std::size_t pos, std::string_view allowed) {
    if (pos >= s.size() || allowed.find(s[pos]) == std::string_view::npos) {
        throw DataError("malformed timestamp '" + s + "'");
    }
}

// Shortest text that reads back to the same double.
std::string fmt_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

}  // namespace

std::pair<std::int64_t, int> parse_timestamp(const std::string& text) {
    const std::string& s = text;
    const int year = digits(s, 0, 4);
    expect_char(s, 4, "-");
    const int month = digits(s, 5, 2);
    expect_char(s, 7, "-");
    const int day = digits(s, 8, 2);
    expect_char(s, 10, "Tt ");
    const int hour = digits(s, 11, 2);
    expect_char(s, 13, ":");
    const int minute = digits(s, 14, 2);
    expect_char(s, 16, ":");
    const int second = digits(s, 17, 2);
    std::size_t pos = 19;
    if (pos < s.size() && s[pos] == '.') {
        ++pos;
        while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') ++pos;
    }
    if (month < 1 || month > 12 || day < 1 || day > 31 || hour > 23 || minute > 59 || second > 60) {
        throw DataError("timestamp out of range '" + s + "'");
    }
    std::int64_t offset = 0;
    if (pos < s.size() && (s[pos] == 'Z' || s[pos] == 'z')) {
        ++pos;
    } else if (pos < s.size() && (s[pos] == '+' || s[pos] == '-')) {
        const int sign = s[pos] == '-' ? -1 : 1;
        const int oh = digits(s, pos + 1, 2);
        expect_char(s, pos + 3, ":");
        const int om = digits(s, pos + 4, 2);
        offset = sign * (oh * 3600 + om * 60);
        pos += 6;
    } else {
        throw DataError("timestamp lacks a UTC offset '" + s + "'");
    }
    if (pos != s.size()) throw DataError("malformed timestamp '" + s + "'");
    const std::int64_t local = days_from_civil(year, static_cast<unsigned>(month), static_cast<unsigned>(day)) * 86400 +
                               hour * 3600 + minute * 60 + second;
    return {local - offset, hour};
}

std::vector<PriceRecord> parse_prices(std::istream& in, const std::string& source) {
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    std::vector<PriceRecord> out;
    while (std::getline(in, line)) {
        ++line_no;
        if (!have_header) {
            if (line_no == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
            const auto cols = split(line, ',');
            if (cols != std::vector<std::string>{"timestamp", "da", "rt"}) {
                throw DataError(source + ":" + std::to_string(line_no) + ": expected header 'timestamp,da,rt'");
            }
            have_header = true;
            continue;
        }
        if (trim(line).empty()) continue;
        const auto cols = split(line, ',');
        const std::string where = source + ":" + std::to_string(line_no) + ": ";
        if (cols.size() != 3) throw DataError(where + "expected 3 columns");
        PriceRecord rec;
        rec.timestamp = cols[0];
        try {
            std::tie(rec.epoch_seconds, rec.hour_of_day) = parse_timestamp(cols[0]);
        } catch (const DataError& ex) {
            throw DataError(where + ex.what());
        }
        const auto da = to_double(cols[1]);
        if (!da) throw DataError(where + "unparseable da price '" + cols[1] + "'");
        rec.da = *da;
        if (!cols[2].empty()) {
            rec.rt = to_double(cols[2]);
            if (!rec.rt) throw DataError(where + "unparseable rt price '" + cols[2] + "'");
        }
        if (!out.empty() && rec.epoch_seconds <= out.back().epoch_seconds) {
            throw DataError(where + "timestamps must be strictly increasing");
        }
        out.push_back(std::move(rec));
    }
    if (!have_header) throw DataError(source + ": missing header row");
    return out;
}

std::vector<PriceRecord> load_prices(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open price file " + path.string());
    return parse_prices(in, path.string());
}

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

double HorizonConfig::initial_soc() const {
    return initial_soc_mwh ? *initial_soc_mwh : initial_soc_fraction * spec.capacity;
}

double HorizonConfig::grid_step() const {
    return spec.capacity / static_cast<double>(grid_points - 1);
}

void HorizonConfig::validate() const {
    try {
        spec.validate();
    } catch (const std::invalid_argument& ex) {
        throw ConfigError(ex.what());
    }
    if (grid_points < 2) throw ConfigError("grid_points must be at least 2");
    if (terminal_step_fraction < 0.0 || terminal_step_fraction > 1.0) {
        throw ConfigError("terminal_step_fraction must lie in [0, 1]");
    }
    if (terminal == TerminalKind::table && !terminal_table) throw ConfigError("terminal_kind = table needs terminal_table");
    const double e0 = initial_soc();
    if (!(e0 >= 0.0 && e0 <= spec.capacity)) throw ConfigError("initial SoC outside [0, capacity]");
    if (sigma_override && !(*sigma_override >= 0.0)) throw ConfigError("sigma_override must be >= 0");
    for (double s : sigma_sweep) {
        if (!(s >= 0.0)) throw ConfigError("sigma_sweep entries must be >= 0");
    }
    if (!residual_support.empty()) {
        double total = 0.0;
        for (const auto& [v, w] : residual_support) {
            if (w < 0.0) throw ConfigError("residual_support weights must be >= 0");
            total += w;
        }
        if (std::abs(total - 1.0) > 1e-9) throw ConfigError("residual_support weights must sum to 1");
    }
    if (window_days < 7) throw ConfigError("window_days must be at least 7");
}

namespace {

double parse_number(const std::string& key, const std::string& value) {
    const auto v = to_double(value);
    if (!v) throw ConfigError("config key '" + key + "': expected a number, got '" + value + "'");
    return *v;
}

std::size_t parse_count(const std::string& key, const std::string& value) {
    const double v = parse_number(key, value);
    if (v < 0.0 || v != std::floor(v)) throw ConfigError("config key '" + key + "': expected a non-negative integer");
    return static_cast<std::size_t>(v);
}

std::vector<double> parse_list(const std::string& key, const std::string& value) {
    std::vector<double> out;
    if (trim(value).empty()) return out;
    for (const auto& item : split(value, ',')) out.push_back(parse_number(key, item));
    return out;
}

}  // namespace

HorizonConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
    HorizonConfig c;
    std::optional<double> grid_step;
    bool grid_points_set = false;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    std::map<std::string, std::size_t> seen;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        if (trim(line).empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value'");
        }
        const std::string key = trim(std::string_view(line).substr(0, eq));
        const std::string value = trim(std::string_view(line).substr(eq + 1));
        if (seen.count(key)) throw ConfigError("config key '" + key + "' given twice");
        seen[key] = line_no;

        if (key == "power_mwh") c.spec.power = parse_number(key, value);
        else if (key == "capacity_mwh") c.spec.capacity = parse_number(key, value);
        else if (key == "efficiency") c.spec.efficiency = parse_number(key, value);
        else if (key == "discharge_cost") c.spec.discharge_cost = parse_number(key, value);
        else if (key == "horizon") c.horizon = parse_count(key, value);
        else if (key == "grid_points") {
            c.grid_points = parse_count(key, value);
            grid_points_set = true;
        } else if (key == "grid_step_mwh") grid_step = parse_number(key, value);
        else if (key == "lookup") {
            if (value == "nearest") c.lookup = Lookup::nearest;
            else if (value == "linear") c.lookup = Lookup::linear;
            else throw ConfigError("lookup must be nearest or linear");
        } else if (key == "forecast_mode") {
            if (value == "point-da") c.mode = ForecastMode::point_da;
            else if (value == "normal-residual") c.mode = ForecastMode::normal_residual;
            else if (value == "empirical-residual") c.mode = ForecastMode::empirical_residual;
            else throw ConfigError("forecast_mode must be point-da, normal-residual or empirical-residual");
        } else if (key == "residual_grouping") {
            if (value == "hour-of-day") c.grouping = ResidualGrouping::hour_of_day;
            else if (value == "pooled") c.grouping = ResidualGrouping::pooled;
            else throw ConfigError("residual_grouping must be hour-of-day or pooled");
        } else if (key == "window_days") c.window_days = parse_count(key, value);
        else if (key == "sigma_override") c.sigma_override = parse_number(key, value);
        else if (key == "sigma_sweep") c.sigma_sweep = parse_list(key, value);
        else if (key == "residual_support") {
            for (const auto& item : split(value, ',')) {
                const auto parts = split(item, ':');
                if (parts.size() != 2) throw ConfigError("residual_support items must be offset:weight");
                c.residual_support.emplace_back(parse_number(key, parts[0]), parse_number(key, parts[1]));
            }
        } else if (key == "da_profile") c.da_profile = parse_list(key, value);
        else if (key == "rt_profile") c.rt_profile = parse_list(key, value);
        else if (key == "horizon_start") c.horizon_start = value;
        else if (key == "terminal_kind") {
            if (value == "constant") c.terminal = TerminalKind::constant;
            else if (value == "step") c.terminal = TerminalKind::step;
            else if (value == "table") c.terminal = TerminalKind::table;
            else throw ConfigError("terminal_kind must be constant, step or table");
        } else if (key == "terminal_value") c.terminal_value = parse_number(key, value);
        else if (key == "terminal_step_fraction") c.terminal_step_fraction = parse_number(key, value);
        else if (key == "terminal_table") {
            std::filesystem::path p(value);
            c.terminal_table = (p.is_relative() && !base_dir.empty()) ? (base_dir / p).string() : value;
        } else if (key == "extension_days") c.extension_days = parse_count(key, value);
        else if (key == "initial_soc_mwh") c.initial_soc_mwh = parse_number(key, value);
        else if (key == "initial_soc_fraction") c.initial_soc_fraction = parse_number(key, value);
        else if (key == "seed") {
            std::uint64_t s = 0;
            auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), s);
            if (ec != std::errc() || ptr != value.data() + value.size()) throw ConfigError("seed must be an unsigned integer");
            c.seed = s;
        } else if (key == "mc_paths") c.mc_paths = parse_count(key, value);
        else throw ConfigError("unknown config key '" + key + "' on line " + std::to_string(line_no));
    }
    if (grid_step) {
        if (grid_points_set) throw ConfigError("give either grid_points or grid_step_mwh, not both");
        const double cells = std::round(c.spec.capacity / *grid_step);
        if (cells < 1.0 || std::abs(cells * *grid_step - c.spec.capacity) > 1e-9 * c.spec.capacity) {
            throw ConfigError("capacity_mwh must be an integer multiple of grid_step_mwh");
        }
        c.grid_points = static_cast<std::size_t>(cells) + 1;
    }
    c.validate();
    return c;
}

HorizonConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path.parent_path());
}

// ---------------------------------------------------------------------------
// Forecast construction
// ---------------------------------------------------------------------------

void write_curve_csv(std::ostream& out, const ValueCurve& curve) {
    out << "soc_mwh,value_per_mwh\n";
    for (std::size_t j = 0; j < curve.size(); ++j) {
        out << fmt_double(curve.soc(j)) << ',' << fmt_double(curve[j]) << '\n';
    }
}

ValueCurve read_curve_csv(const std::filesystem::path& path, double capacity, std::size_t grid_points,
                          Lookup lookup) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open curve table " + path.string());
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::pair<double, double>> rows;
    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1) {
            if (split(line, ',') != std::vector<std::string>{"soc_mwh", "value_per_mwh"}) {
                throw DataError(path.string() + ": expected header 'soc_mwh,value_per_mwh'");
            }
            continue;
        }
        if (trim(line).empty()) continue;
        const auto cols = split(line, ',');
        const auto soc = cols.size() == 2 ? to_double(cols[0]) : std::nullopt;
        const auto val = cols.size() == 2 ? to_double(cols[1]) : std::nullopt;
        if (!soc || !val) throw DataError(path.string() + ":" + std::to_string(line_no) + ": malformed row");
        rows.emplace_back(*soc, *val);
    }
    if (rows.empty()) throw DataError(path.string() + ": no rows");
    std::sort(rows.begin(), rows.end());
    const double snap = 1e-9 * capacity;
    const auto interp = [&rows, snap](double e) {
        if (e <= rows.front().first) return rows.front().second;
        if (e >= rows.back().first) return rows.back().second;
        auto it = std::upper_bound(rows.begin(), rows.end(), std::make_pair(e, -kInf));
        const auto& [x1, y1] = *it;
        const auto& [x0, y0] = *(it - 1);
        if (x1 - e <= snap || x1 == x0) return y1;
        if (e - x0 <= snap) return y0;
        return y0 + (e - x0) / (x1 - x0) * (y1 - y0);
    };
    return ValueCurve::from_function(interp, capacity, capacity / static_cast<double>(grid_points - 1), lookup);
}

ValueCurve build_terminal(const HorizonConfig& c) {
    const double cap = c.spec.capacity;
    const double step = c.grid_step();
    switch (c.terminal) {
    case TerminalKind::constant:
        return ValueCurve::constant(c.terminal_value, cap, step, c.lookup);
    case TerminalKind::step: {
        const double edge = c.terminal_step_fraction * cap + 1e-9 * cap;
        const double k = c.terminal_value;
        return ValueCurve::from_function([edge, k](double e) { return e <= edge ? k : 0.0; }, cap, step, c.lookup);
    }
    case TerminalKind::table:
        return read_curve_csv(*c.terminal_table, cap, c.grid_points, c.lookup);
    }
    throw ConfigError("unknown terminal kind");
}

namespace {

double sample_stddev(const std::vector<double>& xs) {
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

}  // namespace

Forecast build_forecast(const std::vector<PriceRecord>& records, const HorizonConfig& c) {
    c.validate();
    std::vector<std::string> labels;
    std::vector<double> da_prices;
    std::vector<std::optional<double>> realized;
    std::vector<std::string> warnings;
    std::vector<int> hours;
    std::size_t start = 0;

    if (!records.empty()) {
        const std::size_t T = c.horizon == 0 ? 24 : c.horizon;
        if (c.horizon_start) {
            const std::int64_t at = parse_timestamp(*c.horizon_start).first;
            auto it = std::find_if(records.begin(), records.end(),
                                   [at](const PriceRecord& r) { return r.epoch_seconds >= at; });
            start = static_cast<std::size_t>(it - records.begin());
        } else {
            if (records.size() < T) throw DataError("price file has fewer rows than the horizon");
            start = records.size() - T;
        }
        if (start + T > records.size()) throw DataError("price file ends before the horizon does");
        for (std::size_t t = 0; t < T; ++t) {
            const auto& r = records[start + t];
            labels.push_back(r.timestamp);
            da_prices.push_back(r.da);
            realized.push_back(r.rt);
            hours.push_back(r.hour_of_day);
        }
    } else {
        if (c.da_profile.empty()) throw ConfigError("no price file given and no da_profile in the config");
        const std::size_t T = c.horizon == 0 ? c.da_profile.size() : c.horizon;
        if (c.da_profile.size() < T) throw ConfigError("da_profile is shorter than the horizon");
        if (!c.rt_profile.empty() && c.rt_profile.size() < T) throw ConfigError("rt_profile is shorter than the horizon");
        for (std::size_t t = 0; t < T; ++t) {
            labels.push_back(std::to_string(t + 1));
            da_prices.push_back(c.da_profile[t]);
            realized.push_back(c.rt_profile.empty() ? std::nullopt : std::optional<double>(c.rt_profile[t]));
            hours.push_back(static_cast<int>(t % 24));
        }
    }
    const std::size_t T = da_prices.size();
    if (!records.empty() && !c.rt_profile.empty()) {
        for (std::size_t t = 0; t < T && t < c.rt_profile.size(); ++t) realized[t] = c.rt_profile[t];
    }

    // Residual groups from the training window preceding the horizon.
    const bool injected = (c.mode == ForecastMode::normal_residual && c.sigma_override) ||
                          (c.mode == ForecastMode::empirical_residual && !c.residual_support.empty());
    std::map<int, std::vector<double>> groups;
    if (c.mode != ForecastMode::point_da && !injected) {
        if (records.empty()) {
            throw ConfigError("residual forecast modes need a price file, sigma_override or residual_support");
        }
        const std::size_t window = c.window_days * 24;
        const std::size_t first = start > window ? start - window : 0;
        for (std::size_t i = first; i < start; ++i) {
            if (!records[i].rt) continue;
            const int key = c.grouping == ResidualGrouping::hour_of_day ? records[i].hour_of_day : 0;
            groups[key].push_back(*records[i].rt - records[i].da);
        }
        const std::size_t minimum = c.grouping == ResidualGrouping::hour_of_day ? 7 : 7 * 24;
        for (std::size_t t = 0; t < T; ++t) {
            const int key = c.grouping == ResidualGrouping::hour_of_day ? hours[t] : 0;
            if (groups[key].size() < minimum) {
                throw DataError("insufficient training data for hour group " + std::to_string(key) + " (" +
                                std::to_string(groups[key].size()) + " residuals, need " + std::to_string(minimum) +
                                ")");
            }
        }
        // Sorting makes the fitted parameters independent of the row order.
        for (auto& [key, xs] : groups) std::sort(xs.begin(), xs.end());
    }

    std::vector<PriceDistribution> stages;
    for (std::size_t t = 0; t < T; ++t) {
        const double da = da_prices[t];
        const int key = c.grouping == ResidualGrouping::hour_of_day ? hours[t] : 0;
        switch (c.mode) {
        case ForecastMode::point_da:
            stages.push_back(PriceDistribution::point_mass(da));
            break;
        case ForecastMode::normal_residual: {
            const double sigma = c.sigma_override ? *c.sigma_override : sample_stddev(groups[key]);
            if (sigma > 0.0) {
                stages.push_back(PriceDistribution::normal(da, sigma));
            } else {
                warnings.push_back("stage " + labels[t] + ": residual spread is zero, using a point mass");
                stages.push_back(PriceDistribution::point_mass(da));
            }
            break;
        }
        case ForecastMode::empirical_residual: {
            PriceDistribution base = PriceDistribution::point_mass(0.0);
            if (!c.residual_support.empty()) {
                std::vector<double> v;
                std::vector<double> w;
                for (const auto& [x, p] : c.residual_support) {
                    v.push_back(x);
                    w.push_back(p);
                }
                base = PriceDistribution::empirical(std::move(v), std::move(w));
            } else {
                base = PriceDistribution::from_samples(groups[key]);
            }
            stages.push_back(PriceDistribution::shifted(std::move(base), da));
            break;
        }
        }
    }

    ValueCurve terminal = build_terminal(c);
    if (c.extension_days > 0) {
        const std::size_t day = std::min<std::size_t>(24, T);
        ValuationHorizon tail{c.spec, {}, terminal};
        for (std::size_t k = 0; k < c.extension_days; ++k) {
            tail.stages.insert(tail.stages.end(), stages.end() - static_cast<std::ptrdiff_t>(day), stages.end());
        }
        terminal = backward_sweep(tail);
    }
    return Forecast{ValuationHorizon{c.spec, std::move(stages), std::move(terminal)}, std::move(labels),
                    std::move(da_prices), std::move(realized), std::move(warnings)};
}

Forecast build_forecast_with_sigma(const std::vector<PriceRecord>& records, HorizonConfig config, double sigma) {
    config.mode = ForecastMode::normal_residual;
    config.sigma_override = sigma;
    return build_forecast(records, config);
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

nlohmann::json distribution_to_json(const PriceDistribution& d) {
    using Kind = PriceDistribution::Kind;
    switch (d.kind()) {
    case Kind::normal:
        return {{"kind", "normal"}, {"mean", d.normal_mean()}, {"stddev", d.normal_stddev()}};
    case Kind::point_mass:
        return {{"kind", "point_mass"}, {"location", d.location()}};
    case Kind::empirical: {
        const auto v = d.values();
        const auto w = d.weights();
        return {{"kind", "empirical"},
                {"values", std::vector<double>(v.begin(), v.end())},
                {"weights", std::vector<double>(w.begin(), w.end())}};
    }
    case Kind::shifted:
        return {{"kind", "shifted"}, {"offset", d.offset()}, {"base", distribution_to_json(d.base())}};
    }
    return {};
}

PriceDistribution distribution_from_json(const nlohmann::json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "normal") return PriceDistribution::normal(j.at("mean").get<double>(), j.at("stddev").get<double>());
    if (kind == "point_mass") return PriceDistribution::point_mass(j.at("location").get<double>());
    if (kind == "empirical") {
        return PriceDistribution::empirical(j.at("values").get<std::vector<double>>(),
                                            j.at("weights").get<std::vector<double>>());
    }
    if (kind == "shifted") {
        return PriceDistribution::shifted(distribution_from_json(j.at("base")), j.at("offset").get<double>());
    }
    throw DataError("unknown distribution kind '" + kind + "'");
}

nlohmann::json horizon_to_json(const ValuationHorizon& h) {
    nlohmann::json stages = nlohmann::json::array();
    for (const auto& d : h.stages) stages.push_back(distribution_to_json(d));
    const auto v = h.terminal.values();
    return {{"spec",
             {{"power_mwh", h.spec.power},
              {"capacity_mwh", h.spec.capacity},
              {"efficiency", h.spec.efficiency},
              {"discharge_cost", h.spec.discharge_cost}}},
            {"stages", stages},
            {"terminal",
             {{"capacity_mwh", h.terminal.capacity()},
              {"lookup", h.terminal.lookup() == Lookup::nearest ? "nearest" : "linear"},
              {"values", std::vector<double>(v.begin(), v.end())}}}};
}

ValuationHorizon horizon_from_json(const nlohmann::json& j) {
    const auto& s = j.at("spec");
    StorageSpec spec{s.at("power_mwh").get<double>(), s.at("capacity_mwh").get<double>(),
                     s.at("efficiency").get<double>(), s.at("discharge_cost").get<double>()};
    std::vector<PriceDistribution> stages;
    for (const auto& d : j.at("stages")) stages.push_back(distribution_from_json(d));
    const auto& t = j.at("terminal");
    const Lookup lookup = t.at("lookup").get<std::string>() == "linear" ? Lookup::linear : Lookup::nearest;
    ValueCurve terminal(t.at("capacity_mwh").get<double>(), t.at("values").get<std::vector<double>>(), lookup);
    return ValuationHorizon{spec, std::move(stages), std::move(terminal)};
}

}  // namespace storval
