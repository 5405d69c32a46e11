#include "storval/commands.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "json.hpp"

#include "storval/forecast_io.hpp"
#include "storval/oracle.hpp"
#include "storval/policy.hpp"
#include "storval/recursion.hpp"

namespace storval {

namespace {

using Clock = std::chrono::steady_clock;
using nlohmann::json;

constexpr const char* kVersion = "0.1.0";

double ms_since(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

std::string hex64(std::uint64_t x) {
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << x;
    return os.str();
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Shortest text that reads back to the same double.
std::string fmt(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

/// Collects what the manifest needs while a command runs.
class Run {
public:
    Run(std::string command, const CommandOptions& opt) : command_(std::move(command)), opt_(opt) {
        std::filesystem::create_directories(opt.out);
        if (opt.config) {
            config_hash_ = hex64(fnv1a64(read_file(*opt.config)));
            config_ = load_config(*opt.config);
        }
        if (opt.grid_points) {
            if (*opt.grid_points < 2) throw ConfigError("--grid-points must be at least 2");
            config_.grid_points = *opt.grid_points;
        }
        if (opt.seed) config_.seed = *opt.seed;
        if (opt.prices) {
            prices_hash_ = hex64(fnv1a64(read_file(*opt.prices)));
            records_ = load_prices(*opt.prices);
        }
    }

    HorizonConfig& config() { return config_; }
    const std::vector<PriceRecord>& records() const { return records_; }
    const CommandOptions& options() const { return opt_; }

    void require_config() const {
        if (!opt_.config) throw ConfigError(command_ + " needs --config");
    }

    void phase(const std::string& name, double ms) { phases_.emplace_back(name, ms); }
    void stage_times(const std::vector<std::chrono::nanoseconds>& times) {
        stage_ms_.clear();
        for (auto t : times) stage_ms_.push_back(std::chrono::duration<double, std::milli>(t).count());
    }

    std::filesystem::path output(const std::string& name) {
        outputs_.push_back(name);
        return opt_.out / name;
    }

    void write_json(const std::string& name, const json& j) {
        std::ofstream out(output(name));
        out << j.dump(2) << '\n';
    }

    void write_manifest(int exit_code) {
        json phases = json::array();
        for (const auto& [name, ms] : phases_) phases.push_back({{"phase", name}, {"ms", ms}});
        json m{{"command", command_},
               {"config", opt_.config ? json(opt_.config->string()) : json(nullptr)},
               {"config_hash", config_hash_.empty() ? json(nullptr) : json("fnv1a64:" + config_hash_)},
               {"prices", opt_.prices ? json(opt_.prices->string()) : json(nullptr)},
               {"prices_hash", prices_hash_.empty() ? json(nullptr) : json("fnv1a64:" + prices_hash_)},
               {"seed", config_.seed},
               {"versions", {{"storval", kVersion}, {"compiler", __VERSION__}, {"cxx_standard", __cplusplus}}},
               {"wall_clock_ms", phases},
               {"stage_wall_clock_ms", stage_ms_},
               {"outputs", outputs_},
               {"exit_code", exit_code}};
        std::ofstream out(opt_.out / "manifest.json");
        out << m.dump(2) << '\n';
    }

private:
    std::string command_;
    CommandOptions opt_;
    HorizonConfig config_;
    std::vector<PriceRecord> records_;
    std::string config_hash_;
    std::string prices_hash_;
    std::vector<std::pair<std::string, double>> phases_;
    std::vector<double> stage_ms_;
    std::vector<std::string> outputs_;
};

struct Valued {
    Forecast forecast;
    ValuationResult result;
};

Valued value_forecast(Run& run, Forecast forecast) {
    auto start = Clock::now();
    ValuationResult result = backward_pass(forecast.horizon);
    run.phase("backward_pass", ms_since(start));
    run.stage_times(result.stage_time);
    return {std::move(forecast), std::move(result)};
}

Valued build_and_value(Run& run, std::ostream& log) {
    auto start = Clock::now();
    Forecast f = build_forecast(run.records(), run.config());
    run.phase("build_forecast", ms_since(start));
    for (const auto& w : f.warnings) log << "warning: " << w << '\n';
    return value_forecast(run, std::move(f));
}

void write_surface(std::ostream& out, const ValuationResult& result) {
    out << "stage,soc_mwh,value_per_mwh\n";
    for (std::size_t t = 0; t < result.curves.size(); ++t) {
        const auto& c = result.curves[t];
        for (std::size_t j = 0; j < c.size(); ++j) out << t << ',' << fmt(c.soc(j)) << ',' << fmt(c[j]) << '\n';
    }
}

std::string sigma_label(double sigma) {
    std::ostringstream os;
    os << sigma;
    return os.str();
}

std::vector<double> realized_prices(const Forecast& f) {
    std::vector<double> prices;
    for (std::size_t t = 0; t < f.realized.size(); ++t) {
        if (!f.realized[t]) {
            throw DataError("no realized price for stage " + std::to_string(t + 1) + " (" + f.labels[t] + ")");
        }
        prices.push_back(*f.realized[t]);
    }
    return prices;
}

// Deterministic synthetic day-ahead shape for benchmarking.
std::vector<PriceDistribution> bench_stages(std::size_t T) {
    std::vector<PriceDistribution> stages;
    for (std::size_t t = 0; t < T; ++t) {
        const double hour = static_cast<double>(t % 24);
        const double da = 40.0 + 15.0 * std::sin(2.0 * M_PI * (hour - 9.0) / 24.0);
        stages.push_back(PriceDistribution::normal(da, 20.0));
    }
    return stages;
}

struct Timing {
    double median_ms = 0.0;
    double min_ms = 0.0;
};

Timing time_pass(const ValuationHorizon& h, std::size_t reps) {
    std::vector<double> ms;
    for (std::size_t r = 0; r < reps; ++r) {
        const auto start = Clock::now();
        const ValueCurve v0 = backward_sweep(h);
        ms.push_back(ms_since(start));
        if (v0.size() == 0) throw std::logic_error("empty curve");
    }
    std::sort(ms.begin(), ms.end());
    const std::size_t m = ms.size();
    const double median = m % 2 == 1 ? ms[m / 2] : 0.5 * (ms[m / 2 - 1] + ms[m / 2]);
    return {median, ms.front()};
}

}  // namespace

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char b : bytes) {
        h ^= b;
        h *= 0x100000001b3ULL;
    }
    return h;
}

double local_slope(std::span<const double> v_t, std::span<const double> v_next, std::size_t j, double step,
                   const StorageSpec& spec) {
    const std::size_t n = v_t.size();
    const auto w = static_cast<std::size_t>(std::ceil(spec.power / (spec.efficiency * step))) + 2;
    const std::size_t lo = j > w ? j - w : 0;
    const std::size_t hi = std::min(n - 1, j + w);
    double slope = 0.0;
    for (std::size_t k = lo; k < hi; ++k) {
        slope = std::max(slope, std::abs(v_t[k + 1] - v_t[k]) / step);
        slope = std::max(slope, std::abs(v_next[k + 1] - v_next[k]) / step);
    }
    return slope;
}

StageDeviation compare_marginals(std::span<const double> v_t, std::span<const double> v_next,
                                 std::span<const double> oracle, double step, const StorageSpec& spec) {
    if (v_t.size() != oracle.size() || v_next.size() != oracle.size()) {
        throw std::invalid_argument("compare_marginals: size mismatch");
    }
    StageDeviation out;
    for (std::size_t j = 0; j < oracle.size(); ++j) {
        const double dev = std::abs(v_t[j] - oracle[j]);
        const double allowance = 2.0 * local_slope(v_t, v_next, j, step, spec) * step + 1e-9;
        out.max_abs = std::max(out.max_abs, dev);
        out.mean_abs += dev;
        out.max_ratio = std::max(out.max_ratio, dev / allowance);
    }
    out.mean_abs /= static_cast<double>(oracle.size());
    return out;
}

// ---------------------------------------------------------------------------

int cmd_value(const CommandOptions& opt, std::ostream& log) {
    Run run("value", opt);
    run.require_config();
    const auto& c = run.config();
    if (c.sigma_sweep.empty()) {
        const Valued v = build_and_value(run, log);
        const auto start = Clock::now();
        std::ofstream out(run.output("values.csv"));
        write_surface(out, v.result);
        run.phase("write", ms_since(start));
        log << "value: " << v.result.curves.size() << " curves x " << c.grid_points << " points\n";
    } else {
        std::ostringstream summary;
        summary << "sigma,stage,v_empty,v_full,range\n";
        for (double sigma : c.sigma_sweep) {
            auto start = Clock::now();
            Forecast f = build_forecast_with_sigma(run.records(), c, sigma);
            run.phase("build_forecast sigma=" + sigma_label(sigma), ms_since(start));
            const Valued v = value_forecast(run, std::move(f));
            std::ofstream out(run.output("values_sigma_" + sigma_label(sigma) + ".csv"));
            write_surface(out, v.result);
            for (std::size_t t = 0; t < v.result.curves.size(); ++t) {
                const auto& curve = v.result.curves[t];
                const double empty = curve[0];
                const double full = curve[curve.size() - 1];
                summary << fmt(sigma) << ',' << t << ',' << fmt(empty) << ',' << fmt(full) << ','
                        << fmt(empty - full) << '\n';
            }
        }
        std::ofstream out(run.output("sigma_sweep.csv"));
        out << summary.str();
        log << "value: " << c.sigma_sweep.size() << " surfaces\n";
    }
    run.write_manifest(kExitOk);
    return kExitOk;
}

int cmd_simulate(const CommandOptions& opt, std::ostream& log) {
    Run run("simulate", opt);
    run.require_config();
    const Valued v = build_and_value(run, log);
    const auto prices = realized_prices(v.forecast);
    const auto start = Clock::now();
    const double e0 = run.config().initial_soc();
    const PathTrace trace = simulate_path(e0, prices, v.result, v.forecast.horizon.spec);
    run.phase("simulate", ms_since(start));

    std::ofstream out(run.output("trace.csv"));
    out << "stage,price,p_charge,p_discharge,soc,period_profit,cumulative_profit\n";
    out << "0,,0,0," << fmt(e0) << ",0,0\n";
    double cumulative = 0.0;
    for (std::size_t t = 0; t < trace.steps.size(); ++t) {
        const auto& s = trace.steps[t];
        cumulative += s.period_profit;
        out << t + 1 << ',' << fmt(prices[t]) << ',' << fmt(s.p_charge) << ',' << fmt(s.p_discharge) << ','
            << fmt(s.e_end) << ',' << fmt(s.period_profit) << ',' << fmt(cumulative) << '\n';
    }
    log << "simulate: profit " << fmt(trace.profit) << ", final SoC " << fmt(trace.final_soc) << " MWh\n";
    run.write_manifest(kExitOk);
    return kExitOk;
}

int cmd_mc(const CommandOptions& opt, std::ostream& log) {
    Run run("mc", opt);
    run.require_config();
    const auto& c = run.config();
    const std::size_t n = opt.n.value_or(c.mc_paths);
    if (n == 0) throw ConfigError("--n must be at least 1");
    const Valued v = build_and_value(run, log);
    const auto& h = v.forecast.horizon;
    const double e0 = c.initial_soc();

    auto start = Clock::now();
    const MonteCarloSummary s = monte_carlo(e0, h, v.result, n, c.seed);
    run.phase("monte_carlo", ms_since(start));

    // Finite-difference marginal at e0 with common random numbers.
    start = Clock::now();
    const double cap = h.spec.capacity;
    const double delta = 2.0 * c.grid_step();
    const double lo = std::max(0.0, e0 - delta);
    const double hi = std::min(cap, e0 + delta);
    std::vector<double> diff(n);
    for (std::size_t i = 0; i < n; ++i) {
        Rng rng = path_rng(c.seed, i);
        const auto prices = sample_path(h.stages, rng);
        const double up = simulate_path(hi, prices, v.result, h.spec).total();
        const double down = simulate_path(lo, prices, v.result, h.spec).total();
        diff[i] = (up - down) / (hi - lo);
    }
    const MeanStderr fd = mean_stderr(diff);
    const auto& v0 = v.result.curves.front();
    const double curve_avg = (v0.integral_to(hi) - v0.integral_to(lo)) / (hi - lo);
    const double curve_at = v0.eval(e0);
    const double gap = std::abs(fd.mean - curve_at);
    run.phase("marginal_check", ms_since(start));

    json j{{"n", s.n},
           {"seed", s.seed},
           {"initial_soc_mwh", e0},
           {"mean_profit", s.mean_profit},
           {"stderr_profit", s.stderr_profit},
           {"mean_total", s.mean_total},
           {"stderr_total", s.stderr_total},
           {"marginal_check",
            {{"soc_low_mwh", lo},
             {"soc_high_mwh", hi},
             {"finite_difference", fd.mean},
             {"finite_difference_stderr", fd.standard_error},
             {"curve_value", curve_at},
             {"curve_average", curve_avg},
             {"abs_gap", gap},
             {"within_3se", gap <= 3.0 * fd.standard_error + 1e-9}}}};
    run.write_json("mc_summary.json", j);
    log << "mc: mean profit " << fmt(s.mean_profit) << " +/- " << fmt(s.stderr_profit) << " over " << n
        << " paths\n";
    run.write_manifest(kExitOk);
    return kExitOk;
}

int cmd_oracle(const CommandOptions& opt, std::ostream& log) {
    Run run("oracle", opt);
    run.require_config();
    const auto& c = run.config();
    auto start = Clock::now();
    Forecast f = build_forecast(run.records(), c);
    run.phase("build_forecast", ms_since(start));
    const auto& h = f.horizon;

    oracle::DiscreteInstance inst{h.spec, c.grid_points, h.stages,
                                  oracle::levels_from_marginals(h.terminal.values(), h.spec.capacity)};
    oracle::check_guard(inst);

    const Valued v = value_forecast(run, std::move(f));
    start = Clock::now();
    const oracle::SdpSolution sol = oracle::sdp_solve(inst);
    run.phase("sdp_solve", ms_since(start));

    const double step = inst.step();
    const StorageSpec& spec = inst.spec;
    bool pass = true;
    json stages = json::array();
    for (std::size_t t = 0; t + 1 < v.result.curves.size(); ++t) {
        const auto dev = compare_marginals(v.result.curves[t].values(), v.result.curves[t + 1].values(),
                                           sol.marginals[t], step, spec);
        pass = pass && dev.max_ratio <= 1.0;
        stages.push_back({{"stage", t},
                          {"max_abs", dev.max_abs},
                          {"mean_abs", dev.mean_abs},
                          {"max_ratio_to_allowance", dev.max_ratio},
                          {"pass", dev.max_ratio <= 1.0}});
    }

    // Law of the SoC price in the first period.
    start = Clock::now();
    const std::size_t n_ks = 100000;
    const double cap = spec.capacity;
    const double e_ks = std::min(cap, 0.5 * cap + 0.37 * step);
    const double delta = 1e-6 * cap;
    const auto& v1 = v.result.curves[1];
    const auto& d1 = v.forecast.horizon.stages[0];
    const auto emp =
        oracle::empirical_q_cdf(e_ks, delta, d1, oracle::step_integral(v1.values(), cap), spec, n_ks, c.seed);
    const double ks = oracle::ks_distance(
        emp, [&](double x) { return soc_price_cdf(x, e_ks, v1, d1, spec); }, 1e-7);
    const double ks_tol = 0.01;
    pass = pass && ks < ks_tol;
    run.phase("law_check", ms_since(start));

    // Policy Monte Carlo against the oracle expectation from the nearest grid SoC.
    start = Clock::now();
    const std::size_t n_mc = opt.n.value_or(c.mc_paths);
    const double e0 = step * std::round(c.initial_soc() / step);
    const MonteCarloSummary mc = monte_carlo(e0, v.forecast.horizon, v.result, n_mc, c.seed);
    const double oracle_value = oracle::continuous_value(inst, v.forecast.horizon.terminal.values(), e0);
    const double z = mc.stderr_total > 0.0 ? std::abs(mc.mean_total - oracle_value) / mc.stderr_total
                                           : (std::abs(mc.mean_total - oracle_value) <= 1e-6 ? 0.0 : kInf);
    pass = pass && z <= 3.0;
    run.phase("monte_carlo", ms_since(start));

    json report{{"grid_points", c.grid_points},
                {"stages", stages},
                {"marginal_tolerance", "2 * local slope * grid step per point"},
                {"law_check",
                 {{"stage", 1},
                  {"soc_mwh", e_ks},
                  {"n", n_ks},
                  {"ks_distance", ks},
                  {"tolerance", ks_tol},
                  {"pass", ks < ks_tol}}},
                {"monte_carlo",
                 {{"initial_soc_mwh", e0},
                  {"n", n_mc},
                  {"mean_total", mc.mean_total},
                  {"stderr_total", mc.stderr_total},
                  {"oracle_value", oracle_value},
                  {"z", std::isfinite(z) ? json(z) : json(nullptr)},
                  {"pass", z <= 3.0}}},
                {"pass", pass}};
    run.write_json("oracle_report.json", report);
    log << "oracle: " << (pass ? "PASS" : "FAIL") << '\n';
    const int code = pass ? kExitOk : kExitTolerance;
    run.write_manifest(code);
    return code;
}

int cmd_bench(const CommandOptions& opt, std::ostream& log) {
    Run run("bench", opt);
    const auto& c = run.config();
    const StorageSpec spec = c.spec;
    const std::size_t J = c.grid_points;
    const std::size_t T = opt.config && c.horizon > 0 ? c.horizon : 24;
    const std::size_t reps = opt.n.value_or(11);
    if (reps == 0) throw ConfigError("--n must be at least 1");

    const double step = spec.capacity / static_cast<double>(J - 1);
    const ValueCurve terminal = ValueCurve::constant(0.0, spec.capacity, step);
    std::map<std::size_t, Timing> timings;
    for (std::size_t len : {std::size_t{1}, T, 2 * T, std::size_t{288}}) {
        if (timings.count(len)) continue;
        const auto start = Clock::now();
        timings[len] = time_pass(ValuationHorizon{spec, bench_stages(len), terminal}, reps);
        run.phase("T=" + std::to_string(len), ms_since(start));
    }
    const double scaling = timings[2 * T].median_ms / timings[T].median_ms;
    const bool scaling_ok = scaling >= 1.5 && scaling <= 3.0;

    json runs = json::array();
    for (const auto& [len, tm] : timings) {
        runs.push_back({{"stages", len}, {"median_ms", tm.median_ms}, {"min_ms", tm.min_ms}});
    }
    json report{{"grid_points", J},
                {"reps", reps},
                {"runs", runs},
                {"doubling", {{"from", T}, {"to", 2 * T}, {"factor", scaling}, {"pass", scaling_ok}}}};
    bool pass = scaling_ok;
    if (J == 1001) {
        const bool day_ok = timings[24].median_ms < 100.0;
        const bool five_min_ok = timings[288].median_ms < 1200.0;
        report["limits"] = {{"T24_median_below_100ms", day_ok}, {"T288_median_below_1200ms", five_min_ok}};
        if (timings.count(24)) pass = pass && day_ok;
        pass = pass && five_min_ok;
    }
    report["pass"] = pass;
    run.write_json("bench.json", report);
    log << "bench: T=" << T << " median " << fmt(timings[T].median_ms) << " ms, doubling factor " << fmt(scaling)
        << '\n';
    const int code = pass ? kExitOk : kExitTolerance;
    run.write_manifest(code);
    return code;
}

namespace {

// A run that fails before finishing still leaves a manifest behind.
int fail(const std::string& name, const CommandOptions& opt, std::ostream& log, const std::string& kind,
         const std::exception& ex, int code) {
    log << kind << ": " << ex.what() << '\n';
    try {
        std::filesystem::create_directories(opt.out);
        json m{{"command", name}, {"exit_code", code}, {"error", std::string(ex.what())}, {"outputs", json::array()}};
        std::ofstream out(opt.out / "manifest.json");
        out << m.dump(2) << '\n';
    } catch (const std::exception&) {
    }
    return code;
}

}  // namespace

int run_command(const std::string& name, const CommandOptions& opt, std::ostream& log) {
    try {
        if (name == "value") return cmd_value(opt, log);
        if (name == "simulate") return cmd_simulate(opt, log);
        if (name == "mc") return cmd_mc(opt, log);
        if (name == "oracle") return cmd_oracle(opt, log);
        if (name == "bench") return cmd_bench(opt, log);
        log << "error: unknown command '" << name << "'\n";
        return kExitConfig;
    } catch (const ConfigError& ex) {
        return fail(name, opt, log, "config error", ex, kExitConfig);
    } catch (const DataError& ex) {
        return fail(name, opt, log, "data error", ex, kExitData);
    } catch (const oracle::GuardError& ex) {
        return fail(name, opt, log, "refused", ex, kExitGuard);
    } catch (const std::exception& ex) {
        return fail(name, opt, log, "error", ex, kExitOther);
    }
}

}  // namespace storval
