#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "storval/commands.hpp"

using namespace storval;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "storval_commands_test" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

fs::path write(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    out << text;
    return path;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> lines(const fs::path& path) {
    std::ifstream in(path);
    std::vector<std::string> out;
    for (std::string line; std::getline(in, line);) out.push_back(line);
    return out;
}

nlohmann::json read_json(const fs::path& path) { return nlohmann::json::parse(slurp(path)); }

int run(const std::string& cmd, const fs::path& dir, const std::string& config, const std::string& prices = "",
        std::optional<std::size_t> n = std::nullopt) {
    CommandOptions opt;
    opt.config = write(dir / "run.cfg", config);
    if (!prices.empty()) opt.prices = write(dir / "prices.csv", prices);
    opt.out = dir / "out";
    opt.n = n;
    std::ostringstream log;
    const int code = run_command(cmd, opt, log);
    CHECK(fs::exists(opt.out / "manifest.json"));
    return code;
}

const std::string kBase =
    "power_mwh = 0.5\ncapacity_mwh = 2\nefficiency = 0.9\ndischarge_cost = 10\ngrid_step_mwh = 0.1\n";

const std::string kHourPrices =
    "timestamp,da,rt\n"
    "2018-01-01T00:00:00Z,30,30\n"
    "2018-01-01T01:00:00Z,31,29\n"
    "2018-01-01T02:00:00Z,30,31\n";

}  // namespace

TEST_CASE("value: one point-mass stage") {
    const auto dir = scratch("value_one");
    REQUIRE(run("value", dir, kBase + "da_profile = 40\nterminal_value = 30\n") == kExitOk);
    const auto rows = lines(dir / "out/values.csv");
    CHECK(rows.front() == "stage,soc_mwh,value_per_mwh");
    CHECK(rows.size() == 1 + 2 * 21);
    const auto m = read_json(dir / "out/manifest.json");
    CHECK(m["command"] == "value");
    CHECK(m["outputs"][0] == "values.csv");
    CHECK(m["config_hash"].get<std::string>().rfind("fnv1a64:", 0) == 0);
}

TEST_CASE("value: zero power repeats the terminal surface") {
    const auto dir = scratch("value_zero");
    const std::string cfg =
        "power_mwh = 0\ncapacity_mwh = 2\ngrid_step_mwh = 0.1\nforecast_mode = normal-residual\n"
        "sigma_override = 20\nda_profile = 40, 50, 60\nterminal_kind = step\nterminal_value = 80\n";
    REQUIRE(run("value", dir, cfg) == kExitOk);
    const auto rows = lines(dir / "out/values.csv");
    REQUIRE(rows.size() == 1 + 4 * 21);
    for (std::size_t t = 0; t < 3; ++t) {
        for (std::size_t j = 0; j < 21; ++j) {
            const auto a = rows[1 + t * 21 + j];
            const auto b = rows[1 + 3 * 21 + j];
            CHECK(a.substr(a.find(',')) == b.substr(b.find(',')));
        }
    }
}

TEST_CASE("value: sigma sweep widens the mid-horizon range") {
    const auto dir = scratch("value_sweep");
    std::string cfg = "power_mwh = 1\ncapacity_mwh = 4\nefficiency = 0.9\ngrid_points = 401\n"
                      "forecast_mode = normal-residual\nsigma_sweep = 10, 30, 50\nda_profile = ";
    for (int h = 0; h < 24; ++h) cfg += (h ? ", " : "") + std::to_string(30 + (h % 12) * 2);
    cfg += "\n";
    REQUIRE(run("value", dir, cfg) == kExitOk);
    for (const char* f : {"values_sigma_10.csv", "values_sigma_30.csv", "values_sigma_50.csv", "sigma_sweep.csv"}) {
        CHECK(fs::exists(dir / "out" / f));
    }
    std::vector<double> ranges;
    for (const auto& row : lines(dir / "out/sigma_sweep.csv")) {
        if (row.rfind("sigma", 0) == 0) continue;
        std::stringstream ss(row);
        std::string sigma, stage, a, b, range;
        std::getline(ss, sigma, ',');
        std::getline(ss, stage, ',');
        std::getline(ss, a, ',');
        std::getline(ss, b, ',');
        std::getline(ss, range, ',');
        if (stage == "12") ranges.push_back(std::stod(range));
    }
    REQUIRE(ranges.size() == 3);
    CHECK(ranges[0] < ranges[1]);
    CHECK(ranges[1] < ranges[2]);
}

TEST_CASE("simulate") {
    SUBCASE("hold-band prices give an all-zero dispatch, and reruns are identical") {
        const std::string cfg = kBase + "horizon = 3\nterminal_value = 30\ndischarge_cost = 0\n";
        const auto cfg_fixed = std::string(cfg).replace(cfg.find("discharge_cost = 10\n"), 20, "");
        const auto a = scratch("sim_a");
        const auto b = scratch("sim_b");
        REQUIRE(run("simulate", a, cfg_fixed, kHourPrices) == kExitOk);
        REQUIRE(run("simulate", b, cfg_fixed, kHourPrices) == kExitOk);
        CHECK(slurp(a / "out/trace.csv") == slurp(b / "out/trace.csv"));
        const auto rows = lines(a / "out/trace.csv");
        CHECK(rows.front() == "stage,price,p_charge,p_discharge,soc,period_profit,cumulative_profit");
        REQUIRE(rows.size() == 5);
        for (std::size_t i = 2; i < rows.size(); ++i) CHECK(rows[i].find(",0,0,1,0,0") != std::string::npos);
    }

    SUBCASE("missing realized prices") {
        const auto dir = scratch("sim_missing");
        const std::string prices = "timestamp,da,rt\n2018-01-01T00:00:00Z,30,\n";
        CHECK(run("simulate", dir, kBase + "horizon = 1\n", prices) == kExitData);
    }
}

TEST_CASE("mc") {
    SUBCASE("point-mass stages") {
        const auto dir = scratch("mc_point");
        REQUIRE(run("mc", dir, kBase + "da_profile = 20, 90\nterminal_value = 50\n", "", 100) == kExitOk);
        const auto s = read_json(dir / "out/mc_summary.json");
        CHECK(s["stderr_profit"] == 0.0);
        CHECK(s["n"] == 100);
    }
    SUBCASE("fixed seed gives identical summaries") {
        const std::string cfg = kBase + "forecast_mode = normal-residual\nsigma_override = 25\nda_profile = 40, 60\n"
                                        "terminal_value = 50\nseed = 5\n";
        const auto a = scratch("mc_a");
        const auto b = scratch("mc_b");
        REQUIRE(run("mc", a, cfg, "", 300) == kExitOk);
        REQUIRE(run("mc", b, cfg, "", 300) == kExitOk);
        CHECK(slurp(a / "out/mc_summary.json") == slurp(b / "out/mc_summary.json"));
        CHECK(read_json(a / "out/mc_summary.json")["stderr_profit"].get<double>() > 0.0);
    }
}

TEST_CASE("oracle") {
    SUBCASE("zero power shows no deviation") {
        const auto dir = scratch("oracle_zero");
        write(dir / "terminal.csv", "soc_mwh,value_per_mwh\n0,100\n2,20\n");
        const std::string cfg = "power_mwh = 0\ncapacity_mwh = 2\ngrid_step_mwh = 0.1\n"
                                "forecast_mode = empirical-residual\nda_profile = 50, 50\n"
                                "residual_support = -30:0.5, 30:0.5\nterminal_kind = table\n"
                                "terminal_table = terminal.csv\n";
        REQUIRE(run("oracle", dir, cfg) == kExitOk);
        const auto r = read_json(dir / "out/oracle_report.json");
        for (const auto& s : r["stages"]) CHECK(s["max_abs"].get<double>() < 1e-9);
    }
    SUBCASE("two-point prices") {
        const auto dir = scratch("oracle_two");
        const auto table = write(dir / "terminal.csv", "soc_mwh,value_per_mwh\n0,100\n2,0\n");
        const std::string cfg = kBase + "forecast_mode = empirical-residual\nda_profile = 50\n"
                                        "residual_support = -30:0.5, 30:0.5\nterminal_kind = table\n"
                                        "terminal_table = terminal.csv\n";
        REQUIRE(run("oracle", dir, cfg) == kExitOk);
        const auto r = read_json(dir / "out/oracle_report.json");
        CHECK(r["stages"][0]["max_abs"].get<double>() <= 1.0);
        CHECK(r["pass"] == true);
    }
    SUBCASE("continuous prices are refused") {
        const auto dir = scratch("oracle_refused");
        const std::string cfg = kBase + "forecast_mode = normal-residual\nsigma_override = 10\nda_profile = 50\n";
        CHECK(run("oracle", dir, cfg) == kExitGuard);
        CHECK(read_json(dir / "out/manifest.json")["exit_code"] == kExitGuard);
    }
}

TEST_CASE("bench writes a timing report") {
    const auto dir = scratch("bench");
    CommandOptions opt;
    opt.out = dir;
    opt.grid_points = 101;
    opt.n = 3;
    std::ostringstream log;
    const int code = run_command("bench", opt, log);
    CHECK((code == kExitOk || code == kExitTolerance));
    const auto r = read_json(dir / "bench.json");
    CHECK(r["runs"].size() == 4);
    CHECK(fs::exists(dir / "manifest.json"));
}

TEST_CASE("exit codes") {
    const auto dir = scratch("codes");
    std::ostringstream log;
    CommandOptions none;
    none.out = dir / "none";
    CHECK(run_command("value", none, log) == kExitConfig);
    CHECK(run_command("launch", none, log) == kExitConfig);
    CHECK(run("value", dir, "power_mwh = -1\n") == kExitConfig);
    CHECK(run("value", dir, kBase + "forecast_mode = normal-residual\n") == kExitConfig);
    CHECK(run("value", dir, kBase, "timestamp,da,rt\n2018-01-01T00:00:00Z,x,1\n") == kExitData);
}

TEST_CASE("local slope and marginal comparison") {
    const StorageSpec s{0.1, 1.0, 1.0, 0.0};
    const std::vector<double> v{10.0, 9.0, 7.0, 4.0, 0.0, -5.0};
    CHECK(local_slope(v, v, 0, 0.2, s) == doctest::Approx(15.0));
    CHECK(local_slope(v, v, 5, 0.2, s) == doctest::Approx(25.0));
    const auto dev = compare_marginals(v, v, v, 0.2, s);
    CHECK(dev.max_abs == 0.0);
    CHECK(dev.max_ratio == 0.0);
    CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
}
