#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "storval/commands.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Storage valuation under price uncertainty"};
    app.require_subcommand(1);

    storval::CommandOptions opt;
    std::string config;
    std::string prices;
    std::string out = ".";
    std::uint64_t seed = 0;
    std::uint32_t n = 0;
    std::uint32_t grid_points = 0;

    const std::pair<const char*, const char*> commands[] = {
        {"value", "Marginal value surfaces for every stage"},
        {"simulate", "Dispatch trace against the realized prices"},
        {"mc", "Monte Carlo evaluation of the dispatch policy"},
        {"oracle", "Cross-check against brute-force dynamic programming"},
        {"bench", "Timing of the backward pass"},
    };
    for (const auto& [name, help] : commands) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--config", config, "Config file (key = value)")->check(CLI::ExistingFile);
        sub->add_option("--prices", prices, "Price CSV with header timestamp,da,rt")->check(CLI::ExistingFile);
        sub->add_option("--out", out, "Output directory")->capture_default_str();
        sub->add_option("--seed", seed, "Random seed (overrides the config)");
        sub->add_option("--n", n, "Monte Carlo paths (mc, oracle) or timing repetitions (bench)");
        sub->add_option("--grid-points", grid_points, "SoC grid points (overrides the config)");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : storval::kExitConfig;
    }

    CLI::App* sub = app.get_subcommands().front();
    if (!config.empty()) opt.config = config;
    if (!prices.empty()) opt.prices = prices;
    opt.out = out;
    if (sub->count("--seed")) opt.seed = seed;
    if (sub->count("--n")) opt.n = n;
    if (sub->count("--grid-points")) opt.grid_points = grid_points;
    return storval::run_command(sub->get_name(), opt, std::cerr);
}
