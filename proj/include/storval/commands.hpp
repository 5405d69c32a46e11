#pragma once

// Subcommands behind the command-line front-end. Each writes its result
// files plus manifest.json into the output directory and returns an exit code.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>

#include "storval/value_curve.hpp"

namespace storval {

enum ExitCode : int {
    kExitOk = 0,
    kExitOther = 1,
    kExitConfig = 2,
    kExitData = 3,
    kExitGuard = 4,
    kExitTolerance = 5,
};

struct CommandOptions {
    std::optional<std::filesystem::path> config;
    std::optional<std::filesystem::path> prices;
    std::filesystem::path out = ".";
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> n;
    std::optional<std::size_t> grid_points;
};

int cmd_value(const CommandOptions& opt, std::ostream& log);
int cmd_simulate(const CommandOptions& opt, std::ostream& log);
int cmd_mc(const CommandOptions& opt, std::ostream& log);
int cmd_oracle(const CommandOptions& opt, std::ostream& log);
int cmd_bench(const CommandOptions& opt, std::ostream& log);

/// Dispatches by subcommand name and maps exceptions to exit codes.
int run_command(const std::string& name, const CommandOptions& opt, std::ostream& log);

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes);

/// Steepest marginal-value slope ($/MWh per MWh) near grid point j, taken
/// over a window one full power move wide on both curves.
double local_slope(std::span<const double> v_t, std::span<const double> v_next, std::size_t j, double step,
                   const StorageSpec& spec);

/// Deviation of oracle marginals from the recursion at one stage. Each grid
/// point is allowed 2 * local_slope * step (plus 1e-9 absolute slack).
struct StageDeviation {
    double max_abs = 0.0;
    double mean_abs = 0.0;
    double max_ratio = 0.0;  // largest deviation / allowance
};
StageDeviation compare_marginals(std::span<const double> v_t, std::span<const double> v_next,
                                 std::span<const double> oracle, double step, const StorageSpec& spec);

}  // namespace storval
