#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "json.hpp"

namespace critheat {

/// One invocation of the command-line driver.
struct RunConfig {
    std::string command;  // constants, gmatrix, bsolve, spectrum, residual, dynamics, simulate
    int n = 5;
    std::string input;    // JSON input file ("" where the command has defaults)
    std::string output;   // primary output file ("" for stdout)
    std::string summary;  // JSON report of the series commands ("" for stdout when output is a file)
    std::string format;   // json or csv; "" picks the command's natural format
    std::uint64_t seed = 1;
    int k = 2;            // points drawn by gmatrix when no input is given
    bool check = false;   // run the command's invariant suite instead
};

/// Exit statuses of the driver.
enum ExitCode : int {
    exit_ok = 0,
    exit_check_failed = 1,
    exit_unknown_command = 2,
    exit_invalid_config = 3,
    exit_numerical = 4,
};

bool is_known_command(const std::string& command);

/// Dispatches to the named module. Errors are written to `err` as one JSON
/// record {"error": kind, "message": ...} and mapped to the exit codes above.
int run(const RunConfig& config, std::ostream& out, std::ostream& err);

/// Parses argv (command first, then flags) and calls run().
int main_entry(int argc, char** argv);

// Serialization shared by the subcommands and their tests.
nlohmann::json constants_json(int n);
nlohmann::json gmatrix_json(const nlohmann::json& points_input);
nlohmann::json bsolve_json(const nlohmann::json& gmatrix_output);

}  // namespace critheat
