#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "qw/qweight.hpp"

namespace qw::cli {

enum class Command { Check, Classify, Corner, Expectation, RankTheorem, FlowSim, Curves };

// Exit codes of run().
enum ExitCode : int { Positive = 0, Negative = 1, Undecided = 2, InputError = 3 };

struct RunConfig {
    Command command = Command::Check;
    std::filesystem::path input;
    std::filesystem::path out_dir = ".";
    TGrid grid;
    double tol = 1e-9;
    std::uint64_t seed = 0xC0FFEE;
    // flowsim only
    std::size_t cells = 2000;
    double horizon = 20.0;
    double x = 1.0;
};

Command parse_command(const std::string& name);
const char* command_name(Command c);

// Reads the input spec, runs the command and writes report.json (plus CSV curves) into out_dir.
// Input problems are reported on stderr with exit code 3 and no report.
int run(const RunConfig& config);

}  // namespace qw::cli
