#pragma once

#include <filesystem>
#include <ostream>
#include <string>

#include "config.hpp"

namespace excurse::cli {

enum ExitCode { kOk = 0, kConfigError = 2, kNumericFailure = 3, kIoFailure = 4 };

/// Shared state of one command invocation.
struct Context {
    ExperimentConfig config;
    std::filesystem::path out;
    std::string command;
    int threads = 0;
    std::ostream* report = nullptr;
};

/// Checks everything that can be checked without computing; creates the
/// output directory and makes sure it is writable.
void validate_for(const Context& ctx);

void cmd_simulate(const Context& ctx);
void cmd_table(const Context& ctx);
void cmd_identify(const Context& ctx);
void cmd_estimate_spiral(const Context& ctx);
void cmd_verify_isotropy(const Context& ctx);

/// Full command line: parsing, dispatch and error to exit-code mapping.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace excurse::cli
