#ifndef CRITMIX_CLI_HPP
#define CRITMIX_CLI_HPP

#include "critmix/config.hpp"

#include <json.hpp>

#include <ostream>
#include <string>
#include <vector>

namespace critmix {

const std::vector<std::string>& cli_commands();

/// Runs one command, writing CSV (or JSON for `family`) to `data` and the
/// JSON summary to `summary`. Throws Error on failure.
void run_command(const std::string& command, const ExperimentConfig& config, unsigned workers,
                 std::ostream& data, std::ostream& summary);

/// Full command-line entry point; returns the process exit status.
int cli_main(int argc, char** argv);

} // namespace critmix

#endif
