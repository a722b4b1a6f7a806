#pragma once

#include <string>

#include "cltlab/config.hpp"
#include "cltlab/report.hpp"

namespace cltlab::cli {

enum class Command {
  simulate,
  correlations,
  clt,
  bernstein,
  transfer_cmd,
  billiard_check,
  regularity_cmd,
};

Command parse_command(const std::string& name);

// Dispatches a command; writes all outputs plus manifest.json under
// cfg.output_dir. Throws cltlab::Error on failure.
void run(Command cmd, const ExperimentConfig& cfg);

// Exception boundary: maps error kinds to exit codes (config 2, numeric 3,
// degenerate observable 4) and leaves a machine-readable error.json behind.
int run_guarded(Command cmd, const ExperimentConfig& cfg) noexcept;

} // namespace cltlab::cli
