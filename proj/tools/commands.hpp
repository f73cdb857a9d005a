#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>

#include "config.hpp"

namespace ktb::cli {

struct RunOptions {
  /// Overrides the config seed.
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
  std::optional<double> tol;
};

/// Each command writes its artifacts into out_dir and a short summary to `log`.
void cmd_reflect(const ExperimentConfig& cfg, const RunOptions& opts, std::ostream& log);
void cmd_trace(const ExperimentConfig& cfg, const RunOptions& opts, std::ostream& log);
void cmd_projtest(const ExperimentConfig& cfg, const RunOptions& opts, std::ostream& log);
void cmd_osculate(const ExperimentConfig& cfg, const RunOptions& opts, std::ostream& log);
void cmd_capacity(const ExperimentConfig& cfg, const RunOptions& opts, std::ostream& log);
void cmd_sweep(const ExperimentConfig& cfg, const RunOptions& opts, std::ostream& log);

/// %.15g, with nan and inf spelled out.
std::string format_number(double x);

}  // namespace ktb::cli
