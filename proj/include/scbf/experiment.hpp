#pragma once

// Command dispatch: turns a validated spec into metric records, and the exit-code contract
// (0 all verdicts pass, 2 a verdict failed, 3 guard abort, 4 configuration error).

#include <ostream>
#include <vector>

#include "scbf/config.hpp"
#include "scbf/records.hpp"

namespace scbf {

inline constexpr int kExitPass = 0;
inline constexpr int kExitVerdict = 2;
inline constexpr int kExitGuard = 3;
inline constexpr int kExitConfig = 4;

/// Runs the spec's command. Propagates GuardAbort and ConfigError.
std::vector<MetricsRecord> run_experiment(const ExperimentSpec& spec);

/// run_experiment + emit_records + exit code; diagnostics go to `log`.
int run_and_emit(const ExperimentSpec& spec, std::ostream& log);

}  // namespace scbf
