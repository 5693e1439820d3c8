#pragma once

#include <functional>
#include <string>
#include <vector>

#include "config.hpp"
#include "report.hpp"

namespace brownscene::harness {

/// Exit codes of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitCheckFailed = 1,
  kExitInvalidConfig = 2,
  kExitIoError = 3,
  kExitInternal = 4,
};

/// One named entry of the validation suite report.
struct CheckOutcome {
  std::string name;
  bool pass = false;
  json details;
  std::string error;  // set when the check threw instead of completing
};

/// Writes path_<r>.csv, local_time_<r>.csv and delta_<r>.csv per replica plus simulate.json.
int cmd_simulate(const ExperimentConfig& config);
/// persistence.csv + persistence.json; nonzero exit if the slope is missing or off band.
int cmd_persistence(const ExperimentConfig& config);
int cmd_molchan(const ExperimentConfig& config);
int cmd_tails(const ExperimentConfig& config);
/// validate.json; exit 0 iff every check passes.
int cmd_validate(const ExperimentConfig& config);

/// The checks cmd_validate runs, in report order. `log` receives one line per finished check.
std::vector<CheckOutcome> run_validation(const ExperimentConfig& config,
                                         const std::function<void(const CheckOutcome&)>& log = {});

/// JSON envelope shared by every summary file.
json summary_header(const std::string& command, const ExperimentConfig& config);

}  // namespace brownscene::harness
