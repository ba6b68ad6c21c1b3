#pragma once

#include "fbdrift/lab/config.hpp"
#include "fbdrift/lab/records.hpp"

#include <ostream>
#include <string>

namespace fbd::lab {

/// Runs the experiment in memory. Module errors propagate unchanged.
RecordSet run_experiment(const ExperimentConfig& cfg);

/// Validates, runs and persists into <out_dir>/<experiment id>/. Returns 0
/// on success; on failure writes a JSON error report to `err` and returns
/// 2 for configuration errors and 1 otherwise.
int run(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err);

/// JSON error report {status, code, message[, errors]}.
nlohmann::json error_report(const std::string& code, const std::string& message,
                            const std::vector<std::string>& errors = {});

}  // namespace fbd::lab
