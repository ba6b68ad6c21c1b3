#pragma once

#include "fbdrift/lab/records.hpp"

#include <json.hpp>

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace fbd::lab {

struct CriterionResult {
    int id = 0;
    std::string name;
    bool pass = false;
    double runtime = 0.0;
    double budget = 0.0;  ///< seconds
    nlohmann::json measured = nlohmann::json::object();
    std::string detail;

    std::string line() const;  ///< "[PASS] 3 mollifier ... (12.1 s / 120 s)"
};

struct VerifyReport {
    std::string suite;
    std::uint64_t seed = 1;
    int workers = 1;
    std::vector<CriterionResult> criteria;
    RecordSet records;

    bool all_pass() const;
    nlohmann::json to_json() const;
};

bool known_suite(const std::string& suite);
/// The document a verify run's records are keyed to.
nlohmann::json verify_config(const std::string& suite, std::uint64_t seed);

/// Runs the acceptance battery. "fast" runs criteria 1-10 at reduced scale;
/// "full" runs 1-10 at acceptance scale and 11, which repeats the fast
/// suite with one and two workers and compares the records. `only` selects
/// criteria by id. Throws InvalidArgument for an unknown suite.
VerifyReport run_verify(const std::string& suite, std::uint64_t seed = 1, int workers = 1,
                        const std::vector<int>& only = {}, std::ostream* progress = nullptr);

}  // namespace fbd::lab
