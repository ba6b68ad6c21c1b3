#pragma once

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace fbd::lab {

/// One experiment: a kind, its parameter block and the run settings.
///
/// Document layout (YAML or JSON):
///
///     kind: criticality
///     seed: 7
///     workers: 2
///     out: results
///     params: { ... }
struct ExperimentConfig {
    std::string kind;
    nlohmann::json params = nlohmann::json::object();
    std::optional<std::uint64_t> seed;
    std::string out_dir = "out";
    int workers = 1;

    static const std::vector<std::string>& kinds();
    static bool known_kind(const std::string& kind);
    static bool stochastic(const std::string& kind);

    static ExperimentConfig from_document(const nlohmann::json& doc);
    static ExperimentConfig load(const std::string& path);

    /// Every offending field, as "path: problem". Empty when valid.
    std::vector<std::string> problems() const;
    /// Throws ConfigError joining all problems.
    void validate() const;

    /// Kind, seed and params; out_dir and workers do not change results and
    /// are left out.
    nlohmann::json canonical() const;
    /// Sorted-key, whitespace-free serialization of canonical().
    std::string canonical_text() const;
    std::string digest() const;
    /// "<kind>-<first 12 hex digits of the digest>".
    std::string experiment_id() const;
};

}  // namespace fbd::lab
