#pragma once

// Parameter blocks of each experiment kind, parsed from the config params.

#include "fbdrift/drift/drift_spec.hpp"
#include "fbdrift/drift/scalar_field.hpp"
#include "fbdrift/drift/test_functions.hpp"
#include "fbdrift/lab/config.hpp"
#include "fbdrift/mollifier/mollifier.hpp"
#include "fbdrift/pde/cascade.hpp"
#include "fbdrift/sde/convergence.hpp"
#include "fbdrift/sde/criticality.hpp"
#include "fbdrift/sde/ensemble.hpp"
#include "fbdrift/sde/flow.hpp"
#include "fbdrift/sde/regularity.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace fbd::lab::detail {

struct FormboundParams {
    drift::DriftSpec drift;
    drift::TestFunctionFamily family;
    std::vector<double> times{0.0};
    bool norms = false;
};

struct MollifyParams {
    drift::DriftSpec drift;
    mollifier::MollifySchedule schedule;
    double box_half_width = 1.0;
    double T = 1.0;
    drift::TestFunctionFamily family;
};

struct CascadeParams {
    pde::CascadeConfig cascade;
    std::vector<double> lengths;
    std::vector<std::size_t> ns;
};

struct SimulateParams {
    drift::DriftSpec drift;
    sde::StartSpec starts;
    sde::SimulationSettings sim;
    bool write = false;
};

struct KrylovParams {
    drift::DriftSpec drift;
    sde::StartSpec starts;
    sde::SimulationSettings sim;
    drift::ScalarField h;
    double mu = 3.0;
    std::optional<drift::DriftSpec> g;
    double q = 0.0;
    double delta_hat = 0.0;
};

/// Allowed and required keys of a kind's params block.
struct Schema {
    std::vector<std::string> required;
    std::vector<std::string> optional;
};
const Schema& schema(const std::string& kind);

/// params with the run's seed and worker count folded into the nested
/// blocks that consume them.
nlohmann::json effective_params(const ExperimentConfig& cfg);

FormboundParams formbound_params(const nlohmann::json& p);
MollifyParams mollify_params(const nlohmann::json& p);
CascadeParams cascade_params(const nlohmann::json& p);
SimulateParams simulate_params(const nlohmann::json& p);
KrylovParams krylov_params(const nlohmann::json& p);
sde::FlowStudyConfig flow_params(const nlohmann::json& p);
sde::RegularityConfig regularity_params(const nlohmann::json& p);
sde::ConvergenceConfig converge_params(const nlohmann::json& p);
sde::CriticalityConfig criticality_params(const nlohmann::json& p);

/// Parses the params of cfg's kind; throws on the first error.
void parse_all(const ExperimentConfig& cfg);

drift::TestFunctionFamily family_from_json(const nlohmann::json& j, const drift::DriftSpec& b);

}  // namespace fbd::lab::detail
