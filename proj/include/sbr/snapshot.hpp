#pragma once

#include <string>

#include <json.hpp>

#include "sbr/geometric.hpp"
#include "sbr/learner.hpp"
#include "sbr/ot_repair.hpp"

namespace sbr {

using json = nlohmann::json;

inline constexpr int kSnapshotVersion = 1;

json prior_to_json(const PriorSpec& p);
PriorSpec prior_from_json(const json& j);

json learner_to_json(const SubgroupLearner& l);
SubgroupLearner learner_from_json(const json& j);

json conditional_to_json(const QuantizedConditional& q);
QuantizedConditional conditional_from_json(const json& j);

// The plan is stored dense, row-major.
json model_to_json(const RepairModel& m);
RepairModel model_from_json(const json& j);

json geometric_to_json(const QuantileRepairModel& m);
QuantileRepairModel geometric_from_json(const json& j);

// Throws ConfigError when `j` is not a snapshot of `format` at a version
// this build reads.
void check_format(const json& j, const std::string& format);

}  // namespace sbr
