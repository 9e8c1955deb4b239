#pragma once

#include <json.hpp>

#include "betarce/cfe.hpp"
#include "betarce/models.hpp"
#include "betarce/stats.hpp"

namespace betarce {

using Json = nlohmann::json;

Json to_json(const Vector& v);
Vector vector_from_json(const Json& j);

Json to_json(const ArchConfig& c);
ArchConfig arch_config_from_json(const Json& j, ArchConfig defaults = {});

Json to_json(const ModelSpaceSpec& s);
ModelSpaceSpec model_space_from_json(const Json& j, ModelSpaceSpec defaults = {});

Json to_json(const TrainingSetting& s);
TrainingSetting training_setting_from_json(const Json& j);

Json to_json(const BetaPosterior& p);
Json to_json(const VerificationOutcome& o);
VerificationOutcome verification_outcome_from_json(const Json& j);

Json to_json(const CfeRecord& r);
CfeRecord cfe_record_from_json(const Json& j);

}  // namespace betarce
