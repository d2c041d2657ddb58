#pragma once

#include <nlohmann/json.hpp>

#include "triage/dialogue/session.hpp"

namespace triage::dialogue {

// {"type":"Greedy"} | {"type":"Planned","order":[...]} | {"type":"Random","seed":n}
nlohmann::json policy_to_json(const Policy& policy);
Policy policy_from_json(const nlohmann::json& j);

// Full session document; "decision" is null while Active.
nlohmann::json session_to_json(const Session& session);
Session session_from_json(const nlohmann::json& j);

}  // namespace triage::dialogue
