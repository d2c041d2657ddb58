#pragma once

#include <nlohmann/json.hpp>
#include <vector>

#include "triage/infer/engine.hpp"
#include "triage/infer/observation.hpp"

namespace triage::infer {

// "Present" | "Absent" | "Unknown" | number (Numeric) | {"Numeric": number}
ObservationValue observation_value_from_json(const nlohmann::json& j);
nlohmann::json observation_value_to_json(const ObservationValue& v);

void to_json(nlohmann::json& j, const ScoreBreakdown& b);
void to_json(nlohmann::json& j, const TriageDecision& d);
void to_json(nlohmann::json& j, const TriageThresholds& t);
void from_json(const nlohmann::json& j, TriageThresholds& t);

// Answer transcript: ordered list of {symptom_id, value}.
std::vector<Observation> transcript_from_json(const nlohmann::json& j);
nlohmann::json transcript_to_json(const std::vector<Observation>& transcript);

}  // namespace triage::infer
