#pragma once

#include <nlohmann/json.hpp>
#include <string>

#include "triage/kbase/knowledge_base.hpp"

namespace triage::kbase {

// Wire/file format: {"version", "symptoms", "condition_rules", "indicator_rules"}.
// Symptom kind is {"type":"Boolean"} or
// {"type":"Threshold","unit":..,"cutoff":..,"direction":"Above"|"Below"}.
void to_json(nlohmann::json& j, const Symptom& s);
void from_json(const nlohmann::json& j, Symptom& s);
void to_json(nlohmann::json& j, const ConditionRule& r);
void from_json(const nlohmann::json& j, ConditionRule& r);
void to_json(nlohmann::json& j, const IndicatorRule& r);
void from_json(const nlohmann::json& j, IndicatorRule& r);
void to_json(nlohmann::json& j, const ValidationReport& report);

nlohmann::json kb_to_json(const KnowledgeBase& kb);
// Throws Error(ParseError) on malformed documents; does not validate.
KnowledgeBase kb_from_json(const nlohmann::json& j);

std::string serialize(const KnowledgeBase& kb);
KnowledgeBase load_kb_file(const std::string& path);
void save_kb_file(const KnowledgeBase& kb, const std::string& path);

}  // namespace triage::kbase
