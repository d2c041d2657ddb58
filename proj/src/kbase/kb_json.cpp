#include "triage/kbase/kb_json.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "triage/common/error.hpp"

namespace triage::kbase {

using nlohmann::json;

void to_json(json& j, const Symptom& s) {
  json kind;
  if (s.threshold) {
    kind = {{"type", "Threshold"},
            {"unit", s.threshold->unit},
            {"cutoff", s.threshold->cutoff},
            {"direction", s.threshold->direction == Direction::Above ? "Above" : "Below"}};
  } else {
    kind = {{"type", "Boolean"}};
  }
  j = {{"id", s.id}, {"name", s.name}, {"aliases", s.aliases}, {"kind", kind}};
}

void from_json(const json& j, Symptom& s) {
  s.id = j.at("id").get<std::string>();
  s.name = j.at("name").get<std::string>();
  s.aliases = j.value("aliases", std::vector<std::string>{});
  s.threshold.reset();
  const json kind = j.value("kind", json{{"type", "Boolean"}});
  const std::string type = kind.is_string() ? kind.get<std::string>() : kind.at("type").get<std::string>();
  if (type == "Threshold") {
    Threshold t;
    t.unit = kind.value("unit", std::string{});
    t.cutoff = kind.at("cutoff").get<double>();
    const std::string dir = kind.value("direction", std::string("Above"));
    if (dir != "Above" && dir != "Below") throw Error(ErrorCode::ParseError, "bad direction '" + dir + "'");
    t.direction = dir == "Above" ? Direction::Above : Direction::Below;
    s.threshold = t;
  } else if (type != "Boolean") {
    throw Error(ErrorCode::ParseError, "unknown symptom kind '" + type + "'");
  }
}

void to_json(json& j, const ConditionRule& r) {
  json symptoms = json::array();
  for (const auto& ws : r.symptoms) symptoms.push_back({{"symptom_id", ws.symptom_id}, {"weight", ws.weight}});
  j = {{"condition_id", r.condition_id},
       {"name", r.name},
       {"severity", to_string(r.severity)},
       {"symptoms", symptoms},
       {"advice", r.advice}};
}

void from_json(const json& j, ConditionRule& r) {
  r.condition_id = j.at("condition_id").get<std::string>();
  r.name = j.value("name", r.condition_id);
  r.severity = severity_from_string(j.value("severity", std::string("SelfCare")));
  r.symptoms.clear();
  for (const auto& ws : j.at("symptoms"))
    r.symptoms.push_back({ws.at("symptom_id").get<std::string>(), ws.value("weight", 1.0)});
  r.advice = j.value("advice", std::string{});
}

void to_json(json& j, const IndicatorRule& r) {
  j = {{"indicator_symptom_id", r.indicator_symptom_id},
       {"candidate_condition_ids", r.candidate_condition_ids},
       {"note", r.note}};
}

void from_json(const json& j, IndicatorRule& r) {
  r.indicator_symptom_id = j.at("indicator_symptom_id").get<std::string>();
  r.candidate_condition_ids = j.at("candidate_condition_ids").get<std::vector<std::string>>();
  r.note = j.value("note", std::string{});
}

void to_json(json& j, const ValidationReport& report) {
  json issues = json::array();
  for (const auto& i : report.issues)
    issues.push_back({{"severity", i.severity == IssueSeverity::Error ? "Error" : "Warning"},
                      {"message", i.message},
                      {"location", i.location}});
  j = {{"ok", report.ok}, {"issues", issues}};
}

json kb_to_json(const KnowledgeBase& kb) {
  return {{"version", kb.version()},
          {"symptoms", kb.symptoms()},
          {"condition_rules", kb.condition_rules()},
          {"indicator_rules", kb.indicator_rules()}};
}

KnowledgeBase kb_from_json(const json& j) {
  try {
    return KnowledgeBase(j.at("version").get<std::int64_t>(),
                         j.at("symptoms").get<std::vector<Symptom>>(),
                         j.at("condition_rules").get<std::vector<ConditionRule>>(),
                         j.value("indicator_rules", std::vector<IndicatorRule>{}));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("malformed knowledge base: ") + e.what());
  }
}

std::string serialize(const KnowledgeBase& kb) { return kb_to_json(kb).dump(2) + "\n"; }

KnowledgeBase load_kb_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, path + ": " + e.what());
  }
  return kb_from_json(j);
}

void save_kb_file(const KnowledgeBase& kb, const std::string& path) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + tmp.string());
    out << serialize(kb);
    out.flush();
    if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) throw Error(ErrorCode::IoFailure, "rename failed for " + path + ": " + ec.message());
}

}  // namespace triage::kbase
