#include "triage/infer/infer_json.hpp"


#include "triage/common/error.hpp"

namespace triage::infer {

using nlohmann::json;

ObservationValue observation_value_from_json(const json& j) {
  if (j.is_number()) return ObservationValue::numeric(j.get<double>());
  if (j.is_object() && j.contains("Numeric")) return ObservationValue::numeric(j.at("Numeric").get<double>());
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "Present") return ObservationValue::present();
    if (s == "Absent") return ObservationValue::absent();
    if (s == "Unknown") return ObservationValue::unknown();
  }
  throw Error(ErrorCode::ParseError, "invalid observation value " + j.dump());
}

json observation_value_to_json(const ObservationValue& v) {
  if (v.kind == AnswerKind::Numeric) return json{{"Numeric", v.magnitude}};
  return to_string(v.kind);
}

void to_json(json& j, const ScoreBreakdown& b) {
  j = {{"condition_id", b.condition_id}, {"r", b.r},         {"p", b.p},
       {"c", b.c},                       {"score", b.score}, {"advisory", b.advisory},
       {"severity", kbase::to_string(b.severity)}};
}

void to_json(json& j, const TriageDecision& d) {
  j = {{"kind", to_string(d.kind)}};
  switch (d.kind) {
    case DecisionKind::RequestMoreData:
      j["suggested_symptom_ids"] = d.suggested_symptom_ids;
      return;
    case DecisionKind::ReferToFacility:
      j["reason"] = d.reason;
      [[fallthrough]];
    case DecisionKind::Diagnose: {
      j["top_k"] = d.top_k;
      double sum = 0.0;
      for (const auto& b : d.top_k) sum += b.score;
      const double top = d.top_k.empty() ? 0.0 : d.top_k.front().score;
      j["summary"] = {{"diagnosis_score", top},
                      {"suggestion_score", d.top_k.empty() ? 0.0 : sum / static_cast<double>(d.top_k.size())}};
      return;
    }
  }
}

void to_json(json& j, const TriageThresholds& t) {
  j = {{"tau_diag", t.tau_diag}, {"tau_conf", t.tau_conf}, {"tau_refer", t.tau_refer},
       {"k", t.k},               {"q_max", t.q_max}};
}

void from_json(const json& j, TriageThresholds& t) {
  t.tau_diag = j.value("tau_diag", t.tau_diag);
  t.tau_conf = j.value("tau_conf", t.tau_conf);
  t.tau_refer = j.value("tau_refer", t.tau_refer);
  t.k = j.value("k", t.k);
  t.q_max = j.value("q_max", t.q_max);
}

std::vector<Observation> transcript_from_json(const json& j) {
  if (!j.is_array()) throw Error(ErrorCode::ParseError, "transcript must be a JSON array");
  std::vector<Observation> out;
  for (const auto& item : j) {
    if (!item.is_object() || !item.contains("symptom_id") || !item.contains("value"))
      throw Error(ErrorCode::ParseError, "transcript entries need symptom_id and value");
    out.push_back({item.at("symptom_id").get<std::string>(), observation_value_from_json(item.at("value"))});
  }
  return out;
}

json transcript_to_json(const std::vector<Observation>& transcript) {
  json out = json::array();
  for (const auto& o : transcript)
    out.push_back({{"symptom_id", o.symptom_id}, {"value", observation_value_to_json(o.value)}});
  return out;
}

}  // namespace triage::infer
