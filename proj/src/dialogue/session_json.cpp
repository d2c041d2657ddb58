#include "triage/dialogue/session_json.hpp"

#include "triage/common/error.hpp"
#include "triage/infer/infer_json.hpp"
#include "triage/kbase/kb_json.hpp"

namespace triage::dialogue {

using nlohmann::json;

json policy_to_json(const Policy& policy) {
  if (const auto* p = std::get_if<Planned>(&policy)) return {{"type", "Planned"}, {"order", p->order}};
  if (const auto* r = std::get_if<Random>(&policy)) return {{"type", "Random"}, {"seed", r->seed}};
  return {{"type", "Greedy"}};
}

Policy policy_from_json(const json& j) {
  const auto type = j.is_string() ? j.get<std::string>() : j.value("type", std::string{"Greedy"});
  if (type == "Greedy") return Greedy{};
  if (type == "Planned") return Planned{j.value("order", std::vector<std::string>{})};
  if (type == "Random") return Random{j.value("seed", std::uint64_t{0})};
  throw Error(ErrorCode::ParseError, "unknown policy '" + type + "'");
}

namespace {

json decision_to_json(const infer::TriageDecision& d) {
  json j = d;
  // Keep the full decision so a stored session restores exactly.
  j["suggested_symptom_ids"] = d.suggested_symptom_ids;
  j["reason"] = d.reason;
  j["top_k"] = d.top_k;
  return j;
}

infer::TriageDecision decision_from_json(const json& j) {
  infer::TriageDecision d;
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "Diagnose") d.kind = infer::DecisionKind::Diagnose;
  else if (kind == "RequestMoreData") d.kind = infer::DecisionKind::RequestMoreData;
  else if (kind == "ReferToFacility") d.kind = infer::DecisionKind::ReferToFacility;
  else throw Error(ErrorCode::ParseError, "unknown decision kind '" + kind + "'");
  d.suggested_symptom_ids = j.value("suggested_symptom_ids", std::vector<std::string>{});
  d.reason = j.value("reason", std::string{});
  for (const auto& b : j.value("top_k", json::array())) {
    infer::ScoreBreakdown s;
    s.condition_id = b.at("condition_id").get<std::string>();
    s.r = b.at("r").get<double>();
    s.p = b.at("p").get<double>();
    s.c = b.at("c").get<double>();
    s.score = b.at("score").get<double>();
    s.advisory = b.at("advisory").get<bool>();
    s.severity = kbase::severity_from_string(b.at("severity").get<std::string>());
    d.top_k.push_back(s);
  }
  return d;
}

}  // namespace

json session_to_json(const Session& s) {
  json obs = json::array();
  for (const auto& [id, value] : s.observations)
    obs.push_back({{"symptom_id", id}, {"value", infer::observation_value_to_json(value)}});
  return {{"session_id", s.session_id},
          {"user_id", s.user_id},
          {"profile_snapshot", s.profile_snapshot},
          {"observations", obs},
          {"asked", s.asked},
          {"policy", policy_to_json(s.policy)},
          {"forced_referral", s.forced_referral},
          {"state", s.active() ? "Active" : "Finalized"},
          {"decision", s.decision ? decision_to_json(*s.decision) : json(nullptr)}};
}

Session session_from_json(const json& j) {
  try {
    Session s;
    s.session_id = j.at("session_id").get<std::string>();
    s.user_id = j.value("user_id", std::string{});
    s.profile_snapshot = j.value("profile_snapshot", store::Profile{});
    for (const auto& o : infer::transcript_from_json(j.at("observations"))) s.observations.add(o.symptom_id, o.value);
    s.asked = j.value("asked", std::vector<std::string>{});
    s.policy = policy_from_json(j.value("policy", json{{"type", "Greedy"}}));
    s.forced_referral = j.value("forced_referral", false);
    if (j.contains("decision") && !j.at("decision").is_null()) s.decision = decision_from_json(j.at("decision"));
    return s;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("malformed session: ") + e.what());
  }
}

}  // namespace triage::dialogue
