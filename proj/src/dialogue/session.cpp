#include "triage/dialogue/session.hpp"

#include <mutex>
#include <random>

#include "triage/common/error.hpp"

namespace triage::dialogue {

using infer::DecisionKind;
using infer::Engine;
using infer::State;

namespace {

std::string fresh_session_id() {
  static std::mutex mu;
  static std::mt19937_64 rng{std::random_device{}()};
  std::lock_guard lock(mu);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string id;
  for (int half = 0; half < 2; ++half) {
    auto bits = rng();
    for (int i = 0; i < 16; ++i, bits >>= 4) id.push_back(kHex[bits & 0xf]);
  }
  return id;
}

void require_active(const Session& s) {
  if (!s.active()) throw Error(ErrorCode::SessionFinalized, "session " + s.session_id + " is finalized");
}

std::optional<std::size_t> greedy_pick(const Engine& engine, const std::vector<State>& states, int k,
                                       const std::vector<bool>& excluded) {
  const auto d = engine.discrimination(states, k, &excluded);
  std::optional<std::size_t> best;
  for (std::size_t s = 0; s < states.size(); ++s) {
    if (states[s] != State::Unanswered) continue;
    if (!best || d[s] > d[*best]) best = s;
  }
  return best;
}

}  // namespace

std::vector<bool> excluded_mask(const Engine& engine, const store::Profile& profile) {
  std::vector<bool> mask(engine.rule_count(), false);
  for (const auto& id : profile.chronic_conditions)
    if (auto r = engine.rule_index(id)) mask[*r] = true;
  return mask;
}

Session start_session(const store::Profile& profile, Policy policy) {
  Session s;
  s.session_id = fresh_session_id();
  s.user_id = profile.user_id;
  s.profile_snapshot = profile;
  s.policy = std::move(policy);
  return s;
}

std::optional<std::string> next_question(const Session& session, const kbase::KnowledgeBase& kb,
                                         const infer::TriageThresholds& thresholds) {
  require_active(session);
  thresholds.validate();
  const Engine engine(kb);
  const auto states = engine.resolve(session.observations);
  const auto excluded = excluded_mask(engine, session.profile_snapshot);
  const int asked = static_cast<int>(session.asked.size());
  if (!engine.requests_more_data(states, thresholds, asked, &excluded)) return std::nullopt;

  if (std::holds_alternative<Greedy>(session.policy)) {
    if (auto s = greedy_pick(engine, states, thresholds.k, excluded)) return engine.symptom_id(*s);
    return std::nullopt;
  }
  if (const auto* planned = std::get_if<Planned>(&session.policy)) {
    for (const auto& id : planned->order)
      if (!session.observations.contains(id) && engine.symptom_index(id)) return id;
    return std::nullopt;
  }
  // Random: the draw depends only on the seed and how many questions were asked.
  std::vector<std::size_t> open;
  for (std::size_t s = 0; s < states.size(); ++s)
    if (states[s] == State::Unanswered) open.push_back(s);
  if (open.empty()) return std::nullopt;
  std::mt19937_64 rng(std::get<Random>(session.policy).seed + 0x9e3779b97f4a7c15ULL * (asked + 1));
  return engine.symptom_id(open[rng() % open.size()]);
}

void submit_answer(Session& session, const kbase::KnowledgeBase& kb, const std::string& symptom_id,
                   const infer::ObservationValue& value) {
  require_active(session);
  const auto* symptom = kb.find_symptom(symptom_id);
  if (!symptom) throw Error(ErrorCode::UnknownSymptomId, "unknown symptom '" + symptom_id + "'");
  if (value.kind == infer::AnswerKind::Numeric) infer::map_numeric(*symptom, value);  // kind check only
  session.observations.add(symptom_id, value);
  session.asked.push_back(symptom_id);
}

void inject_observation(Session& session, const kbase::KnowledgeBase& kb, const std::string& symptom_id,
                        bool force_referral) {
  require_active(session);
  if (!kb.find_symptom(symptom_id))
    throw Error(ErrorCode::UnknownSymptomId, "unknown symptom '" + symptom_id + "'");
  if (!session.observations.contains(symptom_id))
    session.observations.add(symptom_id, infer::ObservationValue::present());
  session.forced_referral = session.forced_referral || force_referral;
}

infer::TriageDecision current_decision(const Session& session, const kbase::KnowledgeBase& kb,
                                       const infer::TriageThresholds& thresholds) {
  const Engine engine(kb);
  const auto states = engine.resolve(session.observations);
  const auto excluded = excluded_mask(engine, session.profile_snapshot);
  auto decision = engine.triage(states, thresholds, static_cast<int>(session.asked.size()), &excluded);
  if (session.forced_referral && decision.kind != DecisionKind::ReferToFacility) {
    decision.kind = DecisionKind::ReferToFacility;
    decision.reason = "media finding needs specialist assessment";
    decision.suggested_symptom_ids.clear();
    decision.top_k.clear();
    const auto ranked = engine.rank(states, &excluded);
    for (std::size_t i = 0; i < ranked.size() && i < static_cast<std::size_t>(thresholds.k); ++i)
      decision.top_k.push_back(engine.breakdown(ranked[i]));
  }
  return decision;
}

const infer::TriageDecision& finalize(Session& session, const kbase::KnowledgeBase& kb,
                                      const infer::TriageThresholds& thresholds) {
  require_active(session);
  session.decision = current_decision(session, kb, thresholds);
  return *session.decision;
}

}  // namespace triage::dialogue
