#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "triage/infer/engine.hpp"
#include "triage/infer/observation.hpp"
#include "triage/kbase/knowledge_base.hpp"
#include "triage/store/profile.hpp"

namespace triage::dialogue {

struct Greedy {
  bool operator==(const Greedy&) const = default;
};
struct Planned {
  std::vector<std::string> order;
  bool operator==(const Planned&) const = default;
};
struct Random {
  std::uint64_t seed = 0;
  bool operator==(const Random&) const = default;
};
using Policy = std::variant<Greedy, Planned, Random>;

struct Session {
  std::string session_id;
  std::string user_id;
  store::Profile profile_snapshot;
  infer::ObservationSet observations;
  std::vector<std::string> asked;
  Policy policy = Greedy{};
  // Set by media findings that must end in a referral whatever the ranking says.
  bool forced_referral = false;
  // Empty while Active.
  std::optional<infer::TriageDecision> decision;

  bool active() const { return !decision.has_value(); }
};

Session start_session(const store::Profile& profile, Policy policy);

// nullopt is NoQuestion. Throws Error(SessionFinalized).
std::optional<std::string> next_question(const Session& session, const kbase::KnowledgeBase& kb,
                                         const infer::TriageThresholds& thresholds);

// Throws DuplicateAnswer, UnknownSymptomId, KindMismatch, SessionFinalized.
void submit_answer(Session& session, const kbase::KnowledgeBase& kb, const std::string& symptom_id,
                   const infer::ObservationValue& value);

// Records an observation that did not come from a question (media findings).
// Leaves `asked` untouched; an existing answer for the symptom is kept.
void inject_observation(Session& session, const kbase::KnowledgeBase& kb, const std::string& symptom_id,
                        bool force_referral);

const infer::TriageDecision& finalize(Session& session, const kbase::KnowledgeBase& kb,
                                      const infer::TriageThresholds& thresholds);

// Decision for the current observations without finalizing.
infer::TriageDecision current_decision(const Session& session, const kbase::KnowledgeBase& kb,
                                       const infer::TriageThresholds& thresholds);

// Rule mask of chronic conditions excluded from new-diagnosis ranking.
std::vector<bool> excluded_mask(const infer::Engine& engine, const store::Profile& profile);

}  // namespace triage::dialogue
