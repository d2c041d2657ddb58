#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "triage/infer/observation.hpp"
#include "triage/kbase/knowledge_base.hpp"

namespace triage::infer {

struct ScoreBreakdown {
  std::string condition_id;
  double r = 0.0;  // weighted recall of the rule's symptoms
  double p = 0.0;  // share of Present observations the rule explains
  double c = 0.0;  // weighted share of the rule's symptoms actually answered
  double score = 0.0;
  bool advisory = false;
  kbase::Severity severity = kbase::Severity::SelfCare;
};

struct TriageThresholds {
  double tau_diag = 0.6;
  double tau_conf = 0.5;
  double tau_refer = 0.4;
  int k = 3;
  int q_max = 12;

  // Throws Error(InvalidParams).
  void validate() const;
};

enum class DecisionKind { Diagnose, RequestMoreData, ReferToFacility };

struct TriageDecision {
  DecisionKind kind = DecisionKind::RequestMoreData;
  std::vector<ScoreBreakdown> top_k;                 // Diagnose, ReferToFacility
  std::vector<std::string> suggested_symptom_ids;    // RequestMoreData
  std::string reason;                                // ReferToFacility
};

const char* to_string(DecisionKind kind);

// Per-symptom state after numeric answers have been mapped.
enum class State : std::uint8_t { Unanswered, Present, Absent, Unknown };

inline constexpr double kAdvisoryStep = 0.3;
inline constexpr double kAdvisoryCap = 0.9;

// Knowledge base compiled to index form. Holds copies of everything it needs,
// so it stays valid independent of the source KnowledgeBase.
class Engine {
 public:
  struct Entry {
    int rule = -1;  // index into the KB's condition rules
    bool advisory = false;
    double r = 0.0, p = 0.0, c = 0.0, score = 0.0;
  };

  explicit Engine(const kbase::KnowledgeBase& kb);

  std::size_t symptom_count() const { return symptom_ids_.size(); }
  std::size_t rule_count() const { return rules_.size(); }
  const std::string& symptom_id(std::size_t i) const { return symptom_ids_[i]; }
  const std::string& condition_id(std::size_t rule) const { return rules_[rule].id; }
  kbase::Severity severity(std::size_t rule) const { return rules_[rule].severity; }
  std::optional<std::size_t> symptom_index(const std::string& id) const;
  std::optional<std::size_t> rule_index(const std::string& condition_id) const;
  bool rule_contains(std::size_t rule, std::size_t symptom) const;
  const std::vector<std::size_t>& rule_symptoms(std::size_t rule) const { return rules_[rule].symptoms; }

  // Throws Error(UnknownSymptomId) / Error(KindMismatch).
  std::vector<State> resolve(const ObservationSet& observations) const;

  // excluded: optional per-rule mask removing conditions from the ranking.
  std::vector<Entry> rank(const std::vector<State>& states,
                          const std::vector<bool>* excluded = nullptr) const;
  std::optional<Entry> top(const std::vector<State>& states,
                           const std::vector<bool>* excluded = nullptr) const;

  // D(s) for every symptom against the current top-k distinct conditions.
  std::vector<int> discrimination(const std::vector<State>& states, int k,
                                  const std::vector<bool>* excluded = nullptr) const;

  // Unanswered symptoms whose Present answer changes the argmax, ordered by
  // D(s) descending then symptom id; at most `limit`.
  std::vector<std::size_t> discriminating_symptoms(const std::vector<State>& states, int k,
                                                   std::size_t limit,
                                                   const std::vector<bool>* excluded = nullptr) const;

  TriageDecision triage(const std::vector<State>& states, const TriageThresholds& thresholds,
                        int questions_asked, const std::vector<bool>* excluded = nullptr) const;
  // Cheap form of triage(...).kind == RequestMoreData.
  bool requests_more_data(const std::vector<State>& states, const TriageThresholds& thresholds,
                          int questions_asked, const std::vector<bool>* excluded = nullptr) const;

  ScoreBreakdown breakdown(const Entry& e) const;
  bool before(const Entry& a, const Entry& b) const;

 private:
  struct Rule {
    std::string id;
    kbase::Severity severity;
    std::vector<std::size_t> symptoms;
    std::vector<double> weights;
    double total_weight = 0.0;
    int id_order = 0;  // position of id in ascending order
  };
  struct Indicator {
    std::size_t symptom;
    std::vector<std::size_t> candidates;
  };
  enum class Gate { Refer, Diagnose, Undecided };

  Entry score_rule(std::size_t rule, const std::vector<State>& states, int present_count) const;
  std::vector<Entry> all_entries(const std::vector<State>& states, const std::vector<bool>* excluded) const;
  Gate gate(const Entry& top, const TriageThresholds& thresholds) const;

  std::vector<std::string> symptom_ids_;  // sorted, so index order is id order
  std::vector<std::optional<kbase::Threshold>> thresholds_;
  std::vector<Rule> rules_;
  std::vector<Indicator> indicators_;
  std::vector<std::vector<bool>> membership_;  // [rule][symptom]
};

// Convenience API over the engine.
ScoreBreakdown score_condition(const kbase::KnowledgeBase& kb, const kbase::ConditionRule& rule,
                               const ObservationSet& observations);
std::vector<ScoreBreakdown> rank(const kbase::KnowledgeBase& kb, const ObservationSet& observations);
TriageDecision triage(const kbase::KnowledgeBase& kb, const ObservationSet& observations,
                      const TriageThresholds& thresholds, int questions_asked,
                      const std::vector<std::string>& excluded_conditions = {});

// alpha * rule_score + (1 - alpha) * ann_prob; Error(OutOfRange) outside [0,1].
double blend(double rule_score, double ann_prob, double alpha = 0.5);

}  // namespace triage::infer
