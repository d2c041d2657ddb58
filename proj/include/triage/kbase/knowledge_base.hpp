#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace triage::kbase {

enum class Direction { Above, Below };

struct Threshold {
  std::string unit;
  double cutoff = 0.0;
  Direction direction = Direction::Above;

  bool operator==(const Threshold&) const = default;
};

struct Symptom {
  std::string id;
  std::string name;
  std::vector<std::string> aliases;
  // Absent threshold means a Boolean symptom.
  std::optional<Threshold> threshold;

  bool is_threshold() const { return threshold.has_value(); }
  bool operator==(const Symptom&) const = default;
};

enum class Severity { SelfCare, Monitor, Refer };

struct WeightedSymptom {
  std::string symptom_id;
  double weight = 1.0;

  bool operator==(const WeightedSymptom&) const = default;
};

struct ConditionRule {
  std::string condition_id;
  std::string name;
  Severity severity = Severity::SelfCare;
  std::vector<WeightedSymptom> symptoms;
  std::string advice;

  bool contains(const std::string& symptom_id) const;
  bool operator==(const ConditionRule&) const = default;
};

// Single-symptom hint pointing at one or more candidate conditions.
struct IndicatorRule {
  std::string indicator_symptom_id;
  std::vector<std::string> candidate_condition_ids;
  std::string note;

  bool operator==(const IndicatorRule&) const = default;
};

// Immutable snapshot of the diagnostic knowledge. Mutating operations
// (see upsert_condition) return a new value with version + 1.
class KnowledgeBase {
 public:
  KnowledgeBase() = default;
  KnowledgeBase(std::int64_t version, std::vector<Symptom> symptoms,
                std::vector<ConditionRule> condition_rules,
                std::vector<IndicatorRule> indicator_rules);

  std::int64_t version() const { return version_; }
  const std::vector<Symptom>& symptoms() const { return symptoms_; }
  const std::vector<ConditionRule>& condition_rules() const { return rules_; }
  const std::vector<IndicatorRule>& indicator_rules() const { return indicators_; }

  const Symptom* find_symptom(const std::string& id) const;
  const ConditionRule* find_rule(const std::string& condition_id) const;
  const IndicatorRule* find_indicator(const std::string& symptom_id) const;

  bool operator==(const KnowledgeBase& other) const;

 private:
  void reindex();

  std::int64_t version_ = 0;
  std::vector<Symptom> symptoms_;
  std::vector<ConditionRule> rules_;
  std::vector<IndicatorRule> indicators_;

  // First occurrence wins; duplicates are reported by validate().
  std::map<std::string, std::size_t> symptom_index_;
  std::map<std::string, std::size_t> rule_index_;
  std::map<std::string, std::size_t> indicator_index_;
};

enum class IssueSeverity { Error, Warning };

struct ValidationIssue {
  IssueSeverity severity = IssueSeverity::Error;
  std::string message;
  std::string location;
};

struct ValidationReport {
  bool ok = true;
  std::vector<ValidationIssue> issues;

  std::size_t error_count() const;
};

ValidationReport validate(const KnowledgeBase& kb);

// Replaces the rule with the same condition_id or appends it; new_symptoms
// are merged (replacing same-id symptoms). Throws Error(ValidationFailed)
// when the merged knowledge base would not validate.
KnowledgeBase upsert_condition(const KnowledgeBase& kb, const ConditionRule& rule,
                               const std::vector<Symptom>& new_symptoms);

struct SymptomMatch {
  std::string symptom_id;
  double similarity = 0.0;
};

// Smart-keyboard lookup: substring hits score 1.0, otherwise the best
// character-trigram Jaccard similarity over name and aliases; < 0.2 dropped.
std::vector<SymptomMatch> match_symptom_text(const KnowledgeBase& kb, const std::string& query,
                                             std::size_t limit);

double trigram_jaccard(const std::string& a, const std::string& b);
std::string case_fold(const std::string& text);

const char* to_string(Severity severity);
Severity severity_from_string(const std::string& text);

}  // namespace triage::kbase
