#pragma once

#include <map>
#include <string>

#include "triage/kbase/knowledge_base.hpp"

namespace triage::infer {

enum class AnswerKind { Present, Absent, Unknown, Numeric };

struct ObservationValue {
  AnswerKind kind = AnswerKind::Unknown;
  double magnitude = 0.0;  // only meaningful for Numeric

  static ObservationValue present() { return {AnswerKind::Present, 0.0}; }
  static ObservationValue absent() { return {AnswerKind::Absent, 0.0}; }
  static ObservationValue unknown() { return {AnswerKind::Unknown, 0.0}; }
  static ObservationValue numeric(double m) { return {AnswerKind::Numeric, m}; }

  bool operator==(const ObservationValue&) const = default;
};

struct Observation {
  std::string symptom_id;
  ObservationValue value;
};

// At most one observation per symptom.
class ObservationSet {
 public:
  using const_iterator = std::map<std::string, ObservationValue>::const_iterator;

  // Throws Error(DuplicateAnswer) if the symptom already has an observation.
  void add(const std::string& symptom_id, ObservationValue value);
  // Overwrites any existing observation.
  void set(const std::string& symptom_id, ObservationValue value);

  bool contains(const std::string& symptom_id) const { return values_.count(symptom_id) > 0; }
  const ObservationValue* find(const std::string& symptom_id) const;
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }
  const_iterator begin() const { return values_.begin(); }
  const_iterator end() const { return values_.end(); }

  bool operator==(const ObservationSet&) const = default;

 private:
  std::map<std::string, ObservationValue> values_;
};

enum class Presence { Present, Absent };

// Present iff the magnitude lies strictly beyond the cutoff in the stated
// direction. Throws Error(KindMismatch) for Boolean symptoms or non-numeric values.
Presence map_numeric(const kbase::Symptom& symptom, const ObservationValue& value);

const char* to_string(AnswerKind kind);

}  // namespace triage::infer
