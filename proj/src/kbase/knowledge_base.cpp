#include "triage/kbase/knowledge_base.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <regex>
#include <set>

#include "triage/common/error.hpp"

namespace triage::kbase {

bool ConditionRule::contains(const std::string& symptom_id) const {
  return std::any_of(symptoms.begin(), symptoms.end(),
                     [&](const WeightedSymptom& s) { return s.symptom_id == symptom_id; });
}

KnowledgeBase::KnowledgeBase(std::int64_t version, std::vector<Symptom> symptoms,
                             std::vector<ConditionRule> condition_rules,
                             std::vector<IndicatorRule> indicator_rules)
    : version_(version),
      symptoms_(std::move(symptoms)),
      rules_(std::move(condition_rules)),
      indicators_(std::move(indicator_rules)) {
  reindex();
}

void KnowledgeBase::reindex() {
  symptom_index_.clear();
  rule_index_.clear();
  indicator_index_.clear();
  for (std::size_t i = 0; i < symptoms_.size(); ++i) symptom_index_.emplace(symptoms_[i].id, i);
  for (std::size_t i = 0; i < rules_.size(); ++i) rule_index_.emplace(rules_[i].condition_id, i);
  for (std::size_t i = 0; i < indicators_.size(); ++i)
    indicator_index_.emplace(indicators_[i].indicator_symptom_id, i);
}

const Symptom* KnowledgeBase::find_symptom(const std::string& id) const {
  auto it = symptom_index_.find(id);
  return it == symptom_index_.end() ? nullptr : &symptoms_[it->second];
}

const ConditionRule* KnowledgeBase::find_rule(const std::string& condition_id) const {
  auto it = rule_index_.find(condition_id);
  return it == rule_index_.end() ? nullptr : &rules_[it->second];
}

const IndicatorRule* KnowledgeBase::find_indicator(const std::string& symptom_id) const {
  auto it = indicator_index_.find(symptom_id);
  return it == indicator_index_.end() ? nullptr : &indicators_[it->second];
}

bool KnowledgeBase::operator==(const KnowledgeBase& other) const {
  return version_ == other.version_ && symptoms_ == other.symptoms_ && rules_ == other.rules_ &&
         indicators_ == other.indicators_;
}

std::size_t ValidationReport::error_count() const {
  return static_cast<std::size_t>(std::count_if(issues.begin(), issues.end(), [](const auto& i) {
    return i.severity == IssueSeverity::Error;
  }));
}

namespace {

bool valid_token(const std::string& id) {
  static const std::regex pattern("[a-z0-9_]+");
  return std::regex_match(id, pattern);
}

}  // namespace

ValidationReport validate(const KnowledgeBase& kb) {
  ValidationReport report;
  auto error = [&](std::string message, std::string location) {
    report.issues.push_back({IssueSeverity::Error, std::move(message), std::move(location)});
  };
  auto warning = [&](std::string message, std::string location) {
    report.issues.push_back({IssueSeverity::Warning, std::move(message), std::move(location)});
  };

  std::set<std::string> symptom_ids;
  for (std::size_t i = 0; i < kb.symptoms().size(); ++i) {
    const auto& s = kb.symptoms()[i];
    const std::string loc = "symptoms[" + std::to_string(i) + "]";
    if (!valid_token(s.id)) error("invalid symptom id '" + s.id + "'", loc);
    if (!symptom_ids.insert(s.id).second) error("duplicate symptom id '" + s.id + "'", loc);
    if (s.threshold && !std::isfinite(s.threshold->cutoff))
      error("non-finite threshold cutoff", loc + ".kind");
    std::set<std::string> aliases;
    for (const auto& a : s.aliases)
      if (!aliases.insert(a).second) error("duplicate alias '" + a + "'", loc + ".aliases");
  }

  std::set<std::string> rule_ids;
  std::set<std::string> referenced;
  for (std::size_t i = 0; i < kb.condition_rules().size(); ++i) {
    const auto& r = kb.condition_rules()[i];
    const std::string loc = "condition_rules[" + std::to_string(i) + "]";
    if (!valid_token(r.condition_id)) error("invalid condition id '" + r.condition_id + "'", loc);
    if (!rule_ids.insert(r.condition_id).second)
      error("duplicate condition id '" + r.condition_id + "'", loc);
    if (r.symptoms.empty()) error("empty rule '" + r.condition_id + "'", loc);
    std::set<std::string> seen;
    for (std::size_t j = 0; j < r.symptoms.size(); ++j) {
      const auto& ws = r.symptoms[j];
      const std::string sloc = loc + ".symptoms[" + std::to_string(j) + "]";
      if (!symptom_ids.count(ws.symptom_id))
        error("dangling reference to symptom '" + ws.symptom_id + "'", sloc);
      if (!seen.insert(ws.symptom_id).second)
        error("duplicate symptom '" + ws.symptom_id + "' in rule", sloc);
      if (!(ws.weight > 0.0) || !std::isfinite(ws.weight))
        error("non-positive weight for '" + ws.symptom_id + "'", sloc);
      referenced.insert(ws.symptom_id);
    }
  }

  std::set<std::string> indicator_ids;
  for (std::size_t i = 0; i < kb.indicator_rules().size(); ++i) {
    const auto& ind = kb.indicator_rules()[i];
    const std::string loc = "indicator_rules[" + std::to_string(i) + "]";
    if (!symptom_ids.count(ind.indicator_symptom_id))
      error("dangling reference to symptom '" + ind.indicator_symptom_id + "'", loc);
    if (!indicator_ids.insert(ind.indicator_symptom_id).second)
      error("duplicate indicator for '" + ind.indicator_symptom_id + "'", loc);
    if (ind.candidate_condition_ids.empty()) error("empty candidate list", loc);
    for (const auto& c : ind.candidate_condition_ids)
      if (!rule_ids.count(c)) error("dangling reference to condition '" + c + "'", loc);
    referenced.insert(ind.indicator_symptom_id);
  }

  for (std::size_t i = 0; i < kb.symptoms().size(); ++i) {
    const auto& s = kb.symptoms()[i];
    if (!referenced.count(s.id))
      warning("symptom '" + s.id + "' is referenced by no rule", "symptoms[" + std::to_string(i) + "]");
  }

  report.ok = report.error_count() == 0;
  return report;
}

KnowledgeBase upsert_condition(const KnowledgeBase& kb, const ConditionRule& rule,
                               const std::vector<Symptom>& new_symptoms) {
  std::vector<Symptom> symptoms = kb.symptoms();
  for (const auto& s : new_symptoms) {
    auto it = std::find_if(symptoms.begin(), symptoms.end(),
                           [&](const Symptom& existing) { return existing.id == s.id; });
    if (it != symptoms.end())
      *it = s;
    else
      symptoms.push_back(s);
  }

  std::vector<ConditionRule> rules = kb.condition_rules();
  auto it = std::find_if(rules.begin(), rules.end(), [&](const ConditionRule& r) {
    return r.condition_id == rule.condition_id;
  });
  if (it != rules.end())
    *it = rule;
  else
    rules.push_back(rule);

  KnowledgeBase next(kb.version() + 1, std::move(symptoms), std::move(rules), kb.indicator_rules());
  auto report = validate(next);
  if (!report.ok) {
    std::string message = "upsert of '" + rule.condition_id + "' failed validation";
    for (const auto& issue : report.issues)
      if (issue.severity == IssueSeverity::Error) message += "; " + issue.message;
    throw Error(ErrorCode::ValidationFailed, message);
  }
  return next;
}

std::string case_fold(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  for (unsigned char ch : text) out.push_back(static_cast<char>(std::tolower(ch)));
  return out;
}

namespace {

std::set<std::string> trigrams(const std::string& text) {
  std::set<std::string> out;
  for (std::size_t i = 0; i + 3 <= text.size(); ++i) out.insert(text.substr(i, 3));
  return out;
}

std::string trim(const std::string& text) {
  auto begin = text.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return {};
  auto end = text.find_last_not_of(" \t\r\n");
  return text.substr(begin, end - begin + 1);
}

}  // namespace

double trigram_jaccard(const std::string& a, const std::string& b) {
  const auto ta = trigrams(case_fold(a));
  const auto tb = trigrams(case_fold(b));
  if (ta.empty() && tb.empty()) return 0.0;
  std::size_t shared = 0;
  for (const auto& t : ta) shared += tb.count(t);
  const std::size_t total = ta.size() + tb.size() - shared;
  return static_cast<double>(shared) / static_cast<double>(total);
}

std::vector<SymptomMatch> match_symptom_text(const KnowledgeBase& kb, const std::string& query,
                                             std::size_t limit) {
  const std::string folded = case_fold(trim(query));
  if (folded.empty()) throw Error(ErrorCode::EmptyQuery, "query is empty");
  if (limit == 0) throw Error(ErrorCode::InvalidParams, "limit must be positive");

  std::vector<SymptomMatch> out;
  for (const auto& s : kb.symptoms()) {
    std::vector<std::string> texts{s.name};
    texts.insert(texts.end(), s.aliases.begin(), s.aliases.end());
    double best = 0.0;
    for (const auto& t : texts) {
      if (case_fold(t).find(folded) != std::string::npos) {
        best = 1.0;
        break;
      }
      best = std::max(best, trigram_jaccard(folded, t));
    }
    if (best >= 0.2) out.push_back({s.id, best});
  }
  std::sort(out.begin(), out.end(), [](const SymptomMatch& a, const SymptomMatch& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    return a.symptom_id < b.symptom_id;
  });
  if (out.size() > limit) out.resize(limit);
  return out;
}

const char* to_string(Severity severity) {
  switch (severity) {
    case Severity::SelfCare: return "SelfCare";
    case Severity::Monitor: return "Monitor";
    case Severity::Refer: return "Refer";
  }
  return "SelfCare";
}

Severity severity_from_string(const std::string& text) {
  if (text == "SelfCare") return Severity::SelfCare;
  if (text == "Monitor") return Severity::Monitor;
  if (text == "Refer") return Severity::Refer;
  throw Error(ErrorCode::ParseError, "unknown severity '" + text + "'");
}

}  // namespace triage::kbase
