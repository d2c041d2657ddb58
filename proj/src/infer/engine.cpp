#include "triage/infer/engine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "triage/common/error.hpp"

namespace triage::infer {

void ObservationSet::add(const std::string& symptom_id, ObservationValue value) {
  if (!values_.emplace(symptom_id, value).second)
    throw Error(ErrorCode::DuplicateAnswer, "symptom '" + symptom_id + "' already answered");
}

void ObservationSet::set(const std::string& symptom_id, ObservationValue value) {
  values_[symptom_id] = value;
}

const ObservationValue* ObservationSet::find(const std::string& symptom_id) const {
  auto it = values_.find(symptom_id);
  return it == values_.end() ? nullptr : &it->second;
}

Presence map_numeric(const kbase::Symptom& symptom, const ObservationValue& value) {
  if (!symptom.threshold)
    throw Error(ErrorCode::KindMismatch, "symptom '" + symptom.id + "' is not thresholded");
  if (value.kind != AnswerKind::Numeric)
    throw Error(ErrorCode::KindMismatch, "observation for '" + symptom.id + "' is not numeric");
  const auto& t = *symptom.threshold;
  const bool beyond = t.direction == kbase::Direction::Above ? value.magnitude > t.cutoff
                                                             : value.magnitude < t.cutoff;
  return beyond ? Presence::Present : Presence::Absent;
}

const char* to_string(AnswerKind kind) {
  switch (kind) {
    case AnswerKind::Present: return "Present";
    case AnswerKind::Absent: return "Absent";
    case AnswerKind::Unknown: return "Unknown";
    case AnswerKind::Numeric: return "Numeric";
  }
  return "Unknown";
}

const char* to_string(DecisionKind kind) {
  switch (kind) {
    case DecisionKind::Diagnose: return "Diagnose";
    case DecisionKind::RequestMoreData: return "RequestMoreData";
    case DecisionKind::ReferToFacility: return "ReferToFacility";
  }
  return "RequestMoreData";
}

void TriageThresholds::validate() const {
  auto in_unit = [](double v) { return v > 0.0 && v <= 1.0; };
  if (!in_unit(tau_diag) || !in_unit(tau_conf) || !in_unit(tau_refer))
    throw Error(ErrorCode::InvalidParams, "thresholds must lie in (0, 1]");
  if (k < 1) throw Error(ErrorCode::InvalidParams, "k must be >= 1");
  if (q_max < 1) throw Error(ErrorCode::InvalidParams, "q_max must be >= 1");
}

Engine::Engine(const kbase::KnowledgeBase& kb) {
  std::vector<const kbase::Symptom*> sorted;
  for (const auto& s : kb.symptoms()) sorted.push_back(&s);
  std::sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) { return a->id < b->id; });
  for (const auto* s : sorted) {
    symptom_ids_.push_back(s->id);
    thresholds_.push_back(s->threshold);
  }

  for (const auto& r : kb.condition_rules()) {
    Rule rule{r.condition_id, r.severity, {}, {}, 0.0, 0};
    for (const auto& ws : r.symptoms) {
      auto idx = symptom_index(ws.symptom_id);
      if (!idx) throw Error(ErrorCode::UnknownSymptomId, "rule references unknown symptom '" + ws.symptom_id + "'");
      rule.symptoms.push_back(*idx);
      rule.weights.push_back(ws.weight);
      rule.total_weight += ws.weight;
    }
    rules_.push_back(std::move(rule));
  }
  std::vector<std::size_t> order(rules_.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return rules_[a].id < rules_[b].id; });
  for (std::size_t i = 0; i < order.size(); ++i) rules_[order[i]].id_order = static_cast<int>(i);

  membership_.assign(rules_.size(), std::vector<bool>(symptom_ids_.size(), false));
  for (std::size_t r = 0; r < rules_.size(); ++r)
    for (auto s : rules_[r].symptoms) membership_[r][s] = true;

  for (const auto& ind : kb.indicator_rules()) {
    auto idx = symptom_index(ind.indicator_symptom_id);
    if (!idx) continue;
    Indicator compiled{*idx, {}};
    for (const auto& c : ind.candidate_condition_ids)
      if (auto ri = rule_index(c)) compiled.candidates.push_back(*ri);
    indicators_.push_back(std::move(compiled));
  }
}

std::optional<std::size_t> Engine::symptom_index(const std::string& id) const {
  auto it = std::lower_bound(symptom_ids_.begin(), symptom_ids_.end(), id);
  if (it == symptom_ids_.end() || *it != id) return std::nullopt;
  return static_cast<std::size_t>(it - symptom_ids_.begin());
}

std::optional<std::size_t> Engine::rule_index(const std::string& condition_id) const {
  for (std::size_t i = 0; i < rules_.size(); ++i)
    if (rules_[i].id == condition_id) return i;
  return std::nullopt;
}

bool Engine::rule_contains(std::size_t rule, std::size_t symptom) const { return membership_[rule][symptom]; }

std::vector<State> Engine::resolve(const ObservationSet& observations) const {
  std::vector<State> states(symptom_ids_.size(), State::Unanswered);
  for (const auto& [id, value] : observations) {
    auto idx = symptom_index(id);
    if (!idx) throw Error(ErrorCode::UnknownSymptomId, "unknown symptom '" + id + "'");
    switch (value.kind) {
      case AnswerKind::Present: states[*idx] = State::Present; break;
      case AnswerKind::Absent: states[*idx] = State::Absent; break;
      case AnswerKind::Unknown: states[*idx] = State::Unknown; break;
      case AnswerKind::Numeric: {
        if (!thresholds_[*idx])
          throw Error(ErrorCode::KindMismatch, "numeric answer for boolean symptom '" + id + "'");
        kbase::Symptom s{id, id, {}, thresholds_[*idx]};
        states[*idx] = map_numeric(s, value) == Presence::Present ? State::Present : State::Absent;
        break;
      }
    }
  }
  return states;
}

Engine::Entry Engine::score_rule(std::size_t rule, const std::vector<State>& states, int present_count) const {
  const Rule& r = rules_[rule];
  double matched = 0.0;
  double answered = 0.0;
  int matched_count = 0;
  for (std::size_t i = 0; i < r.symptoms.size(); ++i) {
    const State st = states[r.symptoms[i]];
    if (st == State::Present) {
      matched += r.weights[i];
      answered += r.weights[i];
      ++matched_count;
    } else if (st == State::Absent) {
      answered += r.weights[i];
    }
  }
  Entry e;
  e.rule = static_cast<int>(rule);
  e.r = matched / r.total_weight;
  e.c = answered / r.total_weight;
  e.p = present_count > 0 ? static_cast<double>(matched_count) / present_count : 0.0;
  e.score = e.r * e.p;
  return e;
}

std::vector<Engine::Entry> Engine::all_entries(const std::vector<State>& states,
                                               const std::vector<bool>* excluded) const {
  const int present = static_cast<int>(std::count(states.begin(), states.end(), State::Present));
  std::vector<Entry> out;
  out.reserve(rules_.size() + 4);
  for (std::size_t r = 0; r < rules_.size(); ++r) {
    if (excluded && (*excluded)[r]) continue;
    out.push_back(score_rule(r, states, present));
  }
  std::vector<int> hits(rules_.size(), 0);
  for (const auto& ind : indicators_) {
    if (states[ind.symptom] != State::Present) continue;
    for (auto c : ind.candidates) ++hits[c];
  }
  for (std::size_t r = 0; r < rules_.size(); ++r) {
    if (hits[r] == 0 || (excluded && (*excluded)[r])) continue;
    Entry e;
    e.rule = static_cast<int>(r);
    e.advisory = true;
    e.score = std::min(kAdvisoryCap, hits[r] * kAdvisoryStep);
    out.push_back(e);
  }
  return out;
}

bool Engine::before(const Entry& a, const Entry& b) const {
  if (a.score != b.score) return a.score > b.score;
  const int oa = rules_[a.rule].id_order;
  const int ob = rules_[b.rule].id_order;
  if (oa != ob) return oa < ob;
  return !a.advisory && b.advisory;
}

std::vector<Engine::Entry> Engine::rank(const std::vector<State>& states, const std::vector<bool>* excluded) const {
  auto entries = all_entries(states, excluded);
  std::sort(entries.begin(), entries.end(), [this](const Entry& a, const Entry& b) { return before(a, b); });
  return entries;
}

std::optional<Engine::Entry> Engine::top(const std::vector<State>& states, const std::vector<bool>* excluded) const {
  auto entries = all_entries(states, excluded);
  if (entries.empty()) return std::nullopt;
  return *std::min_element(entries.begin(), entries.end(),
                           [this](const Entry& a, const Entry& b) { return before(a, b); });
}

std::vector<int> Engine::discrimination(const std::vector<State>& states, int k,
                                        const std::vector<bool>* excluded) const {
  std::vector<int> candidates;
  for (const auto& e : rank(states, excluded)) {
    if (static_cast<int>(candidates.size()) >= k) break;
    if (std::find(candidates.begin(), candidates.end(), e.rule) == candidates.end()) candidates.push_back(e.rule);
  }
  const int n = static_cast<int>(candidates.size());
  std::vector<int> d(symptom_ids_.size(), 0);
  for (std::size_t s = 0; s < symptom_ids_.size(); ++s) {
    int m = 0;
    for (int c : candidates) m += membership_[c][s] ? 1 : 0;
    // Sum over unordered pairs of |1[s in a] - 1[s in b]| = m * (n - m).
    d[s] = m * (n - m);
  }
  return d;
}

std::vector<std::size_t> Engine::discriminating_symptoms(const std::vector<State>& states, int k,
                                                         std::size_t limit,
                                                         const std::vector<bool>* excluded) const {
  std::vector<std::size_t> out;
  const auto current = top(states, excluded);
  if (!current || limit == 0) return out;

  const auto d = discrimination(states, k, excluded);
  std::vector<std::size_t> order;
  for (std::size_t s = 0; s < states.size(); ++s)
    if (states[s] == State::Unanswered) order.push_back(s);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return d[a] > d[b]; });

  // Absent and Unknown answers only move c, never a score, so only a Present
  // answer can change the argmax.
  std::vector<State> probe = states;
  for (auto s : order) {
    probe[s] = State::Present;
    const auto next = top(probe, excluded);
    probe[s] = State::Unanswered;
    if (next && (next->rule != current->rule || next->advisory != current->advisory)) {
      out.push_back(s);
      if (out.size() >= limit) break;
    }
  }
  return out;
}

Engine::Gate Engine::gate(const Entry& top, const TriageThresholds& t) const {
  if (top.advisory) return Gate::Refer;
  if (rules_[top.rule].severity == kbase::Severity::Refer && top.score >= t.tau_refer) return Gate::Refer;
  if (top.score >= t.tau_diag && top.c >= t.tau_conf) return Gate::Diagnose;
  return Gate::Undecided;
}

TriageDecision Engine::triage(const std::vector<State>& states, const TriageThresholds& thresholds,
                              int questions_asked, const std::vector<bool>* excluded) const {
  thresholds.validate();
  const auto entries = rank(states, excluded);
  TriageDecision decision;
  auto fill_top_k = [&] {
    for (std::size_t i = 0; i < entries.size() && i < static_cast<std::size_t>(thresholds.k); ++i)
      decision.top_k.push_back(breakdown(entries[i]));
  };

  if (entries.empty()) {
    decision.kind = DecisionKind::ReferToFacility;
    decision.reason = "no candidate conditions";
    return decision;
  }
  const Entry& best = entries.front();
  switch (gate(best, thresholds)) {
    case Gate::Refer:
      decision.kind = DecisionKind::ReferToFacility;
      decision.reason = best.advisory ? "indicator findings need specialist assessment"
                                      : "condition requires clinical assessment";
      fill_top_k();
      return decision;
    case Gate::Diagnose:
      decision.kind = DecisionKind::Diagnose;
      fill_top_k();
      return decision;
    case Gate::Undecided: break;
  }
  if (questions_asked < thresholds.q_max) {
    const auto suggestions =
        discriminating_symptoms(states, thresholds.k, static_cast<std::size_t>(thresholds.k), excluded);
    if (!suggestions.empty()) {
      decision.kind = DecisionKind::RequestMoreData;
      for (auto s : suggestions) decision.suggested_symptom_ids.push_back(symptom_ids_[s]);
      return decision;
    }
  }
  decision.kind = DecisionKind::ReferToFacility;
  decision.reason = "insufficient certainty at system level";
  fill_top_k();
  return decision;
}

bool Engine::requests_more_data(const std::vector<State>& states, const TriageThresholds& thresholds,
                                int questions_asked, const std::vector<bool>* excluded) const {
  const auto best = top(states, excluded);
  if (!best || gate(*best, thresholds) != Gate::Undecided) return false;
  if (questions_asked >= thresholds.q_max) return false;
  std::vector<State> probe = states;
  for (std::size_t s = 0; s < probe.size(); ++s) {
    if (probe[s] != State::Unanswered) continue;
    probe[s] = State::Present;
    const auto next = top(probe, excluded);
    probe[s] = State::Unanswered;
    if (next && (next->rule != best->rule || next->advisory != best->advisory)) return true;
  }
  return false;
}

ScoreBreakdown Engine::breakdown(const Entry& e) const {
  return ScoreBreakdown{rules_[e.rule].id, e.r, e.p, e.c, e.score, e.advisory, rules_[e.rule].severity};
}

ScoreBreakdown score_condition(const kbase::KnowledgeBase& kb, const kbase::ConditionRule& rule,
                               const ObservationSet& observations) {
  const kbase::KnowledgeBase single(kb.version(), kb.symptoms(), {rule}, {});
  const Engine engine(single);
  const auto states = engine.resolve(observations);
  const auto entries = engine.rank(states);
  for (const auto& e : entries)
    if (!e.advisory) return engine.breakdown(e);
  throw Error(ErrorCode::InvalidParams, "rule could not be scored");
}

std::vector<ScoreBreakdown> rank(const kbase::KnowledgeBase& kb, const ObservationSet& observations) {
  const Engine engine(kb);
  std::vector<ScoreBreakdown> out;
  for (const auto& e : engine.rank(engine.resolve(observations))) out.push_back(engine.breakdown(e));
  return out;
}

TriageDecision triage(const kbase::KnowledgeBase& kb, const ObservationSet& observations,
                      const TriageThresholds& thresholds, int questions_asked,
                      const std::vector<std::string>& excluded_conditions) {
  const Engine engine(kb);
  std::vector<bool> mask(engine.rule_count(), false);
  for (const auto& id : excluded_conditions)
    if (auto r = engine.rule_index(id)) mask[*r] = true;
  return engine.triage(engine.resolve(observations), thresholds, questions_asked, &mask);
}

double blend(double rule_score, double ann_prob, double alpha) {
  auto in_range = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!in_range(rule_score) || !in_range(ann_prob) || !in_range(alpha))
    throw Error(ErrorCode::OutOfRange, "blend inputs must lie in [0, 1]");
  return alpha * rule_score + (1.0 - alpha) * ann_prob;
}

}  // namespace triage::infer
