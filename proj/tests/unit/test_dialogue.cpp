#include <gtest/gtest.h>

#include <algorithm>
#include <chrono>
#include <set>

#include "toy_kb.hpp"
#include "triage/common/error.hpp"
#include "triage/dialogue/planning.hpp"
#include "triage/dialogue/session.hpp"
#include "triage/dialogue/session_json.hpp"
#include "triage/infer/infer_json.hpp"
#include "triage/kbase/seed.hpp"

using namespace triage;
using namespace triage::dialogue;
using infer::ObservationValue;

namespace {

const std::vector<std::string> kFlu{"runny_stuffy_nose", "postnasal_drip", "throat_clearing_sore_throat",
                                    "hoarseness", "wheezing_shortness_of_breath"};

template <typename F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::NotFound;
}

// Reference D(s) straight from the definition: the sum over unordered pairs of
// the top-k distinct candidates of |1[s in a] - 1[s in b]|.
std::map<std::string, int> pairwise_d(const kbase::KnowledgeBase& kb, const std::vector<std::string>& top) {
  std::map<std::string, int> d;
  for (const auto& s : kb.symptoms()) {
    int sum = 0;
    for (std::size_t a = 0; a < top.size(); ++a)
      for (std::size_t b = a + 1; b < top.size(); ++b)
        sum += kb.find_rule(top[a])->contains(s.id) != kb.find_rule(top[b])->contains(s.id);
    d[s.id] = sum;
  }
  return d;
}

// Cost of one order simulated patient by patient through the session API.
double session_cost(const kbase::KnowledgeBase& kb, const infer::TriageThresholds& t,
                    const std::vector<std::string>& order, int population, std::uint64_t seed) {
  const infer::Engine engine(kb);
  const auto patients = sample_population(kb, engine, population, seed);
  double total = 0;
  for (const auto& p : patients) {
    auto s = start_session({}, Planned{order});
    while (auto q = next_question(s, kb, t)) {
      const bool present = p.truth[*engine.symptom_index(*q)] == infer::State::Present;
      submit_answer(s, kb, *q, present ? ObservationValue::present() : ObservationValue::absent());
    }
    total += static_cast<double>(s.asked.size());
  }
  return total / population;
}

}  // namespace

TEST(Session, StartIsEmptyAndIdsDistinct) {
  const auto a = start_session({}, Greedy{});
  const auto b = start_session({}, Greedy{});
  EXPECT_TRUE(a.observations.empty());
  EXPECT_TRUE(a.asked.empty());
  EXPECT_TRUE(a.active());
  EXPECT_NE(a.session_id, b.session_id);
  EXPECT_EQ(a.session_id.size(), 32u);
}

TEST(Session, GreedyFirstQuestionMatchesPairwiseDefinition) {
  const auto kb = kbase::seed_default();
  // Empty observations: every rule scores 0, so the top 3 are the first ids.
  std::vector<std::string> ids;
  for (const auto& r : kb.condition_rules()) ids.push_back(r.condition_id);
  std::sort(ids.begin(), ids.end());
  const auto d = pairwise_d(kb, {ids[0], ids[1], ids[2]});
  std::string expected;
  int best = -1;
  for (const auto& [id, v] : d)  // std::map iterates ids ascending
    if (v > best) best = v, expected = id;

  const auto s = start_session({}, Greedy{});
  const auto q = next_question(s, kb, {});
  ASSERT_TRUE(q);
  EXPECT_EQ(*q, expected);
  EXPECT_EQ(best, 2);
}

TEST(Session, GreedyDiscriminationZeroForSharedOrAbsentSymptoms) {
  const auto kb = fixtures::toy_kb();
  const infer::Engine engine(kb);
  std::vector<infer::State> st(engine.symptom_count(), infer::State::Unanswered);
  st[*engine.symptom_index("s2")] = infer::State::Present;
  const auto ranked = engine.rank(st);
  std::vector<std::string> top;
  for (const auto& e : ranked) {
    const auto& id = engine.condition_id(e.rule);
    if (std::find(top.begin(), top.end(), id) == top.end()) top.push_back(id);
    if (top.size() == 3) break;
  }
  const auto want = pairwise_d(kb, top);
  const auto got = engine.discrimination(st, 3);
  for (std::size_t s = 0; s < engine.symptom_count(); ++s) {
    EXPECT_EQ(got[s], want.at(engine.symptom_id(s))) << engine.symptom_id(s);
    int in = 0;
    for (const auto& c : top) in += kb.find_rule(c)->contains(engine.symptom_id(s));
    if (in == 0 || in == static_cast<int>(top.size())) {
      EXPECT_EQ(got[s], 0);
    }
  }
}

TEST(Session, PlannedSkipsAnswered) {
  const auto kb = kbase::seed_default();
  auto s = start_session({}, Planned{{"fever", "headache", "sweating"}});
  submit_answer(s, kb, "fever", ObservationValue::numeric(37.0));
  EXPECT_EQ(next_question(s, kb, {}), "headache");
}

TEST(Session, RandomPolicyIsSeeded) {
  const auto kb = kbase::seed_default();
  auto a = start_session({}, Random{42});
  auto b = start_session({}, Random{42});
  for (int i = 0; i < 4; ++i) {
    const auto qa = next_question(a, kb, {});
    const auto qb = next_question(b, kb, {});
    ASSERT_EQ(qa, qb);
    if (!qa) break;
    EXPECT_FALSE(a.observations.contains(*qa));
    submit_answer(a, kb, *qa, ObservationValue::absent());
    submit_answer(b, kb, *qb, ObservationValue::absent());
  }
}

TEST(Session, NoQuestionOnceDiagnosable) {
  const auto kb = kbase::seed_default();
  auto s = start_session({}, Greedy{});
  for (const auto& id : kFlu) submit_answer(s, kb, id, ObservationValue::present());
  EXPECT_FALSE(next_question(s, kb, {}));
}

TEST(Session, AnswerErrors) {
  const auto kb = kbase::seed_default();
  auto s = start_session({}, Greedy{});
  submit_answer(s, kb, "fever", ObservationValue::numeric(39.1));
  EXPECT_EQ(code_of([&] { submit_answer(s, kb, "fever", ObservationValue::present()); }), ErrorCode::DuplicateAnswer);
  EXPECT_EQ(code_of([&] { submit_answer(s, kb, "no_such", ObservationValue::present()); }),
            ErrorCode::UnknownSymptomId);
  EXPECT_EQ(code_of([&] { submit_answer(s, kb, "headache", ObservationValue::numeric(2)); }),
            ErrorCode::KindMismatch);
  EXPECT_EQ(s.asked, std::vector<std::string>{"fever"});
  // Numeric fever is read as Present when scored.
  const infer::Engine engine(kb);
  EXPECT_EQ(engine.resolve(s.observations)[*engine.symptom_index("fever")], infer::State::Present);
}

TEST(Session, UnknownAnswerLowersConfidence) {
  const auto kb = kbase::seed_default();
  auto s = start_session({}, Greedy{});
  submit_answer(s, kb, kFlu[0], ObservationValue::present());
  submit_answer(s, kb, kFlu[1], ObservationValue::unknown());
  const auto ranked = infer::rank(kb, s.observations);
  const auto flu = std::find_if(ranked.begin(), ranked.end(), [](auto& b) { return b.condition_id == "flu"; });
  EXPECT_DOUBLE_EQ(flu->c, 0.2);
}

TEST(Session, FinalizeOutcomes) {
  const auto kb = kbase::seed_default();
  auto flu = start_session({}, Greedy{});
  for (const auto& id : kFlu) submit_answer(flu, kb, id, ObservationValue::present());
  const auto& d = finalize(flu, kb, {});
  EXPECT_EQ(d.kind, infer::DecisionKind::Diagnose);
  EXPECT_EQ(d.top_k.at(0).condition_id, "flu");
  EXPECT_FALSE(flu.active());
  EXPECT_EQ(code_of([&] { finalize(flu, kb, {}); }), ErrorCode::SessionFinalized);
  EXPECT_EQ(code_of([&] { submit_answer(flu, kb, "fever", ObservationValue::present()); }),
            ErrorCode::SessionFinalized);
  EXPECT_EQ(code_of([&] { next_question(flu, kb, {}); }), ErrorCode::SessionFinalized);

  auto goiter = start_session({}, Greedy{});
  submit_answer(goiter, kb, "neck_swelling_pain", ObservationValue::present());
  EXPECT_EQ(finalize(goiter, kb, {}).kind, infer::DecisionKind::ReferToFacility);
}

TEST(Session, ChronicConditionExcludedFromDiagnosis) {
  const auto kb = kbase::seed_default();
  const auto* diabetes = kb.find_rule("diabetes");
  store::Profile chronic{"u1", {"diabetes"}, {}, std::nullopt};
  auto with = start_session(chronic, Greedy{});
  auto without = start_session({}, Greedy{});
  for (const auto& ws : diabetes->symptoms) {
    submit_answer(with, kb, ws.symptom_id, ObservationValue::present());
    submit_answer(without, kb, ws.symptom_id, ObservationValue::present());
  }
  const auto plain = finalize(without, kb, {});
  EXPECT_EQ(plain.top_k.at(0).condition_id, "diabetes");
  const auto d = finalize(with, kb, {});
  for (const auto& b : d.top_k) EXPECT_NE(b.condition_id, "diabetes");
}

TEST(Session, MediaInjectionForcesReferral) {
  const auto kb = kbase::with_media_extension(kbase::seed_default());
  auto s = start_session({}, Greedy{});
  for (const auto& id : kFlu) submit_answer(s, kb, id, ObservationValue::present());
  inject_observation(s, kb, kbase::media_symptoms::kAcneLesions, true);
  EXPECT_TRUE(s.asked.size() == kFlu.size());
  const auto& d = finalize(s, kb, {});
  EXPECT_EQ(d.kind, infer::DecisionKind::ReferToFacility);
  EXPECT_FALSE(d.top_k.empty());
  EXPECT_EQ(code_of([&] { inject_observation(s, kb, kbase::media_symptoms::kMeaslesRash, true); }),
            ErrorCode::SessionFinalized);
}

TEST(Session, GreedyTerminatesWithinBudget) {
  const auto kb = kbase::seed_default();
  const infer::Engine engine(kb);
  const infer::TriageThresholds t;
  for (const auto& p : sample_population(kb, engine, 120, 7)) {
    auto s = start_session({}, Greedy{});
    int guard = 0;
    while (auto q = next_question(s, kb, t)) {
      const bool present = p.truth[*engine.symptom_index(*q)] == infer::State::Present;
      submit_answer(s, kb, *q, present ? ObservationValue::present() : ObservationValue::absent());
      ASSERT_LT(++guard, 100);
    }
    EXPECT_LE(static_cast<int>(s.asked.size()), t.q_max);
    EXPECT_NE(finalize(s, kb, t).kind, infer::DecisionKind::RequestMoreData);
  }
}

TEST(Session, ReplayIsByteIdentical) {
  const auto kb = kbase::seed_default();
  const auto transcript = infer::transcript_from_json(nlohmann::json::parse(R"([
    {"symptom_id":"runny_stuffy_nose","value":"Present"},
    {"symptom_id":"fever","value":{"Numeric":38.4}},
    {"symptom_id":"postnasal_drip","value":"Unknown"},
    {"symptom_id":"hoarseness","value":"Present"}])"));
  std::string first;
  for (int run = 0; run < 3; ++run) {
    auto s = start_session({}, Greedy{});
    for (const auto& o : transcript) submit_answer(s, kb, o.symptom_id, o.value);
    const std::string out = nlohmann::json(finalize(s, kb, {})).dump();
    if (run == 0) first = out;
    EXPECT_EQ(out, first);
  }
}

TEST(Session, JsonRoundTrip) {
  const auto kb = kbase::seed_default();
  auto s = start_session({"u7", {"diabetes"}, {"pollen"}, 1980}, Planned{{"fever", "headache"}});
  submit_answer(s, kb, "fever", ObservationValue::numeric(38.5));
  submit_answer(s, kb, "headache", ObservationValue::unknown());
  auto active = session_from_json(session_to_json(s));
  EXPECT_EQ(session_to_json(active), session_to_json(s));
  finalize(s, kb, {});
  const auto restored = session_from_json(session_to_json(s));
  EXPECT_FALSE(restored.active());
  EXPECT_EQ(session_to_json(restored).dump(), session_to_json(s).dump());
  EXPECT_EQ(restored.observations, s.observations);
  EXPECT_EQ(restored.profile_snapshot, s.profile_snapshot);
}

TEST(Planning, EvaluatorMatchesSessionSimulation) {
  const auto kb = fixtures::toy_kb();
  const infer::TriageThresholds t;
  OrderEvaluator eval(kb, t, 150, 3);
  for (const std::vector<std::string>& order :
       {std::vector<std::string>{"s1", "s2", "s3", "s4", "s5", "s6"}, {"s6", "s5", "s4", "s3", "s2", "s1"},
        {"s3", "s5", "s1", "s6", "s2", "s4"}}) {
    EXPECT_NEAR(eval.cost(order), session_cost(kb, t, order, 150, 3), 1e-12);
  }
  const auto seed = kbase::seed_default();
  OrderEvaluator seed_eval(seed, t, 60, 11);
  std::vector<std::string> ids;
  for (const auto& s : seed.symptoms()) ids.push_back(s.id);
  EXPECT_NEAR(seed_eval.cost(ids), session_cost(seed, t, ids, 60, 11), 1e-12);
}

TEST(Planning, CostAtLeastOneOnSeed) {
  const auto kb = kbase::seed_default();
  OrderEvaluator eval(kb, {}, 50, 1);
  std::vector<std::string> ids;
  for (const auto& s : kb.symptoms()) ids.push_back(s.id);
  EXPECT_GE(eval.cost(ids), 1.0);
}

TEST(Planning, SingleConditionCostBounded) {
  using namespace kbase;
  KnowledgeBase kb(1, {{"a", "A", {}, std::nullopt}, {"b", "B", {}, std::nullopt}, {"c", "C", {}, std::nullopt}},
                   {{"only", "Only", Severity::SelfCare, {{"a", 1}, {"b", 1}, {"c", 1}}, ""}}, {});
  AcoParams p;
  p.iterations = 5;
  const auto r = plan_question_order_aco(kb, {}, p);
  EXPECT_LE(r.expected_cost, 3.0);
  EXPECT_EQ(r.order.size(), 3u);
}

TEST(Planning, BruteForceLimits) {
  using namespace kbase;
  KnowledgeBase two(1, {{"a", "A", {}, std::nullopt}, {"b", "B", {}, std::nullopt}},
                    {{"x", "X", Severity::SelfCare, {{"a", 1}}, ""}, {"y", "Y", Severity::SelfCare, {{"b", 1}}, ""}},
                    {});
  EXPECT_EQ(brute_force_best_order(two, {}, 1).orderings_evaluated, 2u);

  std::vector<Symptom> nine;
  std::vector<WeightedSymptom> all;
  for (int i = 0; i < 9; ++i) {
    nine.push_back({"s" + std::to_string(i), "S", {}, std::nullopt});
    all.push_back({"s" + std::to_string(i), 1.0});
  }
  KnowledgeBase big(1, nine, {{"x", "X", Severity::SelfCare, all, ""}}, {});
  EXPECT_EQ(code_of([&] { brute_force_best_order(big, {}, 1); }), ErrorCode::TooLarge);
}

TEST(Planning, BruteForceSharesCostModel) {
  const auto kb = fixtures::toy_kb();
  const auto best = brute_force_best_order(kb, {}, 5);
  OrderEvaluator eval(kb, {}, 200, 5);
  EXPECT_DOUBLE_EQ(eval.cost(best.order), best.expected_cost);
  EXPECT_EQ(best.orderings_evaluated, 720u);
}

TEST(Planning, AcoDeterministicMonotoneAndNearOptimal) {
  const auto kb = fixtures::toy_kb();
  AcoParams p;
  p.seed = 9;
  p.iterations = 40;
  const auto a = plan_question_order_aco(kb, {}, p);
  const auto b = plan_question_order_aco(kb, {}, p);
  EXPECT_EQ(a.order, b.order);
  EXPECT_EQ(a.expected_cost, b.expected_cost);
  ASSERT_EQ(a.best_curve.size(), 40u);
  for (std::size_t i = 1; i < a.best_curve.size(); ++i) EXPECT_LE(a.best_curve[i], a.best_curve[i - 1]);
  std::set<std::string> unique(a.order.begin(), a.order.end());
  EXPECT_EQ(unique.size(), 6u);
  const auto opt = brute_force_best_order(kb, {}, 9);
  EXPECT_LE(a.expected_cost, opt.expected_cost * 1.05);
  EXPECT_GE(a.expected_cost, opt.expected_cost);
}

TEST(Planning, InvalidParams) {
  AcoParams p;
  p.rho = 1.0;
  EXPECT_EQ(code_of([&] { plan_question_order_aco(fixtures::toy_kb(), {}, p); }), ErrorCode::InvalidParams);
  p = {};
  p.ants = 0;
  EXPECT_EQ(code_of([&] { plan_question_order_aco(fixtures::toy_kb(), {}, p); }), ErrorCode::InvalidParams);
}

TEST(Planning, SeedKbRunsQuickly) {
  const auto kb = kbase::seed_default();
  AcoParams p;
  p.iterations = 10;
  const auto start = std::chrono::steady_clock::now();
  const auto r = plan_question_order_aco(kb, {}, p);
  const auto secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  EXPECT_EQ(r.order.size(), kb.symptoms().size());
  EXPECT_LE(r.expected_cost, 12.0);
  EXPECT_LT(secs, 30.0);
}
