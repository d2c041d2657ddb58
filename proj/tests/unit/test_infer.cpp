#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "score_oracle.hpp"
#include "toy_kb.hpp"
#include "triage/common/error.hpp"
#include "triage/infer/engine.hpp"
#include "triage/infer/infer_json.hpp"
#include "triage/kbase/seed.hpp"

using namespace triage;
using namespace triage::infer;

namespace {

const std::vector<std::string> kFlu{"runny_stuffy_nose", "postnasal_drip", "throat_clearing_sore_throat",
                                    "hoarseness", "wheezing_shortness_of_breath"};

ObservationSet all_present(const std::vector<std::string>& ids) {
  ObservationSet obs;
  for (const auto& id : ids) obs.add(id, ObservationValue::present());
  return obs;
}

ObservationSet to_observations(const oracle::Answers& answers) {
  ObservationSet obs;
  for (const auto& [id, v] : answers)
    obs.add(id, v == 'P' ? ObservationValue::present()
                         : v == 'A' ? ObservationValue::absent() : ObservationValue::unknown());
  return obs;
}

void expect_same_ranking(const std::vector<ScoreBreakdown>& got, const std::vector<oracle::Scored>& want) {
  ASSERT_EQ(got.size(), want.size());
  for (std::size_t i = 0; i < got.size(); ++i) {
    EXPECT_EQ(got[i].condition_id, want[i].condition_id) << "position " << i;
    EXPECT_EQ(got[i].advisory, want[i].advisory) << "position " << i;
    EXPECT_EQ(got[i].score, want[i].score) << got[i].condition_id;
    EXPECT_EQ(got[i].r, want[i].r) << got[i].condition_id;
    EXPECT_EQ(got[i].p, want[i].p) << got[i].condition_id;
    EXPECT_EQ(got[i].c, want[i].c) << got[i].condition_id;
  }
}

}  // namespace

TEST(Observations, DuplicateAnswerRejected) {
  ObservationSet obs;
  obs.add("fever", ObservationValue::present());
  try {
    obs.add("fever", ObservationValue::absent());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DuplicateAnswer);
  }
  obs.set("fever", ObservationValue::absent());
  EXPECT_EQ(obs.find("fever")->kind, AnswerKind::Absent);
}

TEST(MapNumeric, StrictCutoff) {
  const auto kb = kbase::seed_default();
  const auto& fever = *kb.find_symptom("fever");
  EXPECT_EQ(map_numeric(fever, ObservationValue::numeric(38.5)), Presence::Present);
  EXPECT_EQ(map_numeric(fever, ObservationValue::numeric(38.0)), Presence::Absent);
  EXPECT_EQ(map_numeric(fever, ObservationValue::numeric(36.6)), Presence::Absent);

  kbase::Symptom cold{"low_temp", "Low temperature", {}, kbase::Threshold{"°C", 35.0, kbase::Direction::Below}};
  EXPECT_EQ(map_numeric(cold, ObservationValue::numeric(34.9)), Presence::Present);
  EXPECT_EQ(map_numeric(cold, ObservationValue::numeric(35.0)), Presence::Absent);
}

TEST(MapNumeric, KindMismatch) {
  const auto kb = kbase::seed_default();
  for (auto call : {+[](const kbase::KnowledgeBase& k) { map_numeric(*k.find_symptom("headache"), ObservationValue::numeric(1)); },
                    +[](const kbase::KnowledgeBase& k) { map_numeric(*k.find_symptom("fever"), ObservationValue::present()); }}) {
    try {
      call(kb);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::KindMismatch);
    }
  }
  ObservationSet obs;
  obs.add("headache", ObservationValue::numeric(3));
  EXPECT_THROW(rank(kb, obs), Error);
}

TEST(ScoreCondition, FullFluPresentation) {
  const auto kb = kbase::seed_default();
  const auto obs = all_present(kFlu);
  const auto flu = score_condition(kb, *kb.find_rule("flu"), obs);
  EXPECT_DOUBLE_EQ(flu.score, 1.0);
  EXPECT_DOUBLE_EQ(flu.c, 1.0);
  const auto angina = score_condition(kb, *kb.find_rule("angina"), obs);
  EXPECT_DOUBLE_EQ(angina.r, 1.0);
  EXPECT_DOUBLE_EQ(angina.p, 0.6);
  EXPECT_DOUBLE_EQ(angina.score, 0.6);
}

TEST(ScoreCondition, EmptyObservationsScoreZero) {
  const auto kb = kbase::seed_default();
  for (const auto& rule : kb.condition_rules()) {
    const auto b = score_condition(kb, rule, {});
    EXPECT_EQ(b.r, 0.0);
    EXPECT_EQ(b.p, 0.0);
    EXPECT_EQ(b.c, 0.0);
    EXPECT_EQ(b.score, 0.0);
  }
}

TEST(ScoreCondition, UnknownAnswersLowerConfidenceOnly) {
  const auto kb = kbase::seed_default();
  ObservationSet obs = all_present({kFlu[0], kFlu[1], kFlu[2]});
  obs.add(kFlu[3], ObservationValue::unknown());
  obs.add(kFlu[4], ObservationValue::unknown());
  const auto flu = score_condition(kb, *kb.find_rule("flu"), obs);
  EXPECT_DOUBLE_EQ(flu.r, 0.6);
  EXPECT_DOUBLE_EQ(flu.p, 1.0);
  EXPECT_DOUBLE_EQ(flu.c, 0.6);
  EXPECT_DOUBLE_EQ(flu.score, 0.6);

  // Absent instead of Unknown keeps the score and restores confidence.
  obs.set(kFlu[3], ObservationValue::absent());
  obs.set(kFlu[4], ObservationValue::absent());
  const auto flu2 = score_condition(kb, *kb.find_rule("flu"), obs);
  EXPECT_DOUBLE_EQ(flu2.score, 0.6);
  EXPECT_DOUBLE_EQ(flu2.c, 1.0);
}

TEST(Rank, IndicatorOnlyPutsAdvisoryOnTop) {
  const auto kb = kbase::seed_default();
  const auto ranked = rank(kb, all_present({"purple_striae"}));
  ASSERT_FALSE(ranked.empty());
  EXPECT_EQ(ranked[0].condition_id, "cushing_syndrome");
  EXPECT_TRUE(ranked[0].advisory);
  EXPECT_DOUBLE_EQ(ranked[0].score, 0.3);
  EXPECT_EQ(ranked[1].condition_id, "cushing_syndrome");
  EXPECT_FALSE(ranked[1].advisory);
  EXPECT_DOUBLE_EQ(ranked[1].score, 0.25);
}

TEST(Rank, AdvisoryScoreCapped) {
  // Every indicator Present: hits per candidate accumulate 0.3 each, capped at 0.9.
  const auto kb = kbase::seed_default();
  std::map<std::string, int> hits;
  ObservationSet obs;
  for (const auto& ind : kb.indicator_rules()) {
    obs.add(ind.indicator_symptom_id, ObservationValue::present());
    for (const auto& c : ind.candidate_condition_ids) ++hits[c];
  }
  for (const auto& b : rank(kb, obs)) {
    if (!b.advisory) continue;
    EXPECT_DOUBLE_EQ(b.score, std::min(0.9, 0.3 * hits[b.condition_id])) << b.condition_id;
    EXPECT_LE(b.score, 0.9);
  }
}

TEST(Rank, EmptyObservationsOrderById) {
  const auto kb = kbase::seed_default();
  const auto ranked = rank(kb, {});
  ASSERT_EQ(ranked.size(), kb.condition_rules().size());
  for (std::size_t i = 1; i < ranked.size(); ++i) EXPECT_LT(ranked[i - 1].condition_id, ranked[i].condition_id);
}

TEST(Rank, MatchesOracleOnSeedPresentations) {
  const auto kb = kbase::seed_default();
  std::vector<std::string> ids;
  for (const auto& s : kb.symptoms()) ids.push_back(s.id);
  std::mt19937_64 rng(5);
  for (int t = 0; t < 300; ++t) {
    oracle::Answers answers;
    for (const auto& id : ids) {
      const auto roll = rng() % 10;
      if (roll < 2) answers[id] = 'P';
      else if (roll < 4) answers[id] = 'A';
      else if (roll < 5) answers[id] = 'U';
    }
    expect_same_ranking(rank(kb, to_observations(answers)), oracle::rank(kb, answers));
  }
}

TEST(Rank, ExhaustiveToyEquivalence) {
  const auto kb = fixtures::toy_kb();
  const char states[3] = {'P', 'A', 'U'};
  int checked = 0;
  for (int code = 0; code < 729; ++code) {
    oracle::Answers answers;
    int rest = code;
    for (int s = 1; s <= 6; ++s, rest /= 3) answers["s" + std::to_string(s)] = states[rest % 3];
    expect_same_ranking(rank(kb, to_observations(answers)), oracle::rank(kb, answers));
    ++checked;
  }
  EXPECT_EQ(checked, 729);
}

// Adding a Present answer for a symptom the rule contains never lowers r;
// the rule's score can only fall through p when other symptoms join.
TEST(Properties, RecallMonotoneInPresentAnswers) {
  const auto kb = fixtures::toy_kb();
  const Engine engine(kb);
  std::mt19937_64 rng(9);
  for (int t = 0; t < 500; ++t) {
    std::vector<State> st(engine.symptom_count(), State::Unanswered);
    for (auto& s : st) s = static_cast<State>(rng() % 4);
    const auto before = engine.rank(st);
    const std::size_t flip = rng() % st.size();
    if (st[flip] == State::Present) continue;
    st[flip] = State::Present;
    const auto after = engine.rank(st);
    for (const auto& b : before) {
      if (b.advisory) continue;
      for (const auto& a : after)
        if (!a.advisory && a.rule == b.rule) {
          EXPECT_GE(a.r, b.r);
        }
    }
  }
}

TEST(Properties, ScoresBoundedAndScaleInvariant) {
  const auto kb = fixtures::toy_kb();
  auto scaled_rules = kb.condition_rules();
  for (auto& r : scaled_rules)
    for (auto& ws : r.symptoms) ws.weight *= 3.5;
  const kbase::KnowledgeBase scaled(kb.version(), kb.symptoms(), scaled_rules, kb.indicator_rules());
  const Engine a(kb), b(scaled);
  std::mt19937_64 rng(13);
  for (int t = 0; t < 500; ++t) {
    std::vector<State> st(a.symptom_count());
    for (auto& s : st) s = static_cast<State>(rng() % 4);
    const auto ra = a.rank(st), rb = b.rank(st);
    ASSERT_EQ(ra.size(), rb.size());
    for (std::size_t i = 0; i < ra.size(); ++i) {
      for (double v : {ra[i].r, ra[i].p, ra[i].c, ra[i].score}) {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
      }
      EXPECT_EQ(ra[i].rule, rb[i].rule);
      EXPECT_NEAR(ra[i].score, rb[i].score, 1e-12);
      EXPECT_NEAR(ra[i].c, rb[i].c, 1e-12);
    }
  }
}

TEST(Triage, FullFluDiagnoses) {
  const auto kb = kbase::seed_default();
  const auto d = infer::triage(kb, all_present(kFlu), {}, 5);
  EXPECT_EQ(d.kind, DecisionKind::Diagnose);
  ASSERT_FALSE(d.top_k.empty());
  EXPECT_EQ(d.top_k[0].condition_id, "flu");
  EXPECT_LE(d.top_k.size(), 3u);
}

TEST(Triage, EmptyRequestsMoreData) {
  const auto kb = kbase::seed_default();
  const auto d = infer::triage(kb, {}, {}, 0);
  EXPECT_EQ(d.kind, DecisionKind::RequestMoreData);
  EXPECT_FALSE(d.suggested_symptom_ids.empty());
  EXPECT_LE(d.suggested_symptom_ids.size(), 3u);
}

TEST(Triage, IndicatorRefers) {
  const auto kb = kbase::seed_default();
  const auto d = infer::triage(kb, all_present({"neck_swelling_pain"}), {}, 1);
  EXPECT_EQ(d.kind, DecisionKind::ReferToFacility);
  ASSERT_FALSE(d.top_k.empty());
  EXPECT_EQ(d.top_k[0].condition_id, "goiter");
}

TEST(Triage, QuestionBudgetExhaustedRefers) {
  const auto kb = kbase::seed_default();
  TriageThresholds t;
  t.q_max = 2;
  const auto d = infer::triage(kb, all_present({"headache"}), t, 2);
  EXPECT_EQ(d.kind, DecisionKind::ReferToFacility);
  EXPECT_EQ(d.reason, "insufficient certainty at system level");
}

TEST(Triage, ExcludedConditionsLeaveRanking) {
  const auto kb = kbase::seed_default();
  const auto d = infer::triage(kb, all_present(kFlu), {}, 5, {"flu"});
  for (const auto& b : d.top_k) EXPECT_NE(b.condition_id, "flu");
}

TEST(Triage, InvalidThresholds) {
  TriageThresholds t;
  t.k = 0;
  try {
    infer::triage(kbase::seed_default(), {}, t, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidParams);
  }
}

TEST(Triage, SuggestionsChangeTheLeader) {
  const auto kb = fixtures::toy_kb();
  const Engine engine(kb);
  std::mt19937_64 rng(21);
  for (int t = 0; t < 300; ++t) {
    std::vector<State> st(engine.symptom_count());
    for (auto& s : st) s = static_cast<State>(rng() % 4);
    const auto d = engine.triage(st, {}, 0);
    EXPECT_EQ(d.kind == DecisionKind::RequestMoreData, engine.requests_more_data(st, {}, 0));
    if (d.kind != DecisionKind::RequestMoreData) continue;
    const auto leader = *engine.top(st);
    const auto dscore = engine.discrimination(st, 3);
    int prev = 1 << 20;
    for (const auto& id : d.suggested_symptom_ids) {
      const auto idx = *engine.symptom_index(id);
      EXPECT_EQ(st[idx], State::Unanswered);
      EXPECT_LE(dscore[idx], prev);
      prev = dscore[idx];
      auto probe = st;
      probe[idx] = State::Present;
      const auto next = *engine.top(probe);
      EXPECT_TRUE(next.rule != leader.rule || next.advisory != leader.advisory);
    }
  }
}

TEST(Triage, SeverityGuardOnToyKb) {
  const auto kb = fixtures::toy_kb();
  const Engine engine(kb);
  const TriageThresholds t;
  for (int code = 0; code < 4096; ++code) {
    std::vector<State> st(6);
    int rest = code;
    for (auto& s : st) { s = static_cast<State>(rest % 4); rest /= 4; }
    const auto d = engine.triage(st, t, 0);
    const auto top = *engine.top(st);
    if (top.advisory || (engine.severity(top.rule) == kbase::Severity::Refer && top.score >= t.tau_refer)) {
      EXPECT_EQ(d.kind, DecisionKind::ReferToFacility);
    }
  }
}

TEST(Blend, LinearMix) {
  EXPECT_DOUBLE_EQ(blend(0.6, 1.0), 0.8);
  EXPECT_DOUBLE_EQ(blend(0.6, 1.0, 1.0), 0.6);
  EXPECT_DOUBLE_EQ(blend(0.6, 0.2, 0.25), 0.3);
  try {
    blend(1.2, 0.5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::OutOfRange);
  }
  EXPECT_THROW(blend(0.5, 0.5, -0.1), Error);
}

TEST(InferJson, DecisionShape) {
  const auto kb = kbase::seed_default();
  const nlohmann::json diag = infer::triage(kb, all_present(kFlu), {}, 5);
  EXPECT_EQ(diag["kind"], "Diagnose");
  EXPECT_EQ(diag["top_k"][0]["condition_id"], "flu");
  EXPECT_DOUBLE_EQ(diag["summary"]["diagnosis_score"].get<double>(), 1.0);

  const nlohmann::json more = infer::triage(kb, {}, {}, 0);
  EXPECT_EQ(more["kind"], "RequestMoreData");
  EXPECT_TRUE(more["suggested_symptom_ids"].is_array());
  EXPECT_FALSE(more.contains("top_k"));
}

TEST(InferJson, TranscriptRoundTrip) {
  const auto j = nlohmann::json::parse(R"([{"symptom_id":"fever","value":{"Numeric":38.5}},
                                           {"symptom_id":"fever2","value":37},
                                           {"symptom_id":"headache","value":"Present"}])");
  const auto t = transcript_from_json(j);
  ASSERT_EQ(t.size(), 3u);
  EXPECT_EQ(t[0].value, ObservationValue::numeric(38.5));
  EXPECT_EQ(t[1].value, ObservationValue::numeric(37));
  EXPECT_EQ(t[2].value, ObservationValue::present());
  EXPECT_EQ(transcript_from_json(transcript_to_json(t))[2].value, t[2].value);
  EXPECT_THROW(transcript_from_json(nlohmann::json::parse(R"([{"symptom_id":"x","value":"Maybe"}])")), Error);
}
