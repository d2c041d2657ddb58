#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "triage/common/error.hpp"
#include "triage/infer/engine.hpp"
#include "triage/kbase/seed.hpp"
#include "triage/learn/dataset.hpp"
#include "triage/learn/kmeans.hpp"
#include "triage/learn/mlp.hpp"
#include "triage/learn/pso.hpp"

using namespace triage;
using namespace triage::learn;

namespace {

Dataset daily(int n, double noise, std::uint64_t seed) {
  return generate_synthetic_cases(kbase::seed_default(), n, noise, seed, kbase::daily_condition_ids());
}

Layout layout_for(const Dataset& d) { return {d.symptom_ids.size(), 16, d.condition_ids.size()}; }

}  // namespace

TEST(Dataset, ZeroNoiseRowsAreRuleVectors) {
  const auto kb = kbase::seed_default();
  const auto d = generate_synthetic_cases(kb, 3, 0.0, 1);
  ASSERT_EQ(d.size(), 3 * kb.condition_rules().size());
  for (std::size_t r = 0; r < d.size(); ++r) {
    const auto* rule = kb.find_rule(d.condition_ids[static_cast<std::size_t>(d.labels[r])]);
    for (std::size_t s = 0; s < d.symptom_ids.size(); ++s)
      EXPECT_EQ(d.inputs[r][s], rule->contains(d.symptom_ids[s]) ? 1.0 : 0.0);
  }
}

TEST(Dataset, DeterministicAndBalanced) {
  const auto a = daily(200, 0.1, 77);
  const auto b = daily(200, 0.1, 77);
  EXPECT_EQ(a.inputs, b.inputs);
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_EQ(a.size(), 1400u);
  std::vector<int> hist(7, 0);
  for (int l : a.labels) ++hist[static_cast<std::size_t>(l)];
  for (int h : hist) EXPECT_EQ(h, 200);
  EXPECT_NE(daily(200, 0.1, 78).inputs, a.inputs);
}

TEST(Dataset, NoiseRateIsRespected) {
  const auto kb = kbase::seed_default();
  const auto d = generate_synthetic_cases(kb, 400, 0.2, 5, kbase::daily_condition_ids());
  double in_rule = 0, in_total = 0, off_rule = 0, off_total = 0;
  for (std::size_t r = 0; r < d.size(); ++r) {
    const auto* rule = kb.find_rule(d.condition_ids[static_cast<std::size_t>(d.labels[r])]);
    for (std::size_t s = 0; s < d.symptom_ids.size(); ++s) {
      if (rule->contains(d.symptom_ids[s])) {
        in_rule += d.inputs[r][s];
        ++in_total;
      } else {
        off_rule += d.inputs[r][s];
        ++off_total;
      }
    }
  }
  EXPECT_NEAR(in_rule / in_total, 0.8, 0.02);
  EXPECT_NEAR(off_rule / off_total, 0.1, 0.01);
}

TEST(Dataset, InvalidArguments) {
  const auto kb = kbase::seed_default();
  EXPECT_THROW(generate_synthetic_cases(kb, 0, 0.1, 1), Error);
  EXPECT_THROW(generate_synthetic_cases(kb, 1, 1.5, 1), Error);
  EXPECT_THROW(generate_synthetic_cases(kb, 1, 0.1, 1, {"nope"}), Error);
}

TEST(Dataset, EncodingAndJson) {
  const auto kb = kbase::seed_default();
  infer::ObservationSet obs;
  obs.add("fever", infer::ObservationValue::numeric(39));
  obs.add("headache", infer::ObservationValue::absent());
  obs.add("sweating", infer::ObservationValue::unknown());
  const auto x = encode_observations(kb, {"fever", "headache", "sweating", "fatigue"}, obs);
  EXPECT_EQ(x, (std::vector<double>{1.0, 0.0, 0.5, 0.5}));

  const auto d = daily(2, 0.1, 3);
  const auto back = dataset_from_json(dataset_to_json(d));
  EXPECT_EQ(back.inputs, d.inputs);
  EXPECT_EQ(back.labels, d.labels);
  EXPECT_EQ(back.condition_ids, d.condition_ids);
}

TEST(Mlp, HandComputedForward) {
  // 2-2-2 net: hidden pre-activations are 0 and ln 3, so h = (0.5, 0.75);
  // logits (0.5, 0.75 + 0.25) differ by 0.5, p0 = 1 / (1 + e^0.5).
  Mlp m = Mlp::zeros({2, 2, 2});
  m.w1 = {1, -1, 0, 0};
  m.b1 = {0, std::log(3.0)};
  m.w2 = {1, 0, 0, 1};
  m.b2 = {0, 0.25};
  const auto p = forward(m, {0.4, 0.4});
  EXPECT_NEAR(p[0], 1.0 / (1.0 + std::exp(0.5)), 1e-12);
  EXPECT_NEAR(p[0] + p[1], 1.0, 1e-12);
}

TEST(Mlp, SoftmaxNormalizedAndZeroWeightsUniform) {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 50; ++t) {
    const Layout l{1 + rng() % 10, 1 + rng() % 20, 2 + rng() % 6};
    const auto m = Mlp::random(l, rng());
    std::vector<double> x(l.input_dim);
    for (auto& v : x) v = static_cast<double>(rng() % 3) / 2.0;
    const auto p = forward(m, x);
    EXPECT_NEAR(std::accumulate(p.begin(), p.end(), 0.0), 1.0, 1e-9);
    for (double v : p) {
      EXPECT_GT(v, 0.0);
      EXPECT_LT(v, 1.0);
    }
    for (double v : forward(Mlp::zeros(l), x)) EXPECT_NEAR(v, 1.0 / static_cast<double>(l.output_dim), 1e-15);
  }
  EXPECT_THROW(forward(Mlp::zeros({3, 4, 2}), {1.0, 0.0}), Error);
}

TEST(Mlp, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(2024);
  for (int t = 0; t < 20; ++t) {
    const Layout l{2 + rng() % 8, 2 + rng() % 16, 2 + rng() % 5};
    const auto m = Mlp::random(l, 1000 + static_cast<std::uint64_t>(t));
    std::vector<double> x(l.input_dim);
    for (auto& v : x) v = static_cast<double>(rng() % 3) / 2.0;
    const int label = static_cast<int>(rng() % l.output_dim);
    EXPECT_LE(numeric_gradient_check(m, x, label), 1e-4) << "config " << t;
    EXPECT_LE(numeric_gradient_check(m, std::vector<double>(l.input_dim, 0.0), label), 1e-4);
  }
  try {
    numeric_gradient_check(Mlp::random({2, 2, 2}, 1), {0, 0}, 0, 0.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidParams);
  }
}

TEST(Mlp, CrossEntropyNonNegative) {
  const auto d = daily(5, 0.3, 4);
  for (std::uint64_t s = 0; s < 10; ++s) EXPECT_GE(loss(Mlp::random(layout_for(d), s), d), 0.0);
}

TEST(Backprop, ZeroEpochsLeavesModel) {
  const auto d = daily(2, 0.0, 1);
  const auto m = Mlp::random(layout_for(d), 3);
  const auto r = train_backprop(m, d, 0, 0.5);
  EXPECT_EQ(r.mlp, m);
  EXPECT_TRUE(r.loss_curve.empty());
}

TEST(Backprop, LearnsZeroNoiseSeedData) {
  const auto d = daily(50, 0.0, 8);
  const auto r = train_backprop(layout_for(d), d, 500, 0.5, 8);
  ASSERT_EQ(r.loss_curve.size(), 500u);
  for (double v : r.loss_curve) ASSERT_TRUE(std::isfinite(v));
  EXPECT_GE(accuracy(r.mlp, d), 0.99);
  EXPECT_LT(r.loss_curve.back(), r.loss_curve.front());
  const auto again = train_backprop(layout_for(d), d, 500, 0.5, 8);
  EXPECT_EQ(again.mlp, r.mlp);
}

TEST(Backprop, AgreesWithRuleEngineOnCleanRows) {
  const auto kb = kbase::seed_default();
  const auto d = daily(20, 0.0, 12);
  const auto r = train_backprop(layout_for(d), d, 500, 0.5, 12);
  std::size_t agree = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    infer::ObservationSet obs;
    for (std::size_t s = 0; s < d.symptom_ids.size(); ++s)
      if (d.inputs[i][s] == 1.0) obs.add(d.symptom_ids[s], infer::ObservationValue::present());
    const auto ranked = infer::rank(kb, obs);
    const auto truth = d.condition_ids[static_cast<std::size_t>(d.labels[i])];
    agree += ranked.front().condition_id == truth && d.condition_ids[predict(r.mlp, d.inputs[i])] == truth;
  }
  EXPECT_GE(static_cast<double>(agree) / static_cast<double>(d.size()), 0.99);
}

TEST(Pso, MonotoneAndImproves) {
  const auto d = daily(5, 0.0, 1);
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    PsoParams p;
    p.seed = seed;
    p.iterations = 60;
    const auto r = train_pso(layout_for(d), d, p);
    ASSERT_EQ(r.gbest_curve.size(), 61u);
    for (std::size_t i = 1; i < r.gbest_curve.size(); ++i) EXPECT_LE(r.gbest_curve[i], r.gbest_curve[i - 1]);
    EXPECT_LT(r.gbest_curve.back(), r.gbest_curve.front());
    EXPECT_DOUBLE_EQ(loss(r.mlp, d), r.gbest_curve.back());
    for (double v : r.mlp.parameters()) EXPECT_TRUE(std::isfinite(v));
  }
}

TEST(Pso, DegenerateSwarmKeepsGbest) {
  const auto d = daily(3, 0.0, 1);
  PsoParams p;
  p.swarm = 1;
  p.c1 = p.c2 = 0.0;
  p.iterations = 20;
  const auto r = train_pso(layout_for(d), d, p);
  for (double v : r.gbest_curve) EXPECT_EQ(v, r.gbest_curve.front());
}

TEST(Pso, DeterministicAndValidated) {
  const auto d = daily(3, 0.0, 1);
  PsoParams p;
  p.iterations = 10;
  p.seed = 4;
  EXPECT_EQ(train_pso(layout_for(d), d, p).mlp, train_pso(layout_for(d), d, p).mlp);
  p.inertia = 1.0;
  EXPECT_THROW(train_pso(layout_for(d), d, p), Error);
}

TEST(KMeans, SingleClusterIsMean) {
  const std::vector<std::vector<double>> pts{{0, 0}, {2, 0}, {4, 3}, {2, 5}};
  const auto r = kmeans(pts, 1, 100, 3);
  EXPECT_NEAR(r.centroids[0][0], 2.0, 1e-12);
  EXPECT_NEAR(r.centroids[0][1], 2.0, 1e-12);
  // Squared deviations from (2,2): 8 + 4 + 5 + 9.
  EXPECT_NEAR(r.inertia, 26.0, 1e-12);
}

TEST(KMeans, RecoversSeparatedBlobs) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> noise(0.0, 0.3);
  std::vector<std::vector<double>> pts;
  std::vector<int> truth;
  for (int i = 0; i < 60; ++i) {
    const int blob = i % 2;
    pts.push_back({blob * 20.0 + noise(rng), blob * -15.0 + noise(rng)});
    truth.push_back(blob);
  }
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto r = kmeans(pts, 2, 100, seed);
    const int flip = r.assignments[0] != truth[0];
    for (std::size_t i = 0; i < pts.size(); ++i) EXPECT_EQ(r.assignments[i] ^ flip, truth[i]);
  }
}

TEST(KMeans, InertiaNonIncreasingAndDeterministic) {
  std::mt19937_64 rng(8);
  for (int run = 0; run < 50; ++run) {
    std::vector<std::vector<double>> pts(80, std::vector<double>(3));
    for (auto& p : pts)
      for (auto& v : p) v = static_cast<double>(rng() % 1000) / 100.0;
    const int k = 2 + run % 6;
    const auto r = kmeans(pts, k, 100, static_cast<std::uint64_t>(run));
    for (std::size_t i = 1; i < r.inertia_history.size(); ++i)
      EXPECT_LE(r.inertia_history[i], r.inertia_history[i - 1] + 1e-9);
    for (int a : r.assignments) EXPECT_LT(a, k);
    EXPECT_GE(r.inertia, 0.0);
    EXPECT_EQ(kmeans(pts, k, 100, static_cast<std::uint64_t>(run)).assignments, r.assignments);
  }
}

TEST(KMeans, TooFewDistinctRows) {
  try {
    kmeans({{1, 1}, {1, 1}, {2, 2}}, 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::TooFewPoints);
  }
}

TEST(ModelJson, RoundTrip) {
  const auto m = Mlp::random({5, 4, 3}, 9);
  const auto j = mlp_to_json(m);
  EXPECT_EQ(j["format_version"], 1);
  EXPECT_EQ(j["w1"].size(), 4u);
  EXPECT_EQ(j["w1"][0].size(), 5u);
  EXPECT_EQ(mlp_from_json(nlohmann::json::parse(j.dump())), m);
  auto bad = j;
  bad["w2"][0].push_back(1.0);
  EXPECT_THROW(mlp_from_json(bad), Error);
}
