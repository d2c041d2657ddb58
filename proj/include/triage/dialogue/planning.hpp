#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "triage/infer/engine.hpp"
#include "triage/kbase/knowledge_base.hpp"

namespace triage::dialogue {

struct AcoParams {
  int ants = 20;
  int iterations = 100;
  double alpha = 1.0;
  double beta = 2.0;
  double rho = 0.1;
  double q = 1.0;
  int population_size = 200;
  std::uint64_t seed = 0;

  // Throws Error(InvalidParams).
  void validate() const;
};

// Presence probability for a patient's own rule symptoms is 1 - kPopulationNoise,
// for everything else kPopulationNoise / 2.
inline constexpr double kPopulationNoise = 0.1;

struct Patient {
  std::size_t condition = 0;          // rule index
  std::vector<infer::State> truth;    // Present/Absent per engine symptom index
};

std::vector<Patient> sample_population(const kbase::KnowledgeBase& kb, const infer::Engine& engine,
                                       int size, std::uint64_t seed);

// Expected number of questions asked under a Planned policy before triage
// stops requesting data, averaged over a fixed patient population.
class OrderEvaluator {
 public:
  OrderEvaluator(const kbase::KnowledgeBase& kb, const infer::TriageThresholds& thresholds, int population_size,
                 std::uint64_t population_seed);

  const infer::Engine& engine() const { return engine_; }
  std::size_t population_size() const { return patients_.size(); }

  // order holds engine symptom indices; symptoms missing from it are never asked.
  double cost(const std::vector<std::size_t>& order);
  double cost(const std::vector<std::string>& order);
  std::size_t evaluations() const { return evaluations_; }

 private:
  bool wants_more(const std::vector<infer::State>& states);
  void descend(std::vector<std::size_t>& group, std::size_t depth, const std::vector<std::size_t>& order,
               std::vector<infer::State>& states, double& total);

  infer::Engine engine_;
  infer::TriageThresholds thresholds_;
  std::vector<Patient> patients_;
  std::unordered_map<std::string, bool> decision_cache_;
  std::map<std::vector<std::size_t>, double> prefix_cache_;
  std::size_t evaluations_ = 0;
};

struct PlanResult {
  std::vector<std::string> order;
  double expected_cost = 0.0;
  std::vector<double> best_curve;  // best-so-far cost after each iteration (ACO only)
  std::size_t orderings_evaluated = 0;
};

PlanResult plan_question_order_aco(const kbase::KnowledgeBase& kb, const infer::TriageThresholds& thresholds,
                                   const AcoParams& params);

// Exhaustive optimum over every permutation; Error(TooLarge) above 8 symptoms.
PlanResult brute_force_best_order(const kbase::KnowledgeBase& kb, const infer::TriageThresholds& thresholds,
                                  std::uint64_t population_seed, int population_size = 200);

}  // namespace triage::dialogue
