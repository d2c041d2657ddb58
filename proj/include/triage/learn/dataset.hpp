#pragma once

#include <cstdint>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "triage/infer/observation.hpp"
#include "triage/kbase/knowledge_base.hpp"

namespace triage::learn {

struct Dataset {
  std::vector<std::string> symptom_ids;    // input columns, KB order
  std::vector<std::string> condition_ids;  // label index -> condition
  std::vector<std::vector<double>> inputs;
  std::vector<int> labels;
  std::uint64_t generator_seed = 0;

  std::size_t size() const { return inputs.size(); }
};

// n rows per condition rule (only the listed ones when `conditions` is
// non-empty, in that order). Present = 1, Absent = 0.
// Throws InvalidParams for n < 1, noise outside [0,1] or an unknown condition.
Dataset generate_synthetic_cases(const kbase::KnowledgeBase& kb, int n_per_condition, double noise,
                                 std::uint64_t seed, const std::vector<std::string>& conditions = {});

// Present = 1, Absent = 0, Unknown or unanswered = 0.5; numeric answers are
// thresholded first.
std::vector<double> encode_observations(const kbase::KnowledgeBase& kb, const std::vector<std::string>& symptom_ids,
                                        const infer::ObservationSet& observations);

nlohmann::json dataset_to_json(const Dataset& d);
Dataset dataset_from_json(const nlohmann::json& j);

}  // namespace triage::learn
