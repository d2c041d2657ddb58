#include "triage/learn/dataset.hpp"

#include <random>

#include "triage/common/error.hpp"
#include "triage/infer/synthetic.hpp"

namespace triage::learn {

Dataset generate_synthetic_cases(const kbase::KnowledgeBase& kb, int n_per_condition, double noise,
                                 std::uint64_t seed, const std::vector<std::string>& conditions) {
  if (n_per_condition < 1) throw Error(ErrorCode::InvalidParams, "n_per_condition must be >= 1");
  if (!(noise >= 0.0 && noise <= 1.0)) throw Error(ErrorCode::InvalidParams, "noise must lie in [0, 1]");

  std::vector<const kbase::ConditionRule*> rules;
  if (conditions.empty()) {
    for (const auto& r : kb.condition_rules()) rules.push_back(&r);
  } else {
    for (const auto& id : conditions) {
      const auto* r = kb.find_rule(id);
      if (!r) throw Error(ErrorCode::InvalidParams, "unknown condition '" + id + "'");
      rules.push_back(r);
    }
  }

  Dataset d;
  d.generator_seed = seed;
  for (const auto& s : kb.symptoms()) d.symptom_ids.push_back(s.id);
  for (const auto* r : rules) d.condition_ids.push_back(r->condition_id);

  std::mt19937_64 rng(seed);
  for (std::size_t label = 0; label < rules.size(); ++label) {
    for (int i = 0; i < n_per_condition; ++i) {
      const auto present = infer::draw_presentation(kb, *rules[label], noise, rng);
      d.inputs.emplace_back(present.begin(), present.end());
      d.labels.push_back(static_cast<int>(label));
    }
  }
  return d;
}

std::vector<double> encode_observations(const kbase::KnowledgeBase& kb, const std::vector<std::string>& symptom_ids,
                                        const infer::ObservationSet& observations) {
  std::vector<double> x;
  x.reserve(symptom_ids.size());
  for (const auto& id : symptom_ids) {
    const auto* v = observations.find(id);
    if (!v) {
      x.push_back(0.5);
      continue;
    }
    switch (v->kind) {
      case infer::AnswerKind::Present: x.push_back(1.0); break;
      case infer::AnswerKind::Absent: x.push_back(0.0); break;
      case infer::AnswerKind::Unknown: x.push_back(0.5); break;
      case infer::AnswerKind::Numeric: {
        const auto* s = kb.find_symptom(id);
        if (!s) throw Error(ErrorCode::UnknownSymptomId, "unknown symptom '" + id + "'");
        x.push_back(infer::map_numeric(*s, *v) == infer::Presence::Present ? 1.0 : 0.0);
        break;
      }
    }
  }
  return x;
}

nlohmann::json dataset_to_json(const Dataset& d) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < d.size(); ++i) rows.push_back({{"x", d.inputs[i]}, {"label", d.labels[i]}});
  return {{"symptom_ids", d.symptom_ids},
          {"condition_ids", d.condition_ids},
          {"generator_seed", d.generator_seed},
          {"rows", rows}};
}

Dataset dataset_from_json(const nlohmann::json& j) {
  try {
    Dataset d;
    d.symptom_ids = j.at("symptom_ids").get<std::vector<std::string>>();
    d.condition_ids = j.at("condition_ids").get<std::vector<std::string>>();
    d.generator_seed = j.value("generator_seed", std::uint64_t{0});
    for (const auto& row : j.at("rows")) {
      auto x = row.at("x").get<std::vector<double>>();
      const int label = row.at("label").get<int>();
      if (x.size() != d.symptom_ids.size())
        throw Error(ErrorCode::DimensionMismatch, "row width differs from symptom_ids");
      if (label < 0 || static_cast<std::size_t>(label) >= d.condition_ids.size())
        throw Error(ErrorCode::DimensionMismatch, "label out of range");
      d.inputs.push_back(std::move(x));
      d.labels.push_back(label);
    }
    return d;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("malformed dataset: ") + e.what());
  }
}

}  // namespace triage::learn
