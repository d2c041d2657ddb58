#include "triage/infer/synthetic.hpp"

#include "triage/common/random.hpp"

namespace triage::infer {

std::vector<bool> draw_presentation(const kbase::KnowledgeBase& kb, const kbase::ConditionRule& rule,
                                    double noise, std::mt19937_64& rng) {
  const auto& symptoms = kb.symptoms();
  std::vector<bool> present(symptoms.size(), false);
  for (std::size_t i = 0; i < symptoms.size(); ++i) {
    const double p = rule.contains(symptoms[i].id) ? 1.0 - noise : noise / 2.0;
    // Always draw, so the stream position never depends on the outcome.
    present[i] = uniform01(rng) < p;
  }
  return present;
}

}  // namespace triage::infer
