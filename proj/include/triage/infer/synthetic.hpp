#pragma once

#include <random>
#include <vector>

#include "triage/kbase/knowledge_base.hpp"

namespace triage::infer {

// Synthetic patient: the rule's symptoms Present with probability 1 - noise,
// every other KB symptom Present with probability noise / 2, the rest Absent.
// Result is aligned with kb.symptoms().
std::vector<bool> draw_presentation(const kbase::KnowledgeBase& kb, const kbase::ConditionRule& rule,
                                    double noise, std::mt19937_64& rng);

}  // namespace triage::infer
