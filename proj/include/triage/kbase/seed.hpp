#pragma once

#include <string>
#include <vector>

#include "triage/kbase/knowledge_base.hpp"

namespace triage::kbase {

// The daily-health table (7 rules) and the hormonal indicator table, version 1.
KnowledgeBase seed_default();

// Condition ids of the seven daily-health rules, in table order.
const std::vector<std::string>& daily_condition_ids();

// Condition ids introduced by the hormonal indicator table.
const std::vector<std::string>& hormonal_condition_ids();

// Symptom ids the media classifiers inject into sessions.
namespace media_symptoms {
inline constexpr const char* kAbnormalHeartSound = "abnormal_heart_sound";
inline constexpr const char* kAcneLesions = "acne_lesions";
inline constexpr const char* kMeaslesRash = "measles_rash";
inline constexpr const char* kSweating = "sweating";
}  // namespace media_symptoms

// Adds the symptoms/conditions the image and sound branches report on
// (heart murmur, acne, measles + its indicator). Bumps the version once.
KnowledgeBase with_media_extension(const KnowledgeBase& kb);

}  // namespace triage::kbase
