#pragma once

#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

namespace triage::store {

struct Profile {
  std::string user_id;
  std::vector<std::string> chronic_conditions;
  std::vector<std::string> allergies;
  std::optional<int> birth_year;

  bool operator==(const Profile&) const = default;
};

inline void to_json(nlohmann::json& j, const Profile& p) {
  j = {{"user_id", p.user_id}, {"chronic_conditions", p.chronic_conditions}, {"allergies", p.allergies}};
  j["birth_year"] = p.birth_year ? nlohmann::json(*p.birth_year) : nlohmann::json(nullptr);
}

inline void from_json(const nlohmann::json& j, Profile& p) {
  p.user_id = j.value("user_id", std::string{});
  p.chronic_conditions = j.value("chronic_conditions", std::vector<std::string>{});
  p.allergies = j.value("allergies", std::vector<std::string>{});
  if (j.contains("birth_year") && !j.at("birth_year").is_null())
    p.birth_year = j.at("birth_year").get<int>();
  else
    p.birth_year.reset();
}

}  // namespace triage::store
