#include "triage/kbase/seed.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace triage::kbase {

namespace {

Symptom boolean(std::string id, std::string name, std::vector<std::string> aliases = {}) {
  return Symptom{std::move(id), std::move(name), std::move(aliases), std::nullopt};
}

ConditionRule rule(std::string id, std::string name, Severity severity,
                   const std::vector<std::string>& symptom_ids, std::string advice) {
  ConditionRule r;
  r.condition_id = std::move(id);
  r.name = std::move(name);
  r.severity = severity;
  for (const auto& s : symptom_ids) r.symptoms.push_back({s, 1.0});
  r.advice = std::move(advice);
  return r;
}

std::vector<Symptom> daily_symptoms() {
  Symptom fever = boolean("fever", "High fever (over 38°C)", {"high fever", "temperature"});
  fever.threshold = Threshold{"°C", 38.0, Direction::Above};
  return {
      fever,
      boolean("muscle_pains", "Muscle pains"),
      boolean("sweating", "Sweating"),
      boolean("headache", "Headache"),
      boolean("fatigue_weakness", "Fatigue / weakness", {"weakness and fatigue"}),
      boolean("nasal_congestion", "Nasal congestion"),
      boolean("throat_ache", "Throat ache"),
      boolean("head_pain", "Pain in different parts of the head"),
      boolean("neck_tightness", "Neck tightness"),
      boolean("shoulder_stiffness", "Shoulder stiffness"),
      boolean("headache_varying", "Headache of varying duration and intensity"),
      boolean("postnasal_drip", "Sensation of fluid flowing from the back of the throat (postnasal drip)",
              {"postnasal drip"}),
      boolean("throat_clearing_sore_throat", "Frequent throat clearing and sore throat", {"sore throat"}),
      boolean("hoarseness", "Hoarseness"),
      boolean("runny_stuffy_nose", "A runny or stuffy nose", {"runny nose", "stuffy nose"}),
      boolean("wheezing_shortness_of_breath", "Wheezing and shortness of breath",
              {"shortness of breath"}),
      boolean("eating_more_than_usual", "Eating more than usual"),
      boolean("weight_gain", "Weight gain"),
      boolean("frequent_urination", "Frequent urination"),
      boolean("numbness_in_feet", "Numbness in feet"),
      boolean("rapid_weight_loss", "Fast and involuntary weight loss"),
      boolean("blurred_vision", "Blurred vision"),
      boolean("diarrhea", "Diarrhea"),
      boolean("fluid_need", "Need for plenty of fluid", {"thirst"}),
      boolean("high_fatigue", "High level of fatigue"),
      boolean("vision_problems", "Vision problems"),
      boolean("feeling_tired", "Feeling tired"),
      boolean("mental_fatigue", "Mental fatigue"),
      boolean("anemia", "Anemia"),
      boolean("skin_cracks", "Cracks in the skin"),
      boolean("lifeless_nails_hair", "Lifeless nails / hair"),
      boolean("bone_muscle_pains", "Bone / muscle pains"),
  };
}

std::vector<ConditionRule> daily_rules() {
  const std::string rest = "Rest, drink plenty of fluids and monitor symptoms; seek care if they worsen.";
  return {
      rule("cold", "Cold", Severity::SelfCare,
           {"fever", "muscle_pains", "sweating", "headache", "fatigue_weakness", "nasal_congestion",
            "throat_ache"},
           rest),
      rule("headaches", "Headaches", Severity::SelfCare,
           {"head_pain", "neck_tightness", "shoulder_stiffness", "headache_varying"},
           "Rest in a quiet room, stay hydrated and keep a headache diary."),
      rule("angina", "Angina", Severity::SelfCare,
           {"postnasal_drip", "throat_clearing_sore_throat", "hoarseness"},
           "Gargle with warm salt water, rest the voice and drink warm fluids."),
      rule("flu", "Flu", Severity::SelfCare,
           {"runny_stuffy_nose", "postnasal_drip", "throat_clearing_sore_throat", "hoarseness",
            "wheezing_shortness_of_breath"},
           rest),
      rule("diabetes", "Diabetes", Severity::Refer,
           {"eating_more_than_usual", "weight_gain", "fatigue_weakness", "runny_stuffy_nose",
            "frequent_urination", "numbness_in_feet", "rapid_weight_loss", "blurred_vision"},
           "Blood sugar testing is needed; visit a hospital or specialist doctor."),
      rule("viral_diseases", "Viral Diseases", Severity::SelfCare,
           {"fever", "diarrhea", "fluid_need", "high_fatigue", "wheezing_shortness_of_breath"},
           "Keep hydrated and rest; seek care if fever persists or breathing worsens."),
      rule("vitamin_deficiency", "Vitamin Deficiency", Severity::SelfCare,
           {"vision_problems", "feeling_tired", "mental_fatigue", "anemia", "skin_cracks",
            "lifeless_nails_hair", "bone_muscle_pains"},
           "Review diet and consider a blood test for vitamin levels."),
  };
}

struct HormonalItem {
  std::vector<Symptom> symptoms;
  std::vector<std::string> candidates;
  std::string note;
};

std::vector<HormonalItem> hormonal_items() {
  const std::vector<std::string> weight_candidates{"insulin_resistance", "diabetes",
                                                   "polycystic_ovary_syndrome", "cushing_syndrome",
                                                   "hypothyroidism"};
  return {
      {{boolean("weight_gain", "Weight gain"),
        boolean("inability_to_lose_weight", "Inability to lose weight")},
       weight_candidates,
       "Insulin resistance, diabetes, polycystic ovary syndrome, Cushing syndrome or hypothyroidism."},
      {{boolean("sweet_cravings", "Sweet crises", {"sugar cravings"}),
        boolean("frequent_hunger", "Frequent hunger")},
       {"hypoglycemia", "insulin_resistance"},
       "May be a harbinger of hypoglycemia and insulin resistance."},
      {{boolean("menstrual_irregularity", "Menstrual irregularity"),
        boolean("increased_hair_growth", "Increased hair growth")},
       {"ovarian_cyst", "adrenal_gland_disorder"},
       "Ovarian cysts can be seen in adrenal gland disorders."},
      {{boolean("purple_striae", "Purple striae (lines) in the abdomen", {"purple stretch marks"})},
       {"cushing_syndrome"},
       "May be a sign of Cushing syndrome."},
      {{boolean("fatigue", "Fatigue")},
       {"hormonal_disorder"},
       "Common symptom of all hormonal diseases."},
      {{boolean("neck_swelling_pain", "Swelling and pain in the neck")},
       {"goiter"},
       "Goiter may be a harbinger of thyroid nodule."},
      {{boolean("palpitations", "Palpitations"), boolean("hand_tremors", "Tremors in the hands")},
       {"hypoglycemia", "hyperthyroidism"},
       "May be a symptom of hypoglycemia or an overworking thyroid gland."},
      {{boolean("excessive_sweating", "Excessive sweating")},
       {"hyperthyroidism", "adrenal_gland_disorder", "hypoglycemia"},
       "Overworking thyroid, adrenal gland disease or a sugar drop."},
      {{boolean("weight_loss", "Weight loss")},
       {"diabetes", "hyperthyroidism"},
       "Diabetes or an overworking thyroid."},
      {{boolean("body_pain", "Body pain")},
       {"parathyroid_disorder", "vitamin_d_deficiency"},
       "May be a symptom of parathyroid gland disorder or vitamin D deficiency."},
      {{boolean("bone_loss", "Bone melting"), boolean("bone_fractures", "Fracture in bones")},
       {"osteoporosis"},
       "May be a sign of osteoporosis."},
      {{boolean("jaw_enlargement", "Jaw enlargement")}, {"acromegaly"}, "May be a symptom of acromegaly."},
      {{boolean("breast_milk_discharge", "Milk coming from the breasts")},
       {"prolactinoma"},
       "May be a symptom of prolactinoma."},
      {{boolean("growth_retardation", "Growth and development retardation")},
       {"hormone_deficiency", "vitamin_deficiency"},
       "Hormone deficiencies may be due to vitamin and iron deficiency."},
      {{boolean("no_beard_growth", "No beard growth in men")},
       {"male_hormone_deficiency"},
       "May develop due to male hormone deficiency."},
  };
}

const std::map<std::string, std::string>& hormonal_names() {
  static const std::map<std::string, std::string> names{
      {"insulin_resistance", "Insulin Resistance"},
      {"polycystic_ovary_syndrome", "Polycystic Ovary Syndrome"},
      {"cushing_syndrome", "Cushing Syndrome"},
      {"hypothyroidism", "Hypothyroidism"},
      {"hypoglycemia", "Hypoglycemia"},
      {"ovarian_cyst", "Ovarian Cyst"},
      {"adrenal_gland_disorder", "Adrenal Gland Disorder"},
      {"hormonal_disorder", "Hormonal Disorder"},
      {"goiter", "Goiter"},
      {"hyperthyroidism", "Hyperthyroidism"},
      {"parathyroid_disorder", "Parathyroid Gland Disorder"},
      {"vitamin_d_deficiency", "Vitamin D Deficiency"},
      {"osteoporosis", "Osteoporosis"},
      {"acromegaly", "Acromegaly"},
      {"prolactinoma", "Prolactinoma"},
      {"hormone_deficiency", "Hormone Deficiency"},
      {"male_hormone_deficiency", "Male Hormone Deficiency"},
  };
  return names;
}

}  // namespace

const std::vector<std::string>& daily_condition_ids() {
  static const std::vector<std::string> ids{"cold",     "headaches",      "angina",
                                            "flu",      "diabetes",       "viral_diseases",
                                            "vitamin_deficiency"};
  return ids;
}

const std::vector<std::string>& hormonal_condition_ids() {
  static const std::vector<std::string> ids = [] {
    std::vector<std::string> out;
    for (const auto& [id, name] : hormonal_names()) out.push_back(id);
    return out;
  }();
  return ids;
}

KnowledgeBase seed_default() {
  std::vector<Symptom> symptoms = daily_symptoms();
  std::vector<ConditionRule> rules = daily_rules();
  std::vector<IndicatorRule> indicators;

  std::set<std::string> known;
  for (const auto& s : symptoms) known.insert(s.id);

  // Hormonal condition -> the indicator symptoms that name it.
  std::map<std::string, std::vector<std::string>> hormonal_symptoms;
  for (const auto& item : hormonal_items()) {
    for (const auto& s : item.symptoms) {
      if (known.insert(s.id).second) symptoms.push_back(s);
      indicators.push_back({s.id, item.candidates, item.note});
      for (const auto& c : item.candidates)
        if (hormonal_names().count(c)) hormonal_symptoms[c].push_back(s.id);
    }
  }

  // Fatigue is shared by every hormonal condition.
  for (const auto& [id, name] : hormonal_names()) {
    auto ids = hormonal_symptoms[id];
    if (std::find(ids.begin(), ids.end(), "fatigue") == ids.end()) ids.push_back("fatigue");
    rules.push_back(rule(id, name, Severity::Refer, ids,
                         "Hormonal findings need clinical confirmation; visit a hospital or "
                         "specialist doctor."));
  }

  return KnowledgeBase(1, std::move(symptoms), std::move(rules), std::move(indicators));
}

KnowledgeBase with_media_extension(const KnowledgeBase& kb) {
  std::vector<Symptom> symptoms = kb.symptoms();
  std::vector<ConditionRule> rules = kb.condition_rules();
  std::vector<IndicatorRule> indicators = kb.indicator_rules();

  auto add_symptom = [&](Symptom s) {
    if (!kb.find_symptom(s.id)) symptoms.push_back(std::move(s));
  };
  auto add_rule = [&](ConditionRule r) {
    if (!kb.find_rule(r.condition_id)) rules.push_back(std::move(r));
  };

  add_symptom(boolean(media_symptoms::kAbnormalHeartSound, "Abnormal heart sound", {"heart murmur"}));
  add_symptom(boolean(media_symptoms::kAcneLesions, "Acne lesions", {"acne"}));
  add_symptom(boolean(media_symptoms::kMeaslesRash, "Measles-like rash", {"rash"}));
  if (!kb.find_symptom(media_symptoms::kSweating)) add_symptom(boolean(media_symptoms::kSweating, "Sweating"));

  add_rule(rule("heart_murmur", "Heart Murmur", Severity::Refer, {media_symptoms::kAbnormalHeartSound},
                "An abnormal heart sound needs auscultation by a doctor."));
  add_rule(rule("acne", "Acne", Severity::SelfCare, {media_symptoms::kAcneLesions},
                "Keep the skin clean and avoid squeezing lesions."));
  add_rule(rule("measles", "Measles", Severity::Refer, {media_symptoms::kMeaslesRash, "fever"},
                "Measles is contagious; visit a hospital or specialist doctor."));
  if (!kb.find_indicator(media_symptoms::kMeaslesRash))
    indicators.push_back({media_symptoms::kMeaslesRash, {"measles"}, "Rash pattern consistent with measles."});

  return KnowledgeBase(kb.version() + 1, std::move(symptoms), std::move(rules), std::move(indicators));
}

}  // namespace triage::kbase
