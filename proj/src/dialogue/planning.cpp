#include "triage/dialogue/planning.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "triage/common/error.hpp"
#include "triage/common/random.hpp"
#include "triage/infer/synthetic.hpp"

namespace triage::dialogue {

using infer::State;

void AcoParams::validate() const {
  if (ants < 1 || iterations < 1 || population_size < 1)
    throw Error(ErrorCode::InvalidParams, "ants, iterations and population_size must be >= 1");
  if (!(rho > 0.0 && rho < 1.0)) throw Error(ErrorCode::InvalidParams, "rho must lie in (0, 1)");
  if (!(alpha >= 0.0) || !(beta >= 0.0)) throw Error(ErrorCode::InvalidParams, "alpha and beta must be >= 0");
  if (!(q > 0.0)) throw Error(ErrorCode::InvalidParams, "deposit must be > 0");
}

std::vector<Patient> sample_population(const kbase::KnowledgeBase& kb, const infer::Engine& engine, int size,
                                       std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const auto& rules = kb.condition_rules();
  const auto& symptoms = kb.symptoms();
  std::vector<Patient> out;
  out.reserve(static_cast<std::size_t>(size));
  for (int i = 0; i < size; ++i) {
    Patient p;
    p.condition = uniform_index(rng, rules.size());
    const auto present = infer::draw_presentation(kb, rules[p.condition], kPopulationNoise, rng);
    p.truth.assign(engine.symptom_count(), State::Absent);
    for (std::size_t s = 0; s < symptoms.size(); ++s)
      if (present[s]) p.truth[*engine.symptom_index(symptoms[s].id)] = State::Present;
    out.push_back(std::move(p));
  }
  return out;
}

OrderEvaluator::OrderEvaluator(const kbase::KnowledgeBase& kb, const infer::TriageThresholds& thresholds,
                               int population_size, std::uint64_t population_seed)
    : engine_(kb), thresholds_(thresholds) {
  thresholds_.validate();
  patients_ = sample_population(kb, engine_, population_size, population_seed);
}

// Depends only on the answered states: the question budget is checked by the caller.
bool OrderEvaluator::wants_more(const std::vector<State>& states) {
  std::string key(states.size(), '\0');
  for (std::size_t i = 0; i < states.size(); ++i) key[i] = static_cast<char>(states[i]);
  auto it = decision_cache_.find(key);
  if (it != decision_cache_.end()) return it->second;
  const bool more = engine_.requests_more_data(states, thresholds_, 0);
  decision_cache_.emplace(std::move(key), more);
  return more;
}

// Patients giving identical answers so far share a state, so the population
// is walked as a tree split on each asked symptom.
void OrderEvaluator::descend(std::vector<std::size_t>& group, std::size_t depth,
                             const std::vector<std::size_t>& order, std::vector<State>& states, double& total) {
  if (depth >= order.size() || static_cast<int>(depth) >= thresholds_.q_max || !wants_more(states)) {
    total += static_cast<double>(depth * group.size());
    return;
  }
  const std::size_t s = order[depth];
  std::vector<std::size_t> yes, no;
  for (auto p : group) (patients_[p].truth[s] == State::Present ? yes : no).push_back(p);
  for (auto* part : {&yes, &no}) {
    if (part->empty()) continue;
    states[s] = part == &yes ? State::Present : State::Absent;
    descend(*part, depth + 1, order, states, total);
  }
  states[s] = State::Unanswered;
}

double OrderEvaluator::cost(const std::vector<std::size_t>& order) {
  // Nothing past the question budget is ever asked.
  const std::size_t used = std::min(order.size(), static_cast<std::size_t>(thresholds_.q_max));
  std::vector<std::size_t> prefix(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(used));
  ++evaluations_;
  if (auto it = prefix_cache_.find(prefix); it != prefix_cache_.end()) return it->second;
  std::vector<std::size_t> group(patients_.size());
  std::iota(group.begin(), group.end(), 0);
  std::vector<State> states(engine_.symptom_count(), State::Unanswered);
  double total = 0.0;
  descend(group, 0, prefix, states, total);
  const double c = patients_.empty() ? 0.0 : total / static_cast<double>(patients_.size());
  prefix_cache_.emplace(std::move(prefix), c);
  return c;
}

double OrderEvaluator::cost(const std::vector<std::string>& order) {
  std::vector<std::size_t> idx;
  for (const auto& id : order) {
    auto s = engine_.symptom_index(id);
    if (!s) throw Error(ErrorCode::UnknownSymptomId, "unknown symptom '" + id + "'");
    idx.push_back(*s);
  }
  return cost(idx);
}

namespace {

std::vector<std::string> to_ids(const infer::Engine& engine, const std::vector<std::size_t>& order) {
  std::vector<std::string> out;
  for (auto s : order) out.push_back(engine.symptom_id(s));
  return out;
}

}  // namespace

PlanResult plan_question_order_aco(const kbase::KnowledgeBase& kb, const infer::TriageThresholds& thresholds,
                                   const AcoParams& params) {
  params.validate();
  OrderEvaluator eval(kb, thresholds, params.population_size, params.seed);
  const auto& engine = eval.engine();
  const std::size_t n = engine.symptom_count();
  PlanResult result;
  if (n == 0) return result;

  const std::vector<State> empty(n, State::Unanswered);
  const auto d = engine.discrimination(empty, thresholds.k);
  std::vector<double> eta_pow(n);
  for (std::size_t s = 0; s < n; ++s) eta_pow[s] = std::pow(1.0 + d[s], params.beta);

  // Only the first q_max positions influence the cost; the tail is filled by
  // heuristic order so returned orderings stay full permutations.
  const std::size_t built = std::min(n, static_cast<std::size_t>(thresholds.q_max));
  std::vector<std::size_t> tail_order(n);
  std::iota(tail_order.begin(), tail_order.end(), 0);
  std::stable_sort(tail_order.begin(), tail_order.end(), [&](auto a, auto b) { return d[a] > d[b]; });

  // tau[from][to]; row n is the virtual start node.
  std::vector<std::vector<double>> tau(n + 1, std::vector<double>(n, 1.0));
  std::mt19937_64 rng(params.seed ^ 0xa5a5a5a55a5a5a5aULL);

  std::vector<std::size_t> best;
  double best_cost = INFINITY;
  std::vector<double> weights(n);
  for (int it = 0; it < params.iterations; ++it) {
    std::vector<std::pair<std::vector<std::size_t>, double>> tours;
    for (int a = 0; a < params.ants; ++a) {
      std::vector<bool> used(n, false);
      std::vector<std::size_t> tour;
      std::size_t from = n;
      for (std::size_t step = 0; step < built; ++step) {
        double sum = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          weights[j] = used[j] ? 0.0 : std::pow(tau[from][j], params.alpha) * eta_pow[j];
          sum += weights[j];
        }
        std::size_t pick = n;
        if (sum > 0.0) {
          double r = uniform01(rng) * sum;
          for (std::size_t j = 0; j < n; ++j) {
            if (used[j] || weights[j] <= 0.0) continue;
            pick = j;
            if (r < weights[j]) break;
            r -= weights[j];
          }
        } else {
          for (std::size_t j = 0; j < n && pick == n; ++j)
            if (!used[j]) pick = j;
        }
        used[pick] = true;
        tour.push_back(pick);
        from = pick;
      }
      for (auto s : tail_order)
        if (!used[s]) tour.push_back(s);
      const double c = eval.cost(tour);
      if (c < best_cost) {
        best_cost = c;
        best = tour;
      }
      tours.emplace_back(std::move(tour), c);
    }
    for (auto& row : tau)
      for (auto& v : row) v *= 1.0 - params.rho;
    for (const auto& [tour, c] : tours) {
      const double deposit = params.q / std::max(c, 1e-9);
      std::size_t from = n;
      for (std::size_t step = 0; step < built; ++step) {
        tau[from][tour[step]] += deposit;
        from = tour[step];
      }
    }
    result.best_curve.push_back(best_cost);
  }
  result.order = to_ids(engine, best);
  result.expected_cost = best_cost;
  result.orderings_evaluated = eval.evaluations();
  return result;
}

PlanResult brute_force_best_order(const kbase::KnowledgeBase& kb, const infer::TriageThresholds& thresholds,
                                  std::uint64_t population_seed, int population_size) {
  if (kb.symptoms().size() > 8)
    throw Error(ErrorCode::TooLarge, "exhaustive search is limited to 8 symptoms");
  if (population_size < 1) throw Error(ErrorCode::InvalidParams, "population_size must be >= 1");
  OrderEvaluator eval(kb, thresholds, population_size, population_seed);
  std::vector<std::size_t> perm(eval.engine().symptom_count());
  std::iota(perm.begin(), perm.end(), 0);
  PlanResult result;
  double best_cost = INFINITY;
  std::vector<std::size_t> best = perm;
  do {
    const double c = eval.cost(perm);
    if (c < best_cost) {
      best_cost = c;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  result.order = to_ids(eval.engine(), best);
  result.expected_cost = best_cost;
  result.orderings_evaluated = eval.evaluations();
  return result;
}

}  // namespace triage::dialogue
