#include "triage/learn/pso.hpp"

#include <algorithm>
#include <random>

#include "triage/common/error.hpp"
#include "triage/common/random.hpp"

namespace triage::learn {

void PsoParams::validate() const {
  if (swarm < 1 || iterations < 1) throw Error(ErrorCode::InvalidParams, "swarm and iterations must be >= 1");
  if (!(inertia > 0.0 && inertia < 1.0)) throw Error(ErrorCode::InvalidParams, "inertia must lie in (0, 1)");
  if (!(velocity_clamp > 0.0)) throw Error(ErrorCode::InvalidParams, "velocity clamp must be > 0");
  if (!(c1 >= 0.0) || !(c2 >= 0.0)) throw Error(ErrorCode::InvalidParams, "c1 and c2 must be >= 0");
  if (!(init_range > 0.0)) throw Error(ErrorCode::InvalidParams, "init range must be > 0");
}

PsoResult train_pso(const Layout& layout, const Dataset& data, const PsoParams& params) {
  params.validate();
  const std::size_t dim = layout.parameter_count();
  std::mt19937_64 rng(params.seed);
  Mlp scratch = Mlp::zeros(layout);
  auto fitness = [&](const std::vector<double>& x) {
    scratch.set_parameters(x);
    return loss(scratch, data);
  };

  const auto n = static_cast<std::size_t>(params.swarm);
  std::vector<std::vector<double>> pos(n, std::vector<double>(dim)), vel(n, std::vector<double>(dim, 0.0));
  for (auto& p : pos)
    for (auto& v : p) v = uniform(rng, -params.init_range, params.init_range);
  std::vector<std::vector<double>> pbest = pos;
  std::vector<double> pbest_fit(n);
  std::size_t g = 0;
  for (std::size_t i = 0; i < n; ++i) {
    pbest_fit[i] = fitness(pos[i]);
    if (pbest_fit[i] < pbest_fit[g]) g = i;
  }
  std::vector<double> gbest = pbest[g];
  double gbest_fit = pbest_fit[g];

  PsoResult out;
  out.gbest_curve.push_back(gbest_fit);
  for (int it = 0; it < params.iterations; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      auto& x = pos[i];
      auto& v = vel[i];
      for (std::size_t d = 0; d < dim; ++d) {
        const double r1 = uniform01(rng), r2 = uniform01(rng);
        v[d] = params.inertia * v[d] + params.c1 * r1 * (pbest[i][d] - x[d]) + params.c2 * r2 * (gbest[d] - x[d]);
        v[d] = std::clamp(v[d], -params.velocity_clamp, params.velocity_clamp);
        x[d] += v[d];
      }
      const double f = fitness(x);
      if (f < pbest_fit[i]) {
        pbest_fit[i] = f;
        pbest[i] = x;
      }
    }
    // Global best is refreshed once per iteration (synchronous update).
    for (std::size_t i = 0; i < n; ++i) {
      if (pbest_fit[i] < gbest_fit) {
        gbest_fit = pbest_fit[i];
        gbest = pbest[i];
      }
    }
    out.gbest_curve.push_back(gbest_fit);
  }
  out.mlp = Mlp::zeros(layout);
  out.mlp.set_parameters(gbest);
  return out;
}

}  // namespace triage::learn
