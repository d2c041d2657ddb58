#include "triage/learn/kmeans.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <set>

#include "triage/common/error.hpp"
#include "triage/common/random.hpp"

namespace triage::learn {

namespace {

double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

}  // namespace

ClusterResult kmeans(const std::vector<std::vector<double>>& vectors, int k, int max_iterations, std::uint64_t seed) {
  if (k < 1) throw Error(ErrorCode::InvalidParams, "k must be >= 1");
  if (max_iterations < 1) throw Error(ErrorCode::InvalidParams, "max_iterations must be >= 1");
  const std::size_t n = vectors.size();
  for (const auto& v : vectors)
    if (v.size() != vectors.front().size()) throw Error(ErrorCode::DimensionMismatch, "rows differ in length");
  const std::set<std::vector<double>> distinct(vectors.begin(), vectors.end());
  if (static_cast<std::size_t>(k) > distinct.size())
    throw Error(ErrorCode::TooFewPoints, "k exceeds the number of distinct rows");

  // Seeded shuffle; the first k distinct rows become the initial centroids.
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t i = n; i > 1; --i) std::swap(idx[i - 1], idx[uniform_index(rng, i)]);
  ClusterResult r;
  r.k = k;
  std::set<std::vector<double>> taken;
  for (auto i : idx) {
    if (taken.insert(vectors[i]).second) r.centroids.push_back(vectors[i]);
    if (r.centroids.size() == static_cast<std::size_t>(k)) break;
  }

  const std::size_t dim = vectors.front().size();
  std::vector<int> previous;
  std::vector<double> dist(n);
  for (int it = 0; it < max_iterations; ++it) {
    r.assignments.assign(n, 0);
    double inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double best = sq_dist(vectors[i], r.centroids[0]);
      for (int c = 1; c < k; ++c) {
        const double d = sq_dist(vectors[i], r.centroids[static_cast<std::size_t>(c)]);
        if (d < best) {
          best = d;
          r.assignments[i] = c;
        }
      }
      dist[i] = best;
      inertia += best;
    }
    r.inertia = inertia;
    r.inertia_history.push_back(inertia);
    r.iterations_run = it + 1;
    if (r.assignments == previous) break;
    previous = r.assignments;

    std::vector<std::vector<double>> sum(static_cast<std::size_t>(k), std::vector<double>(dim, 0.0));
    std::vector<std::size_t> count(static_cast<std::size_t>(k), 0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = static_cast<std::size_t>(r.assignments[i]);
      ++count[c];
      for (std::size_t d = 0; d < dim; ++d) sum[c][d] += vectors[i][d];
    }
    for (std::size_t c = 0; c < static_cast<std::size_t>(k); ++c) {
      if (count[c] == 0) {
        // Re-seed an empty cluster with the point currently farthest from its centroid.
        const auto far = static_cast<std::size_t>(std::max_element(dist.begin(), dist.end()) - dist.begin());
        r.centroids[c] = vectors[far];
        dist[far] = 0.0;
        continue;
      }
      for (std::size_t d = 0; d < dim; ++d) r.centroids[c][d] = sum[c][d] / static_cast<double>(count[c]);
    }
  }
  return r;
}

}  // namespace triage::learn
