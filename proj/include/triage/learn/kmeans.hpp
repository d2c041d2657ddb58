#pragma once

#include <cstdint>
#include <vector>

namespace triage::learn {

struct ClusterResult {
  int k = 0;
  std::vector<int> assignments;
  std::vector<std::vector<double>> centroids;
  double inertia = 0.0;
  int iterations_run = 0;
  std::vector<double> inertia_history;  // after each assignment step
};

// Lloyd's algorithm on squared Euclidean distance. Throws TooFewPoints when
// k exceeds the number of distinct rows, InvalidParams for k < 1,
// DimensionMismatch for ragged input.
ClusterResult kmeans(const std::vector<std::vector<double>>& vectors, int k, int max_iterations = 100,
                     std::uint64_t seed = 0);

}  // namespace triage::learn
