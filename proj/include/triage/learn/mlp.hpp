#pragma once

#include <cstdint>
#include <nlohmann/json.hpp>
#include <vector>

#include "triage/learn/dataset.hpp"

namespace triage::learn {

struct Layout {
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 16;
  std::size_t output_dim = 0;

  std::size_t parameter_count() const { return hidden_dim * (input_dim + 1) + output_dim * (hidden_dim + 1); }
  bool operator==(const Layout&) const = default;
};

// One sigmoid hidden layer, softmax output. Weight matrices are row-major:
// w1[h * input_dim + i], w2[o * hidden_dim + h].
struct Mlp {
  Layout layout;
  std::vector<double> w1, b1, w2, b2;

  static Mlp zeros(const Layout& layout);
  // Every parameter U(-0.5, 0.5) from the seed.
  static Mlp random(const Layout& layout, std::uint64_t seed);

  // Flat parameter vector in the order w1, b1, w2, b2.
  std::vector<double> parameters() const;
  void set_parameters(const std::vector<double>& flat);

  bool operator==(const Mlp&) const = default;
};

// Throws DimensionMismatch.
std::vector<double> forward(const Mlp& mlp, const std::vector<double>& x);

// Mean cross-entropy over the dataset; DimensionMismatch on shape errors.
double loss(const Mlp& mlp, const Dataset& data);
double accuracy(const Mlp& mlp, const Dataset& data);
std::size_t predict(const Mlp& mlp, const std::vector<double>& x);

// Gradient of the cross-entropy of one example, same order as parameters().
std::vector<double> gradient(const Mlp& mlp, const std::vector<double>& x, int label);

struct TrainResult {
  Mlp mlp;
  std::vector<double> loss_curve;  // loss after each epoch's update
};

// Full-batch gradient descent on mean cross-entropy.
TrainResult train_backprop(const Mlp& initial, const Dataset& data, int epochs, double learning_rate);
// Same, starting from Mlp::random(layout, seed).
TrainResult train_backprop(const Layout& layout, const Dataset& data, int epochs, double learning_rate,
                           std::uint64_t seed);

// max over parameters of |ga - gn| / max(1e-8, |ga| + |gn|), central differences.
// Throws InvalidParams for epsilon <= 0.
double numeric_gradient_check(const Mlp& mlp, const std::vector<double>& x, int label, double epsilon = 1e-5);

nlohmann::json mlp_to_json(const Mlp& mlp);
Mlp mlp_from_json(const nlohmann::json& j);

}  // namespace triage::learn
