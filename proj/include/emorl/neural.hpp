#pragma once

// Small dense networks with hand-written backprop, Adam, and the diagonal
// Gaussian policy head used by the PPO learner.

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "emorl/common.hpp"
#include "emorl/sim_env.hpp"

namespace emorl {

enum class OutputActivation { Sigmoid, Identity };

/// Fully connected network: tanh on hidden layers, selectable output
/// activation. Parameters live in one flat buffer, laid out per layer as a
/// row-major (out x in) weight block followed by the bias vector.
class Mlp {
 public:
  struct Cache {
    const Mlp* owner = nullptr;
    std::uint64_t revision = 0;
    // activations[0] is the input; activations[l + 1] the output of layer l.
    std::vector<std::vector<double>> activations;
  };

  Mlp() = default;
  Mlp(std::vector<std::size_t> dims, OutputActivation output);

  /// Orthogonal-style init: each weight block gets orthonormal rows (or
  /// columns) scaled by `gain`; the last block by `final_gain`. Biases zero.
  void initialize(Rng& rng, double gain, double final_gain);

  std::size_t input_size() const { return dims_.front(); }
  std::size_t output_size() const { return dims_.back(); }
  std::size_t layer_count() const { return dims_.size() - 1; }
  std::size_t param_count() const { return params_.size(); }
  const std::vector<std::size_t>& dims() const { return dims_; }
  OutputActivation output_activation() const { return output_; }

  std::span<const double> params() const { return params_; }
  /// Mutable access invalidates outstanding caches.
  std::span<double> mutable_params() {
    ++revision_;
    return params_;
  }

  std::vector<double> forward(std::span<const double> x) const;
  std::vector<double> forward(std::span<const double> x, Cache& cache) const;

  /// Accumulates d(output . upstream)/d(params) into `grad` (size
  /// param_count()). Returns d(output . upstream)/d(input).
  std::vector<double> backward(const Cache& cache, std::span<const double> upstream,
                               std::span<double> grad) const;

 private:
  std::size_t weight_offset(std::size_t layer) const { return offsets_[layer]; }

  std::vector<std::size_t> dims_;
  std::vector<std::size_t> offsets_;
  std::vector<double> params_;
  OutputActivation output_ = OutputActivation::Identity;
  std::uint64_t revision_ = 0;
};

struct AdamState {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::int64_t steps = 0;
  std::vector<double> m;
  std::vector<double> v;

  AdamState() = default;
  explicit AdamState(std::size_t n, double learning_rate = 1e-4)
      : lr(learning_rate), m(n, 0.0), v(n, 0.0) {}

  /// Bias-corrected Adam update. A non-finite gradient throws NumericError and
  /// leaves both the parameters and the moments untouched.
  void step(std::span<double> params, std::span<const double> grads);
};

/// Three-dimensional action in the normalized unit cube.
using NormalizedAction = std::array<double, 3>;

struct PolicySample {
  NormalizedAction raw{};      // pre-clamp draw, used for log-probabilities
  NormalizedAction clamped{};  // in [0,1]^3
  ActionVector action;         // scaled to the simulator's ranges
  double log_prob = 0.0;
};

ActionVector scale_action(const NormalizedAction& unit, double d_max);
NormalizedAction clamp_unit(const NormalizedAction& a);
/// Inverse of scale_action on the open cube.
NormalizedAction unscale_action(const ActionVector& a, double d_max);

class GaussianPolicy {
 public:
  static constexpr double kLogStdMin = -5.0;
  static constexpr double kLogStdMax = 2.0;
  static constexpr double kLogStdInit = -0.5;

  GaussianPolicy() = default;
  GaussianPolicy(std::size_t obs_dim, std::size_t hidden);
  GaussianPolicy(Mlp mean_net, std::array<double, 3> log_std);

  /// Hidden gain sqrt(2), final layer scaled by `final_gain` (0.01 default).
  void initialize(Rng& rng, double final_gain = 0.01);

  const Mlp& mean_net() const { return mean_net_; }
  Mlp& mean_net() { return mean_net_; }
  const std::array<double, 3>& log_std() const { return log_std_; }
  void set_log_std(const std::array<double, 3>& v);

  /// Total learnable parameters: network weights then the three log-stds.
  std::size_t param_count() const { return mean_net_.param_count() + 3; }

  NormalizedAction mean(std::span<const double> obs) const;
  double log_prob(std::span<const double> obs, const NormalizedAction& raw) const;
  PolicySample sample(std::span<const double> obs, Rng& rng, double d_max) const;
  /// Mean action, clamped and scaled (evaluation mode).
  ActionVector act(std::span<const double> obs, double d_max) const;

  bool operator==(const GaussianPolicy& other) const;

 private:
  Mlp mean_net_;
  std::array<double, 3> log_std_{kLogStdInit, kLogStdInit, kLogStdInit};
};

double gaussian_log_prob(const NormalizedAction& x, const NormalizedAction& mean,
                         const std::array<double, 3>& log_std);

/// Value network with one output per objective.
Mlp make_value_net(std::size_t obs_dim, std::size_t hidden, std::size_t objectives = kObjectives);

}  // namespace emorl
