#pragma once

// Multi-task multi-objective PPO: vector-valued GAE, weighted advantage
// scalarization, clipped surrogate policy updates and vector value regression.

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "emorl/common.hpp"
#include "emorl/neural.hpp"
#include "emorl/sim_env.hpp"

namespace emorl {

using ObsFeatures = std::array<double, kObservationSize>;

/// <weight, target policy, sample policy, multi-objective value net>.
struct LearningTask {
  std::uint64_t id = 0;
  Vec3 weight{};
  GaussianPolicy target;
  GaussianPolicy sample;
  Mlp value;
  AdamState policy_opt;  // over target.mean_net params followed by log_std
  AdamState value_opt;

  static LearningTask create(const Vec3& weight, std::size_t hidden, double lr, Rng& rng);
};

struct Transition {
  ObsFeatures obs{};
  NormalizedAction action{};  // pre-clamp sample
  double log_prob = 0.0;
  RewardVector reward{};
  Vec3 value{};
  bool done = false;
};

struct RolloutBatch {
  std::vector<Transition> transitions;
  std::vector<Vec3> advantages;
  std::vector<Vec3> value_targets;
  std::vector<EpisodeTotals> episodes;
};

struct PpoConfig {
  int episodes = 4;
  int epochs = 10;
  int minibatch = 256;
  int value_epochs = 10;
  double clip = 0.2;
  double gamma = 0.995;
  double lambda = 0.95;
  double lr = 1e-4;
  std::size_t hidden = 64;
  bool standardize_advantages = true;
  double entropy_coef = 0.0;   // 0 disables the entropy bonus
  double max_grad_norm = 0.0;  // 0 disables gradient-norm clipping
};

RolloutBatch collect_rollout(const LearningTask& task, const ScenarioInstance& instance,
                             int episodes, Rng& rng, double gamma = 0.995);

/// Componentwise GAE. Episodes end at transitions flagged `done`; the value
/// after a terminal transition is the zero vector.
std::vector<Vec3> compute_gae(std::span<const Transition> transitions, double gamma, double lambda);
void compute_gae(RolloutBatch& batch, double gamma, double lambda);

/// One-step targets r_t + gamma * V(s_{t+1}), frozen from the stored values.
std::vector<Vec3> compute_value_targets(std::span<const Transition> transitions, double gamma);

inline double extended_advantage(const Vec3& advantage, const Vec3& weight) {
  return dot(weight, advantage);
}

struct SurrogateSample {
  ObsFeatures obs{};
  NormalizedAction action{};
  double old_log_prob = 0.0;
  double advantage = 0.0;
};

struct LossGrad {
  double loss = 0.0;
  std::vector<double> grad;
  double clip_fraction = 0.0;
};

/// Negated clipped surrogate (a loss to minimize), averaged over samples,
/// with its exact gradient w.r.t. [mean-net params, log_std].
LossGrad surrogate_loss_grad(const GaussianPolicy& policy, std::span<const SurrogateSample> batch,
                             double clip, double entropy_coef = 0.0);

/// Mean over rows of the squared error norm. `inputs` and `targets` are
/// row-major with net.input_size() and net.output_size() columns.
LossGrad value_loss_grad(const Mlp& net, std::span<const double> inputs,
                         std::span<const double> targets);

/// Minibatch Adam regression; returns the full-batch loss after each epoch.
std::vector<double> fit_value(Mlp& net, AdamState& opt, std::span<const double> inputs,
                              std::span<const double> targets, int epochs, int minibatch, Rng& rng);

struct PpoStats {
  double policy_loss = 0.0;
  double clip_fraction = 0.0;
  std::vector<double> value_losses;
};

/// Clipped-surrogate update of the target policy, then sample <- target.
/// A non-finite loss restores the prior parameters and throws NumericError.
PpoStats ppo_update(LearningTask& task, const RolloutBatch& batch, const PpoConfig& cfg, Rng& rng);

/// Regression of the value net onto the batch's frozen targets.
std::vector<double> value_update(LearningTask& task, const RolloutBatch& batch,
                                 const PpoConfig& cfg, Rng& rng);

struct IterationStats {
  std::size_t task_index = 0;
  std::uint64_t task_id = 0;
  int iteration = 0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double clip_fraction = 0.0;
  Vec3 mean_return{};
  Vec3 mean_raw{};
};

struct MmppoResult {
  std::vector<LearningTask> offspring;  // task-then-iteration order
  std::vector<IterationStats> log;
  std::vector<std::string> errors;
};

struct MmppoRun {
  std::uint64_t seed = 0;      // master seed
  std::uint64_t phase = 0;     // distinguishes warm-up / generations
  std::uint64_t next_id = 1;   // first id handed to offspring
  int workers = 1;
};

/// Runs `iterations` rounds of collect -> GAE -> update per task and keeps a
/// snapshot of the task after every round: |offspring| = |tasks| * iterations.
MmppoResult mmppo(std::span<const LearningTask> tasks, int iterations,
                  const ScenarioInstance& instance, const PpoConfig& cfg, const MmppoRun& run);

}  // namespace emorl
