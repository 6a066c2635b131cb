#pragma once

// Direct-encoded genetic baselines: one chromosome is a whole open-loop action
// sequence (theta, d, b per slot, normalized to [0,1]).

#include <cstdint>
#include <span>
#include <vector>

#include "emorl/evolution.hpp"

namespace emorl {

struct Chromosome {
  std::vector<double> genes;  // 3T values in [0,1]
  PolicyEvaluation eval;
};

/// Decodes slot t from genes[3t .. 3t+2] and replays on every seed.
/// Throws ConfigError when genes.size() != 3T.
PolicyEvaluation evaluate_chromosome(std::span<const double> genes, const ScenarioInstance& instance,
                                     std::span<const std::uint64_t> episode_seeds, double gamma);

/// Fronts of `points` (all-maximize), best first; each front lists indices ascending.
std::vector<std::vector<std::size_t>> fast_nondominated_sort(std::span<const Vec3> points);

/// Crowding distance over the subset `front`; boundary points get +inf.
std::vector<double> crowding_distance(std::span<const Vec3> points, std::span<const std::size_t> front);

struct GaConfig {
  int population = 100;
  int generations = 100;
  double crossover_prob = 0.8;
  double mutation_prob = 0.3;  // per offspring; each gene then resets with rate 1/L
  double sbx_eta = 15.0;
  int eval_episodes = 5;
  double gamma = 0.995;
  std::uint64_t seed = 1;
  int workers = 1;
  /// When > 0, no generation starts once this many seconds have elapsed.
  double time_budget_s = 0.0;
  /// Select on (R_D, R_E) only; reported fronts keep all three objectives.
  bool two_objective = false;
};

struct MoeadConfig {
  int population = 100;
  int generations = 100;
  int neighbors = 10;
  double sbx_eta = 15.0;
  double mutation_prob = 0.3;
  int eval_episodes = 5;
  double gamma = 0.995;
  std::uint64_t seed = 1;
  int workers = 1;
  double time_budget_s = 0.0;
  bool two_objective = false;
};

struct GaResult {
  std::vector<Chromosome> front;  // mutually nondominated
  int generations_run = 0;
  std::size_t evaluations = 0;

  FrontMatrix front_matrix() const;
};

GaResult nsga2_run(const ScenarioInstance& instance, const GaConfig& cfg);
GaResult moead_run(const ScenarioInstance& instance, const MoeadConfig& cfg);

/// max_j w_j |f_j - z_j| with z the running ideal (componentwise max).
double tchebycheff(const Vec3& f, const Vec3& w, const Vec3& ideal);

/// For each weight, the indices of its `k` nearest weights (itself first).
std::vector<std::vector<std::size_t>> weight_neighborhoods(std::span<const Vec3> weights, int k);

/// Lattice weights with the smallest delta giving at least `count`, truncated to `count`.
std::vector<Vec3> moead_weights(int count);

/// SBX on [0,1] genes; children are clamped to the bounds.
void sbx_crossover(std::vector<double>& a, std::vector<double>& b, double eta, Rng& rng);
/// With probability `prob`, each gene is redrawn uniformly with rate 1/L.
void reset_mutation(std::vector<double>& genes, double prob, Rng& rng);

}  // namespace emorl
