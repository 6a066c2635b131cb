#pragma once

// Evolutionary outer loop: weight lattice, warm-up, performance-buffer task
// population, external Pareto archive and per-weight task selection.

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "emorl/metrics.hpp"
#include "emorl/mmppo.hpp"

namespace emorl {

/// Simplex lattice with spacing 1/delta; C(m + delta - 1, m - 1) vectors in
/// lexicographically ascending order.
std::vector<std::vector<double>> generate_weight_lattice(int m, int delta);
std::vector<Vec3> weight_lattice3(int delta);

struct PolicyEvaluation {
  Vec3 returns{};  // F(pi): mean discounted return vector
  Vec3 raw{};      // mean (D_total, E_total, N_total)
};

/// Deterministic (mean-action) episodes, one per seed, averaged.
PolicyEvaluation evaluate_policy(const GaussianPolicy& policy, const ScenarioInstance& instance,
                                 std::span<const std::uint64_t> episode_seeds, double gamma);

/// Fixed block of evaluation episode seeds derived from a master seed.
std::vector<std::uint64_t> evaluation_seeds(std::uint64_t master, int count);

struct PopulationMember {
  LearningTask task;
  PolicyEvaluation eval;
};

struct TaskPopulation {
  std::vector<Vec3> directions;
  std::size_t buffer_size = 2;
  Vec3 z_ref{};
  std::vector<std::vector<PopulationMember>> buffers;

  std::size_t size() const;
  std::vector<const PopulationMember*> members() const;
};

/// `count` directions drawn uniformly from the unit simplex.
std::vector<Vec3> sample_simplex_directions(std::size_t count, std::uint64_t seed);

TaskPopulation make_population(std::size_t buffer_count, std::size_t buffer_size);

/// Buffer assignment and truncation over `objectives` taken in order: each
/// point goes to argmax_j d_j . (F - z_ref); an over-full buffer keeps its
/// `buffer_size` points farthest from z_ref. Returns member indices per buffer.
std::vector<std::vector<std::size_t>> assign_to_buffers(std::span<const Vec3> objectives,
                                                        std::span<const Vec3> directions,
                                                        const Vec3& z_ref, std::size_t buffer_size);

/// Rebuilds the buffers from the current members followed by `offspring`.
void update_population(TaskPopulation& pop, std::vector<PopulationMember> offspring);

struct ArchiveEntry {
  std::uint64_t policy_id = 0;
  GaussianPolicy policy;
  PolicyEvaluation eval;
};

struct EpArchive {
  std::vector<ArchiveEntry> entries;

  FrontMatrix front() const;
  bool mutually_nondominated() const;
};

/// Pareto insertion on eval.returns. Returns true if the candidate entered.
bool update_ep(EpArchive& archive, ArchiveEntry candidate);
void update_ep(EpArchive& archive, std::span<const ArchiveEntry> candidates);

/// For each weight, the index of the best objective vector (lowest on ties).
std::vector<std::size_t> select_indices(std::span<const Vec3> objectives, std::span<const Vec3> weights);

/// Clones the per-weight winner from the population and re-weights it.
std::vector<LearningTask> select_tasks(const TaskPopulation& pop, std::span<const Vec3> weights);

struct EmorlHyper {
  int generations = 100;
  int warmup_iterations = 60;
  int task_iterations = 10;
  int delta = 4;
  std::size_t buffer_count = 200;
  std::size_t buffer_size = 2;
  int eval_episodes = 5;
  PpoConfig ppo;
  std::uint64_t seed = 1;
  int workers = 1;
};

struct GenerationReport {
  int generation = 0;  // 0: archive holds the warm-up offspring
  const EpArchive* archive = nullptr;
  std::size_t population_size = 0;
  std::size_t offspring_total = 0;
  Vec3 z_ref{};
};

struct EmorlResult {
  EpArchive archive;
  std::size_t offspring_total = 0;
  std::vector<IterationStats> training_log;
  std::vector<std::string> errors;
  std::vector<FrontMatrix> archive_history;  // archive front after each generation
};

EmorlResult run_emorl(const ScenarioInstance& instance, const EmorlHyper& hyper,
                      const std::function<void(const GenerationReport&)>& on_generation = {});

}  // namespace emorl
