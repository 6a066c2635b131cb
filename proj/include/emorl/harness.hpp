#pragma once

// Experiment orchestration: named instances, run configuration, training runs
// with on-disk checkpoints, front evaluation reports and policy replay.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "emorl/io.hpp"

namespace emorl {

struct InstanceSpec {
  std::string name;  // "I-(K,H)"
  int K = 60;
  double H = 30.0;
  /// Device-layout seed; derived from the master seed when unset.
  std::optional<std::uint64_t> instance_seed;
};

/// The six benchmark instances I-(K,H), K in {60,100,140}, H in {30,50}.
std::vector<InstanceSpec> benchmark_instances();
/// Throws ConfigError for an unknown name.
InstanceSpec find_instance(const std::string& name);
std::uint64_t instance_seed_for(const InstanceSpec& spec, std::uint64_t master_seed);

enum class Algorithm { Emorl, Nsga2, Moead };
Algorithm parse_algorithm(const std::string& name);
std::string algorithm_name(Algorithm a);

struct RunConfig {
  Algorithm algorithm = Algorithm::Emorl;
  InstanceSpec instance;
  std::uint64_t seed = 1;
  bool desk_scale = false;
  SimConfig sim;
  EmorlHyper emorl;
  GaConfig nsga2;
  MoeadConfig moead;
  int workers = 1;
  std::filesystem::path out_dir = "runs";
  /// Write per-generation checkpoints (EMORL only).
  bool checkpoints = true;
};

/// Reduced preset: K=20, 200x200 area, T=100, 10 generations, 10 warm-up
/// iterations, 5 task iterations, 3 evaluation episodes, delta=4.
void apply_desk_scale(RunConfig& run);

/// Builds a run: defaults, then the instance's (K,H), then the desk preset,
/// then `overrides` with optional "sim", "emorl", "nsga2", "moead" objects.
RunConfig make_run_config(Algorithm algorithm, const std::string& instance_name, std::uint64_t seed,
                          bool desk_scale, const Json& overrides = Json::object());

ScenarioInstance scenario_for(const RunConfig& run);

Json run_manifest(const RunConfig& run, double wall_clock_s, const Json& outputs);

struct TrainOutcome {
  FrontMatrix front;
  double wall_clock_s = 0.0;
  std::size_t offspring_total = 0;
  std::vector<std::string> errors;
  std::filesystem::path front_path;
  std::filesystem::path manifest_path;
};

/// Runs the configured algorithm and writes front.csv, manifest.json and,
/// for EMORL, training_log.csv, policies/ and checkpoints/gen_NNN/.
TrainOutcome run_train(const RunConfig& run);

struct AlgorithmReport {
  std::string label;
  std::size_t size = 0;
  double igd = 0.0;
  double hv = 0.0;
  CoiSummary coi;
};

/// Reference point for hypervolume in normalized objective space.
inline constexpr double kHvReference = 0.0;

/// Normalizes all fronts over their union, builds the nondominated reference
/// front, then scores each front. COI uses the delta-4 weight lattice.
std::vector<AlgorithmReport> evaluate_fronts(const std::vector<FrontMatrix>& fronts,
                                             const std::vector<std::string>& labels,
                                             CoiObjective coi_mode = CoiObjective::Returns);

std::string report_csv(const std::vector<AlgorithmReport>& reports);
Json report_json(const std::vector<AlgorithmReport>& reports);

/// Rolls out the policy blob deterministically for one episode and writes the episode CSV.
std::vector<SlotOutcome> replay_policy(const GaussianPolicy& policy, const ScenarioInstance& instance,
                                       std::uint64_t episode_seed);

/// Instance table as JSON (name, K, H, derived seed and full sim config).
Json instances_json(std::uint64_t master_seed, bool desk_scale);

}  // namespace emorl
