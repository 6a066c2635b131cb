#include "emorl/evolution.hpp"

#include <algorithm>
#include <cmath>

#include "parallel.hpp"

namespace emorl {

namespace {

void enumerate_lattice(int m, int delta, int remaining, std::vector<int>& prefix,
                       std::vector<std::vector<double>>& out) {
  if (static_cast<int>(prefix.size()) == m - 1) {
    std::vector<double> w;
    w.reserve(static_cast<std::size_t>(m));
    for (int k : prefix) w.push_back(static_cast<double>(k) / delta);
    w.push_back(static_cast<double>(remaining) / delta);
    out.push_back(std::move(w));
    return;
  }
  for (int k = 0; k <= remaining; ++k) {
    prefix.push_back(k);
    enumerate_lattice(m, delta, remaining - k, prefix, out);
    prefix.pop_back();
  }
}

double distance(const Vec3& a, const Vec3& b) {
  return std::sqrt((a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]) +
                   (a[2] - b[2]) * (a[2] - b[2]));
}

// Fixed seed for the performance-buffer directions.
constexpr std::uint64_t kBufferDirectionSeed = 0x5EEDB0FFE7ULL;

}  // namespace

std::vector<std::vector<double>> generate_weight_lattice(int m, int delta) {
  if (m < 1) throw ConfigError("weight lattice: objective count must be >= 1");
  if (delta <= 0) throw ConfigError("weight lattice: delta must be > 0");
  std::vector<std::vector<double>> out;
  std::vector<int> prefix;
  enumerate_lattice(m, delta, delta, prefix, out);
  return out;
}

std::vector<Vec3> weight_lattice3(int delta) {
  std::vector<Vec3> out;
  for (const auto& w : generate_weight_lattice(3, delta)) out.push_back({w[0], w[1], w[2]});
  return out;
}

PolicyEvaluation evaluate_policy(const GaussianPolicy& policy, const ScenarioInstance& instance,
                                 std::span<const std::uint64_t> episode_seeds, double gamma) {
  if (episode_seeds.empty()) throw ConfigError("evaluate_policy: need at least one episode");
  UavMecEnv env(instance);
  PolicyEvaluation eval;
  const double inv = 1.0 / static_cast<double>(episode_seeds.size());
  for (auto seed : episode_seeds) {
    Observation obs = env.reset(seed);
    while (!env.done()) obs = env.step(policy.act(obs.features, instance.config.d_max)).observation;
    const auto totals =
        episode_totals(env.log(), gamma, instance.config.include_propulsion_in_reward);
    for (std::size_t j = 0; j < kObjectives; ++j) {
      eval.returns[j] += totals.return_vec[j] * inv;
      eval.raw[j] += totals.raw()[j] * inv;
    }
  }
  return eval;
}

std::vector<std::uint64_t> evaluation_seeds(std::uint64_t master, int count) {
  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < count; ++i)
    seeds.push_back(derive_seed(master, seed_stream::kEvaluation, static_cast<std::uint64_t>(i)));
  return seeds;
}

std::size_t TaskPopulation::size() const {
  std::size_t n = 0;
  for (const auto& b : buffers) n += b.size();
  return n;
}

std::vector<const PopulationMember*> TaskPopulation::members() const {
  std::vector<const PopulationMember*> out;
  for (const auto& b : buffers)
    for (const auto& m : b) out.push_back(&m);
  return out;
}

std::vector<Vec3> sample_simplex_directions(std::size_t count, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Vec3> out(count);
  for (auto& d : out) {
    double sum = 0.0;
    for (auto& c : d) {
      double u = uniform01(rng);
      while (u <= 0.0) u = uniform01(rng);
      c = -std::log(u);
      sum += c;
    }
    for (auto& c : d) c /= sum;
  }
  return out;
}

TaskPopulation make_population(std::size_t buffer_count, std::size_t buffer_size) {
  if (buffer_count == 0 || buffer_size == 0) throw ConfigError("task population: empty buffers");
  TaskPopulation pop;
  pop.directions = sample_simplex_directions(
      buffer_count, derive_seed(kBufferDirectionSeed, seed_stream::kBuffers));
  pop.buffer_size = buffer_size;
  pop.buffers.resize(buffer_count);
  return pop;
}

std::vector<std::vector<std::size_t>> assign_to_buffers(std::span<const Vec3> objectives,
                                                        std::span<const Vec3> directions,
                                                        const Vec3& z_ref, std::size_t buffer_size) {
  std::vector<std::vector<std::size_t>> buffers(directions.size());
  for (std::size_t i = 0; i < objectives.size(); ++i) {
    const Vec3 shifted{objectives[i][0] - z_ref[0], objectives[i][1] - z_ref[1],
                       objectives[i][2] - z_ref[2]};
    std::size_t best = 0;
    double best_val = dot(directions[0], shifted);
    for (std::size_t j = 1; j < directions.size(); ++j) {
      const double v = dot(directions[j], shifted);
      if (v > best_val) {
        best_val = v;
        best = j;
      }
    }
    buffers[best].push_back(i);
  }
  // Farthest first; ties keep input order.
  for (auto& buf : buffers) {
    std::stable_sort(buf.begin(), buf.end(), [&](std::size_t a, std::size_t b) {
      return distance(objectives[a], z_ref) > distance(objectives[b], z_ref);
    });
    if (buf.size() > buffer_size) buf.resize(buffer_size);
  }
  return buffers;
}

void update_population(TaskPopulation& pop, std::vector<PopulationMember> offspring) {
  std::vector<PopulationMember> all;
  all.reserve(pop.size() + offspring.size());
  for (auto& b : pop.buffers)
    for (auto& m : b) all.push_back(std::move(m));
  for (auto& m : offspring) all.push_back(std::move(m));
  std::vector<Vec3> objectives;
  objectives.reserve(all.size());
  for (const auto& m : all) objectives.push_back(m.eval.returns);
  const auto assignment = assign_to_buffers(objectives, pop.directions, pop.z_ref, pop.buffer_size);
  pop.buffers.assign(pop.directions.size(), {});
  for (std::size_t j = 0; j < assignment.size(); ++j)
    for (auto idx : assignment[j]) pop.buffers[j].push_back(std::move(all[idx]));
}

FrontMatrix EpArchive::front() const {
  FrontMatrix f;
  for (const auto& e : entries) {
    f.points.push_back(e.eval.returns);
    f.raw.push_back(e.eval.raw);
    f.labels.push_back(std::to_string(e.policy_id));
  }
  return f;
}

bool EpArchive::mutually_nondominated() const {
  for (std::size_t i = 0; i < entries.size(); ++i)
    for (std::size_t j = 0; j < entries.size(); ++j)
      if (i != j && (dominates(entries[i].eval.returns, entries[j].eval.returns) ||
                     entries[i].eval.returns == entries[j].eval.returns))
        return false;
  return true;
}

bool update_ep(EpArchive& archive, ArchiveEntry candidate) {
  const auto& f = candidate.eval.returns;
  for (const auto& e : archive.entries)
    if (dominates(e.eval.returns, f) || e.eval.returns == f) return false;
  std::erase_if(archive.entries, [&](const ArchiveEntry& e) { return dominates(f, e.eval.returns); });
  archive.entries.push_back(std::move(candidate));
  return true;
}

void update_ep(EpArchive& archive, std::span<const ArchiveEntry> candidates) {
  for (const auto& c : candidates) update_ep(archive, c);
}

std::vector<std::size_t> select_indices(std::span<const Vec3> objectives, std::span<const Vec3> weights) {
  if (objectives.empty()) throw UsageError("select_tasks: empty population");
  std::vector<std::size_t> out;
  out.reserve(weights.size());
  for (const auto& w : weights) {
    std::size_t best = 0;
    double best_val = dot(w, objectives[0]);
    for (std::size_t j = 1; j < objectives.size(); ++j) {
      const double v = dot(w, objectives[j]);
      if (v > best_val) {
        best_val = v;
        best = j;
      }
    }
    out.push_back(best);
  }
  return out;
}

std::vector<LearningTask> select_tasks(const TaskPopulation& pop, std::span<const Vec3> weights) {
  const auto members = pop.members();
  std::vector<Vec3> objectives;
  objectives.reserve(members.size());
  for (const auto* m : members) objectives.push_back(m->eval.returns);
  std::vector<LearningTask> out;
  for (std::size_t i = 0; const auto idx : select_indices(objectives, weights)) {
    LearningTask t = members[idx]->task;
    t.weight = weights[i++];
    out.push_back(std::move(t));
  }
  return out;
}

namespace {

std::vector<PopulationMember> evaluate_offspring(std::vector<LearningTask> tasks,
                                                 const ScenarioInstance& instance,
                                                 std::span<const std::uint64_t> seeds,
                                                 double gamma, int workers) {
  std::vector<PopulationMember> out(tasks.size());
  detail::parallel_for(tasks.size(), workers, [&](std::size_t i) {
    out[i].eval = evaluate_policy(tasks[i].target, instance, seeds, gamma);
  });
  for (std::size_t i = 0; i < tasks.size(); ++i) out[i].task = std::move(tasks[i]);
  return out;
}

}  // namespace

EmorlResult run_emorl(const ScenarioInstance& instance, const EmorlHyper& hyper,
                      const std::function<void(const GenerationReport&)>& on_generation) {
  if (hyper.generations < 0 || hyper.warmup_iterations < 1 || hyper.task_iterations < 1 ||
      hyper.eval_episodes < 1)
    throw ConfigError("run_emorl: invalid iteration counts");
  instance.config.validate();
  const auto weights = weight_lattice3(hyper.delta);
  const auto eval_seeds = evaluation_seeds(hyper.seed, hyper.eval_episodes);
  const double gamma = hyper.ppo.gamma;

  EmorlResult result;
  TaskPopulation pop = make_population(hyper.buffer_count, hyper.buffer_size);
  bool z_ref_set = false;

  std::vector<LearningTask> tasks;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    Rng init(derive_seed(hyper.seed, seed_stream::kInit, i));
    tasks.push_back(LearningTask::create(weights[i], hyper.ppo.hidden, hyper.ppo.lr, init));
  }

  std::uint64_t next_id = 1;
  auto train = [&](std::span<const LearningTask> set, int iterations, std::uint64_t phase) {
    MmppoRun run{hyper.seed, phase, next_id, hyper.workers};
    auto res = mmppo(set, iterations, instance, hyper.ppo, run);
    next_id += res.offspring.size();
    result.offspring_total += res.offspring.size();
    result.training_log.insert(result.training_log.end(), res.log.begin(), res.log.end());
    result.errors.insert(result.errors.end(), res.errors.begin(), res.errors.end());
    return evaluate_offspring(std::move(res.offspring), instance, eval_seeds, gamma, hyper.workers);
  };

  auto offspring = train(tasks, hyper.warmup_iterations, 0);
  for (int g = 0; g <= hyper.generations; ++g) {
    for (const auto& m : offspring) {
      for (std::size_t j = 0; j < kObjectives; ++j)
        pop.z_ref[j] = z_ref_set ? std::min(pop.z_ref[j], m.eval.returns[j]) : m.eval.returns[j];
      z_ref_set = true;
    }
    for (const auto& m : offspring)
      update_ep(result.archive, ArchiveEntry{m.task.id, m.task.target, m.eval});
    update_population(pop, std::move(offspring));
    offspring.clear();
    result.archive_history.push_back(result.archive.front());

    if (on_generation) {
      GenerationReport report;
      report.generation = g;
      report.archive = &result.archive;
      report.population_size = pop.size();
      report.offspring_total = result.offspring_total;
      report.z_ref = pop.z_ref;
      on_generation(report);
    }
    if (g == hyper.generations) break;
    if (pop.size() == 0) throw NumericError("run_emorl: task population is empty");
    tasks = select_tasks(pop, weights);
    offspring = train(tasks, hyper.task_iterations, static_cast<std::uint64_t>(g + 1));
  }
  return result;
}

}  // namespace emorl
