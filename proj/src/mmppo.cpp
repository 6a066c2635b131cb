#include "emorl/mmppo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "parallel.hpp"

namespace emorl {

namespace {

void shuffle_indices(std::vector<std::size_t>& idx, Rng& rng) {
  for (std::size_t i = idx.size(); i > 1; --i) {
    const std::size_t j = uniform_index(rng, i);
    std::swap(idx[i - 1], idx[j]);
  }
}

void clip_grad_norm(std::vector<double>& g, double max_norm) {
  if (max_norm <= 0.0) return;
  const double norm = std::sqrt(std::inner_product(g.begin(), g.end(), g.begin(), 0.0));
  if (norm > max_norm) {
    const double s = max_norm / norm;
    for (auto& x : g) x *= s;
  }
}

void apply_policy_step(LearningTask& task, std::span<const double> grad) {
  auto& net = task.target.mean_net();
  const std::size_t n = net.param_count();
  std::vector<double> flat(n + 3);
  const auto p = net.params();
  std::copy(p.begin(), p.end(), flat.begin());
  const auto& ls = task.target.log_std();
  std::copy(ls.begin(), ls.end(), flat.begin() + static_cast<std::ptrdiff_t>(n));
  task.policy_opt.step(flat, grad);
  auto mp = net.mutable_params();
  std::copy(flat.begin(), flat.begin() + static_cast<std::ptrdiff_t>(n), mp.begin());
  task.target.set_log_std({flat[n], flat[n + 1], flat[n + 2]});
}

}  // namespace

LearningTask LearningTask::create(const Vec3& weight, std::size_t hidden, double lr, Rng& rng) {
  LearningTask task;
  task.weight = weight;
  task.target = GaussianPolicy(kObservationSize, hidden);
  task.target.initialize(rng);
  task.sample = task.target;
  task.value = make_value_net(kObservationSize, hidden);
  task.value.initialize(rng, std::sqrt(2.0), 1.0);
  task.policy_opt = AdamState(task.target.param_count(), lr);
  task.value_opt = AdamState(task.value.param_count(), lr);
  return task;
}

RolloutBatch collect_rollout(const LearningTask& task, const ScenarioInstance& instance,
                             int episodes, Rng& rng, double gamma) {
  if (episodes < 1) throw ConfigError("collect_rollout: need at least one episode");
  UavMecEnv env(instance);
  const double d_max = instance.config.d_max;
  RolloutBatch batch;
  batch.transitions.reserve(static_cast<std::size_t>(episodes * instance.config.T));
  for (int e = 0; e < episodes; ++e) {
    Observation obs = env.reset(rng());
    bool done = false;
    while (!done) {
      Transition tr;
      tr.obs = obs.features;
      const auto s = task.sample.sample(tr.obs, rng, d_max);
      const auto v = task.value.forward(tr.obs);
      tr.action = s.raw;
      tr.log_prob = s.log_prob;
      tr.value = {v[0], v[1], v[2]};
      const auto step = env.step(s.action);
      tr.reward = step.reward;
      tr.done = step.done;
      done = step.done;
      obs = step.observation;
      batch.transitions.push_back(tr);
    }
    batch.episodes.push_back(
        episode_totals(env.log(), gamma, instance.config.include_propulsion_in_reward));
  }
  return batch;
}

std::vector<Vec3> compute_gae(std::span<const Transition> transitions, double gamma, double lambda) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw DomainError("compute_gae: gamma must lie in [0,1]");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw DomainError("compute_gae: lambda must lie in [0,1]");
  std::vector<Vec3> adv(transitions.size());
  Vec3 running{};
  for (std::size_t i = transitions.size(); i-- > 0;) {
    const auto& tr = transitions[i];
    const bool terminal = tr.done || i + 1 == transitions.size();
    Vec3 next_value{};
    if (!terminal) next_value = transitions[i + 1].value;
    if (terminal) running = {};
    for (std::size_t j = 0; j < kObjectives; ++j) {
      const double delta = tr.reward[j] + gamma * next_value[j] - tr.value[j];
      running[j] = delta + gamma * lambda * running[j];
    }
    adv[i] = running;
  }
  return adv;
}

void compute_gae(RolloutBatch& batch, double gamma, double lambda) {
  batch.advantages = compute_gae(batch.transitions, gamma, lambda);
  batch.value_targets = compute_value_targets(batch.transitions, gamma);
}

std::vector<Vec3> compute_value_targets(std::span<const Transition> transitions, double gamma) {
  std::vector<Vec3> targets(transitions.size());
  for (std::size_t i = 0; i < transitions.size(); ++i) {
    const auto& tr = transitions[i];
    const bool terminal = tr.done || i + 1 == transitions.size();
    for (std::size_t j = 0; j < kObjectives; ++j)
      targets[i][j] = tr.reward[j] + (terminal ? 0.0 : gamma * transitions[i + 1].value[j]);
  }
  return targets;
}

LossGrad surrogate_loss_grad(const GaussianPolicy& policy, std::span<const SurrogateSample> batch,
                             double clip, double entropy_coef) {
  const auto& net = policy.mean_net();
  const std::size_t n = net.param_count();
  LossGrad out;
  out.grad.assign(n + 3, 0.0);
  if (batch.empty()) return out;
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  const auto& ls = policy.log_std();
  const std::array<double, 3> inv_var{std::exp(-2.0 * ls[0]), std::exp(-2.0 * ls[1]),
                                      std::exp(-2.0 * ls[2])};
  std::span<double> net_grad(out.grad.data(), n);
  Mlp::Cache cache;
  std::size_t clipped = 0;
  for (const auto& s : batch) {
    const auto out_mu = net.forward(s.obs, cache);
    const NormalizedAction mu{out_mu[0], out_mu[1], out_mu[2]};
    const double logp = gaussian_log_prob(s.action, mu, ls);
    const double ratio = std::exp(logp - s.old_log_prob);
    const double unclipped = ratio * s.advantage;
    const double clipped_ratio = std::clamp(ratio, 1.0 - clip, 1.0 + clip);
    const double clipped_obj = clipped_ratio * s.advantage;
    if (std::abs(ratio - 1.0) > clip) ++clipped;
    const bool unclipped_active = unclipped <= clipped_obj;
    out.loss -= std::min(unclipped, clipped_obj) * inv_b;
    if (!unclipped_active) continue;
    const double dloss_dlogp = -ratio * s.advantage * inv_b;
    std::array<double, 3> upstream{};
    for (std::size_t i = 0; i < 3; ++i) {
      const double diff = s.action[i] - mu[i];
      upstream[i] = dloss_dlogp * diff * inv_var[i];
      out.grad[n + i] += dloss_dlogp * (diff * diff * inv_var[i] - 1.0);
    }
    net.backward(cache, upstream, net_grad);
  }
  if (entropy_coef != 0.0) {
    constexpr double kHalfLog2PiE = 1.41893853320467274178;
    for (std::size_t i = 0; i < 3; ++i) {
      out.loss -= entropy_coef * (ls[i] + kHalfLog2PiE);
      out.grad[n + i] -= entropy_coef;
    }
  }
  out.clip_fraction = static_cast<double>(clipped) * inv_b;
  return out;
}

LossGrad value_loss_grad(const Mlp& net, std::span<const double> inputs,
                         std::span<const double> targets) {
  const std::size_t in = net.input_size();
  const std::size_t outw = net.output_size();
  if (inputs.size() % in != 0 || targets.size() % outw != 0 ||
      inputs.size() / in != targets.size() / outw)
    throw DomainError("value_loss_grad: input/target row mismatch");
  const std::size_t rows = inputs.size() / in;
  LossGrad out;
  out.grad.assign(net.param_count(), 0.0);
  if (rows == 0) return out;
  const double inv_b = 1.0 / static_cast<double>(rows);
  Mlp::Cache cache;
  std::vector<double> upstream(outw);
  for (std::size_t r = 0; r < rows; ++r) {
    const auto pred = net.forward(inputs.subspan(r * in, in), cache);
    for (std::size_t j = 0; j < outw; ++j) {
      const double err = pred[j] - targets[r * outw + j];
      out.loss += err * err * inv_b;
      upstream[j] = 2.0 * err * inv_b;
    }
    net.backward(cache, upstream, out.grad);
  }
  return out;
}

std::vector<double> fit_value(Mlp& net, AdamState& opt, std::span<const double> inputs,
                              std::span<const double> targets, int epochs, int minibatch, Rng& rng) {
  const std::size_t in = net.input_size();
  const std::size_t outw = net.output_size();
  const std::size_t rows = inputs.size() / in;
  const std::size_t mb = minibatch > 0 ? static_cast<std::size_t>(minibatch) : rows;
  std::vector<std::size_t> idx(rows);
  std::iota(idx.begin(), idx.end(), 0);
  std::vector<double> losses;
  std::vector<double> xb;
  std::vector<double> yb;
  for (int e = 0; e < epochs; ++e) {
    shuffle_indices(idx, rng);
    for (std::size_t start = 0; start < rows; start += mb) {
      const std::size_t end = std::min(rows, start + mb);
      xb.clear();
      yb.clear();
      for (std::size_t k = start; k < end; ++k) {
        xb.insert(xb.end(), inputs.begin() + static_cast<std::ptrdiff_t>(idx[k] * in),
                  inputs.begin() + static_cast<std::ptrdiff_t>((idx[k] + 1) * in));
        yb.insert(yb.end(), targets.begin() + static_cast<std::ptrdiff_t>(idx[k] * outw),
                  targets.begin() + static_cast<std::ptrdiff_t>((idx[k] + 1) * outw));
      }
      auto lg = value_loss_grad(net, xb, yb);
      if (!std::isfinite(lg.loss)) throw NumericError("value regression: non-finite loss");
      opt.step(net.mutable_params(), lg.grad);
    }
    losses.push_back(value_loss_grad(net, inputs, targets).loss);
  }
  return losses;
}

PpoStats ppo_update(LearningTask& task, const RolloutBatch& batch, const PpoConfig& cfg, Rng& rng) {
  if (batch.advantages.size() != batch.transitions.size())
    throw UsageError("ppo_update: advantages not computed for this batch");
  const std::size_t rows = batch.transitions.size();
  std::vector<SurrogateSample> samples(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    const auto& tr = batch.transitions[i];
    samples[i] = {tr.obs, tr.action, tr.log_prob,
                  extended_advantage(batch.advantages[i], task.weight)};
  }
  if (cfg.standardize_advantages && rows > 1) {
    double mean = 0.0;
    for (const auto& s : samples) mean += s.advantage;
    mean /= static_cast<double>(rows);
    double var = 0.0;
    for (const auto& s : samples) var += (s.advantage - mean) * (s.advantage - mean);
    const double sd = std::sqrt(var / static_cast<double>(rows));
    for (auto& s : samples) s.advantage = (s.advantage - mean) / (sd + 1e-8);
  }

  const GaussianPolicy saved_policy = task.target;
  const AdamState saved_opt = task.policy_opt;
  const std::size_t mb = cfg.minibatch > 0 ? static_cast<std::size_t>(cfg.minibatch) : rows;
  std::vector<std::size_t> idx(rows);
  std::iota(idx.begin(), idx.end(), 0);
  std::vector<SurrogateSample> chunk;
  PpoStats stats;
  std::size_t updates = 0;
  try {
    for (int e = 0; e < cfg.epochs; ++e) {
      shuffle_indices(idx, rng);
      for (std::size_t start = 0; start < rows; start += mb) {
        const std::size_t end = std::min(rows, start + mb);
        chunk.clear();
        for (std::size_t k = start; k < end; ++k) chunk.push_back(samples[idx[k]]);
        auto lg = surrogate_loss_grad(task.target, chunk, cfg.clip, cfg.entropy_coef);
        if (!std::isfinite(lg.loss)) throw NumericError("ppo_update: non-finite surrogate loss");
        clip_grad_norm(lg.grad, cfg.max_grad_norm);
        apply_policy_step(task, lg.grad);
        stats.policy_loss += lg.loss;
        stats.clip_fraction += lg.clip_fraction;
        ++updates;
      }
    }
  } catch (const NumericError&) {
    task.target = saved_policy;
    task.policy_opt = saved_opt;
    throw;
  }
  if (updates > 0) {
    stats.policy_loss /= static_cast<double>(updates);
    stats.clip_fraction /= static_cast<double>(updates);
  }
  task.sample = task.target;
  return stats;
}

std::vector<double> value_update(LearningTask& task, const RolloutBatch& batch,
                                 const PpoConfig& cfg, Rng& rng) {
  if (batch.value_targets.size() != batch.transitions.size())
    throw UsageError("value_update: value targets not computed for this batch");
  std::vector<double> inputs;
  std::vector<double> targets;
  inputs.reserve(batch.transitions.size() * kObservationSize);
  targets.reserve(batch.transitions.size() * kObjectives);
  for (std::size_t i = 0; i < batch.transitions.size(); ++i) {
    const auto& o = batch.transitions[i].obs;
    inputs.insert(inputs.end(), o.begin(), o.end());
    const auto& t = batch.value_targets[i];
    targets.insert(targets.end(), t.begin(), t.end());
  }
  const Mlp saved_net = task.value;
  const AdamState saved_opt = task.value_opt;
  try {
    return fit_value(task.value, task.value_opt, inputs, targets, cfg.value_epochs, cfg.minibatch, rng);
  } catch (const NumericError&) {
    task.value = saved_net;
    task.value_opt = saved_opt;
    throw;
  }
}

namespace {

struct TaskJobResult {
  std::vector<LearningTask> snapshots;
  std::vector<IterationStats> log;
  std::string error;
};

TaskJobResult run_task(LearningTask task, std::size_t index, int iterations,
                       const ScenarioInstance& instance, const PpoConfig& cfg, const MmppoRun& run) {
  TaskJobResult result;
  Rng rng(derive_seed(run.seed, seed_stream::kRollout, run.phase, index));
  try {
    for (int it = 0; it < iterations; ++it) {
      auto batch = collect_rollout(task, instance, cfg.episodes, rng, cfg.gamma);
      compute_gae(batch, cfg.gamma, cfg.lambda);
      const auto ppo = ppo_update(task, batch, cfg, rng);
      const auto vloss = value_update(task, batch, cfg, rng);
      IterationStats st;
      st.task_index = index;
      st.iteration = it;
      st.policy_loss = ppo.policy_loss;
      st.clip_fraction = ppo.clip_fraction;
      st.value_loss = vloss.empty() ? 0.0 : vloss.back();
      for (const auto& ep : batch.episodes) {
        for (std::size_t j = 0; j < kObjectives; ++j) {
          st.mean_return[j] += ep.return_vec[j] / static_cast<double>(batch.episodes.size());
          st.mean_raw[j] += ep.raw()[j] / static_cast<double>(batch.episodes.size());
        }
      }
      result.log.push_back(st);
      result.snapshots.push_back(task);
    }
  } catch (const std::exception& e) {
    result.error = "task " + std::to_string(index) + ": " + e.what();
  }
  return result;
}

}  // namespace

MmppoResult mmppo(std::span<const LearningTask> tasks, int iterations,
                  const ScenarioInstance& instance, const PpoConfig& cfg, const MmppoRun& run) {
  if (iterations < 1) throw ConfigError("mmppo: iterations must be >= 1");
  std::vector<TaskJobResult> jobs(tasks.size());
  detail::parallel_for(tasks.size(), run.workers, [&](std::size_t i) {
    jobs[i] = run_task(tasks[i], i, iterations, instance, cfg, run);
  });

  MmppoResult result;
  std::uint64_t id = run.next_id;
  for (auto& job : jobs) {
    for (std::size_t k = 0; k < job.snapshots.size(); ++k) {
      job.snapshots[k].id = id;
      job.log[k].task_id = id;
      ++id;
      result.offspring.push_back(std::move(job.snapshots[k]));
      result.log.push_back(job.log[k]);
    }
    if (!job.error.empty()) result.errors.push_back(job.error);
  }
  return result;
}

}  // namespace emorl
