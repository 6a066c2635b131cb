#include <doctest.h>

#include <cmath>

#include "emorl/mmppo.hpp"
#include "support.hpp"

using namespace emorl;
using emorl::test::rel_err;

namespace {

std::vector<Transition> random_episode(Rng& rng, std::size_t len) {
  std::vector<Transition> ep(len);
  for (auto& tr : ep) {
    for (auto& r : tr.reward) r = uniform(rng, -5.0, 5.0);
    for (auto& v : tr.value) v = uniform(rng, -5.0, 5.0);
  }
  ep.back().done = true;
  return ep;
}

// A_t = sum_k (gamma lambda)^k delta_{t+k}, recomputed from scratch for every t.
std::vector<Vec3> brute_gae(const std::vector<Transition>& ep, double gamma, double lambda) {
  std::vector<Vec3> out(ep.size());
  for (std::size_t t = 0; t < ep.size(); ++t) {
    for (std::size_t j = 0; j < 3; ++j) {
      double sum = 0.0;
      for (std::size_t k = t; k < ep.size(); ++k) {
        const double next = k + 1 < ep.size() ? ep[k + 1].value[j] : 0.0;
        const double delta = ep[k].reward[j] + gamma * next - ep[k].value[j];
        sum += std::pow(gamma * lambda, static_cast<double>(k - t)) * delta;
      }
      out[t][j] = sum;
    }
  }
  return out;
}

GaussianPolicy small_policy(Rng& rng) {
  Mlp net({4, 8, 8, 3}, OutputActivation::Sigmoid);
  net.initialize(rng, std::sqrt(2.0), 1.0);
  return GaussianPolicy(std::move(net), {-0.7, -0.4, -1.0});
}

std::vector<SurrogateSample> random_samples(const GaussianPolicy& pol, Rng& rng, std::size_t n) {
  std::vector<SurrogateSample> out(n);
  for (auto& s : out) {
    for (auto& o : s.obs) o = uniform01(rng);
    const auto draw = pol.sample(s.obs, rng, 30.0);
    s.action = draw.raw;
    // Old policy differs from the current one so some ratios leave the clip band.
    s.old_log_prob = draw.log_prob + uniform(rng, -0.4, 0.4);
    s.advantage = uniform(rng, -2.0, 2.0);
  }
  return out;
}

double surrogate_at(GaussianPolicy pol, std::span<const SurrogateSample> batch, std::size_t i,
                    double delta, double entropy) {
  const std::size_t n = pol.mean_net().param_count();
  if (i < n) {
    pol.mean_net().mutable_params()[i] += delta;
  } else {
    auto ls = pol.log_std();
    ls[i - n] += delta;
    pol.set_log_std(ls);
  }
  return surrogate_loss_grad(pol, batch, 0.2, entropy).loss;
}

PpoConfig tiny_ppo() {
  PpoConfig c;
  c.episodes = 1;
  c.epochs = 2;
  c.value_epochs = 2;
  c.minibatch = 8;
  c.hidden = 8;
  return c;
}

ScenarioInstance tiny_instance() {
  SimConfig c = emorl::test::desk_config();
  c.T = 10;
  return {c, 5};
}

}  // namespace

TEST_CASE("GAE equals the brute-force double sum") {
  Rng rng(101);
  for (int trial = 0; trial < 100; ++trial) {
    const auto ep = random_episode(rng, 10);
    const double gamma = uniform(rng, 0.5, 1.0);
    const double lambda = uniform01(rng);
    const auto fast = compute_gae(ep, gamma, lambda);
    const auto slow = brute_gae(ep, gamma, lambda);
    for (std::size_t t = 0; t < ep.size(); ++t)
      for (std::size_t j = 0; j < 3; ++j) CHECK(std::abs(fast[t][j] - slow[t][j]) <= 1e-10);
  }
}

TEST_CASE("GAE does not bootstrap across episode boundaries") {
  Rng rng(5);
  auto a = random_episode(rng, 6);
  const auto b = random_episode(rng, 4);
  const auto expected_a = brute_gae(a, 0.99, 0.9);
  const auto expected_b = brute_gae(b, 0.99, 0.9);
  a.insert(a.end(), b.begin(), b.end());
  const auto got = compute_gae(a, 0.99, 0.9);
  for (std::size_t t = 0; t < 6; ++t)
    for (std::size_t j = 0; j < 3; ++j) CHECK(got[t][j] == doctest::Approx(expected_a[t][j]));
  for (std::size_t t = 0; t < 4; ++t)
    for (std::size_t j = 0; j < 3; ++j) CHECK(got[6 + t][j] == doctest::Approx(expected_b[t][j]));
}

TEST_CASE("GAE limiting cases") {
  Rng rng(7);
  auto ep = random_episode(rng, 8);
  SUBCASE("lambda = 0 is the one-step TD residual") {
    const auto adv = compute_gae(ep, 0.9, 0.0);
    for (std::size_t t = 0; t < ep.size(); ++t) {
      for (std::size_t j = 0; j < 3; ++j) {
        const double next = t + 1 < ep.size() ? ep[t + 1].value[j] : 0.0;
        CHECK(adv[t][j] == doctest::Approx(ep[t].reward[j] + 0.9 * next - ep[t].value[j]));
      }
    }
  }
  SUBCASE("lambda = 1 with zero values is the discounted reward-to-go") {
    for (auto& tr : ep) tr.value = {};
    const auto adv = compute_gae(ep, 0.8, 1.0);
    for (std::size_t t = 0; t < ep.size(); ++t) {
      for (std::size_t j = 0; j < 3; ++j) {
        double g = 0.0;
        for (std::size_t k = ep.size(); k-- > t;) g = ep[k].reward[j] + 0.8 * g;
        CHECK(adv[t][j] == doctest::Approx(g));
      }
    }
  }
  CHECK_THROWS_AS(compute_gae(ep, 1.5, 0.5), DomainError);
  CHECK_THROWS_AS(compute_gae(ep, 0.9, -0.1), DomainError);
}

TEST_CASE("value targets are one-step bootstraps frozen from stored values") {
  Rng rng(8);
  const auto ep = random_episode(rng, 5);
  const auto targets = compute_value_targets(ep, 0.95);
  for (std::size_t t = 0; t < ep.size(); ++t) {
    for (std::size_t j = 0; j < 3; ++j) {
      const double next = t + 1 < ep.size() ? ep[t + 1].value[j] : 0.0;
      CHECK(targets[t][j] == ep[t].reward[j] + 0.95 * next);
    }
  }
}

TEST_CASE("extended advantage") {
  CHECK(extended_advantage({3.0, -1.0, 2.0}, {1.0, 0.0, 0.0}) == 3.0);
  CHECK(extended_advantage({3.0, -3.0, 3.0}, {1.0 / 3, 1.0 / 3, 1.0 / 3}) == doctest::Approx(1.0));
  Rng rng(3);
  for (int i = 0; i < 20; ++i) {
    const Vec3 a{uniform01(rng), uniform01(rng), uniform01(rng)};
    const Vec3 w{uniform01(rng), uniform01(rng), uniform01(rng)};
    CHECK(extended_advantage(a, w) == a[0] * w[0] + a[1] * w[1] + a[2] * w[2]);
  }
}

TEST_CASE("surrogate gradient matches central finite differences") {
  for (double entropy : {0.0, 0.01}) {
    Rng rng(31);
    const auto pol = small_policy(rng);
    const auto batch = random_samples(pol, rng, 64);
    const auto lg = surrogate_loss_grad(pol, batch, 0.2, entropy);
    CHECK(lg.clip_fraction > 0.0);
    const std::size_t total = pol.param_count();
    const double h = 1e-6;
    int checked = 0;
    for (int k = 0; k < 80; ++k) {
      const std::size_t i = k < 3 ? total - 1 - static_cast<std::size_t>(k) : uniform_index(rng, total);
      const double fd =
          (surrogate_at(pol, batch, i, h, entropy) - surrogate_at(pol, batch, i, -h, entropy)) / (2 * h);
      if (std::abs(fd) < 1e-8 && std::abs(lg.grad[i]) < 1e-8) continue;
      CHECK(rel_err(lg.grad[i], fd) < 1e-3);
      ++checked;
    }
    CHECK(checked >= 50);
  }
}

TEST_CASE("surrogate special cases") {
  Rng rng(4);
  const auto pol = small_policy(rng);
  auto batch = random_samples(pol, rng, 32);
  SUBCASE("zero advantages give a zero gradient") {
    for (auto& s : batch) s.advantage = 0.0;
    const auto lg = surrogate_loss_grad(pol, batch, 0.2);
    for (double g : lg.grad) CHECK(g == 0.0);
  }
  SUBCASE("ratio one: loss is minus the mean advantage") {
    double mean = 0.0;
    for (auto& s : batch) {
      s.old_log_prob = pol.log_prob(s.obs, s.action);
      mean += s.advantage / static_cast<double>(batch.size());
    }
    const auto lg = surrogate_loss_grad(pol, batch, 0.2);
    CHECK(lg.loss == doctest::Approx(-mean).epsilon(1e-12));
    CHECK(lg.clip_fraction == 0.0);
  }
  SUBCASE("clip containment: the objective uses a ratio inside the band when clipped") {
    double expected = 0.0;
    for (const auto& s : batch) {
      const double r = std::exp(pol.log_prob(s.obs, s.action) - s.old_log_prob);
      const double used = r * s.advantage <= std::clamp(r, 0.8, 1.2) * s.advantage
                              ? r
                              : std::clamp(r, 0.8, 1.2);
      if (used != r) {
        CHECK(used >= 0.8);
        CHECK(used <= 1.2);
      }
      expected -= used * s.advantage / static_cast<double>(batch.size());
    }
    CHECK(surrogate_loss_grad(pol, batch, 0.2).loss == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("value loss gradient matches finite differences") {
  Mlp net({4, 8, 8, 3}, OutputActivation::Identity);
  Rng rng(19);
  net.initialize(rng, 1.0, 1.0);
  std::vector<double> x(20 * 4);
  std::vector<double> y(20 * 3);
  for (auto& v : x) v = uniform01(rng);
  for (auto& v : y) v = uniform(rng, -3.0, 3.0);
  const auto lg = value_loss_grad(net, x, y);
  const double h = 1e-6;
  int checked = 0;
  for (int k = 0; k < 60; ++k) {
    const std::size_t i = uniform_index(rng, net.param_count());
    Mlp p = net;
    Mlp m = net;
    p.mutable_params()[i] += h;
    m.mutable_params()[i] -= h;
    const double fd = (value_loss_grad(p, x, y).loss - value_loss_grad(m, x, y).loss) / (2 * h);
    if (std::abs(fd) < 1e-8 && std::abs(lg.grad[i]) < 1e-8) continue;
    CHECK(rel_err(lg.grad[i], fd) < 1e-3);
    ++checked;
  }
  CHECK(checked >= 50);

  SUBCASE("predictions equal to targets give zero loss") {
    std::vector<double> own;
    for (std::size_t r = 0; r < 20; ++r) {
      const auto out = net.forward(std::span<const double>(x).subspan(r * 4, 4));
      own.insert(own.end(), out.begin(), out.end());
    }
    const auto zero = value_loss_grad(net, x, own);
    CHECK(zero.loss == 0.0);
    for (double g : zero.grad) CHECK(g == 0.0);
  }
  CHECK_THROWS_AS(value_loss_grad(net, x, std::vector<double>(7)), DomainError);
}

TEST_CASE("linear value regression reaches the least-squares solution") {
  Mlp net({1, 1}, OutputActivation::Identity);
  Rng rng(23);
  const std::size_t n = 40;
  std::vector<double> x(n);
  std::vector<double> y(n);
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = uniform(rng, -1.0, 1.0);
    y[i] = 2.0 * x[i] + 0.5 + 0.3 * standard_normal(rng);
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  const double intercept = (sy - slope * sx) / n;
  AdamState opt(net.param_count(), 1e-2);
  const auto losses = fit_value(net, opt, x, y, 6000, 0, rng);
  CHECK(std::abs(net.params()[0] - slope) < 1e-6);
  CHECK(std::abs(net.params()[1] - intercept) < 1e-6);
  for (std::size_t e = 1; e < losses.size(); ++e) CHECK(losses[e] <= losses[e - 1] * 1.05);
}

TEST_CASE("value loss trends down on a frozen batch") {
  Rng rng(29);
  auto task = LearningTask::create({1.0 / 3, 1.0 / 3, 1.0 / 3}, 16, 1e-3, rng);
  const auto inst = tiny_instance();
  auto batch = collect_rollout(task, inst, 4, rng);
  compute_gae(batch, 0.995, 0.95);
  PpoConfig cfg;
  cfg.value_epochs = 30;
  cfg.minibatch = 16;
  const auto losses = value_update(task, batch, cfg, rng);
  REQUIRE(losses.size() == 30);
  for (std::size_t e = 1; e < losses.size(); ++e) CHECK(losses[e] <= losses[e - 1] * 1.05);
  CHECK(losses.back() < losses.front());
}

TEST_CASE("rollout collection") {
  Rng rng(2);
  auto task = LearningTask::create({1.0, 0.0, 0.0}, 8, 1e-4, rng);
  SUBCASE("transition counts") {
    ScenarioInstance full{SimConfig{}, 1};
    CHECK(collect_rollout(task, full, 1, rng).transitions.size() == 300);
    const auto desk = emorl::test::desk_instance();
    const auto b = collect_rollout(task, desk, 4, rng);
    CHECK(b.transitions.size() == 400);
    CHECK(b.episodes.size() == 4);
    std::size_t dones = 0;
    for (const auto& t : b.transitions) dones += t.done ? 1 : 0;
    CHECK(dones == 4);
    CHECK(b.transitions.back().done);
  }
  SUBCASE("fixed seeds give identical batches") {
    task.sample.set_log_std({-5.0, -5.0, -5.0});
    Rng r1(10);
    Rng r2(10);
    const auto inst = tiny_instance();
    const auto a = collect_rollout(task, inst, 2, r1);
    const auto b = collect_rollout(task, inst, 2, r2);
    REQUIRE(a.transitions.size() == b.transitions.size());
    for (std::size_t i = 0; i < a.transitions.size(); ++i) {
      CHECK(a.transitions[i].reward == b.transitions[i].reward);
      CHECK(a.transitions[i].action == b.transitions[i].action);
    }
  }
  CHECK_THROWS_AS(collect_rollout(task, tiny_instance(), 0, rng), ConfigError);
}

TEST_CASE("ppo update") {
  Rng rng(41);
  auto task = LearningTask::create({0.2, 0.3, 0.5}, 8, 1e-3, rng);
  const auto inst = tiny_instance();
  auto batch = collect_rollout(task, inst, 2, rng);
  compute_gae(batch, 0.995, 0.95);

  SUBCASE("synchronizes the sample policy and moves the target") {
    const auto before = task.target;
    ppo_update(task, batch, tiny_ppo(), rng);
    CHECK(task.sample == task.target);
    CHECK_FALSE(task.target == before);
  }
  SUBCASE("zero advantages leave the parameters unchanged") {
    for (auto& a : batch.advantages) a = {};
    const auto before = task.target;
    ppo_update(task, batch, tiny_ppo(), rng);
    CHECK(task.target == before);
  }
  SUBCASE("non-finite loss restores the prior parameters") {
    batch.advantages[0] = {std::nan(""), 0.0, 0.0};
    PpoConfig cfg = tiny_ppo();
    cfg.standardize_advantages = false;
    const auto before = task.target;
    const auto steps = task.policy_opt.steps;
    CHECK_THROWS_AS(ppo_update(task, batch, cfg, rng), NumericError);
    CHECK(task.target == before);
    CHECK(task.policy_opt.steps == steps);
  }
  SUBCASE("missing advantages are a usage error") {
    batch.advantages.clear();
    CHECK_THROWS_AS(ppo_update(task, batch, tiny_ppo(), rng), UsageError);
  }
}

TEST_CASE("mmppo yields one offspring per task and iteration") {
  Rng rng(3);
  std::vector<LearningTask> tasks;
  tasks.push_back(LearningTask::create({1.0, 0.0, 0.0}, 8, 1e-3, rng));
  tasks.push_back(LearningTask::create({0.0, 0.5, 0.5}, 8, 1e-3, rng));
  const auto inst = tiny_instance();
  const MmppoRun run{9, 0, 100, 1};
  const auto res = mmppo(tasks, 3, inst, tiny_ppo(), run);
  CHECK(res.errors.empty());
  REQUIRE(res.offspring.size() == 6);
  for (std::size_t k = 0; k < 6; ++k) {
    CHECK(res.offspring[k].id == 100 + k);
    CHECK(res.offspring[k].sample == res.offspring[k].target);
    CHECK(res.offspring[k].weight == tasks[k / 3].weight);
    CHECK(res.log[k].task_index == k / 3);
    CHECK(res.log[k].iteration == static_cast<int>(k % 3));
  }
  CHECK_FALSE(res.offspring[0].target == res.offspring[1].target);

  SUBCASE("worker count does not change the result") {
    MmppoRun parallel = run;
    parallel.workers = 2;
    const auto res2 = mmppo(tasks, 3, inst, tiny_ppo(), parallel);
    REQUIRE(res2.offspring.size() == 6);
    for (std::size_t k = 0; k < 6; ++k) CHECK(res2.offspring[k].target == res.offspring[k].target);
  }
  SUBCASE("single task, single iteration") {
    const auto one = mmppo(std::span(tasks).first(1), 1, inst, tiny_ppo(), run);
    REQUIRE(one.offspring.size() == 1);
    CHECK(one.offspring[0].target == res.offspring[0].target);
  }
  CHECK_THROWS_AS(mmppo(tasks, 0, inst, tiny_ppo(), run), ConfigError);
}
