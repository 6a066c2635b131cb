#include <doctest.h>

#include <cmath>

#include "emorl/sim_env.hpp"
#include "support.hpp"

using namespace emorl;
using emorl::test::rel_err;

namespace {

// Every device always has a task and sits inside the UAV's coverage.
SimConfig saturated_config() {
  SimConfig c;
  c.area_x = 10.0;
  c.area_y = 10.0;
  c.K = 10;
  c.T = 5;
  c.bernoulli_set = {1.0};
  return c;
}

double independent_power(double v) {
  const double blade = 79.86 * (1.0 + 3.0 * v * v / (120.0 * 120.0));
  const double ratio = v * v / (2.0 * 4.03 * 4.03);
  const double induced = 88.63 * std::sqrt(std::sqrt(1.0 + ratio * ratio) - ratio);
  const double parasite = 0.5 * 0.6 * 1.225 * 0.05 * 0.503 * v * v * v;
  return blade + induced + parasite;
}

}  // namespace

TEST_CASE("propulsion power matches frozen formula values") {
  const SimConfig cfg;
  CHECK(rel_err(propulsion_power(0.0, cfg), 168.49000000000001) < 1e-12);
  CHECK(rel_err(propulsion_power(10.0, cfg), 126.0336867737212) < 1e-12);
  CHECK(rel_err(propulsion_power(30.0, cfg), 356.28865091975166) < 1e-12);

  SimConfig zero;
  zero.propulsion.P1 = 0.0;
  zero.propulsion.P2 = 0.0;
  CHECK(propulsion_power(0.0, zero) == 0.0);
  CHECK_THROWS_AS(propulsion_power(-1.0, cfg), DomainError);
}

TEST_CASE("propulsion power equals a term-by-term evaluation at random speeds") {
  const SimConfig cfg;
  Rng rng(11);
  for (int i = 0; i < 100; ++i) {
    const double v = uniform(rng, 0.0, cfg.v_max);
    CHECK(rel_err(propulsion_power(v, cfg), independent_power(v)) < 1e-12);
  }
}

TEST_CASE("coverage radius") {
  CHECK(coverage_radius(30.0, kPi / 4.0) == doctest::Approx(30.0).epsilon(1e-15));
  CHECK(coverage_radius(50.0, kPi / 4.0) == doctest::Approx(50.0).epsilon(1e-15));
  CHECK(rel_err(coverage_radius(30.0, kPi / 6.0), 17.320508075688771) < 1e-14);
  CHECK_THROWS_AS(coverage_radius(30.0, kPi / 2.0), DomainError);
  CHECK_THROWS_AS(coverage_radius(0.0, kPi / 4.0), DomainError);
}

TEST_CASE("pathloss") {
  const PathlossParams p;
  for (double d : {1.0, 7.5, 100.0, 420.0})
    CHECK(pathloss_db(d, p.theta0, p) == doctest::Approx(10.0 * p.A0 * std::log10(d) + p.eta0));
  CHECK(pathloss_db(1.0, p.theta0, p) == doctest::Approx(20.7).epsilon(1e-15));
  CHECK(rel_err(pathloss_db(100.0, 0.0, p), 46.34555107627078) < 1e-13);
  CHECK(rel_err(pathloss_db(30.0, 90.0, p), 65.604485813404011) < 1e-13);
  CHECK_THROWS_AS(pathloss_db(0.0, 10.0, p), DomainError);
}

TEST_CASE("data rate") {
  SimConfig cfg;
  const Vec2 bs{200.0, 200.0};
  CHECK(rel_err(data_rate(bs, 30.0, bs, cfg), 3506539.9313117084) < 1e-12);
  CHECK(rel_err(data_rate({300.0, 200.0}, 50.0, bs, cfg), 81034.101168920912) < 1e-12);

  SUBCASE("unit SNR gives the bandwidth") {
    const double pl = pathloss_db(30.0, 90.0, cfg.pathloss);
    cfg.sigma2 = cfg.P_U * std::pow(10.0, -pl / 10.0);
    CHECK(data_rate(bs, 30.0, bs, cfg) == doctest::Approx(cfg.W_hz).epsilon(1e-12));
  }
  SUBCASE("vanishing SNR gives zero rate") {
    cfg.sigma2 = 1e300;
    CHECK(data_rate(bs, 30.0, bs, cfg) < 1e-200);
  }
  SUBCASE("literal sign increases received power with loss") {
    SimConfig lit = cfg;
    lit.pathloss_sign = PathlossSign::Literal;
    CHECK(data_rate(bs, 30.0, bs, lit) > data_rate(bs, 30.0, bs, cfg));
  }
}

TEST_CASE("config validation") {
  SimConfig c;
  CHECK_NOTHROW(c.validate());
  auto bad = [](auto mutate) {
    SimConfig x;
    mutate(x);
    return x;
  };
  CHECK_THROWS_AS(bad([](SimConfig& x) { x.K = 0; }).validate(), ConfigError);
  CHECK_THROWS_AS(bad([](SimConfig& x) { x.area_x = 0.0; }).validate(), ConfigError);
  CHECK_THROWS_AS(bad([](SimConfig& x) { x.d_max = 20.0; }).validate(), ConfigError);
  CHECK_THROWS_AS(bad([](SimConfig& x) { x.theta_max = kPi / 2.0; }).validate(), ConfigError);
  CHECK_THROWS_AS(bad([](SimConfig& x) { x.bernoulli_set = {1.5}; }).validate(), ConfigError);
  CHECK_THROWS_AS(bad([](SimConfig& x) { x.sigma2 = 0.0; }).validate(), ConfigError);
  CHECK_THROWS_AS(UavMecEnv(bad([](SimConfig& x) { x.K = 0; }), 1), ConfigError);
  CHECK(c.tasks_per_slot() == 1);
  CHECK(c.base_station() == Vec2{200.0, 200.0});
}

TEST_CASE("reset is deterministic and separates instance and episode seeds") {
  SimConfig cfg;
  UavMecEnv a(cfg, 5);
  UavMecEnv b(cfg, 5);
  CHECK(a.devices().size() == 60);
  const auto oa = a.reset(99);
  const auto ob = b.reset(99);
  CHECK(oa.features == ob.features);
  CHECK(oa.queue_uncompleted == 0);

  const auto layout = a.devices();
  const auto start = a.uav().position;
  a.reset(100);
  for (std::size_t i = 0; i < layout.size(); ++i) {
    CHECK(a.devices()[i].position == layout[i].position);
    CHECK(a.devices()[i].zeta == layout[i].zeta);
  }
  CHECK_FALSE(a.uav().position == start);

  UavMecEnv other(cfg, 6);
  CHECK_FALSE(other.devices()[0].position == layout[0].position);
  for (const auto& sd : layout) {
    CHECK(sd.position.x >= 0.0);
    CHECK(sd.position.x <= cfg.area_x);
    CHECK((sd.zeta == 0.3 || sd.zeta == 0.5 || sd.zeta == 0.7));
  }
}

TEST_CASE("slot hand trace: offload split, local delay and energy") {
  UavMecEnv env(saturated_config(), 3);
  const auto obs = env.reset(1);
  CHECK(obs.collected == 10);
  CHECK(obs.queue_uncompleted == 0);

  const auto first = env.step({0.0, 0.0, 0.0});
  CHECK(first.outcome.offloaded == 0);
  CHECK(first.outcome.delay_offload == 0.0);
  CHECK(first.outcome.energy_offload == 0.0);
  CHECK(first.observation.queue_uncompleted == 10);

  const auto second = env.step({0.0, 0.0, 0.5});
  const auto& s = second.outcome;
  CHECK(s.queue_at_decision == 10);
  CHECK(s.offloaded == 5);
  CHECK(s.local == 5);
  CHECK(s.processed_local == 1);
  CHECK(s.queue_residual == 4);
  CHECK(s.delay_local == doctest::Approx(5.0).epsilon(1e-15));
  CHECK(s.energy_local == doctest::Approx(10.0).epsilon(1e-12));
  const double rate = env.rate_at(s.position);
  CHECK(s.delay_offload == doctest::Approx(4.0e7 * 5.0 / rate).epsilon(1e-12));
  CHECK(s.energy_offload == doctest::Approx(s.delay_offload).epsilon(1e-15));
  CHECK(s.dropped_uav == 4);
  CHECK(s.in_bounds);
  CHECK(s.reward[0] == doctest::Approx(-s.delay));
  CHECK(s.reward[1] == doctest::Approx(-(s.energy + propulsion_power(0.0, env.config())) / 100.0));
  CHECK(s.reward[2] == 10.0);
}

TEST_CASE("leaving the area clamps the position and takes the penalty branch") {
  SimConfig cfg = saturated_config();
  cfg.include_propulsion_in_reward = false;
  UavMecEnv env(cfg, 3);
  env.reset(1);
  const auto r = env.step({0.0, cfg.d_max, 0.0});
  CHECK_FALSE(r.outcome.in_bounds);
  CHECK(r.outcome.position.x == cfg.area_x);
  CHECK(r.reward[2] == -2.0 * r.outcome.collected);
  CHECK(r.reward[0] == -4.0 * r.outcome.delay);
  CHECK(r.reward[1] == -r.outcome.energy / 25.0);
  CHECK(r.outcome.velocity == cfg.v_max);
}

TEST_CASE("episode termination and action errors") {
  UavMecEnv env(saturated_config(), 3);
  CHECK_THROWS_AS(env.step({}), UsageError);
  env.reset(2);
  CHECK_THROWS_AS(env.step({std::nan(""), 0.0, 0.0}), DomainError);
  int steps = 0;
  while (!env.done()) {
    env.step({1.0, 3.0, 0.2});
    ++steps;
  }
  CHECK(steps == 5);
  CHECK(env.log().size() == 5);
  CHECK_THROWS_AS(env.step({}), UsageError);
}

TEST_CASE("episode totals") {
  auto slot = [](double delay, int collected, bool in_bounds) {
    SlotOutcome s;
    s.delay = delay;
    s.collected = collected;
    s.in_bounds = in_bounds;
    return s;
  };
  {
    const std::vector<SlotOutcome> log{slot(1.0, 0, true), slot(2.0, 0, true)};
    const auto t = episode_totals(log, 1.0);
    CHECK(t.delay_total == 3.0);
    CHECK(t.return_vec[0] == -3.0);
  }
  {
    const std::vector<SlotOutcome> log{slot(1.0, 0, false)};
    CHECK(episode_totals(log, 1.0).return_vec[0] == -4.0);
  }
  {
    const std::vector<SlotOutcome> log{slot(0.0, 2, true), slot(0.0, 3, true)};
    const auto t = episode_totals(log, 0.5);
    CHECK(t.return_vec[2] == 3.5);
    CHECK(t.count_total == 5.0);
  }
  {
    SlotOutcome s = slot(0.0, 0, true);
    s.energy = 10.0;
    s.propulsion_energy = 100.0;
    const std::vector<SlotOutcome> log{s};
    CHECK(episode_totals(log, 1.0, true).return_vec[1] == doctest::Approx(-1.1));
    CHECK(episode_totals(log, 1.0, false).return_vec[1] == doctest::Approx(-0.1));
    CHECK(episode_totals(log, 1.0, false).energy_total == 110.0);
  }
  CHECK_THROWS_AS(episode_totals(std::vector<SlotOutcome>{}, 1.0), UsageError);
}

TEST_CASE("random-policy episodes conserve tasks and respect bounds") {
  for (auto mode : {OffloadMode::Myopic, OffloadMode::Backlog}) {
    SimConfig cfg = emorl::test::desk_config();
    cfg.offload_mode = mode;
    UavMecEnv env(cfg, 21);
    Rng rng(4);
    for (int ep = 0; ep < 10; ++ep) {
      auto obs = env.reset(rng());
      long collected = 0, local = 0, offloaded = 0, dropped_uav = 0, dropped_sd = 0;
      while (!env.done()) {
        for (double f : obs.features) {
          CHECK(f >= 0.0);
          CHECK(f <= 1.0);
        }
        const ActionVector a{uniform(rng, 0.0, 2.0 * kPi), uniform(rng, 0.0, cfg.d_max),
                             uniform01(rng)};
        const auto r = env.step(a);
        const auto& s = r.outcome;
        collected += s.collected;
        local += s.processed_local;
        offloaded += s.offloaded;
        dropped_uav += s.dropped_uav;
        dropped_sd += s.dropped_sd;
        CHECK(s.local + s.offloaded == s.queue_at_decision);
        CHECK(s.queue_residual == std::max(s.queue_at_decision - 1 - s.offloaded, 0));
        CHECK(env.uav().queue_uncompleted <= cfg.N_max);
        CHECK(s.position.x >= 0.0);
        CHECK(s.position.x <= cfg.area_x);
        CHECK(s.position.y >= 0.0);
        CHECK(s.position.y <= cfg.area_y);
        CHECK(s.reward[0] <= 0.0);
        CHECK(s.reward[1] <= 0.0);
        CHECK((s.in_bounds ? s.reward[2] >= 0.0 : s.reward[2] <= 0.0));
        CHECK(std::isfinite(s.delay));
        for (const auto& sd : env.devices()) CHECK(sd.queue_len <= cfg.L_max);
        obs = r.observation;
      }
      CHECK(env.total_arrivals() == collected + dropped_sd + env.sd_residual());
      CHECK(collected == local + offloaded + env.uav().queue_uncompleted + dropped_uav);
      if (mode == OffloadMode::Backlog) CHECK(env.uav().pending_tx_bits == 0.0);
    }
  }
}

TEST_CASE("replay with identical seeds and actions is bit-identical") {
  const auto inst = emorl::test::desk_instance();
  UavMecEnv a(inst);
  UavMecEnv b(inst);
  a.reset(77);
  b.reset(77);
  Rng rng(8);
  while (!a.done()) {
    const ActionVector act{uniform(rng, 0.0, 6.0), uniform(rng, 0.0, 30.0), uniform01(rng)};
    const auto ra = a.step(act);
    const auto rb = b.step(act);
    CHECK(ra.reward == rb.reward);
    CHECK(ra.observation.features == rb.observation.features);
  }
}

TEST_CASE("backlog mode credits a batch that fits in one slot like the myopic model") {
  SimConfig cfg = saturated_config();
  cfg.offload_mode = OffloadMode::Backlog;
  cfg.W_hz = 2.0e8;  // fast link: one task clears within the slot
  UavMecEnv env(cfg, 3);
  env.reset(1);
  env.step({0.0, 0.0, 0.0});
  const auto r = env.step({0.0, 0.0, 0.1});
  REQUIRE(r.outcome.offloaded == 1);
  const double rate = env.rate_at(r.outcome.position);
  REQUIRE(4.0e7 <= rate * cfg.tau);
  CHECK(r.outcome.delay_offload == doctest::Approx(4.0e7 / rate).epsilon(1e-12));
}

TEST_CASE("backlog mode defers multi-slot batches") {
  SimConfig cfg = saturated_config();
  cfg.offload_mode = OffloadMode::Backlog;
  cfg.W_hz = 1.0e6;  // slow link: one task needs several slots
  UavMecEnv env(cfg, 3);
  env.reset(1);
  env.step({0.0, 0.0, 0.0});
  const auto r = env.step({0.0, 0.0, 0.1});
  REQUIRE(r.outcome.offloaded == 1);
  const double rate = env.rate_at(r.outcome.position);
  REQUIRE(4.0e7 > rate * cfg.tau);
  CHECK(r.outcome.delay_offload == 0.0);
  CHECK(env.uav().pending_tx_bits == doctest::Approx(4.0e7 - rate));
  double credited = 0.0;
  while (!env.done()) credited += env.step({0.0, 0.0, 0.0}).outcome.delay_offload;
  CHECK(credited == doctest::Approx(4.0e7 / rate).epsilon(1e-9));
}
