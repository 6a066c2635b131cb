#include "emorl/sim_env.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace emorl {

namespace {

bool positive(double v) { return std::isfinite(v) && v > 0.0; }

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError("invalid SimConfig: " + what);
}

}  // namespace

void SimConfig::validate() const {
  require(T >= 1, "T must be >= 1");
  require(positive(tau), "tau must be > 0");
  require(positive(area_x) && positive(area_y), "area must have positive extent");
  require(K >= 1, "K must be >= 1");
  require(positive(H), "H must be > 0");
  require(positive(v_max) && positive(d_max), "v_max and d_max must be > 0");
  require(std::abs(d_max - v_max * tau) <= 1e-9 * std::max(1.0, d_max),
          "d_max must equal v_max * tau");
  require(theta_max > 0.0 && theta_max < kPi / 2.0, "theta_max must lie in (0, pi/2)");
  require(positive(alpha_bits) && positive(beta_cycles) && positive(f_U),
          "task size, cycles and CPU frequency must be > 0");
  require(L_max >= 1 && N_max >= 1, "queue caps must be >= 1");
  require(positive(kappa) && positive(P_U) && positive(W_hz) && positive(sigma2),
          "kappa, P_U, W and sigma2 must be > 0");
  require(!bernoulli_set.empty(), "bernoulli_set must not be empty");
  for (double z : bernoulli_set) require(z >= 0.0 && z <= 1.0, "bernoulli parameters must lie in [0,1]");
  require(pathloss.C0 != 0.0, "pathloss C0 must be nonzero");
  if (bs_position) {
    require(bs_position->x >= 0.0 && bs_position->x <= area_x && bs_position->y >= 0.0 &&
                bs_position->y <= area_y,
            "base station must lie inside the area");
  }
}

Vec2 SimConfig::base_station() const {
  return bs_position.value_or(Vec2{area_x / 2.0, area_y / 2.0});
}

int SimConfig::tasks_per_slot() const {
  return static_cast<int>(std::floor(tau * f_U / beta_cycles));
}

double propulsion_power(double v, const SimConfig& cfg) {
  if (!(v >= 0.0)) throw DomainError("propulsion_power: speed must be >= 0");
  const auto& p = cfg.propulsion;
  const double v2 = v * v;
  const double blade = p.P1 * (1.0 + 3.0 * v2 / (p.U_tip * p.U_tip));
  const double v0_2 = p.v0 * p.v0;
  const double induced =
      p.P2 * std::sqrt(std::sqrt(1.0 + v2 * v2 / (4.0 * v0_2 * v0_2)) - v2 / (2.0 * v0_2));
  const double parasite = 0.5 * p.d0 * p.rho * p.g_sol * p.A_disc * v2 * v;
  return blade + induced + parasite;
}

double coverage_radius(double H, double theta_max) {
  if (!(H > 0.0)) throw DomainError("coverage_radius: altitude must be > 0");
  if (!(theta_max > 0.0 && theta_max < kPi / 2.0))
    throw DomainError("coverage_radius: theta_max must lie in (0, pi/2)");
  return H * std::tan(theta_max);
}

double pathloss_db(double distance, double theta_deg, const PathlossParams& p) {
  if (!(distance > 0.0)) throw DomainError("pathloss: distance must be > 0");
  return 10.0 * p.A0 * std::log10(distance) +
         p.B0 * (theta_deg - p.theta0) * std::exp((p.theta0 - theta_deg) / p.C0) + p.eta0;
}

double data_rate(const Vec2& uav, double H, const Vec2& bs, const SimConfig& cfg) {
  const double horizontal = std::hypot(uav.x - bs.x, uav.y - bs.y);
  const double distance = std::hypot(horizontal, H);
  const double theta_deg = std::atan2(H, horizontal) * 180.0 / kPi;
  const double pl = pathloss_db(distance, theta_deg, cfg.pathloss);
  const double sign = cfg.pathloss_sign == PathlossSign::Attenuation ? -1.0 : 1.0;
  const double snr = cfg.P_U * std::pow(10.0, sign * pl / 10.0) / cfg.sigma2;
  return cfg.W_hz * std::log2(1.0 + snr);
}

RewardVector slot_reward(double delay, double energy, int collected, bool in_bounds) {
  const double n = static_cast<double>(collected);
  if (in_bounds) return {-delay, -energy / 100.0, n};
  return {-4.0 * delay, -energy / 25.0, -2.0 * n};
}

EpisodeTotals episode_totals(std::span<const SlotOutcome> log, double gamma,
                             bool include_propulsion) {
  if (log.empty()) throw UsageError("episode_totals: empty episode log");
  EpisodeTotals out;
  double discount = 1.0;
  for (const auto& s : log) {
    const double ind = s.in_bounds ? 1.0 : 0.0;
    const double reward_energy = s.energy + (include_propulsion ? s.propulsion_energy : 0.0);
    out.delay_total += s.delay;
    out.energy_total += s.energy + s.propulsion_energy;
    out.count_total += s.collected;
    out.return_vec[kDelay] -= discount * (4.0 - 3.0 * ind) * s.delay;
    out.return_vec[kEnergy] -= discount * ((4.0 - 3.0 * ind) / 100.0) * reward_energy;
    out.return_vec[kCount] += discount * (3.0 * ind - 2.0) * s.collected;
    discount *= gamma;
  }
  return out;
}

UavMecEnv::UavMecEnv(SimConfig cfg, std::uint64_t instance_seed) : cfg_(std::move(cfg)) {
  cfg_.validate();
  coverage_ = coverage_radius(cfg_.H, cfg_.theta_max);
  Rng layout(derive_seed(instance_seed, seed_stream::kInstance));
  devices_.resize(static_cast<std::size_t>(cfg_.K));
  for (auto& sd : devices_) {
    sd.position = {uniform(layout, 0.0, cfg_.area_x), uniform(layout, 0.0, cfg_.area_y)};
    sd.zeta = cfg_.bernoulli_set[uniform_index(layout, cfg_.bernoulli_set.size())];
  }
}

double UavMecEnv::rate_at(const Vec2& p) const {
  return data_rate(p, cfg_.H, cfg_.base_station(), cfg_);
}

long UavMecEnv::sd_residual() const {
  long total = 0;
  for (const auto& sd : devices_) total += sd.queue_len;
  return total;
}

Observation UavMecEnv::reset(std::uint64_t episode_seed) {
  rng_.seed(derive_seed(episode_seed, seed_stream::kRollout));
  for (auto& sd : devices_) sd.queue_len = 0;
  uav_ = UavState{};
  uav_.position = {uniform(rng_, 0.0, cfg_.area_x), uniform(rng_, 0.0, cfg_.area_y)};
  log_.clear();
  log_.reserve(static_cast<std::size_t>(cfg_.T));
  backlog_.clear();
  arrivals_total_ = 0;
  running_max_collected_ = 0;
  t_ = 1;
  active_ = true;
  done_ = false;
  arrive_and_collect();
  return observe();
}

void UavMecEnv::arrive_and_collect() {
  arrivals_this_slot_ = 0;
  dropped_sd_this_slot_ = 0;
  for (auto& sd : devices_) {
    if (uniform01(rng_) < sd.zeta) {
      ++arrivals_this_slot_;
      if (sd.queue_len < cfg_.L_max) {
        ++sd.queue_len;
      } else {
        ++dropped_sd_this_slot_;
      }
    }
  }
  arrivals_total_ += arrivals_this_slot_;

  int collected = 0;
  for (auto& sd : devices_) {
    const double dist = std::hypot(uav_.position.x - sd.position.x, uav_.position.y - sd.position.y);
    if (dist <= coverage_) {
      collected += sd.queue_len;
      sd.queue_len = 0;
    }
  }
  uav_.collected_this_slot = collected;
  running_max_collected_ = std::max(running_max_collected_, collected);
}

Observation UavMecEnv::observe() const {
  Observation obs;
  obs.position = uav_.position;
  obs.queue_uncompleted = uav_.queue_uncompleted;
  obs.collected = uav_.collected_this_slot;
  const double collected_scale = std::max(running_max_collected_, cfg_.N_max);
  obs.features = {uav_.position.x / cfg_.area_x, uav_.position.y / cfg_.area_y,
                  static_cast<double>(uav_.queue_uncompleted) / cfg_.N_max,
                  static_cast<double>(uav_.collected_this_slot) / collected_scale};
  return obs;
}

double UavMecEnv::drain_backlog(const Vec2& pos, bool flush) {
  const double rate = rate_at(pos);
  const double capacity = cfg_.tau * rate;
  double credited = 0.0;
  std::vector<PendingBatch> still_pending;
  for (auto batch : backlog_) {
    if (batch.remaining_bits <= capacity) {
      credited += batch.elapsed + batch.remaining_bits / rate;
      continue;
    }
    batch.remaining_bits -= capacity;
    batch.elapsed += cfg_.tau;
    if (flush) {
      // Episode ends with bits in flight: finish at the final slot's rate.
      credited += batch.elapsed + batch.remaining_bits / rate;
      continue;
    }
    still_pending.push_back(batch);
  }
  backlog_ = std::move(still_pending);
  double pending = 0.0;
  for (const auto& b : backlog_) pending += b.remaining_bits;
  uav_.pending_tx_bits = pending;
  return credited;
}

StepResult UavMecEnv::step(const ActionVector& action) {
  if (!active_ || done_) throw UsageError("step called on an inactive or finished episode");
  if (!std::isfinite(action.theta) || !std::isfinite(action.distance) ||
      !std::isfinite(action.offload))
    throw DomainError("step: non-finite action");
  const double theta = std::clamp(action.theta, 0.0, 2.0 * kPi);
  const double distance = std::clamp(action.distance, 0.0, cfg_.d_max);
  const double offload = std::clamp(action.offload, 0.0, 1.0);

  SlotOutcome out;
  out.t = t_;
  out.arrivals = arrivals_this_slot_;
  out.dropped_sd = dropped_sd_this_slot_;

  const int n_u = uav_.queue_uncompleted;
  const int n_c = uav_.collected_this_slot;
  const int phi = cfg_.tasks_per_slot();
  const int n_o = static_cast<int>(std::floor(offload * n_u));
  const int n_l = n_u - n_o;
  const int processed = std::min(phi, n_l);
  const int n_q = std::max(n_u - phi - n_o, 0);

  out.queue_at_decision = n_u;
  out.collected = n_c;
  out.offloaded = n_o;
  out.local = n_l;
  out.processed_local = processed;
  out.queue_residual = n_q;

  out.delay_local = processed * cfg_.beta_cycles / cfg_.f_U + cfg_.tau * n_q;
  out.energy_local = cfg_.kappa * processed * cfg_.beta_cycles * cfg_.f_U * cfg_.f_U;

  const Vec2 here = uav_.position;
  const bool last_slot = t_ == cfg_.T;
  if (cfg_.offload_mode == OffloadMode::Myopic) {
    out.delay_offload = n_o > 0 ? cfg_.alpha_bits * n_o / rate_at(here) : 0.0;
  } else {
    if (n_o > 0) backlog_.push_back({cfg_.alpha_bits * n_o, 0.0});
    out.delay_offload = backlog_.empty() ? 0.0 : drain_backlog(here, last_slot);
  }
  out.energy_offload = cfg_.P_U * out.delay_offload;
  out.delay = out.delay_local + out.delay_offload;
  out.energy = out.energy_local + out.energy_offload;

  Vec2 next{here.x + distance * std::cos(theta), here.y + distance * std::sin(theta)};
  out.in_bounds = next.x >= 0.0 && next.x <= cfg_.area_x && next.y >= 0.0 && next.y <= cfg_.area_y;
  next.x = std::clamp(next.x, 0.0, cfg_.area_x);
  next.y = std::clamp(next.y, 0.0, cfg_.area_y);
  uav_.position = next;
  out.position = next;
  out.velocity = distance / cfg_.tau;
  out.propulsion_energy = propulsion_power(out.velocity, cfg_) * cfg_.tau;

  const int queued = n_q + n_c;
  uav_.queue_uncompleted = std::min(queued, cfg_.N_max);
  out.dropped_uav = queued - uav_.queue_uncompleted;
  out.dropped_tasks = out.dropped_sd + out.dropped_uav;

  const double reward_energy =
      out.energy + (cfg_.include_propulsion_in_reward ? out.propulsion_energy : 0.0);
  out.reward = slot_reward(out.delay, reward_energy, n_c, out.in_bounds);
  log_.push_back(out);

  StepResult result;
  result.reward = out.reward;
  result.outcome = out;
  if (last_slot) {
    done_ = true;
    active_ = false;
    uav_.collected_this_slot = 0;
  } else {
    ++t_;
    arrive_and_collect();
  }
  result.done = done_;
  result.observation = observe();
  return result;
}

}  // namespace emorl
