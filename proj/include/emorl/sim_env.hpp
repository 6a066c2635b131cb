#pragma once

// Discrete-time simulator of a single UAV collecting Bernoulli-arrival tasks
// from ground devices, computing them on board or relaying them to a base
// station. One step() is one time slot.

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "emorl/common.hpp"

namespace emorl {

enum class OffloadMode { Myopic, Backlog };
enum class PathlossSign { Attenuation, Literal };

struct PropulsionParams {
  double P1 = 79.86;
  double P2 = 88.63;
  double U_tip = 120.0;
  double v0 = 4.03;
  double d0 = 0.6;
  double rho = 1.225;
  double g_sol = 0.05;
  double A_disc = 0.503;
};

// Angles in degrees.
struct PathlossParams {
  double A0 = 3.04;
  double B0 = -23.29;
  double theta0 = -3.61;
  double C0 = 4.14;
  double eta0 = 20.7;
};

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Vec2&) const = default;
};

struct SimConfig {
  int T = 300;
  double tau = 1.0;
  double area_x = 400.0;
  double area_y = 400.0;
  int K = 60;
  double H = 30.0;
  double v_max = 30.0;
  double d_max = 30.0;
  double theta_max = kPi / 4.0;
  double alpha_bits = 4.0e7;
  double beta_cycles = 1.0e9;
  double f_U = 1.0e9;
  int L_max = 5;
  int N_max = 10;
  double kappa = 1.0e-26;
  double P_U = 1.0;
  double W_hz = 1.0e7;
  double sigma2 = 1.0e-6;
  PropulsionParams propulsion;
  PathlossParams pathloss;
  std::optional<Vec2> bs_position;  // area centre when unset
  std::vector<double> bernoulli_set{0.3, 0.5, 0.7};
  OffloadMode offload_mode = OffloadMode::Myopic;
  bool include_propulsion_in_reward = true;
  PathlossSign pathloss_sign = PathlossSign::Attenuation;

  /// Throws ConfigError on any violated invariant.
  void validate() const;
  Vec2 base_station() const;
  /// Tasks the UAV finishes per slot, floor(tau * f_U / beta).
  int tasks_per_slot() const;
};

/// A simulator world: the config plus the seed that fixes the device layout.
struct ScenarioInstance {
  SimConfig config;
  std::uint64_t instance_seed = 0;
};

struct SmartDevice {
  Vec2 position;
  double zeta = 0.0;
  int queue_len = 0;
};

struct UavState {
  Vec2 position;
  int queue_uncompleted = 0;
  int collected_this_slot = 0;
  double pending_tx_bits = 0.0;
};

/// theta in [0, 2pi], distance in [0, d_max], offload in [0, 1].
struct ActionVector {
  double theta = 0.0;
  double distance = 0.0;
  double offload = 0.0;
};

/// (r_D, r_E, r_N).
using RewardVector = Vec3;

inline constexpr std::size_t kObservationSize = 4;

struct Observation {
  Vec2 position;
  int queue_uncompleted = 0;
  int collected = 0;
  /// Normalized policy input: x/area_x, y/area_y, N_u/N_max, N_c/running max.
  std::array<double, kObservationSize> features{};
};

struct SlotOutcome {
  int t = 0;  // 1-based slot index
  Vec2 position;  // after the move and clamp
  double velocity = 0.0;
  double delay = 0.0;   // D_t = D_L + D_O
  double energy = 0.0;  // E_t = E_L + E_O, flight energy excluded
  double delay_local = 0.0;
  double delay_offload = 0.0;
  double energy_local = 0.0;
  double energy_offload = 0.0;
  int collected = 0;  // N_c
  int offloaded = 0;  // N_O
  int local = 0;      // N_L
  int processed_local = 0;  // min(phi, N_L)
  int queue_residual = 0;   // N_q
  int queue_at_decision = 0;  // N_u
  bool in_bounds = true;
  double propulsion_energy = 0.0;
  int arrivals = 0;
  int dropped_sd = 0;
  int dropped_uav = 0;
  int dropped_tasks = 0;  // dropped_sd + dropped_uav
  RewardVector reward{};
};

struct EpisodeTotals {
  double delay_total = 0.0;
  double energy_total = 0.0;  // includes flight and hover energy
  double count_total = 0.0;
  Vec3 return_vec{};
  Vec3 raw() const { return {delay_total, energy_total, count_total}; }
};

struct StepResult {
  Observation observation;
  RewardVector reward{};
  bool done = false;
  SlotOutcome outcome;
};

// Closed-form model pieces.
double propulsion_power(double v, const SimConfig& cfg);
double coverage_radius(double H, double theta_max);
double pathloss_db(double distance, double theta_deg, const PathlossParams& p);
double data_rate(const Vec2& uav, double H, const Vec2& bs, const SimConfig& cfg);

/// Per-slot reward, with the out-of-area penalty branch.
RewardVector slot_reward(double delay, double energy, int collected, bool in_bounds);

/// Raw totals and discounted returns of a finished episode. When
/// include_propulsion is set the energy reward term carries P(v_t)*tau.
EpisodeTotals episode_totals(std::span<const SlotOutcome> log, double gamma,
                             bool include_propulsion = true);

class UavMecEnv {
 public:
  UavMecEnv(SimConfig cfg, std::uint64_t instance_seed);
  explicit UavMecEnv(const ScenarioInstance& instance)
      : UavMecEnv(instance.config, instance.instance_seed) {}

  Observation reset(std::uint64_t episode_seed);
  StepResult step(const ActionVector& action);

  const SimConfig& config() const { return cfg_; }
  const std::vector<SmartDevice>& devices() const { return devices_; }
  const UavState& uav() const { return uav_; }
  const std::vector<SlotOutcome>& log() const { return log_; }
  int slot() const { return t_; }
  bool done() const { return done_; }
  bool active() const { return active_; }
  double coverage() const { return coverage_; }
  double rate_at(const Vec2& p) const;

  // Episode-level accounting for the conservation identities.
  long total_arrivals() const { return arrivals_total_; }
  long sd_residual() const;

 private:
  struct PendingBatch {
    double remaining_bits = 0.0;
    double elapsed = 0.0;
  };

  void arrive_and_collect();
  Observation observe() const;
  double drain_backlog(const Vec2& pos, bool flush);

  SimConfig cfg_;
  std::vector<SmartDevice> devices_;
  UavState uav_;
  std::mt19937_64 rng_;
  std::vector<SlotOutcome> log_;
  std::vector<PendingBatch> backlog_;
  double coverage_ = 0.0;
  int t_ = 0;
  bool active_ = false;
  bool done_ = false;
  int arrivals_this_slot_ = 0;
  int dropped_sd_this_slot_ = 0;
  int running_max_collected_ = 0;
  long arrivals_total_ = 0;
};

}  // namespace emorl
