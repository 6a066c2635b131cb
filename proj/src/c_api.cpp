#include "emorl/emorl.h"

#include <cstring>
#include <string>

#include "emorl/harness.hpp"

struct emorl_env {
  emorl::UavMecEnv env;
};

namespace {

thread_local std::string g_last_error;

char* dup_string(const std::string& s) {
  char* p = new char[s.size() + 1];
  std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

template <typename Fn>
emorl_status guarded(Fn&& fn) {
  g_last_error.clear();
  try {
    fn();
    return EMORL_OK;
  } catch (const emorl::ConfigError& e) {
    g_last_error = e.what();
    return EMORL_ERR_CONFIG;
  } catch (const emorl::DomainError& e) {
    g_last_error = e.what();
    return EMORL_ERR_DOMAIN;
  } catch (const emorl::UsageError& e) {
    g_last_error = e.what();
    return EMORL_ERR_USAGE;
  } catch (const emorl::NumericError& e) {
    g_last_error = e.what();
    return EMORL_ERR_NUMERIC;
  } catch (const emorl::IoError& e) {
    g_last_error = e.what();
    return EMORL_ERR_IO;
  } catch (const nlohmann::json::exception& e) {
    g_last_error = std::string("invalid request: ") + e.what();
    return EMORL_ERR_CONFIG;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return EMORL_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return EMORL_ERR_INTERNAL;
  }
}

emorl_status null_error(const char* what) {
  g_last_error = std::string(what) + " must not be NULL";
  return EMORL_ERR_NULL;
}

emorl::Json parse_request(const char* text) {
  if (text == nullptr || *text == '\0') return emorl::Json::object();
  auto j = emorl::Json::parse(text);
  if (!j.is_object()) throw emorl::ConfigError("request must be a JSON object");
  return j;
}

emorl::RunConfig run_from_request(const emorl::Json& req) {
  const auto algo = emorl::parse_algorithm(req.value("algo", std::string("emorl")));
  const auto instance = req.value("instance", std::string("I-(60,30)"));
  const auto seed = req.value("seed", std::uint64_t{1});
  const bool desk = req.value("desk_scale", false);
  emorl::Json overrides = emorl::Json::object();
  if (req.contains("config_path") && !req["config_path"].is_null())
    overrides = emorl::read_json(req["config_path"].get<std::string>());
  auto run = emorl::make_run_config(algo, instance, seed, desk, overrides);
  if (req.contains("workers")) run.workers = req["workers"].get<int>();
  if (req.contains("checkpoints")) run.checkpoints = req["checkpoints"].get<bool>();
  if (req.contains("out")) run.out_dir = req["out"].get<std::string>();
  return run;
}

void copy_obs(const emorl::Observation& o, double* obs) {
  if (obs) std::copy(o.features.begin(), o.features.end(), obs);
}

}  // namespace

extern "C" {

const char* emorl_version(void) {
  static const std::string v = emorl::version_string();
  return v.c_str();
}

const char* emorl_last_error(void) { return g_last_error.c_str(); }

void emorl_string_free(char* s) { delete[] s; }

emorl_status emorl_env_create(const char* config_json, uint64_t instance_seed, emorl_env** out) {
  if (!out) return null_error("out");
  *out = nullptr;
  return guarded([&] {
    emorl::SimConfig cfg;
    if (config_json && *config_json) emorl::apply_json(cfg, emorl::Json::parse(config_json));
    *out = new emorl_env{emorl::UavMecEnv(cfg, instance_seed)};
  });
}

void emorl_env_destroy(emorl_env* env) { delete env; }

emorl_status emorl_env_reset(emorl_env* env, uint64_t episode_seed, double obs[4]) {
  if (!env) return null_error("env");
  return guarded([&] { copy_obs(env->env.reset(episode_seed), obs); });
}

emorl_status emorl_env_step(emorl_env* env, const double action[3], double obs[4], double reward[3],
                            int* done) {
  if (!env) return null_error("env");
  if (!action) return null_error("action");
  return guarded([&] {
    const auto r = env->env.step({action[0], action[1], action[2]});
    copy_obs(r.observation, obs);
    if (reward) std::copy(r.reward.begin(), r.reward.end(), reward);
    if (done) *done = r.done ? 1 : 0;
  });
}

emorl_status emorl_env_write_csv(const emorl_env* env, const char* path) {
  if (!env) return null_error("env");
  if (!path) return null_error("path");
  return guarded([&] { emorl::write_text(path, emorl::episode_csv(env->env.log())); });
}

emorl_status emorl_instances_json(const char* request_json, char** out_json) {
  if (!out_json) return null_error("out_json");
  *out_json = nullptr;
  return guarded([&] {
    const auto req = parse_request(request_json);
    const auto j = emorl::instances_json(req.value("seed", std::uint64_t{1}),
                                         req.value("desk_scale", false));
    *out_json = dup_string(j.dump(2));
  });
}

emorl_status emorl_train(const char* request_json, char** out_json) {
  if (!out_json) return null_error("out_json");
  *out_json = nullptr;
  return guarded([&] {
    const auto run = run_from_request(parse_request(request_json));
    const auto res = emorl::run_train(run);
    emorl::Json summary = {{"algorithm", emorl::algorithm_name(run.algorithm)},
                           {"instance", run.instance.name},
                           {"seed", run.seed},
                           {"front_size", res.front.size()},
                           {"evaluated_candidates", res.offspring_total},
                           {"wall_clock_s", res.wall_clock_s},
                           {"front", res.front_path.string()},
                           {"manifest", res.manifest_path.string()},
                           {"errors", res.errors}};
    *out_json = dup_string(summary.dump(2));
  });
}

emorl_status emorl_eval(const char* request_json, char** out_json) {
  if (!out_json) return null_error("out_json");
  *out_json = nullptr;
  return guarded([&] {
    const auto req = parse_request(request_json);
    const auto paths = req.at("fronts").get<std::vector<std::string>>();
    std::vector<std::string> labels =
        req.contains("labels") ? req["labels"].get<std::vector<std::string>>() : paths;
    const auto mode_name = req.value("coi", std::string("returns"));
    if (mode_name != "returns" && mode_name != "raw")
      throw emorl::ConfigError("coi must be 'returns' or 'raw'");
    std::vector<emorl::FrontMatrix> fronts;
    for (const auto& p : paths) fronts.push_back(emorl::parse_front_csv(emorl::read_text(p)));
    const auto reports = emorl::evaluate_fronts(
        fronts, labels,
        mode_name == "raw" ? emorl::CoiObjective::RawTotals : emorl::CoiObjective::Returns);
    auto j = emorl::report_json(reports);
    if (req.contains("out")) {
      const std::filesystem::path dir = req["out"].get<std::string>();
      emorl::write_text(dir / "report.csv", emorl::report_csv(reports));
      emorl::write_json(dir / "report.json", j);
    }
    *out_json = dup_string(j.dump(2));
  });
}

emorl_status emorl_replay(const char* request_json, char** out_json) {
  if (!out_json) return null_error("out_json");
  *out_json = nullptr;
  return guarded([&] {
    const auto req = parse_request(request_json);
    const auto policy = emorl::policy_from_json(emorl::read_json(req.at("policy").get<std::string>()));
    const auto run = run_from_request(req);
    const auto instance = emorl::scenario_for(run);
    const auto episode_seed = req.value(
        "episode_seed", emorl::evaluation_seeds(run.seed, 1).front());
    const auto log = emorl::replay_policy(policy, instance, episode_seed);
    const auto totals =
        emorl::episode_totals(log, run.emorl.ppo.gamma, instance.config.include_propulsion_in_reward);
    emorl::Json summary = {{"slots", log.size()},
                           {"episode_seed", episode_seed},
                           {"returns", totals.return_vec},
                           {"raw", totals.raw()}};
    if (req.contains("out")) {
      const auto path = req["out"].get<std::string>();
      emorl::write_text(path, emorl::episode_csv(log));
      summary["episode_csv"] = path;
    }
    *out_json = dup_string(summary.dump(2));
  });
}

emorl_status emorl_hv3(const double* points, size_t n, const double reference[3], double* out) {
  if (!out) return null_error("out");
  if (!reference) return null_error("reference");
  if (n > 0 && !points) return null_error("points");
  return guarded([&] {
    std::vector<emorl::Vec3> pts(n);
    for (size_t i = 0; i < n; ++i) pts[i] = {points[3 * i], points[3 * i + 1], points[3 * i + 2]};
    *out = emorl::hv3(pts, {reference[0], reference[1], reference[2]});
  });
}

emorl_status emorl_igd(const double* reference, size_t n_reference, const double* approximation,
                       size_t n_approximation, double* out) {
  if (!out) return null_error("out");
  if ((n_reference > 0 && !reference) || (n_approximation > 0 && !approximation))
    return null_error("points");
  return guarded([&] {
    emorl::FrontMatrix r;
    emorl::FrontMatrix a;
    for (size_t i = 0; i < n_reference; ++i)
      r.points.push_back({reference[3 * i], reference[3 * i + 1], reference[3 * i + 2]});
    for (size_t i = 0; i < n_approximation; ++i)
      a.points.push_back({approximation[3 * i], approximation[3 * i + 1], approximation[3 * i + 2]});
    *out = emorl::igd(r, a);
  });
}

emorl_status emorl_propulsion_power(double v, double* out) {
  if (!out) return null_error("out");
  return guarded([&] { *out = emorl::propulsion_power(v, emorl::SimConfig{}); });
}

}  // extern "C"
