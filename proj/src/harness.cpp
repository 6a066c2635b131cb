#include "emorl/harness.hpp"

#include <chrono>
#include <cstdio>

namespace emorl {

namespace {

constexpr std::uint64_t kInstanceTable[6][2] = {{60, 30}, {60, 50}, {100, 30},
                                                {100, 50}, {140, 30}, {140, 50}};

std::string gen_dir_name(int g) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "gen_%03d", g);
  return buf;
}

void write_policies(const std::filesystem::path& dir, const EpArchive& archive) {
  for (const auto& e : archive.entries)
    write_json(dir / (std::to_string(e.policy_id) + ".json"), policy_to_json(e.policy));
}

}  // namespace

std::vector<InstanceSpec> benchmark_instances() {
  std::vector<InstanceSpec> out;
  for (const auto& row : kInstanceTable) {
    InstanceSpec s;
    s.K = static_cast<int>(row[0]);
    s.H = static_cast<double>(row[1]);
    s.name = "I-(" + std::to_string(row[0]) + "," + std::to_string(row[1]) + ")";
    out.push_back(s);
  }
  return out;
}

InstanceSpec find_instance(const std::string& name) {
  for (auto& s : benchmark_instances())
    if (s.name == name) return s;
  throw ConfigError("unknown instance '" + name + "'");
}

std::uint64_t instance_seed_for(const InstanceSpec& spec, std::uint64_t master_seed) {
  if (spec.instance_seed) return *spec.instance_seed;
  return derive_seed(master_seed, seed_stream::kInstance, static_cast<std::uint64_t>(spec.K),
                     static_cast<std::uint64_t>(spec.H));
}

Algorithm parse_algorithm(const std::string& name) {
  if (name == "emorl") return Algorithm::Emorl;
  if (name == "nsga2") return Algorithm::Nsga2;
  if (name == "moead") return Algorithm::Moead;
  throw ConfigError("unknown algorithm '" + name + "' (expected emorl, nsga2 or moead)");
}

std::string algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::Emorl: return "emorl";
    case Algorithm::Nsga2: return "nsga2";
    case Algorithm::Moead: return "moead";
  }
  return "unknown";
}

void apply_desk_scale(RunConfig& run) {
  run.desk_scale = true;
  run.sim.K = 20;
  run.sim.area_x = 200.0;
  run.sim.area_y = 200.0;
  run.sim.T = 100;
  run.emorl.generations = 10;
  run.emorl.warmup_iterations = 10;
  run.emorl.task_iterations = 5;
  run.emorl.eval_episodes = 3;
  run.emorl.delta = 4;
  run.nsga2.eval_episodes = 3;
  run.moead.eval_episodes = 3;
}

RunConfig make_run_config(Algorithm algorithm, const std::string& instance_name, std::uint64_t seed,
                          bool desk_scale, const Json& overrides) {
  RunConfig run;
  run.algorithm = algorithm;
  run.instance = find_instance(instance_name);
  run.seed = seed;
  run.sim.K = run.instance.K;
  run.sim.H = run.instance.H;
  if (desk_scale) apply_desk_scale(run);
  if (!overrides.is_null()) {
    if (!overrides.is_object()) throw ConfigError("config: expected a JSON object");
    for (const auto& [key, value] : overrides.items()) {
      if (key == "sim")
        apply_json(run.sim, value);
      else if (key == "emorl")
        apply_json(run.emorl, value);
      else if (key == "nsga2")
        apply_json(run.nsga2, value);
      else if (key == "moead")
        apply_json(run.moead, value);
      else if (key == "instance_seed")
        run.instance.instance_seed = value.get<std::uint64_t>();
      else if (key == "workers")
        run.workers = value.get<int>();
      else
        throw ConfigError("config: unknown key '" + key + "'");
    }
  }
  run.emorl.seed = seed;
  run.nsga2.seed = seed;
  run.moead.seed = seed;
  run.sim.validate();
  return run;
}

ScenarioInstance scenario_for(const RunConfig& run) {
  return ScenarioInstance{run.sim, instance_seed_for(run.instance, run.seed)};
}

Json run_manifest(const RunConfig& run, double wall_clock_s, const Json& outputs) {
  Json j;
  j["format"] = "emorl-run-manifest";
  j["version"] = 1;
  j["code_version"] = version_string();
  j["algorithm"] = algorithm_name(run.algorithm);
  j["instance"] = {{"name", run.instance.name},
                   {"K", run.sim.K},
                   {"H", run.sim.H},
                   {"instance_seed", instance_seed_for(run.instance, run.seed)}};
  j["seed"] = run.seed;
  j["desk_scale"] = run.desk_scale;
  j["workers"] = run.workers;
  j["seed_scheme"] = "splitmix64 derive_seed(master, stream, a, b, c)";
  int eval_episodes = run.emorl.eval_episodes;
  if (run.algorithm == Algorithm::Nsga2) eval_episodes = run.nsga2.eval_episodes;
  if (run.algorithm == Algorithm::Moead) eval_episodes = run.moead.eval_episodes;
  j["evaluation_seeds"] = evaluation_seeds(run.seed, eval_episodes);
  j["sim"] = to_json(run.sim);
  switch (run.algorithm) {
    case Algorithm::Emorl: j["emorl"] = to_json(run.emorl); break;
    case Algorithm::Nsga2: j["nsga2"] = to_json(run.nsga2); break;
    case Algorithm::Moead: j["moead"] = to_json(run.moead); break;
  }
  j["wall_clock_s"] = wall_clock_s;
  j["outputs"] = outputs;
  return j;
}

TrainOutcome run_train(const RunConfig& run) {
  const auto start = std::chrono::steady_clock::now();
  const auto instance = scenario_for(run);
  const auto& out = run.out_dir;
  TrainOutcome result;
  Json outputs = {{"front", "front.csv"}, {"manifest", "manifest.json"}};

  if (run.algorithm == Algorithm::Emorl) {
    EmorlHyper hyper = run.emorl;
    hyper.workers = run.workers;
    auto on_generation = [&](const GenerationReport& r) {
      if (!run.checkpoints) return;
      const auto dir = out / "checkpoints" / gen_dir_name(r.generation);
      write_text(dir / "front.csv", front_csv(r.archive->front()));
      write_policies(dir / "policies", *r.archive);
      Json m = run_manifest(run, 0.0, {{"front", "front.csv"}, {"policies", "policies/"}});
      m.erase("wall_clock_s");
      m["generation"] = r.generation;
      m["population_size"] = r.population_size;
      m["offspring_total"] = r.offspring_total;
      m["z_ref"] = r.z_ref;
      write_json(dir / "manifest.json", m);
    };
    auto res = run_emorl(instance, hyper, on_generation);
    result.front = res.archive.front();
    result.offspring_total = res.offspring_total;
    result.errors = res.errors;
    write_policies(out / "policies", res.archive);
    write_text(out / "training_log.csv", training_log_csv(res.training_log));
    outputs["policies"] = "policies/";
    outputs["training_log"] = "training_log.csv";
    if (run.checkpoints) outputs["checkpoints"] = "checkpoints/";
  } else if (run.algorithm == Algorithm::Nsga2) {
    GaConfig cfg = run.nsga2;
    cfg.workers = run.workers;
    const auto res = nsga2_run(instance, cfg);
    result.front = res.front_matrix();
    result.offspring_total = res.evaluations;
  } else {
    MoeadConfig cfg = run.moead;
    cfg.workers = run.workers;
    const auto res = moead_run(instance, cfg);
    result.front = res.front_matrix();
    result.offspring_total = res.evaluations;
  }

  result.wall_clock_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  result.front_path = out / "front.csv";
  result.manifest_path = out / "manifest.json";
  write_text(result.front_path, front_csv(result.front));
  Json manifest = run_manifest(run, result.wall_clock_s, outputs);
  manifest["front_size"] = result.front.size();
  manifest["evaluated_candidates"] = result.offspring_total;
  manifest["errors"] = result.errors;
  write_json(result.manifest_path, manifest);
  return result;
}

std::vector<AlgorithmReport> evaluate_fronts(const std::vector<FrontMatrix>& fronts,
                                             const std::vector<std::string>& labels,
                                             CoiObjective coi_mode) {
  if (fronts.empty()) throw ConfigError("evaluate: no fronts given");
  if (labels.size() != fronts.size()) throw ConfigError("evaluate: one label per front required");
  for (std::size_t i = 0; i < fronts.size(); ++i)
    if (fronts[i].empty()) throw ConfigError("evaluate: front '" + labels[i] + "' is empty");
  const auto normalized = normalize_fronts(fronts);
  const auto reference = build_reference_front(normalized);
  const auto weights = weight_lattice3(4);
  const Vec3 z_ref{kHvReference, kHvReference, kHvReference};
  std::vector<AlgorithmReport> out;
  for (std::size_t i = 0; i < fronts.size(); ++i) {
    AlgorithmReport r;
    r.label = labels[i];
    r.size = fronts[i].size();
    r.igd = igd(reference, normalized[i]);
    r.hv = hv3(normalized[i], z_ref);
    r.coi = coi_family(fronts[i], weights, coi_mode);
    out.push_back(std::move(r));
  }
  return out;
}

std::string report_csv(const std::vector<AlgorithmReport>& reports) {
  std::string out = "algorithm,size,igd,hv,atd,aec,atn,acoi\n";
  for (const auto& r : reports) {
    out += r.label + "," + std::to_string(r.size) + "," + format_double(r.igd) + "," +
           format_double(r.hv) + "," + format_double(r.coi.atd) + "," + format_double(r.coi.aec) +
           "," + format_double(r.coi.atn) + "," + format_double(r.coi.acoi) + "\n";
  }
  return out;
}

Json report_json(const std::vector<AlgorithmReport>& reports) {
  Json arr = Json::array();
  for (const auto& r : reports) {
    arr.push_back({{"algorithm", r.label},
                   {"size", r.size},
                   {"igd", r.igd},
                   {"hv", r.hv},
                   {"atd", r.coi.atd},
                   {"aec", r.coi.aec},
                   {"atn", r.coi.atn},
                   {"acoi", r.coi.acoi}});
  }
  return {{"hv_reference", kHvReference}, {"algorithms", arr}};
}

std::vector<SlotOutcome> replay_policy(const GaussianPolicy& policy, const ScenarioInstance& instance,
                                       std::uint64_t episode_seed) {
  if (policy.mean_net().input_size() != kObservationSize)
    throw ConfigError("replay: policy input size does not match the observation");
  UavMecEnv env(instance);
  auto obs = env.reset(episode_seed);
  while (!env.done()) obs = env.step(policy.act(obs.features, instance.config.d_max)).observation;
  return env.log();
}

Json instances_json(std::uint64_t master_seed, bool desk_scale) {
  Json arr = Json::array();
  for (const auto& spec : benchmark_instances()) {
    const auto run = make_run_config(Algorithm::Emorl, spec.name, master_seed, desk_scale);
    arr.push_back({{"name", spec.name},
                   {"K", spec.K},
                   {"H", spec.H},
                   {"instance_seed", instance_seed_for(spec, master_seed)},
                   {"sim", to_json(run.sim)}});
  }
  return arr;
}

}  // namespace emorl
