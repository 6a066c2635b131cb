// Command-line front end. Talks to the library only through the C interface.

#include <cstdint>
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "emorl/emorl.h"

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

int report(emorl_status status, char* out) {
  if (status != EMORL_OK) {
    std::cerr << "error: " << emorl_last_error() << "\n";
    return status == EMORL_ERR_CONFIG || status == EMORL_ERR_USAGE || status == EMORL_ERR_NULL
               ? kExitUsage
               : kExitRuntime;
  }
  if (out) std::cout << out << "\n";
  emorl_string_free(out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-objective UAV edge-computing benchmark"};
  app.set_version_flag("--version", emorl_version());
  app.require_subcommand(1);

  std::string config_path;
  std::uint64_t seed = 1;
  std::string instance = "I-(60,30)";
  std::string algo = "emorl";
  std::string out_dir = "runs/out";
  bool desk_scale = false;
  int workers = 1;

  auto add_run_flags = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON overrides (sim, emorl, nsga2, moead)")
        ->check(CLI::ExistingFile);
    cmd->add_option("--seed", seed, "Master seed");
    cmd->add_option("--instance", instance, "Instance name, e.g. I-(60,30)");
    cmd->add_flag("--desk-scale", desk_scale, "Apply the reduced desk-scale preset");
  };

  auto* train = app.add_subcommand("train", "Run one algorithm on one instance");
  add_run_flags(train);
  train->add_option("--algo", algo, "Algorithm")
      ->check(CLI::IsMember({"emorl", "nsga2", "moead"}));
  train->add_option("--out", out_dir, "Output directory");
  train->add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber);
  bool no_checkpoints = false;
  train->add_flag("--no-checkpoints", no_checkpoints, "Skip per-generation checkpoints");

  auto* eval = app.add_subcommand("eval", "Score front CSV files against each other");
  std::vector<std::string> fronts;
  std::vector<std::string> labels;
  std::string eval_out;
  bool raw_coi = false;
  eval->add_option("fronts", fronts, "Front CSV files")->required()->check(CLI::ExistingFile);
  eval->add_option("--labels", labels, "One label per front");
  eval->add_option("--out", eval_out, "Directory for report.csv and report.json");
  eval->add_flag("--raw-coi", raw_coi, "Score COI on raw totals instead of returns");

  auto* inst = app.add_subcommand("instances", "Print the benchmark instance table");
  inst->add_option("--seed", seed, "Master seed");
  inst->add_flag("--desk-scale", desk_scale, "Apply the reduced desk-scale preset");

  auto* replay = app.add_subcommand("replay", "Roll out a policy blob and write an episode CSV");
  std::string policy_path;
  std::string replay_out = "episode.csv";
  std::uint64_t episode_seed = 0;
  replay->add_option("policy", policy_path, "Policy JSON blob")->required()->check(CLI::ExistingFile);
  add_run_flags(replay);
  replay->add_option("--out", replay_out, "Episode CSV path");
  auto* episode_opt = replay->add_option("--episode-seed", episode_seed, "Episode seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  nlohmann::json req;
  char* out = nullptr;
  if (*train) {
    req = {{"algo", algo},         {"instance", instance}, {"seed", seed},
           {"desk_scale", desk_scale}, {"out", out_dir},  {"workers", workers},
           {"checkpoints", !no_checkpoints}};
    if (!config_path.empty()) req["config_path"] = config_path;
    const auto status = emorl_train(req.dump().c_str(), &out);
    return report(status, out);
  }
  if (*eval) {
    req = {{"fronts", fronts}, {"coi", raw_coi ? "raw" : "returns"}};
    if (!labels.empty()) req["labels"] = labels;
    if (!eval_out.empty()) req["out"] = eval_out;
    const auto status = emorl_eval(req.dump().c_str(), &out);
    return report(status, out);
  }
  if (*inst) {
    req = {{"seed", seed}, {"desk_scale", desk_scale}};
    const auto status = emorl_instances_json(req.dump().c_str(), &out);
    return report(status, out);
  }
  req = {{"policy", policy_path}, {"instance", instance}, {"seed", seed},
         {"desk_scale", desk_scale}, {"out", replay_out}};
  if (!config_path.empty()) req["config_path"] = config_path;
  if (*episode_opt) req["episode_seed"] = episode_seed;
  const auto status = emorl_replay(req.dump().c_str(), &out);
  return report(status, out);
}
