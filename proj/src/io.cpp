#include "emorl/io.hpp"

#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace emorl {

namespace {

template <typename T>
using Setters = std::map<std::string, std::function<void(T&, const Json&)>>;

template <typename T>
void apply_with(T& target, const Json& j, const Setters<T>& setters, const char* what) {
  if (!j.is_object()) throw ConfigError(std::string(what) + ": expected a JSON object");
  for (const auto& [key, value] : j.items()) {
    auto it = setters.find(key);
    if (it == setters.end()) throw ConfigError(std::string(what) + ": unknown key '" + key + "'");
    try {
      it->second(target, value);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string(what) + ": bad value for '" + key + "': " + e.what());
    }
  }
}

#define EMORL_FIELD(T, name) {#name, [](T& t, const Json& v) { v.get_to(t.name); }}

const Setters<PropulsionParams>& propulsion_setters() {
  using P = PropulsionParams;
  static const Setters<P> s{EMORL_FIELD(P, P1),    EMORL_FIELD(P, P2), EMORL_FIELD(P, U_tip),
                            EMORL_FIELD(P, v0),    EMORL_FIELD(P, d0), EMORL_FIELD(P, rho),
                            EMORL_FIELD(P, g_sol), EMORL_FIELD(P, A_disc)};
  return s;
}

const Setters<PathlossParams>& pathloss_setters() {
  using P = PathlossParams;
  static const Setters<P> s{EMORL_FIELD(P, A0), EMORL_FIELD(P, B0), EMORL_FIELD(P, theta0),
                            EMORL_FIELD(P, C0), EMORL_FIELD(P, eta0)};
  return s;
}

const Setters<SimConfig>& sim_setters() {
  using C = SimConfig;
  static const Setters<C> s{
      EMORL_FIELD(C, T),
      EMORL_FIELD(C, tau),
      EMORL_FIELD(C, area_x),
      EMORL_FIELD(C, area_y),
      EMORL_FIELD(C, K),
      EMORL_FIELD(C, H),
      EMORL_FIELD(C, v_max),
      EMORL_FIELD(C, d_max),
      EMORL_FIELD(C, theta_max),
      EMORL_FIELD(C, alpha_bits),
      EMORL_FIELD(C, beta_cycles),
      EMORL_FIELD(C, f_U),
      EMORL_FIELD(C, L_max),
      EMORL_FIELD(C, N_max),
      EMORL_FIELD(C, kappa),
      EMORL_FIELD(C, P_U),
      EMORL_FIELD(C, W_hz),
      EMORL_FIELD(C, sigma2),
      EMORL_FIELD(C, bernoulli_set),
      EMORL_FIELD(C, include_propulsion_in_reward),
      {"propulsion",
       [](C& c, const Json& v) { apply_with(c.propulsion, v, propulsion_setters(), "propulsion"); }},
      {"pathloss",
       [](C& c, const Json& v) { apply_with(c.pathloss, v, pathloss_setters(), "pathloss"); }},
      {"bs_position",
       [](C& c, const Json& v) {
         if (v.is_null()) {
           c.bs_position.reset();
           return;
         }
         if (!v.is_array() || v.size() != 2) throw ConfigError("bs_position: expected [x, y]");
         c.bs_position = Vec2{v[0].get<double>(), v[1].get<double>()};
       }},
      {"offload_mode",
       [](C& c, const Json& v) {
         const auto s = v.get<std::string>();
         if (s == "myopic")
           c.offload_mode = OffloadMode::Myopic;
         else if (s == "backlog")
           c.offload_mode = OffloadMode::Backlog;
         else
           throw ConfigError("offload_mode: expected 'myopic' or 'backlog'");
       }},
      {"pathloss_sign",
       [](C& c, const Json& v) {
         const auto s = v.get<std::string>();
         if (s == "attenuation")
           c.pathloss_sign = PathlossSign::Attenuation;
         else if (s == "literal")
           c.pathloss_sign = PathlossSign::Literal;
         else
           throw ConfigError("pathloss_sign: expected 'attenuation' or 'literal'");
       }},
  };
  return s;
}

const Setters<PpoConfig>& ppo_setters() {
  using C = PpoConfig;
  static const Setters<C> s{
      EMORL_FIELD(C, episodes),     EMORL_FIELD(C, epochs),
      EMORL_FIELD(C, minibatch),    EMORL_FIELD(C, value_epochs),
      EMORL_FIELD(C, clip),         EMORL_FIELD(C, gamma),
      EMORL_FIELD(C, lambda),       EMORL_FIELD(C, lr),
      EMORL_FIELD(C, hidden),       EMORL_FIELD(C, standardize_advantages),
      EMORL_FIELD(C, entropy_coef), EMORL_FIELD(C, max_grad_norm),
  };
  return s;
}

const Setters<EmorlHyper>& emorl_setters() {
  using C = EmorlHyper;
  static const Setters<C> s{
      EMORL_FIELD(C, generations),
      EMORL_FIELD(C, warmup_iterations),
      EMORL_FIELD(C, task_iterations),
      EMORL_FIELD(C, delta),
      EMORL_FIELD(C, buffer_count),
      EMORL_FIELD(C, buffer_size),
      EMORL_FIELD(C, eval_episodes),
      EMORL_FIELD(C, seed),
      EMORL_FIELD(C, workers),
      {"ppo", [](C& c, const Json& v) { apply_with(c.ppo, v, ppo_setters(), "ppo"); }},
  };
  return s;
}

const Setters<GaConfig>& ga_setters() {
  using C = GaConfig;
  static const Setters<C> s{
      EMORL_FIELD(C, population),     EMORL_FIELD(C, generations),   EMORL_FIELD(C, crossover_prob),
      EMORL_FIELD(C, mutation_prob),  EMORL_FIELD(C, sbx_eta),       EMORL_FIELD(C, eval_episodes),
      EMORL_FIELD(C, gamma),          EMORL_FIELD(C, seed),          EMORL_FIELD(C, workers),
      EMORL_FIELD(C, time_budget_s),  EMORL_FIELD(C, two_objective),
  };
  return s;
}

const Setters<MoeadConfig>& moead_setters() {
  using C = MoeadConfig;
  static const Setters<C> s{
      EMORL_FIELD(C, population),    EMORL_FIELD(C, generations),   EMORL_FIELD(C, neighbors),
      EMORL_FIELD(C, sbx_eta),       EMORL_FIELD(C, mutation_prob), EMORL_FIELD(C, eval_episodes),
      EMORL_FIELD(C, gamma),         EMORL_FIELD(C, seed),          EMORL_FIELD(C, workers),
      EMORL_FIELD(C, time_budget_s), EMORL_FIELD(C, two_objective),
  };
  return s;
}

#undef EMORL_FIELD

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, sep)) out.push_back(cell);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

double parse_double(const std::string& s) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw ConfigError("front csv: bad number '" + s + "'");
  }
  if (used != s.size()) throw ConfigError("front csv: bad number '" + s + "'");
  return v;
}

}  // namespace

Json to_json(const SimConfig& c) {
  Json j;
  j["T"] = c.T;
  j["tau"] = c.tau;
  j["area_x"] = c.area_x;
  j["area_y"] = c.area_y;
  j["K"] = c.K;
  j["H"] = c.H;
  j["v_max"] = c.v_max;
  j["d_max"] = c.d_max;
  j["theta_max"] = c.theta_max;
  j["alpha_bits"] = c.alpha_bits;
  j["beta_cycles"] = c.beta_cycles;
  j["f_U"] = c.f_U;
  j["L_max"] = c.L_max;
  j["N_max"] = c.N_max;
  j["kappa"] = c.kappa;
  j["P_U"] = c.P_U;
  j["W_hz"] = c.W_hz;
  j["sigma2"] = c.sigma2;
  const auto& p = c.propulsion;
  j["propulsion"] = {{"P1", p.P1}, {"P2", p.P2},   {"U_tip", p.U_tip}, {"v0", p.v0},
                     {"d0", p.d0}, {"rho", p.rho}, {"g_sol", p.g_sol}, {"A_disc", p.A_disc}};
  const auto& l = c.pathloss;
  j["pathloss"] = {{"A0", l.A0}, {"B0", l.B0}, {"theta0", l.theta0}, {"C0", l.C0}, {"eta0", l.eta0}};
  j["bs_position"] = c.bs_position ? Json::array({c.bs_position->x, c.bs_position->y}) : Json(nullptr);
  j["bernoulli_set"] = c.bernoulli_set;
  j["offload_mode"] = c.offload_mode == OffloadMode::Myopic ? "myopic" : "backlog";
  j["include_propulsion_in_reward"] = c.include_propulsion_in_reward;
  j["pathloss_sign"] = c.pathloss_sign == PathlossSign::Attenuation ? "attenuation" : "literal";
  return j;
}

void apply_json(SimConfig& cfg, const Json& j) { apply_with(cfg, j, sim_setters(), "sim config"); }

Json to_json(const PpoConfig& c) {
  return {{"episodes", c.episodes},
          {"epochs", c.epochs},
          {"minibatch", c.minibatch},
          {"value_epochs", c.value_epochs},
          {"clip", c.clip},
          {"gamma", c.gamma},
          {"lambda", c.lambda},
          {"lr", c.lr},
          {"hidden", c.hidden},
          {"standardize_advantages", c.standardize_advantages},
          {"entropy_coef", c.entropy_coef},
          {"max_grad_norm", c.max_grad_norm}};
}

void apply_json(PpoConfig& cfg, const Json& j) { apply_with(cfg, j, ppo_setters(), "ppo"); }

Json to_json(const EmorlHyper& h) {
  return {{"generations", h.generations},
          {"warmup_iterations", h.warmup_iterations},
          {"task_iterations", h.task_iterations},
          {"delta", h.delta},
          {"buffer_count", h.buffer_count},
          {"buffer_size", h.buffer_size},
          {"eval_episodes", h.eval_episodes},
          {"seed", h.seed},
          {"workers", h.workers},
          {"ppo", to_json(h.ppo)}};
}

void apply_json(EmorlHyper& h, const Json& j) { apply_with(h, j, emorl_setters(), "emorl"); }

Json to_json(const GaConfig& c) {
  return {{"population", c.population},       {"generations", c.generations},
          {"crossover_prob", c.crossover_prob}, {"mutation_prob", c.mutation_prob},
          {"sbx_eta", c.sbx_eta},             {"eval_episodes", c.eval_episodes},
          {"gamma", c.gamma},                 {"seed", c.seed},
          {"workers", c.workers},             {"time_budget_s", c.time_budget_s},
          {"two_objective", c.two_objective}};
}

void apply_json(GaConfig& cfg, const Json& j) { apply_with(cfg, j, ga_setters(), "nsga2"); }

Json to_json(const MoeadConfig& c) {
  return {{"population", c.population},   {"generations", c.generations},
          {"neighbors", c.neighbors},     {"sbx_eta", c.sbx_eta},
          {"mutation_prob", c.mutation_prob}, {"eval_episodes", c.eval_episodes},
          {"gamma", c.gamma},             {"seed", c.seed},
          {"workers", c.workers},         {"time_budget_s", c.time_budget_s},
          {"two_objective", c.two_objective}};
}

void apply_json(MoeadConfig& cfg, const Json& j) { apply_with(cfg, j, moead_setters(), "moead"); }

Json policy_to_json(const GaussianPolicy& policy) {
  const auto& net = policy.mean_net();
  Json j;
  j["format"] = "emorl-policy";
  j["version"] = 1;
  j["dims"] = net.dims();
  j["output"] = net.output_activation() == OutputActivation::Sigmoid ? "sigmoid" : "identity";
  j["log_std"] = policy.log_std();
  j["params"] = std::vector<double>(net.params().begin(), net.params().end());
  return j;
}

GaussianPolicy policy_from_json(const Json& j) {
  try {
    if (j.at("format").get<std::string>() != "emorl-policy" || j.at("version").get<int>() != 1)
      throw ConfigError("policy blob: unsupported format");
    const auto dims = j.at("dims").get<std::vector<std::size_t>>();
    if (dims.size() < 2 || dims.back() != 3) throw ConfigError("policy blob: bad network shape");
    const auto out = j.at("output").get<std::string>();
    if (out != "sigmoid" && out != "identity") throw ConfigError("policy blob: bad output activation");
    Mlp net(dims, out == "sigmoid" ? OutputActivation::Sigmoid : OutputActivation::Identity);
    const auto params = j.at("params").get<std::vector<double>>();
    if (params.size() != net.param_count()) throw ConfigError("policy blob: parameter count mismatch");
    auto dst = net.mutable_params();
    std::copy(params.begin(), params.end(), dst.begin());
    return GaussianPolicy(std::move(net), j.at("log_std").get<std::array<double, 3>>());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("policy blob: ") + e.what());
  }
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string front_csv(const FrontMatrix& front) {
  std::string out = "policy_id,R_D,R_E,R_N,D_total,E_total,N_total\n";
  for (std::size_t i = 0; i < front.size(); ++i) {
    out += i < front.labels.size() ? front.labels[i] : std::to_string(i);
    for (double v : front.points[i]) out += "," + format_double(v);
    const Vec3 raw = i < front.raw.size() ? front.raw[i] : Vec3{};
    for (double v : raw) out += "," + format_double(v);
    out += "\n";
  }
  return out;
}

FrontMatrix parse_front_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("front csv: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "policy_id,R_D,R_E,R_N,D_total,E_total,N_total")
    throw ConfigError("front csv: unexpected header '" + line + "'");
  FrontMatrix f;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != 7) throw ConfigError("front csv: expected 7 columns in '" + line + "'");
    f.labels.push_back(cells[0]);
    f.points.push_back({parse_double(cells[1]), parse_double(cells[2]), parse_double(cells[3])});
    f.raw.push_back({parse_double(cells[4]), parse_double(cells[5]), parse_double(cells[6])});
  }
  return f;
}

std::string episode_csv(std::span<const SlotOutcome> log) {
  std::string out = "t,x,y,v,N_c,N_O,N_L,N_q,D_t,E_t,in_bounds\n";
  for (const auto& s : log) {
    out += std::to_string(s.t) + "," + format_double(s.position.x) + "," +
           format_double(s.position.y) + "," + format_double(s.velocity) + "," +
           std::to_string(s.collected) + "," + std::to_string(s.offloaded) + "," +
           std::to_string(s.local) + "," + std::to_string(s.queue_residual) + "," +
           format_double(s.delay) + "," + format_double(s.energy) + "," +
           (s.in_bounds ? "1" : "0") + "\n";
  }
  return out;
}

std::string training_log_csv(std::span<const IterationStats> log) {
  std::string out =
      "task_index,task_id,iteration,policy_loss,value_loss,clip_fraction,R_D,R_E,R_N,D_total,"
      "E_total,N_total\n";
  for (const auto& s : log) {
    out += std::to_string(s.task_index) + "," + std::to_string(s.task_id) + "," +
           std::to_string(s.iteration) + "," + format_double(s.policy_loss) + "," +
           format_double(s.value_loss) + "," + format_double(s.clip_fraction);
    for (double v : s.mean_return) out += "," + format_double(v);
    for (double v : s.mean_raw) out += "," + format_double(v);
    out += "\n";
  }
  return out;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) throw IoError("cannot create directory '" + path.parent_path().string() + "'");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

Json read_json(const std::filesystem::path& path) {
  try {
    return Json::parse(read_text(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("invalid JSON in '" + path.string() + "': " + e.what());
  }
}

void write_json(const std::filesystem::path& path, const Json& j) { write_text(path, j.dump(2) + "\n"); }

}  // namespace emorl
