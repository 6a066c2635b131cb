#pragma once

// Text serialization: JSON for configs, manifests and policy blobs; CSV for
// fronts, episodes and training logs. Doubles are written with 17 significant
// digits so every file round-trips exactly.

#include <filesystem>
#include <span>
#include <string>

#include <json.hpp>

#include "emorl/baselines.hpp"
#include "emorl/evolution.hpp"

namespace emorl {

using Json = nlohmann::ordered_json;

Json to_json(const SimConfig& cfg);
/// Overlays the keys present in `j` onto `cfg`. Unknown keys throw ConfigError.
void apply_json(SimConfig& cfg, const Json& j);

Json to_json(const PpoConfig& cfg);
void apply_json(PpoConfig& cfg, const Json& j);
Json to_json(const EmorlHyper& h);
void apply_json(EmorlHyper& h, const Json& j);
Json to_json(const GaConfig& cfg);
void apply_json(GaConfig& cfg, const Json& j);
Json to_json(const MoeadConfig& cfg);
void apply_json(MoeadConfig& cfg, const Json& j);

Json policy_to_json(const GaussianPolicy& policy);
GaussianPolicy policy_from_json(const Json& j);

std::string format_double(double v);

/// Header `policy_id,R_D,R_E,R_N,D_total,E_total,N_total`.
std::string front_csv(const FrontMatrix& front);
FrontMatrix parse_front_csv(const std::string& text);
std::string episode_csv(std::span<const SlotOutcome> log);
std::string training_log_csv(std::span<const IterationStats> log);

std::string read_text(const std::filesystem::path& path);
/// Creates parent directories as needed. Throws IoError on failure.
void write_text(const std::filesystem::path& path, const std::string& text);
Json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const Json& j);

}  // namespace emorl
