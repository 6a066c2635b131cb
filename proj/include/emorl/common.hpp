#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace emorl {

/// Three-objective vector in (delay, energy, count) order.
using Vec3 = std::array<double, 3>;

inline constexpr std::size_t kObjectives = 3;
inline constexpr std::size_t kDelay = 0;
inline constexpr std::size_t kEnergy = 1;
inline constexpr std::size_t kCount = 2;

inline constexpr double kPi = 3.14159265358979323846;

// Error taxonomy. The C API maps each to its own status code.
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};
struct UsageError : std::logic_error {
  using std::logic_error::logic_error;
};
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline double dot(const Vec3& a, const Vec3& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

/// a dominates b under all-maximize orientation.
inline bool dominates(const Vec3& a, const Vec3& b) {
  bool strictly = false;
  for (std::size_t j = 0; j < kObjectives; ++j) {
    if (a[j] < b[j]) return false;
    if (a[j] > b[j]) strictly = true;
  }
  return strictly;
}

// Splittable seed derivation: a master seed plus a path of counters maps to an
// independent 64-bit stream seed.
std::uint64_t splitmix64(std::uint64_t x);

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream,
                          std::uint64_t a = 0, std::uint64_t b = 0,
                          std::uint64_t c = 0);

namespace seed_stream {
inline constexpr std::uint64_t kInstance = 1;
inline constexpr std::uint64_t kEvaluation = 2;
inline constexpr std::uint64_t kInit = 3;
inline constexpr std::uint64_t kRollout = 4;
inline constexpr std::uint64_t kBuffers = 5;
inline constexpr std::uint64_t kGenetic = 6;
inline constexpr std::uint64_t kReplay = 7;
}  // namespace seed_stream

using Rng = std::mt19937_64;

// Portable draws built directly on the engine's bits; the standard
// distributions are implementation-defined across library vendors.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  return static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n)) % n;
}

inline double standard_normal(Rng& rng) {
  double u1 = uniform01(rng);
  while (u1 <= 0.0) u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
}

std::string version_string();

}  // namespace emorl
