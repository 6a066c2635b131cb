#pragma once

#include <cmath>
#include <vector>

#include "emorl/sim_env.hpp"

namespace emorl::test {

// Desk-scale world: 20 devices on a 200 m square, 100 slots.
inline SimConfig desk_config(double H = 30.0) {
  SimConfig c;
  c.K = 20;
  c.area_x = 200.0;
  c.area_y = 200.0;
  c.T = 100;
  c.H = H;
  return c;
}

inline ScenarioInstance desk_instance(std::uint64_t seed = 7) { return {desk_config(), seed}; }

inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

inline std::vector<Vec3> random_points(Rng& rng, std::size_t n, double lo = 0.0, double hi = 1.0) {
  std::vector<Vec3> pts(n);
  for (auto& p : pts)
    for (auto& c : p) c = uniform(rng, lo, hi);
  return pts;
}

// Brute-force nondominated filter; duplicates keep the first occurrence.
inline std::vector<std::size_t> brute_nondominated(const std::vector<Vec3>& pts) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    bool keep = true;
    for (std::size_t j = 0; j < pts.size(); ++j) {
      bool geq = true;
      bool gt = false;
      for (std::size_t k = 0; k < 3; ++k) {
        if (pts[j][k] < pts[i][k]) geq = false;
        if (pts[j][k] > pts[i][k]) gt = true;
      }
      if (j != i && geq && gt) keep = false;
      if (j < i && pts[j] == pts[i]) keep = false;
    }
    if (keep) out.push_back(i);
  }
  return out;
}

}  // namespace emorl::test
