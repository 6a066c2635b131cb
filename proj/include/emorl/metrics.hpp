#pragma once

// Front-quality indicators. Every front is oriented all-maximize.

#include <span>
#include <string>
#include <vector>

#include "emorl/common.hpp"

namespace emorl {

struct FrontMatrix {
  std::vector<Vec3> points;
  /// Optional per-point raw totals (D_total, E_total, N_total).
  std::vector<Vec3> raw;
  std::vector<std::string> labels;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

/// Min-max normalization with bounds taken over the union of all fronts.
/// A degenerate objective (max == min) maps to 0.5.
std::vector<FrontMatrix> normalize_fronts(std::span<const FrontMatrix> fronts);

/// Mean distance from each reference point to its nearest approximation point.
double igd(const FrontMatrix& reference, const FrontMatrix& approximation);

/// Exact hypervolume dominated by `points` above `z_ref` (3 objectives).
double hv3(std::span<const Vec3> points, const Vec3& z_ref);
inline double hv3(const FrontMatrix& front, const Vec3& z_ref) { return hv3(front.points, z_ref); }

/// Indices of the mutually nondominated points; duplicates keep the first.
std::vector<std::size_t> nondominated_indices(std::span<const Vec3> points);

/// Nondominated filter over the union of all fronts.
FrontMatrix build_reference_front(std::span<const FrontMatrix> fronts);

struct CoiSummary {
  double atd = 0.0;
  double aec = 0.0;
  double atn = 0.0;
  double acoi = 0.0;
  std::vector<std::size_t> winners;  // per weight
};

enum class CoiObjective { Returns, RawTotals };

/// Per-weight argmax of w . F_j (lowest index on ties), then averages of the
/// winners' raw totals and COI values. RawTotals mode scores (-D, -E, N).
CoiSummary coi_family(const FrontMatrix& front, std::span<const Vec3> weights,
                      CoiObjective mode = CoiObjective::Returns);

enum class RankDirection { LargerBetter, SmallerBetter };

struct RankTable {
  std::vector<std::vector<double>> per_instance;  // [instance][algorithm]
  std::vector<double> average;                    // [algorithm]
  std::vector<int> position;                      // dense rank of `average`
};

/// values[instance][algorithm]. Ties share the average rank.
RankTable friedman_ranks(const std::vector<std::vector<double>>& values, RankDirection direction);

}  // namespace emorl
