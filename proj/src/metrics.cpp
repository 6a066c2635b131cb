#include "emorl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace emorl {

std::vector<FrontMatrix> normalize_fronts(std::span<const FrontMatrix> fronts) {
  Vec3 lo;
  Vec3 hi;
  lo.fill(std::numeric_limits<double>::infinity());
  hi.fill(-std::numeric_limits<double>::infinity());
  std::size_t total = 0;
  for (const auto& f : fronts) {
    for (const auto& p : f.points) {
      for (std::size_t j = 0; j < kObjectives; ++j) {
        if (!std::isfinite(p[j])) throw DomainError("normalize_fronts: non-finite objective value");
        lo[j] = std::min(lo[j], p[j]);
        hi[j] = std::max(hi[j], p[j]);
      }
      ++total;
    }
  }
  if (total == 0) throw DomainError("normalize_fronts: no points to normalize");
  std::vector<FrontMatrix> out(fronts.begin(), fronts.end());
  for (auto& f : out) {
    for (auto& p : f.points) {
      for (std::size_t j = 0; j < kObjectives; ++j)
        p[j] = hi[j] > lo[j] ? (p[j] - lo[j]) / (hi[j] - lo[j]) : 0.5;
    }
  }
  return out;
}

double igd(const FrontMatrix& reference, const FrontMatrix& approximation) {
  if (reference.empty() || approximation.empty()) throw DomainError("igd: empty front");
  double sum = 0.0;
  for (const auto& v : reference.points) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& a : approximation.points) {
      const double d = std::sqrt((v[0] - a[0]) * (v[0] - a[0]) + (v[1] - a[1]) * (v[1] - a[1]) +
                                 (v[2] - a[2]) * (v[2] - a[2]));
      best = std::min(best, d);
    }
    sum += best;
  }
  return sum / static_cast<double>(reference.size());
}

namespace {

// Area dominated by 2-D points above (rx, ry).
double hv2(std::vector<std::array<double, 2>> pts, double rx, double ry) {
  std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) {
    return a[0] != b[0] ? a[0] > b[0] : a[1] > b[1];
  });
  double area = 0.0;
  double best_y = ry;
  for (const auto& p : pts) {
    if (p[1] > best_y) {
      area += (p[0] - rx) * (p[1] - best_y);
      best_y = p[1];
    }
  }
  return area;
}

}  // namespace

double hv3(std::span<const Vec3> points, const Vec3& z_ref) {
  std::vector<Vec3> pts;
  for (const auto& p : points)
    if (p[0] > z_ref[0] && p[1] > z_ref[1] && p[2] > z_ref[2]) pts.push_back(p);
  if (pts.empty()) return 0.0;
  std::sort(pts.begin(), pts.end(), [](const Vec3& a, const Vec3& b) { return a[2] > b[2]; });
  std::vector<std::array<double, 2>> slice;
  double volume = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    slice.push_back({pts[i][0], pts[i][1]});
    const double lower = i + 1 < pts.size() ? pts[i + 1][2] : z_ref[2];
    const double height = pts[i][2] - lower;
    if (height > 0.0) volume += hv2(slice, z_ref[0], z_ref[1]) * height;
  }
  return volume;
}

std::vector<std::size_t> nondominated_indices(std::span<const Vec3> points) {
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < points.size(); ++i) {
    bool drop = false;
    for (std::size_t j = 0; j < points.size() && !drop; ++j) {
      if (j == i) continue;
      if (dominates(points[j], points[i])) drop = true;
      if (j < i && points[j] == points[i]) drop = true;
    }
    if (!drop) keep.push_back(i);
  }
  return keep;
}

FrontMatrix build_reference_front(std::span<const FrontMatrix> fronts) {
  FrontMatrix all;
  for (const auto& f : fronts) {
    for (std::size_t i = 0; i < f.size(); ++i) {
      all.points.push_back(f.points[i]);
      all.raw.push_back(i < f.raw.size() ? f.raw[i] : Vec3{});
      all.labels.push_back(i < f.labels.size() ? f.labels[i] : std::string{});
    }
  }
  if (all.empty()) throw DomainError("build_reference_front: empty union");
  FrontMatrix out;
  for (auto i : nondominated_indices(all.points)) {
    out.points.push_back(all.points[i]);
    out.raw.push_back(all.raw[i]);
    out.labels.push_back(all.labels[i]);
  }
  return out;
}

CoiSummary coi_family(const FrontMatrix& front, std::span<const Vec3> weights, CoiObjective mode) {
  if (front.empty()) throw DomainError("coi_family: empty front");
  if (weights.empty()) throw DomainError("coi_family: no weight vectors");
  if (front.raw.size() != front.size()) throw DomainError("coi_family: front lacks raw totals");
  std::vector<Vec3> scored(front.size());
  for (std::size_t j = 0; j < front.size(); ++j) {
    scored[j] = mode == CoiObjective::Returns
                    ? front.points[j]
                    : Vec3{-front.raw[j][0], -front.raw[j][1], front.raw[j][2]};
  }
  CoiSummary s;
  for (const auto& w : weights) {
    std::size_t best = 0;
    double best_val = dot(w, scored[0]);
    for (std::size_t j = 1; j < scored.size(); ++j) {
      const double v = dot(w, scored[j]);
      if (v > best_val) {
        best_val = v;
        best = j;
      }
    }
    s.winners.push_back(best);
    s.atd += front.raw[best][0];
    s.aec += front.raw[best][1];
    s.atn += front.raw[best][2];
    s.acoi += best_val;
  }
  const double n = static_cast<double>(weights.size());
  s.atd /= n;
  s.aec /= n;
  s.atn /= n;
  s.acoi /= n;
  return s;
}

RankTable friedman_ranks(const std::vector<std::vector<double>>& values, RankDirection direction) {
  if (values.empty() || values.front().empty()) throw ConfigError("friedman_ranks: empty table");
  const std::size_t algos = values.front().size();
  RankTable table;
  table.average.assign(algos, 0.0);
  for (const auto& row : values) {
    if (row.size() != algos) throw ConfigError("friedman_ranks: missing cells in table");
    for (double v : row)
      if (!std::isfinite(v)) throw ConfigError("friedman_ranks: missing or non-finite cell");
    std::vector<std::size_t> order(algos);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return direction == RankDirection::LargerBetter ? row[a] > row[b] : row[a] < row[b];
    });
    std::vector<double> ranks(algos);
    for (std::size_t i = 0; i < algos;) {
      std::size_t j = i;
      while (j + 1 < algos && row[order[j + 1]] == row[order[i]]) ++j;
      const double shared = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
      for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = shared;
      i = j + 1;
    }
    for (std::size_t a = 0; a < algos; ++a) table.average[a] += ranks[a];
    table.per_instance.push_back(std::move(ranks));
  }
  for (auto& a : table.average) a /= static_cast<double>(values.size());

  std::vector<double> distinct = table.average;
  std::sort(distinct.begin(), distinct.end());
  std::vector<double> levels;
  for (double d : distinct)
    if (levels.empty() || d - levels.back() > 1e-9) levels.push_back(d);
  for (double a : table.average) {
    int pos = 1;
    for (double l : levels) {
      if (a - l > 1e-9) ++pos;
    }
    table.position.push_back(pos);
  }
  return table;
}

}  // namespace emorl
