#include "emorl/baselines.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include "parallel.hpp"

namespace emorl {

PolicyEvaluation evaluate_chromosome(std::span<const double> genes, const ScenarioInstance& instance,
                                     std::span<const std::uint64_t> episode_seeds, double gamma) {
  const auto& cfg = instance.config;
  if (genes.size() != static_cast<std::size_t>(3 * cfg.T))
    throw ConfigError("evaluate_chromosome: chromosome length must be 3T");
  if (episode_seeds.empty()) throw ConfigError("evaluate_chromosome: need at least one episode");
  UavMecEnv env(instance);
  PolicyEvaluation eval;
  const double inv = 1.0 / static_cast<double>(episode_seeds.size());
  for (auto seed : episode_seeds) {
    env.reset(seed);
    for (std::size_t t = 0; !env.done(); ++t)
      env.step(scale_action({genes[3 * t], genes[3 * t + 1], genes[3 * t + 2]}, cfg.d_max));
    const auto totals = episode_totals(env.log(), gamma, cfg.include_propulsion_in_reward);
    for (std::size_t j = 0; j < kObjectives; ++j) {
      eval.returns[j] += totals.return_vec[j] * inv;
      eval.raw[j] += totals.raw()[j] * inv;
    }
  }
  return eval;
}

std::vector<std::vector<std::size_t>> fast_nondominated_sort(std::span<const Vec3> points) {
  const std::size_t n = points.size();
  std::vector<std::vector<std::size_t>> dominated(n);
  std::vector<std::size_t> count(n, 0);
  std::vector<std::vector<std::size_t>> fronts;
  std::vector<std::size_t> current;
  for (std::size_t p = 0; p < n; ++p) {
    for (std::size_t q = 0; q < n; ++q) {
      if (dominates(points[p], points[q]))
        dominated[p].push_back(q);
      else if (dominates(points[q], points[p]))
        ++count[p];
    }
    if (count[p] == 0) current.push_back(p);
  }
  while (!current.empty()) {
    std::vector<std::size_t> next;
    for (auto p : current)
      for (auto q : dominated[p])
        if (--count[q] == 0) next.push_back(q);
    std::sort(next.begin(), next.end());
    fronts.push_back(std::move(current));
    current = std::move(next);
  }
  return fronts;
}

std::vector<double> crowding_distance(std::span<const Vec3> points, std::span<const std::size_t> front) {
  const std::size_t n = front.size();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(n, 0.0);
  if (n <= 2) {
    std::fill(dist.begin(), dist.end(), inf);
    return dist;
  }
  std::vector<std::size_t> order(n);
  for (std::size_t j = 0; j < kObjectives; ++j) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return points[front[a]][j] < points[front[b]][j];
    });
    const double lo = points[front[order.front()]][j];
    const double hi = points[front[order.back()]][j];
    dist[order.front()] = inf;
    dist[order.back()] = inf;
    if (hi <= lo) continue;
    for (std::size_t k = 1; k + 1 < n; ++k)
      dist[order[k]] += (points[front[order[k + 1]]][j] - points[front[order[k - 1]]][j]) / (hi - lo);
  }
  return dist;
}

void sbx_crossover(std::vector<double>& a, std::vector<double>& b, double eta, Rng& rng) {
  const double exponent = 1.0 / (eta + 1.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (uniform01(rng) > 0.5) continue;
    const double u = uniform01(rng);
    if (std::abs(a[i] - b[i]) < 1e-14) continue;
    const double y1 = std::min(a[i], b[i]);
    const double y2 = std::max(a[i], b[i]);
    const double span = y2 - y1;

    auto beta_q = [&](double beta) {
      const double alpha = 2.0 - std::pow(beta, -(eta + 1.0));
      return u <= 1.0 / alpha ? std::pow(u * alpha, exponent)
                              : std::pow(1.0 / (2.0 - u * alpha), exponent);
    };
    const double c1 = 0.5 * (y1 + y2 - beta_q(1.0 + 2.0 * y1 / span) * span);
    const double c2 = 0.5 * (y1 + y2 + beta_q(1.0 + 2.0 * (1.0 - y2) / span) * span);
    a[i] = std::clamp(c1, 0.0, 1.0);
    b[i] = std::clamp(c2, 0.0, 1.0);
    if (uniform01(rng) < 0.5) std::swap(a[i], b[i]);
  }
}

void reset_mutation(std::vector<double>& genes, double prob, Rng& rng) {
  if (genes.empty() || uniform01(rng) >= prob) return;
  const double rate = 1.0 / static_cast<double>(genes.size());
  for (auto& g : genes)
    if (uniform01(rng) < rate) g = uniform01(rng);
}

FrontMatrix GaResult::front_matrix() const {
  FrontMatrix f;
  for (std::size_t i = 0; i < front.size(); ++i) {
    f.points.push_back(front[i].eval.returns);
    f.raw.push_back(front[i].eval.raw);
    f.labels.push_back(std::to_string(i));
  }
  return f;
}

double tchebycheff(const Vec3& f, const Vec3& w, const Vec3& ideal) {
  double g = 0.0;
  for (std::size_t j = 0; j < kObjectives; ++j) g = std::max(g, w[j] * std::abs(f[j] - ideal[j]));
  return g;
}

std::vector<std::vector<std::size_t>> weight_neighborhoods(std::span<const Vec3> weights, int k) {
  if (k < 1 || static_cast<std::size_t>(k) > weights.size())
    throw ConfigError("weight_neighborhoods: neighborhood size out of range");
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    std::vector<double> d(weights.size());
    for (std::size_t j = 0; j < weights.size(); ++j) {
      double s = 0.0;
      for (std::size_t c = 0; c < kObjectives; ++c)
        s += (weights[i][c] - weights[j][c]) * (weights[i][c] - weights[j][c]);
      d[j] = s;
    }
    std::vector<std::size_t> order(weights.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (a == i || b == i) return a == i && b != i;
      return d[a] < d[b];
    });
    order.resize(static_cast<std::size_t>(k));
    out.push_back(std::move(order));
  }
  return out;
}

std::vector<Vec3> moead_weights(int count) {
  if (count < 1) throw ConfigError("moead_weights: count must be >= 1");
  int delta = 1;
  while ((delta + 1) * (delta + 2) / 2 < count) ++delta;
  auto w = weight_lattice3(delta);
  w.resize(static_cast<std::size_t>(count));
  return w;
}

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_s(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Objective vector used for selection.
Vec3 selection_vector(const PolicyEvaluation& e, bool two_objective) {
  return two_objective ? Vec3{e.returns[0], e.returns[1], 0.0} : e.returns;
}

std::vector<double> random_genes(std::size_t n, Rng& rng) {
  std::vector<double> g(n);
  for (auto& x : g) x = uniform01(rng);
  return g;
}

void evaluate_all(std::vector<Chromosome>& pop, const ScenarioInstance& instance,
                  std::span<const std::uint64_t> seeds, double gamma, int workers) {
  detail::parallel_for(pop.size(), workers, [&](std::size_t i) {
    pop[i].eval = evaluate_chromosome(pop[i].genes, instance, seeds, gamma);
  });
}

std::vector<Chromosome> nondominated_set(const std::vector<Chromosome>& pop) {
  std::vector<Vec3> pts;
  for (const auto& c : pop) pts.push_back(c.eval.returns);
  std::vector<Chromosome> out;
  for (auto i : nondominated_indices(pts)) out.push_back(pop[i]);
  return out;
}

}  // namespace

GaResult nsga2_run(const ScenarioInstance& instance, const GaConfig& cfg) {
  instance.config.validate();
  if (cfg.population < 2 || cfg.population % 2 != 0)
    throw ConfigError("nsga2: population must be even and >= 2");
  if (cfg.generations < 0 || cfg.eval_episodes < 1) throw ConfigError("nsga2: invalid counts");
  const auto start = Clock::now();
  const auto seeds = evaluation_seeds(cfg.seed, cfg.eval_episodes);
  const std::size_t length = static_cast<std::size_t>(3 * instance.config.T);
  const std::size_t n = static_cast<std::size_t>(cfg.population);
  Rng rng(derive_seed(cfg.seed, seed_stream::kGenetic, 0));

  GaResult result;
  std::vector<Chromosome> pop(n);
  for (auto& c : pop) c.genes = random_genes(length, rng);
  evaluate_all(pop, instance, seeds, cfg.gamma, cfg.workers);
  result.evaluations += n;

  std::vector<int> rank(n);
  std::vector<double> crowd(n);
  auto rank_and_crowd = [&](const std::vector<Chromosome>& p) {
    std::vector<Vec3> pts;
    for (const auto& c : p) pts.push_back(selection_vector(c.eval, cfg.two_objective));
    rank.assign(p.size(), 0);
    crowd.assign(p.size(), 0.0);
    auto fronts = fast_nondominated_sort(pts);
    for (std::size_t r = 0; r < fronts.size(); ++r) {
      const auto cd = crowding_distance(pts, fronts[r]);
      for (std::size_t k = 0; k < fronts[r].size(); ++k) {
        rank[fronts[r][k]] = static_cast<int>(r);
        crowd[fronts[r][k]] = cd[k];
      }
    }
    return fronts;
  };
  rank_and_crowd(pop);

  auto tournament = [&]() -> const Chromosome& {
    const std::size_t a = uniform_index(rng, n);
    const std::size_t b = uniform_index(rng, n);
    if (rank[a] != rank[b]) return pop[rank[a] < rank[b] ? a : b];
    if (crowd[a] != crowd[b]) return pop[crowd[a] > crowd[b] ? a : b];
    return pop[std::min(a, b)];
  };

  for (int gen = 0; gen < cfg.generations; ++gen) {
    if (cfg.time_budget_s > 0.0 && elapsed_s(start) >= cfg.time_budget_s) break;
    std::vector<Chromosome> children;
    children.reserve(n);
    while (children.size() < n) {
      Chromosome c1{tournament().genes, {}};
      Chromosome c2{tournament().genes, {}};
      if (uniform01(rng) < cfg.crossover_prob) sbx_crossover(c1.genes, c2.genes, cfg.sbx_eta, rng);
      reset_mutation(c1.genes, cfg.mutation_prob, rng);
      reset_mutation(c2.genes, cfg.mutation_prob, rng);
      children.push_back(std::move(c1));
      children.push_back(std::move(c2));
    }
    evaluate_all(children, instance, seeds, cfg.gamma, cfg.workers);
    result.evaluations += n;

    std::vector<Chromosome> merged = std::move(pop);
    for (auto& c : children) merged.push_back(std::move(c));
    const auto fronts = rank_and_crowd(merged);
    std::vector<std::size_t> chosen;
    for (const auto& f : fronts) {
      if (chosen.size() + f.size() <= n) {
        chosen.insert(chosen.end(), f.begin(), f.end());
        continue;
      }
      std::vector<std::size_t> order(f.begin(), f.end());
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return crowd[a] > crowd[b]; });
      order.resize(n - chosen.size());
      chosen.insert(chosen.end(), order.begin(), order.end());
      break;
    }
    pop.clear();
    for (auto i : chosen) pop.push_back(std::move(merged[i]));
    rank_and_crowd(pop);
    result.generations_run = gen + 1;
  }

  std::vector<Chromosome> rank0;
  for (std::size_t i = 0; i < pop.size(); ++i)
    if (rank[i] == 0) rank0.push_back(pop[i]);
  result.front = nondominated_set(rank0);
  return result;
}

GaResult moead_run(const ScenarioInstance& instance, const MoeadConfig& cfg) {
  instance.config.validate();
  if (cfg.population < 2 || cfg.generations < 0 || cfg.eval_episodes < 1)
    throw ConfigError("moead: invalid counts");
  const auto start = Clock::now();
  const auto seeds = evaluation_seeds(cfg.seed, cfg.eval_episodes);
  const std::size_t length = static_cast<std::size_t>(3 * instance.config.T);
  const auto weights = moead_weights(cfg.population);
  const auto hood = weight_neighborhoods(weights, cfg.neighbors);
  const std::size_t n = weights.size();
  Rng rng(derive_seed(cfg.seed, seed_stream::kGenetic, 1));

  GaResult result;
  std::vector<Chromosome> pop(n);
  for (auto& c : pop) c.genes = random_genes(length, rng);
  evaluate_all(pop, instance, seeds, cfg.gamma, cfg.workers);
  result.evaluations += n;

  Vec3 ideal = selection_vector(pop[0].eval, cfg.two_objective);
  auto raise_ideal = [&](const Chromosome& c) {
    const Vec3 f = selection_vector(c.eval, cfg.two_objective);
    for (std::size_t j = 0; j < kObjectives; ++j) ideal[j] = std::max(ideal[j], f[j]);
  };
  for (const auto& c : pop) raise_ideal(c);

  std::vector<Chromosome> archive;
  auto archive_insert = [&](const Chromosome& c) {
    const Vec3& f = c.eval.returns;
    for (const auto& a : archive)
      if (dominates(a.eval.returns, f) || a.eval.returns == f) return;
    std::erase_if(archive, [&](const Chromosome& a) { return dominates(f, a.eval.returns); });
    archive.push_back(c);
  };
  for (const auto& c : pop) archive_insert(c);

  for (int gen = 0; gen < cfg.generations; ++gen) {
    if (cfg.time_budget_s > 0.0 && elapsed_s(start) >= cfg.time_budget_s) break;
    std::vector<Chromosome> children(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& b = hood[i];
      auto p1 = pop[b[uniform_index(rng, b.size())]].genes;
      auto p2 = pop[b[uniform_index(rng, b.size())]].genes;
      sbx_crossover(p1, p2, cfg.sbx_eta, rng);
      reset_mutation(p1, cfg.mutation_prob, rng);
      children[i].genes = std::move(p1);
    }
    evaluate_all(children, instance, seeds, cfg.gamma, cfg.workers);
    result.evaluations += n;

    for (std::size_t i = 0; i < n; ++i) {
      const auto& child = children[i];
      raise_ideal(child);
      const Vec3 fc = selection_vector(child.eval, cfg.two_objective);
      for (auto j : hood[i]) {
        const Vec3 fj = selection_vector(pop[j].eval, cfg.two_objective);
        if (tchebycheff(fc, weights[j], ideal) < tchebycheff(fj, weights[j], ideal)) pop[j] = child;
      }
      archive_insert(child);
    }
    result.generations_run = gen + 1;
  }
  result.front = std::move(archive);
  return result;
}

}  // namespace emorl
