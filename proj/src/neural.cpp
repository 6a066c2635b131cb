#include "emorl/neural.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace emorl {

namespace {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// Fills an (rows x cols) row-major block with a scaled semi-orthogonal matrix.
void orthogonal_block(Rng& rng, std::size_t rows, std::size_t cols, double gain,
                      std::span<double> out) {
  const bool row_major_basis = rows <= cols;
  const std::size_t count = row_major_basis ? rows : cols;
  const std::size_t len = row_major_basis ? cols : rows;
  std::vector<std::vector<double>> basis;
  basis.reserve(count);
  while (basis.size() < count) {
    std::vector<double> v(len);
    for (auto& x : v) x = standard_normal(rng);
    for (const auto& b : basis) {
      const double proj = std::inner_product(v.begin(), v.end(), b.begin(), 0.0);
      for (std::size_t i = 0; i < len; ++i) v[i] -= proj * b[i];
    }
    const double norm = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
    if (norm < 1e-8) continue;
    for (auto& x : v) x /= norm;
    basis.push_back(std::move(v));
  }
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const double value = row_major_basis ? basis[r][c] : basis[c][r];
      out[r * cols + c] = gain * value;
    }
  }
}

}  // namespace

Mlp::Mlp(std::vector<std::size_t> dims, OutputActivation output)
    : dims_(std::move(dims)), output_(output) {
  if (dims_.size() < 2) throw ConfigError("Mlp needs at least an input and an output layer");
  for (auto d : dims_)
    if (d == 0) throw ConfigError("Mlp layer widths must be positive");
  std::size_t total = 0;
  for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
    offsets_.push_back(total);
    total += dims_[l + 1] * dims_[l] + dims_[l + 1];
  }
  params_.assign(total, 0.0);
}

void Mlp::initialize(Rng& rng, double gain, double final_gain) {
  ++revision_;
  for (std::size_t l = 0; l < layer_count(); ++l) {
    const std::size_t in = dims_[l];
    const std::size_t out = dims_[l + 1];
    std::span<double> block(params_.data() + offsets_[l], out * in + out);
    const double g = (l + 1 == layer_count()) ? final_gain : gain;
    orthogonal_block(rng, out, in, g, block.first(out * in));
    std::fill(block.begin() + static_cast<std::ptrdiff_t>(out * in), block.end(), 0.0);
  }
}

std::vector<double> Mlp::forward(std::span<const double> x) const {
  Cache scratch;
  return forward(x, scratch);
}

std::vector<double> Mlp::forward(std::span<const double> x, Cache& cache) const {
  if (x.size() != input_size()) throw DomainError("Mlp::forward: input dimension mismatch");
  cache.owner = this;
  cache.revision = revision_;
  cache.activations.resize(dims_.size());
  cache.activations[0].assign(x.begin(), x.end());
  for (std::size_t l = 0; l < layer_count(); ++l) {
    const std::size_t in = dims_[l];
    const std::size_t out = dims_[l + 1];
    const double* w = params_.data() + offsets_[l];
    const double* b = w + out * in;
    const auto& a = cache.activations[l];
    auto& z = cache.activations[l + 1];
    z.resize(out);
    const bool last = l + 1 == layer_count();
    for (std::size_t r = 0; r < out; ++r) {
      double acc = b[r];
      const double* row = w + r * in;
      for (std::size_t c = 0; c < in; ++c) acc += row[c] * a[c];
      if (!last) {
        z[r] = std::tanh(acc);
      } else {
        z[r] = output_ == OutputActivation::Sigmoid ? sigmoid(acc) : acc;
      }
    }
  }
  return cache.activations.back();
}

std::vector<double> Mlp::backward(const Cache& cache, std::span<const double> upstream,
                                  std::span<double> grad) const {
  if (cache.owner != this || cache.revision != revision_ ||
      cache.activations.size() != dims_.size())
    throw UsageError("Mlp::backward: stale or foreign forward cache");
  if (upstream.size() != output_size()) throw DomainError("Mlp::backward: upstream size mismatch");
  if (grad.size() != params_.size()) throw DomainError("Mlp::backward: gradient buffer size mismatch");

  std::vector<double> delta(upstream.begin(), upstream.end());
  for (std::size_t l = layer_count(); l-- > 0;) {
    const std::size_t in = dims_[l];
    const std::size_t out = dims_[l + 1];
    const auto& a_out = cache.activations[l + 1];
    const auto& a_in = cache.activations[l];
    const bool last = l + 1 == layer_count();
    for (std::size_t r = 0; r < out; ++r) {
      double deriv = 1.0;
      if (!last) {
        deriv = 1.0 - a_out[r] * a_out[r];
      } else if (output_ == OutputActivation::Sigmoid) {
        deriv = a_out[r] * (1.0 - a_out[r]);
      }
      delta[r] *= deriv;
    }
    const double* w = params_.data() + offsets_[l];
    double* gw = grad.data() + offsets_[l];
    double* gb = gw + out * in;
    std::vector<double> prev(in, 0.0);
    for (std::size_t r = 0; r < out; ++r) {
      const double d = delta[r];
      gb[r] += d;
      const double* row = w + r * in;
      double* grow = gw + r * in;
      for (std::size_t c = 0; c < in; ++c) {
        grow[c] += d * a_in[c];
        prev[c] += row[c] * d;
      }
    }
    delta = std::move(prev);
  }
  return delta;
}

void AdamState::step(std::span<double> params, std::span<const double> grads) {
  if (params.size() != grads.size()) throw DomainError("Adam: parameter/gradient size mismatch");
  if (m.size() != params.size()) {
    if (steps != 0 || !m.empty()) throw DomainError("Adam: state shape does not match parameters");
    m.assign(params.size(), 0.0);
    v.assign(params.size(), 0.0);
  }
  for (double g : grads)
    if (!std::isfinite(g)) throw NumericError("Adam: non-finite gradient, update rejected");
  ++steps;
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(steps));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(steps));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    m[i] = beta1 * m[i] + (1.0 - beta1) * g;
    v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
    const double m_hat = m[i] / c1;
    const double v_hat = v[i] / c2;
    params[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
  }
}

ActionVector scale_action(const NormalizedAction& unit, double d_max) {
  return {2.0 * kPi * unit[0], d_max * unit[1], unit[2]};
}

NormalizedAction clamp_unit(const NormalizedAction& a) {
  return {std::clamp(a[0], 0.0, 1.0), std::clamp(a[1], 0.0, 1.0), std::clamp(a[2], 0.0, 1.0)};
}

NormalizedAction unscale_action(const ActionVector& a, double d_max) {
  return {a.theta / (2.0 * kPi), a.distance / d_max, a.offload};
}

double gaussian_log_prob(const NormalizedAction& x, const NormalizedAction& mean,
                         const std::array<double, 3>& log_std) {
  constexpr double kHalfLog2Pi = 0.91893853320467274178;
  double lp = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    const double z = (x[i] - mean[i]) * std::exp(-log_std[i]);
    lp += -0.5 * z * z - log_std[i] - kHalfLog2Pi;
  }
  return lp;
}

GaussianPolicy::GaussianPolicy(std::size_t obs_dim, std::size_t hidden)
    : mean_net_({obs_dim, hidden, hidden, 3}, OutputActivation::Sigmoid) {}

GaussianPolicy::GaussianPolicy(Mlp mean_net, std::array<double, 3> log_std)
    : mean_net_(std::move(mean_net)) {
  if (mean_net_.output_size() != 3) throw ConfigError("policy mean network must have 3 outputs");
  set_log_std(log_std);
}

void GaussianPolicy::initialize(Rng& rng, double final_gain) {
  mean_net_.initialize(rng, std::sqrt(2.0), final_gain);
  log_std_ = {kLogStdInit, kLogStdInit, kLogStdInit};
}

void GaussianPolicy::set_log_std(const std::array<double, 3>& v) {
  for (std::size_t i = 0; i < 3; ++i) log_std_[i] = std::clamp(v[i], kLogStdMin, kLogStdMax);
}

NormalizedAction GaussianPolicy::mean(std::span<const double> obs) const {
  const auto out = mean_net_.forward(obs);
  return {out[0], out[1], out[2]};
}

double GaussianPolicy::log_prob(std::span<const double> obs, const NormalizedAction& raw) const {
  return gaussian_log_prob(raw, mean(obs), log_std_);
}

PolicySample GaussianPolicy::sample(std::span<const double> obs, Rng& rng, double d_max) const {
  const auto mu = mean(obs);
  PolicySample s;
  for (std::size_t i = 0; i < 3; ++i) s.raw[i] = mu[i] + std::exp(log_std_[i]) * standard_normal(rng);
  s.clamped = clamp_unit(s.raw);
  s.action = scale_action(s.clamped, d_max);
  s.log_prob = gaussian_log_prob(s.raw, mu, log_std_);
  return s;
}

ActionVector GaussianPolicy::act(std::span<const double> obs, double d_max) const {
  return scale_action(clamp_unit(mean(obs)), d_max);
}

bool GaussianPolicy::operator==(const GaussianPolicy& other) const {
  const auto a = mean_net_.params();
  const auto b = other.mean_net_.params();
  return mean_net_.dims() == other.mean_net_.dims() && log_std_ == other.log_std_ &&
         std::equal(a.begin(), a.end(), b.begin(), b.end());
}

Mlp make_value_net(std::size_t obs_dim, std::size_t hidden, std::size_t objectives) {
  return Mlp({obs_dim, hidden, hidden, objectives}, OutputActivation::Identity);
}

}  // namespace emorl
