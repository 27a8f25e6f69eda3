#include "clipflow/optimizers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "clipflow/rng.hpp"

namespace clipflow {

namespace {

// Clipped-and-noised gradient sum over the batch. The noise vector depends
// only on (seed, step, coordinate), so paired runs that differ in clip mode
// consume identical noise. Scope layerwise scales noise per layer bound.
struct NoisySum {
  Vector sum;  // clipped sum + sigma * bound * z
  ClipFactors factors;
};

NoisySum noisy_clipped_sum(const Network& net, const PerSampleGrads& grads,
                           const StepContext& ctx) {
  NoisySum result;
  result.factors = compute_factors(grads, ctx.clip);
  result.sum = clipped_sum(grads, result.factors);
  if (ctx.noise.sigma > 0.0) {
    const CounterRng rng(ctx.noise.seed, StreamSalt::kGradientNoise, ctx.step);
    if (ctx.clip.scope == ClipScope::kFlat) {
      const double scale = ctx.noise.sigma * ctx.clip.flat_bound;
      for (std::size_t k = 0; k < result.sum.size(); ++k) {
        result.sum[k] += scale * rng.gaussian(k);
      }
    } else {
      const auto& offsets = net.layer_offsets();
      for (std::size_t r = 0; r + 1 < offsets.size(); ++r) {
        const double scale = ctx.noise.sigma * ctx.clip.layer_bounds[r];
        for (std::size_t k = offsets[r]; k < offsets[r + 1]; ++k) {
          result.sum[k] += scale * rng.gaussian(k);
        }
      }
    }
  }
  return result;
}

StepStats batch_baseline_step(Network& net, const Batch& batch, const StepContext& ctx) {
  const PerSampleGrads grads = per_sample_grads(net, batch, ctx.loss);
  const Vector mean = mean_gradient(grads);
  const Vector clipped = batch_clip(mean, ctx.clip.flat_bound);
  auto params = net.params();
  for (std::size_t k = 0; k < params.size(); ++k) params[k] -= ctx.eta * clipped[k];
  StepStats stats;
  stats.factors.scope = ClipScope::kFlat;
  stats.factors.flat.assign(batch.size(), l2_norm(mean) <= ctx.clip.flat_bound
                                              ? 1.0
                                              : ctx.clip.flat_bound / l2_norm(mean));
  stats.clipped_sum_norm = l2_norm(clipped);
  return stats;
}

StepStats make_skipped() {
  StepStats stats;
  stats.skipped = true;
  return stats;
}

}  // namespace

OptimizerKind optimizer_from_string(const std::string& name) {
  if (name == "gd") return OptimizerKind::kGd;
  if (name == "sgd") return OptimizerKind::kSgd;
  if (name == "adam") return OptimizerKind::kAdam;
  if (name == "heavyball") return OptimizerKind::kHeavyBall;
  if (name == "rmsprop") return OptimizerKind::kRmsprop;
  if (name == "sgld") return OptimizerKind::kSgld;
  if (name == "sgd_jl") return OptimizerKind::kSgdJl;
  throw std::invalid_argument("unknown optimizer: " + name);
}

std::string to_string(OptimizerKind k) {
  switch (k) {
    case OptimizerKind::kGd: return "gd";
    case OptimizerKind::kSgd: return "sgd";
    case OptimizerKind::kAdam: return "adam";
    case OptimizerKind::kHeavyBall: return "heavyball";
    case OptimizerKind::kRmsprop: return "rmsprop";
    case OptimizerKind::kSgld: return "sgld";
    case OptimizerKind::kSgdJl: return "sgd_jl";
  }
  return "gd";
}

std::vector<std::size_t> subsample(const SubsampleSpec& spec, std::size_t n, std::uint64_t step) {
  if (n == 0) throw std::invalid_argument("subsample: empty dataset");
  switch (spec.strategy) {
    case SubsampleStrategy::kFullBatch: {
      std::vector<std::size_t> all(n);
      std::iota(all.begin(), all.end(), 0);
      return all;
    }
    case SubsampleStrategy::kPoisson: {
      if (!(spec.probability > 0.0 && spec.probability <= 1.0)) {
        throw std::invalid_argument("subsample: poisson probability must be in (0,1]");
      }
      const CounterRng rng(spec.seed, StreamSalt::kSubsample, step);
      std::vector<std::size_t> picked;
      for (std::size_t i = 0; i < n; ++i) {
        if (rng.uniform(i) < spec.probability) picked.push_back(i);
      }
      return picked;
    }
    case SubsampleStrategy::kFixedSize: {
      if (spec.batch_size == 0 || spec.batch_size > n) {
        throw std::invalid_argument("subsample: fixed batch size must be in [1, n]");
      }
      // Partial Fisher-Yates over the index array, then ascending order for
      // the deterministic-reduction contract.
      std::vector<std::size_t> perm(n);
      std::iota(perm.begin(), perm.end(), 0);
      const CounterRng rng(spec.seed, StreamSalt::kSubsample, step);
      for (std::size_t j = 0; j < spec.batch_size; ++j) {
        const std::size_t pick = j + rng.uniform_index(j, n - j);
        std::swap(perm[j], perm[pick]);
      }
      std::vector<std::size_t> out(perm.begin(), perm.begin() + spec.batch_size);
      std::sort(out.begin(), out.end());
      return out;
    }
  }
  throw std::invalid_argument("subsample: unknown strategy");
}

void OptimizerState::ensure_buffers(std::size_t param_count) {
  if (momentum.size() != param_count) momentum.assign(param_count, 0.0);
  if (second_moment.size() != param_count) second_moment.assign(param_count, 0.0);
}

StepStats dp_sgd_step(Network& net, const Batch& batch, const StepContext& ctx) {
  if (batch.size() == 0) return make_skipped();
  if (!(ctx.eta > 0.0)) throw std::invalid_argument("dp_sgd_step: eta must be positive");
  ctx.clip.validate(net.layer_count());
  if (ctx.clip.mode == ClipMode::kBatch) return batch_baseline_step(net, batch, ctx);

  const PerSampleGrads grads = per_sample_grads(net, batch, ctx.loss);
  NoisySum noisy = noisy_clipped_sum(net, grads, ctx);
  const double scale = ctx.eta / static_cast<double>(batch.size());
  auto params = net.params();
  for (std::size_t k = 0; k < params.size(); ++k) params[k] -= scale * noisy.sum[k];

  StepStats stats;
  stats.factors = std::move(noisy.factors);
  stats.clipped_sum_norm = l2_norm(noisy.sum);
  return stats;
}

StepStats dp_adam_step(Network& net, OptimizerState& state, const Batch& batch,
                       const StepContext& ctx) {
  if (batch.size() == 0) return make_skipped();
  if (state.kind != OptimizerKind::kAdam) throw std::invalid_argument("state.kind must be adam");
  if (!(state.xi > 0.0)) throw std::invalid_argument("adam: xi must be positive");
  ctx.clip.validate(net.layer_count());
  state.ensure_buffers(net.param_count());

  const PerSampleGrads grads = per_sample_grads(net, batch, ctx.loss);
  NoisySum noisy = noisy_clipped_sum(net, grads, ctx);
  const double inv = 1.0 / static_cast<double>(batch.size());
  auto params = net.params();
  // No bias correction: the recursion is used exactly as given.
  for (std::size_t k = 0; k < params.size(); ++k) {
    const double g = inv * noisy.sum[k];
    state.momentum[k] = state.beta1 * state.momentum[k] + (1.0 - state.beta1) * g;
    state.second_moment[k] = state.beta2 * state.second_moment[k] + (1.0 - state.beta2) * g * g;
    params[k] -= ctx.eta * state.momentum[k] / (std::sqrt(state.second_moment[k]) + state.xi);
  }
  ++state.step;

  StepStats stats;
  stats.factors = std::move(noisy.factors);
  stats.clipped_sum_norm = l2_norm(noisy.sum);
  return stats;
}

StepStats dp_heavyball_step(Network& net, OptimizerState& state, const Batch& batch,
                            const StepContext& ctx) {
  if (batch.size() == 0) return make_skipped();
  ctx.clip.validate(net.layer_count());
  state.ensure_buffers(net.param_count());

  const PerSampleGrads grads = per_sample_grads(net, batch, ctx.loss);
  NoisySum noisy = noisy_clipped_sum(net, grads, ctx);
  const double inv = 1.0 / static_cast<double>(batch.size());
  auto params = net.params();
  for (std::size_t k = 0; k < params.size(); ++k) {
    const double g = inv * noisy.sum[k];
    state.momentum[k] = state.hb_momentum * state.momentum[k] + g;
    params[k] -= ctx.eta * state.momentum[k];
  }
  ++state.step;

  StepStats stats;
  stats.factors = std::move(noisy.factors);
  stats.clipped_sum_norm = l2_norm(noisy.sum);
  return stats;
}

StepStats dp_rmsprop_step(Network& net, OptimizerState& state, const Batch& batch,
                          const StepContext& ctx) {
  if (batch.size() == 0) return make_skipped();
  if (!(state.xi > 0.0)) throw std::invalid_argument("rmsprop: xi must be positive");
  ctx.clip.validate(net.layer_count());
  state.ensure_buffers(net.param_count());

  const PerSampleGrads grads = per_sample_grads(net, batch, ctx.loss);
  NoisySum noisy = noisy_clipped_sum(net, grads, ctx);
  const double inv = 1.0 / static_cast<double>(batch.size());
  auto params = net.params();
  for (std::size_t k = 0; k < params.size(); ++k) {
    const double g = inv * noisy.sum[k];
    state.second_moment[k] =
        state.rmsprop_rho * state.second_moment[k] + (1.0 - state.rmsprop_rho) * g * g;
    params[k] -= ctx.eta * g / std::sqrt(state.second_moment[k] + state.xi);
  }
  ++state.step;

  StepStats stats;
  stats.factors = std::move(noisy.factors);
  stats.clipped_sum_norm = l2_norm(noisy.sum);
  return stats;
}

StepStats dp_sgld_step(Network& net, const Batch& batch, const StepContext& ctx,
                       std::optional<double> prior_scale) {
  if (batch.size() == 0) return make_skipped();
  if (!(ctx.eta > 0.0)) throw std::invalid_argument("dp_sgld_step: eta must be positive");
  if (ctx.dataset_size == 0) throw std::invalid_argument("dp_sgld_step: dataset size required");
  ctx.clip.validate(net.layer_count());

  const PerSampleGrads grads = per_sample_grads(net, batch, ctx.loss);
  const ClipFactors factors = compute_factors(grads, ctx.clip);
  const Vector summed = clipped_sum(grads, factors);
  const double inv_batch = 1.0 / static_cast<double>(batch.size());
  const double inv_n = 1.0 / static_cast<double>(ctx.dataset_size);
  const double noise_scale = std::sqrt(ctx.eta);
  const CounterRng rng(ctx.noise.seed, StreamSalt::kSgldNoise, ctx.step);
  auto params = net.params();
  for (std::size_t k = 0; k < params.size(); ++k) {
    // Gaussian prior: grad log p(w) = -w / s^2; flat prior contributes 0.
    const double prior_grad =
        prior_scale ? -params[k] / (*prior_scale * *prior_scale) : 0.0;
    const double drift = summed[k] * inv_batch - prior_grad * inv_n;
    params[k] += -ctx.eta * drift + noise_scale * rng.gaussian(k);
  }

  StepStats stats;
  stats.factors = factors;
  stats.clipped_sum_norm = l2_norm(summed);
  return stats;
}

Vector jl_norm_estimates(const PerSampleGrads& grads, std::size_t projections,
                         std::uint64_t seed, std::uint64_t step) {
  if (projections == 0) throw std::invalid_argument("jl_norm_estimates: need at least 1 projection");
  const std::size_t n = grads.sample_count();
  const std::size_t p = grads.param_count();
  const CounterRng rng(seed, StreamSalt::kJlProjection, step);
  Vector estimates(n, 0.0);
  Vector direction(p);
  for (std::size_t j = 0; j < projections; ++j) {
    for (std::size_t k = 0; k < p; ++k) direction[k] = rng.gaussian(j * p + k);
    for (std::size_t i = 0; i < n; ++i) {
      const double proj = dot(grads.sample(i), direction);
      estimates[i] += proj * proj;
    }
  }
  const double inv_r = 1.0 / static_cast<double>(projections);
  for (double& e : estimates) e = std::sqrt(e * inv_r);
  return estimates;
}

StepStats dp_sgd_jl_step(Network& net, const Batch& batch, const StepContext& ctx,
                         std::size_t projections) {
  if (batch.size() == 0) return make_skipped();
  if (projections == 0) throw std::invalid_argument("dp_sgd_jl_step: projections must be >= 1");
  if (ctx.clip.scope != ClipScope::kFlat) {
    throw std::invalid_argument("dp_sgd_jl_step: flat clipping only");
  }
  ctx.clip.validate(net.layer_count());

  const PerSampleGrads grads = per_sample_grads(net, batch, ctx.loss);
  const Vector estimates = jl_norm_estimates(grads, projections, ctx.noise.seed, ctx.step);

  ClipFactors factors;
  factors.scope = ClipScope::kFlat;
  factors.flat.resize(batch.size());
  if (ctx.clip.mode == ClipMode::kGlobal) {
    const double max_est = *std::max_element(estimates.begin(), estimates.end());
    const double shared = max_est <= ctx.clip.flat_bound ? 1.0 : ctx.clip.flat_bound / max_est;
    std::fill(factors.flat.begin(), factors.flat.end(), shared);
  } else {
    for (std::size_t i = 0; i < batch.size(); ++i) {
      factors.flat[i] =
          estimates[i] <= ctx.clip.flat_bound ? 1.0 : ctx.clip.flat_bound / estimates[i];
    }
  }

  // The scaled gradient uses the exact per-sample gradients; only the norm
  // in the factor is estimated.
  Vector summed = clipped_sum(grads, factors);
  if (ctx.noise.sigma > 0.0) {
    const CounterRng rng(ctx.noise.seed, StreamSalt::kGradientNoise, ctx.step);
    const double scale = ctx.noise.sigma * ctx.clip.flat_bound;
    for (std::size_t k = 0; k < summed.size(); ++k) summed[k] += scale * rng.gaussian(k);
  }
  const double scale = ctx.eta / static_cast<double>(batch.size());
  auto params = net.params();
  for (std::size_t k = 0; k < params.size(); ++k) params[k] -= scale * summed[k];

  StepStats stats;
  stats.factors = std::move(factors);
  stats.clipped_sum_norm = l2_norm(summed);
  return stats;
}

StepStats optimizer_step(Network& net, OptimizerState& state, const Batch& batch,
                         const StepContext& ctx) {
  switch (state.kind) {
    case OptimizerKind::kGd:
    case OptimizerKind::kSgd: {
      StepStats stats = dp_sgd_step(net, batch, ctx);
      if (!stats.skipped) ++state.step;
      return stats;
    }
    case OptimizerKind::kAdam: return dp_adam_step(net, state, batch, ctx);
    case OptimizerKind::kHeavyBall: return dp_heavyball_step(net, state, batch, ctx);
    case OptimizerKind::kRmsprop: return dp_rmsprop_step(net, state, batch, ctx);
    case OptimizerKind::kSgld: {
      StepStats stats = dp_sgld_step(net, batch, ctx, state.sgld_prior_scale);
      if (!stats.skipped) ++state.step;
      return stats;
    }
    case OptimizerKind::kSgdJl: {
      StepStats stats = dp_sgd_jl_step(net, batch, ctx, state.jl_projections);
      if (!stats.skipped) ++state.step;
      return stats;
    }
  }
  throw std::invalid_argument("unknown optimizer kind");
}

}  // namespace clipflow
