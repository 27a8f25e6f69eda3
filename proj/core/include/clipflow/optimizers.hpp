#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "clipflow/clipping.hpp"
#include "clipflow/network.hpp"

namespace clipflow {

enum class OptimizerKind { kGd, kSgd, kAdam, kHeavyBall, kRmsprop, kSgld, kSgdJl };

OptimizerKind optimizer_from_string(const std::string& name);
std::string to_string(OptimizerKind k);

struct NoiseSpec {
  double sigma = 0.0;
  std::uint64_t seed = 0;
};

enum class SubsampleStrategy { kFullBatch, kPoisson, kFixedSize };

struct SubsampleSpec {
  SubsampleStrategy strategy = SubsampleStrategy::kFullBatch;
  double probability = 1.0;   // Poisson inclusion probability
  std::size_t batch_size = 0; // fixed-size draws
  std::uint64_t seed = 0;
};

// Deterministic given (spec.seed, step). Poisson includes each index
// independently; fixed-size draws uniformly without replacement. Indices
// come back ascending.
std::vector<std::size_t> subsample(const SubsampleSpec& spec, std::size_t n, std::uint64_t step);

// Mutable per-run optimizer state. Buffers are lazily sized to the
// parameter dimension on first use.
struct OptimizerState {
  OptimizerKind kind = OptimizerKind::kGd;
  long step = 0;
  Vector momentum;       // first-moment buffer (adam, heavy ball)
  Vector second_moment;  // squared-gradient buffer (adam, rmsprop)
  double beta1 = 0.9;
  double beta2 = 0.999;
  double xi = 1e-8;
  double hb_momentum = 0.9;
  double rmsprop_rho = 0.99;
  std::size_t jl_projections = 16;
  std::optional<double> sgld_prior_scale = 1.0;  // nullopt = flat prior

  void ensure_buffers(std::size_t param_count);
};

struct StepContext {
  LossKind loss = LossKind::kMse;
  ClipConfig clip;
  NoiseSpec noise;
  double eta = 0.01;
  std::uint64_t step = 0;       // keys the noise stream; never data-dependent
  std::size_t dataset_size = 0; // total n (sgld prior term)
};

struct StepStats {
  bool skipped = false;  // empty batch: no update performed
  ClipFactors factors;
  double clipped_sum_norm = 0.0;
};

// One descent step on the given subsample: w -= (eta/|I|)(clipped sum +
// sigma*R*z) with z drawn from the counter stream keyed by (seed, step).
// Layerwise scope scales the noise per layer block by its own bound.
// Mode kBatch runs the non-private mean-gradient baseline instead.
StepStats dp_sgd_step(Network& net, const Batch& batch, const StepContext& ctx);

StepStats dp_adam_step(Network& net, OptimizerState& state, const Batch& batch,
                       const StepContext& ctx);

StepStats dp_heavyball_step(Network& net, OptimizerState& state, const Batch& batch,
                            const StepContext& ctx);

StepStats dp_rmsprop_step(Network& net, OptimizerState& state, const Batch& batch,
                          const StepContext& ctx);

// Langevin step: w -= eta*(clipped_sum/|I| - grad_log_prior/n) + N(0, eta I).
// The resulting weights are a posterior sample, not a point estimate.
StepStats dp_sgld_step(Network& net, const Batch& batch, const StepContext& ctx,
                       std::optional<double> prior_scale);

// Estimates per-sample gradient norms with `projections` random inner
// products instead of exact norms; the clipped gradient still uses the
// exact per-sample gradient.
StepStats dp_sgd_jl_step(Network& net, const Batch& batch, const StepContext& ctx,
                         std::size_t projections);

// Norm estimates M_i = sqrt(mean_j (v_i . u_j)^2) used by the JL step;
// exposed for validation.
Vector jl_norm_estimates(const PerSampleGrads& grads, std::size_t projections,
                         std::uint64_t seed, std::uint64_t step);

// Dispatches on state.kind.
StepStats optimizer_step(Network& net, OptimizerState& state, const Batch& batch,
                         const StepContext& ctx);

}  // namespace clipflow
