#include "clipflow/flow.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "clipflow/optimizers.hpp"

namespace clipflow {

namespace {

bool finite(const Vector& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

// Instantaneous clipped gradient sum at the given weights.
Vector clipped_sum_at(const Network& architecture, const Batch& batch, const FlowParams& params,
                      const Vector& weights) {
  Network net = architecture;
  net.set_params(weights);
  const PerSampleGrads grads = per_sample_grads(net, batch, params.loss);
  const ClipFactors factors = compute_factors(grads, params.clip);
  return clipped_sum(grads, factors);
}

std::size_t state_size(const FlowState& s) {
  switch (s.kind) {
    case FlowKind::kGd: return s.weights.size();
    case FlowKind::kHeavyBall:
    case FlowKind::kNag: return 2 * s.weights.size();
    case FlowKind::kAdam: return 3 * s.weights.size();
    case FlowKind::kAdagradRmsprop: return 2 * s.weights.size();
  }
  return s.weights.size();
}

Vector pack(const FlowState& s) {
  Vector flat;
  flat.reserve(state_size(s));
  flat.insert(flat.end(), s.weights.begin(), s.weights.end());
  if (s.kind == FlowKind::kHeavyBall || s.kind == FlowKind::kNag || s.kind == FlowKind::kAdam) {
    flat.insert(flat.end(), s.momentum.begin(), s.momentum.end());
  }
  if (s.kind == FlowKind::kAdam || s.kind == FlowKind::kAdagradRmsprop) {
    flat.insert(flat.end(), s.second_moment.begin(), s.second_moment.end());
  }
  return flat;
}

FlowState unpack(const FlowState& like, const Vector& flat) {
  FlowState s = like;
  const std::size_t p = like.weights.size();
  s.weights.assign(flat.begin(), flat.begin() + p);
  std::size_t off = p;
  if (like.kind == FlowKind::kHeavyBall || like.kind == FlowKind::kNag ||
      like.kind == FlowKind::kAdam) {
    s.momentum.assign(flat.begin() + off, flat.begin() + off + p);
    off += p;
  }
  if (like.kind == FlowKind::kAdam || like.kind == FlowKind::kAdagradRmsprop) {
    s.second_moment.assign(flat.begin() + off, flat.begin() + off + p);
  }
  return s;
}

}  // namespace

FlowKind flow_kind_from_string(const std::string& name) {
  if (name == "gd") return FlowKind::kGd;
  if (name == "heavyball") return FlowKind::kHeavyBall;
  if (name == "nag") return FlowKind::kNag;
  if (name == "adam") return FlowKind::kAdam;
  if (name == "adagrad_rmsprop") return FlowKind::kAdagradRmsprop;
  throw std::invalid_argument("unknown flow kind: " + name);
}

std::string to_string(FlowKind k) {
  switch (k) {
    case FlowKind::kGd: return "gd";
    case FlowKind::kHeavyBall: return "heavyball";
    case FlowKind::kNag: return "nag";
    case FlowKind::kAdam: return "adam";
    case FlowKind::kAdagradRmsprop: return "adagrad_rmsprop";
  }
  return "gd";
}

FlowState flow_rhs(const FlowState& state, const Network& architecture, const Batch& batch,
                   const FlowParams& params) {
  const std::size_t p = state.weights.size();
  const double n = static_cast<double>(batch.size());
  FlowState deriv = state;
  deriv.time = 1.0;

  const Vector grad_sum = clipped_sum_at(architecture, batch, params, state.weights);

  switch (state.kind) {
    case FlowKind::kGd: {
      for (std::size_t k = 0; k < p; ++k) deriv.weights[k] = -grad_sum[k] / n;
      return deriv;
    }
    case FlowKind::kHeavyBall:
    case FlowKind::kNag: {
      const double friction =
          state.kind == FlowKind::kNag ? 3.0 / state.time : params.friction;
      if (state.kind == FlowKind::kNag && !(state.time > 0.0)) {
        throw std::invalid_argument("nag flow: friction 3/t is singular at t = 0; start at t0 > 0");
      }
      for (std::size_t k = 0; k < p; ++k) {
        deriv.weights[k] = -state.momentum[k];
        deriv.momentum[k] = grad_sum[k] - friction * state.momentum[k];
      }
      return deriv;
    }
    case FlowKind::kAdam: {
      for (std::size_t k = 0; k < p; ++k) {
        deriv.weights[k] =
            -state.momentum[k] / std::sqrt(state.second_moment[k] + params.adam_xi);
        deriv.momentum[k] = grad_sum[k] - state.momentum[k] / params.adam_alpha1;
        deriv.second_moment[k] =
            (grad_sum[k] * grad_sum[k] - state.second_moment[k]) / params.adam_alpha2;
      }
      return deriv;
    }
    case FlowKind::kAdagradRmsprop: {
      for (std::size_t k = 0; k < p; ++k) {
        deriv.weights[k] = -grad_sum[k] / std::sqrt(state.second_moment[k] + params.adaptive_xi);
        deriv.second_moment[k] =
            params.adaptive_p * grad_sum[k] * grad_sum[k] - params.adaptive_q * state.second_moment[k];
      }
      return deriv;
    }
  }
  throw std::invalid_argument("unknown flow kind");
}

Trajectory rk4_integrate(const OdeRhs& rhs, Vector initial, double t0, double horizon, double dt,
                         const std::function<double(const Vector&)>& loss_of) {
  if (!(dt > 0.0)) throw std::invalid_argument("rk4_integrate: dt must be positive");
  if (horizon < 0.0) throw std::invalid_argument("rk4_integrate: nonnegative horizon required");

  Trajectory traj;
  Vector y = std::move(initial);
  double t = t0;
  auto record = [&]() {
    TrajectoryPoint pt;
    pt.time = t;
    pt.weights = y;
    pt.loss = loss_of ? loss_of(y) : 0.0;
    traj.points.push_back(std::move(pt));
  };
  record();

  const long steps = std::lround(horizon / dt);
  for (long s = 0; s < steps; ++s) {
    const Vector k1 = rhs(t, y);
    Vector y2(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) y2[i] = y[i] + 0.5 * dt * k1[i];
    const Vector k2 = rhs(t + 0.5 * dt, y2);
    Vector y3(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) y3[i] = y[i] + 0.5 * dt * k2[i];
    const Vector k3 = rhs(t + 0.5 * dt, y3);
    Vector y4(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) y4[i] = y[i] + dt * k3[i];
    const Vector k4 = rhs(t + dt, y4);

    Vector next(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
      next[i] = y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    if (!finite(next)) {
      traj.aborted = true;
      break;
    }
    y = std::move(next);
    t += dt;
    record();
  }
  traj.final_state.weights = y;
  traj.final_state.time = t;
  return traj;
}

Trajectory integrate_flow(FlowState initial, const Network& architecture, const Batch& batch,
                          const FlowParams& params, double horizon, double dt) {
  const std::size_t p = initial.weights.size();
  if (p != architecture.param_count()) {
    throw std::invalid_argument("integrate_flow: state size does not match architecture");
  }
  if (initial.kind == FlowKind::kNag && !(initial.time > 0.0)) {
    throw std::invalid_argument("nag flow must start at t0 > 0");
  }
  initial.momentum.resize(p, 0.0);
  initial.second_moment.resize(p, 0.0);

  const FlowState shape = initial;
  auto rhs = [&](double t, const Vector& flat) {
    FlowState s = unpack(shape, flat);
    s.time = t;
    return pack(flow_rhs(s, architecture, batch, params));
  };
  auto loss_of = [&](const Vector& flat) {
    Network net = architecture;
    net.set_params(std::span<const double>(flat.data(), p));
    return mean_loss(net, batch, params.loss);
  };

  Trajectory traj = rk4_integrate(rhs, pack(initial), initial.time, horizon, dt, loss_of);
  // Trim trajectory weights to the weight block only.
  for (auto& pt : traj.points) pt.weights.resize(p);
  FlowState final_state = unpack(shape, pack(shape));
  if (!traj.points.empty()) {
    Vector flat = traj.final_state.weights;
    flat.resize(state_size(shape), 0.0);
    final_state = unpack(shape, flat);
    final_state.time = traj.final_state.time;
  }
  traj.final_state = std::move(final_state);
  return traj;
}

CeStudy certainty_equivalence_study(const CertaintyEquivalenceConfig& config) {
  if (config.etas.size() < 2) {
    throw std::invalid_argument("certainty_equivalence_study: need at least two step sizes");
  }
  for (std::size_t i = 1; i < config.etas.size(); ++i) {
    if (!(config.etas[i] < config.etas[i - 1])) {
      throw std::invalid_argument("certainty_equivalence_study: etas must strictly decrease");
    }
  }
  if (config.seeds.empty()) throw std::invalid_argument("certainty_equivalence_study: no seeds");

  CeStudy study;
  study.etas = config.etas;

  // One noise-free flow endpoint serves every (eta, sigma, seed) run.
  FlowParams params;
  params.clip = config.clip;
  params.loss = config.loss;
  FlowState init;
  init.kind = FlowKind::kGd;
  init.weights.assign(config.net.params().begin(), config.net.params().end());
  const double flow_dt = config.etas.back() / config.flow_dt_divisor;
  const Trajectory flow = integrate_flow(init, config.net, config.batch, params, config.horizon,
                                         flow_dt);
  study.flow_endpoint = flow.final_state.weights;
  {
    Network net = config.net;
    net.set_params(study.flow_endpoint);
    study.flow_loss = mean_loss(net, config.batch, config.loss);
  }

  for (double eta : config.etas) {
    const long steps = std::lround(config.horizon / eta);
    double distance_acc = 0.0;
    std::size_t used = 0;
    Vector endpoint_mean(study.flow_endpoint.size(), 0.0);
    for (std::uint64_t seed : config.seeds) {
      Network net = config.net;
      StepContext ctx;
      ctx.loss = config.loss;
      ctx.clip = config.clip;
      ctx.noise.sigma = config.sigma;
      ctx.noise.seed = seed;
      ctx.eta = eta;
      bool diverged = false;
      for (long s = 0; s < steps; ++s) {
        ctx.step = static_cast<std::uint64_t>(s);
        dp_sgd_step(net, config.batch, ctx);
        if (!net.all_finite()) {
          diverged = true;
          break;
        }
      }
      CeRow row;
      row.eta = eta;
      row.seed = seed;
      row.excluded = diverged;
      if (!diverged) {
        double dist_sq = 0.0;
        const auto w = net.params();
        for (std::size_t k = 0; k < w.size(); ++k) {
          const double d = w[k] - study.flow_endpoint[k];
          dist_sq += d * d;
        }
        row.distance = std::sqrt(dist_sq);
        row.flow_loss = study.flow_loss;
        row.discrete_loss = mean_loss(net, config.batch, config.loss);
        distance_acc += row.distance;
        for (std::size_t k = 0; k < w.size(); ++k) endpoint_mean[k] += w[k];
        ++used;
      } else {
        ++study.excluded_runs;
      }
      study.rows.push_back(std::move(row));
    }
    study.mean_distance.push_back(used > 0 ? distance_acc / static_cast<double>(used)
                                           : std::numeric_limits<double>::quiet_NaN());
    if (used > 0) {
      for (double& v : endpoint_mean) v /= static_cast<double>(used);
    }
    study.mean_endpoint.push_back(std::move(endpoint_mean));
  }

  study.strictly_decreasing = true;
  for (std::size_t i = 1; i < study.mean_distance.size(); ++i) {
    if (!(study.mean_distance[i] < study.mean_distance[i - 1])) study.strictly_decreasing = false;
  }
  study.final_over_first = study.mean_distance.back() / study.mean_distance.front();
  return study;
}

StationaryReport stationary_point_check(const Network& net, const Batch& batch, LossKind loss,
                                        const ClipConfig& clip, double stationary_threshold,
                                        double loss_floor) {
  const PerSampleGrads grads = per_sample_grads(net, batch, loss);
  const ClipFactors factors = compute_factors(grads, clip);
  const Vector summed = clipped_sum(grads, factors);

  StationaryReport report;
  report.clipped_grad_norm = l2_norm(summed);

  const DenseMatrix logits = forward(net, batch);
  double out_grad_sq = 0.0;
  if (loss == LossKind::kMse) {
    for (std::size_t i = 0; i < logits.rows(); ++i) {
      for (std::size_t k = 0; k < logits.cols(); ++k) {
        const double g = 2.0 * (logits(i, k) - batch.targets(i, k));
        out_grad_sq += g * g;
      }
    }
  } else {
    const DenseMatrix probs = softmax_probabilities(logits);
    for (std::size_t i = 0; i < logits.rows(); ++i) {
      for (std::size_t k = 0; k < logits.cols(); ++k) {
        const double g = probs(i, k) - batch.targets(i, k);
        out_grad_sq += g * g;
      }
    }
  }
  report.output_grad_norm = std::sqrt(out_grad_sq);

  double total = 0.0;
  const Vector losses = per_sample_losses(logits, batch.targets, loss);
  for (double l : losses) total += l;
  report.loss = total / static_cast<double>(losses.size());

  report.stationary = report.clipped_grad_norm < stationary_threshold;
  report.zero_loss = report.loss < loss_floor;
  return report;
}

}  // namespace clipflow
