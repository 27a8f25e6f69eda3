#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "clipflow/clipping.hpp"
#include "clipflow/network.hpp"

namespace clipflow {

enum class FlowKind { kGd, kHeavyBall, kNag, kAdam, kAdagradRmsprop };

FlowKind flow_kind_from_string(const std::string& name);
std::string to_string(FlowKind k);

// Continuous-time state: weights plus the auxiliary buffers of the
// momentum/adaptive systems.
struct FlowState {
  FlowKind kind = FlowKind::kGd;
  Vector weights;
  Vector momentum;       // m(t)
  Vector second_moment;  // v(t)
  double time = 0.0;
};

struct FlowParams {
  ClipConfig clip;
  LossKind loss = LossKind::kMse;
  double friction = 1.0;      // heavy ball: r(t) = friction; NAG uses 3/t
  double adam_alpha1 = 1.0;
  double adam_alpha2 = 1.0;
  double adam_xi = 1e-8;
  double adaptive_p = 1.0;    // ADAGRAD: p = 1, q = 0; RMSprop-like: p = q = 1
  double adaptive_q = 1.0;
  double adaptive_xi = 1e-8;
};

// Time derivative of the state. Clip factors are recomputed from the
// instantaneous per-sample gradients at the state's weights.
FlowState flow_rhs(const FlowState& state, const Network& architecture, const Batch& batch,
                   const FlowParams& params);

struct TrajectoryPoint {
  double time = 0.0;
  Vector weights;
  double loss = 0.0;
};

struct Trajectory {
  std::vector<TrajectoryPoint> points;  // includes the initial state
  FlowState final_state;
  bool aborted = false;  // non-finite state encountered; final_state is last good
};

// Generic fixed-step RK4 on a flat state vector.
using OdeRhs = std::function<Vector(double, const Vector&)>;
Trajectory rk4_integrate(const OdeRhs& rhs, Vector initial, double t0, double horizon, double dt,
                         const std::function<double(const Vector&)>& loss_of = nullptr);

// RK4 on the flow system; records (t, w, L) at every step.
Trajectory integrate_flow(FlowState initial, const Network& architecture, const Batch& batch,
                          const FlowParams& params, double horizon, double dt);

struct CertaintyEquivalenceConfig {
  Network net;  // initial weights shared by every run
  Batch batch;
  LossKind loss = LossKind::kMse;
  ClipConfig clip;
  std::vector<double> etas;  // strictly decreasing
  double sigma = 1.0;
  std::vector<std::uint64_t> seeds;
  double horizon = 1.0;
  double flow_dt_divisor = 10.0;  // flow dt = min(etas) / divisor
};

struct CeRow {
  double eta = 0.0;
  std::uint64_t seed = 0;
  double distance = 0.0;  // |w_discrete(T) - w_flow(T)|
  double flow_loss = 0.0;
  double discrete_loss = 0.0;
  bool excluded = false;  // diverged at this eta
};

struct CeStudy {
  std::vector<CeRow> rows;
  std::vector<double> etas;
  std::vector<double> mean_distance;      // per eta, over non-excluded seeds
  std::vector<Vector> mean_endpoint;      // per eta, mean discrete endpoint
  Vector flow_endpoint;
  double flow_loss = 0.0;
  bool strictly_decreasing = false;
  double final_over_first = 0.0;
  std::size_t excluded_runs = 0;
};

// Runs noisy discrete descent at each step size against the single
// noise-free flow limit and tabulates endpoint distances.
CeStudy certainty_equivalence_study(const CertaintyEquivalenceConfig& config);

struct StationaryReport {
  double clipped_grad_norm = 0.0;  // |sum_i grad_i * C_i|
  double output_grad_norm = 0.0;   // |d mean-loss / d predictions|
  double loss = 0.0;
  bool stationary = false;
  bool zero_loss = false;
};

// Diagnostics at a candidate stationary point; callers assert on the flags
// only when `stationary` holds.
StationaryReport stationary_point_check(const Network& net, const Batch& batch, LossKind loss,
                                        const ClipConfig& clip, double stationary_threshold = 1e-6,
                                        double loss_floor = 1e-6);

}  // namespace clipflow
