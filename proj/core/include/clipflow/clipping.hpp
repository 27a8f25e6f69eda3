#pragma once

#include <string>
#include <vector>

#include "clipflow/network.hpp"

namespace clipflow {

enum class ClipScope { kFlat, kLayerwise };
// kLocal: each sample gets its own factor. kGlobal: the whole batch shares
// the smallest local factor, preserving gradient directions. kNone: no
// clipping (no sensitivity bound). kBatch: clip the averaged gradient,
// the non-private baseline.
enum class ClipMode { kLocal, kGlobal, kNone, kBatch };

ClipScope clip_scope_from_string(const std::string& s);
ClipMode clip_mode_from_string(const std::string& s);
std::string to_string(ClipScope s);
std::string to_string(ClipMode m);

struct ClipConfig {
  ClipScope scope = ClipScope::kFlat;
  ClipMode mode = ClipMode::kNone;
  double flat_bound = 1.0;                // R (also R' for batch mode)
  std::vector<double> layer_bounds;       // R_r, one per layer for layerwise scope

  void validate(std::size_t layer_count) const;
};

// Per-sample clipping factors, all in (0, 1]. Flat scope fills `flat`
// (one factor per sample); layerwise fills `layerwise` (sample-major,
// layer_count factors per sample).
struct ClipFactors {
  ClipScope scope = ClipScope::kFlat;
  std::vector<double> flat;
  DenseMatrix layerwise;  // n x layer_count

  double factor(std::size_t sample) const { return flat[sample]; }
  double factor(std::size_t sample, std::size_t layer) const { return layerwise(sample, layer); }
  std::size_t sample_count() const {
    return scope == ClipScope::kFlat ? flat.size() : layerwise.rows();
  }
  double min_factor() const;
  double mean_factor() const;
};

// factor_i = min(1, bound / |grad_i|); zero-norm gradients get factor 1.
ClipFactors local_flat_factors(const PerSampleGrads& grads, double bound);

// One shared factor min(1, bound / max_i |grad_i|) = min_i local factor.
ClipFactors global_flat_factors(const PerSampleGrads& grads, double bound);

ClipFactors local_layerwise_factors(const PerSampleGrads& grads,
                                    const std::vector<double>& bounds);

ClipFactors global_layerwise_factors(const PerSampleGrads& grads,
                                     const std::vector<double>& bounds);

// Factors for any config; mode kNone yields all-ones, mode kBatch is not a
// per-sample operation and is rejected here.
ClipFactors compute_factors(const PerSampleGrads& grads, const ClipConfig& config);

struct ClippedGrads {
  PerSampleGrads grads;   // scaled copies
  Vector summed;          // sum of clipped gradients, ascending sample order
};

// Scales each sample (flat) or each layer block (layerwise) by its factor
// and sums in ascending sample index.
ClippedGrads apply_factors(const PerSampleGrads& grads, const ClipFactors& factors);

// Sum of clipped per-sample gradients without materializing the scaled
// copies.
Vector clipped_sum(const PerSampleGrads& grads, const ClipFactors& factors);

// Non-private baseline: mean_grad * min(1, bound / |mean_grad|).
Vector batch_clip(const Vector& mean_grad, double bound);

}  // namespace clipflow
