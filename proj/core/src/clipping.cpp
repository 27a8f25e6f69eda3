#include "clipflow/clipping.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace clipflow {

namespace {

// min{1, bound/norm} with the zero-norm case pinned to 1: a zero vector is
// unaffected by any factor, and this avoids the 0/0 form.
double clip_factor(double norm, double bound) {
  if (norm <= bound) return 1.0;
  return bound / norm;
}

}  // namespace

ClipScope clip_scope_from_string(const std::string& s) {
  if (s == "flat") return ClipScope::kFlat;
  if (s == "layerwise") return ClipScope::kLayerwise;
  throw std::invalid_argument("unknown clip scope: " + s);
}

ClipMode clip_mode_from_string(const std::string& s) {
  if (s == "local") return ClipMode::kLocal;
  if (s == "global") return ClipMode::kGlobal;
  if (s == "none") return ClipMode::kNone;
  if (s == "batch") return ClipMode::kBatch;
  throw std::invalid_argument("unknown clip mode: " + s);
}

std::string to_string(ClipScope s) { return s == ClipScope::kFlat ? "flat" : "layerwise"; }

std::string to_string(ClipMode m) {
  switch (m) {
    case ClipMode::kLocal: return "local";
    case ClipMode::kGlobal: return "global";
    case ClipMode::kNone: return "none";
    case ClipMode::kBatch: return "batch";
  }
  return "none";
}

void ClipConfig::validate(std::size_t layer_count) const {
  if (mode == ClipMode::kNone) return;
  if (scope == ClipScope::kFlat) {
    if (!(flat_bound > 0.0)) throw std::invalid_argument("clip bound R must be positive");
  } else {
    if (layer_bounds.size() != layer_count) {
      throw std::invalid_argument("layerwise clip needs one bound per layer");
    }
    for (double b : layer_bounds) {
      if (!(b > 0.0)) throw std::invalid_argument("layerwise clip bounds must be positive");
    }
  }
}

double ClipFactors::min_factor() const {
  double m = 1.0;
  if (scope == ClipScope::kFlat) {
    for (double f : flat) m = std::min(m, f);
  } else {
    for (double f : layerwise.data()) m = std::min(m, f);
  }
  return m;
}

double ClipFactors::mean_factor() const {
  double s = 0.0;
  std::size_t count = 0;
  if (scope == ClipScope::kFlat) {
    for (double f : flat) s += f;
    count = flat.size();
  } else {
    for (double f : layerwise.data()) s += f;
    count = layerwise.data().size();
  }
  return count == 0 ? 1.0 : s / static_cast<double>(count);
}

ClipFactors local_flat_factors(const PerSampleGrads& grads, double bound) {
  if (!(bound > 0.0)) throw std::invalid_argument("clip bound must be positive");
  ClipFactors factors;
  factors.scope = ClipScope::kFlat;
  factors.flat.resize(grads.sample_count());
  for (std::size_t i = 0; i < grads.sample_count(); ++i) {
    factors.flat[i] = clip_factor(grads.sample_norm(i), bound);
  }
  return factors;
}

ClipFactors global_flat_factors(const PerSampleGrads& grads, double bound) {
  if (!(bound > 0.0)) throw std::invalid_argument("clip bound must be positive");
  double max_norm = 0.0;
  for (std::size_t i = 0; i < grads.sample_count(); ++i) {
    max_norm = std::max(max_norm, grads.sample_norm(i));
  }
  const double shared = clip_factor(max_norm, bound);
  ClipFactors factors;
  factors.scope = ClipScope::kFlat;
  factors.flat.assign(grads.sample_count(), shared);
  return factors;
}

ClipFactors local_layerwise_factors(const PerSampleGrads& grads,
                                    const std::vector<double>& bounds) {
  if (bounds.size() != grads.layer_count()) {
    throw std::invalid_argument("layerwise bounds length must equal layer count");
  }
  ClipFactors factors;
  factors.scope = ClipScope::kLayerwise;
  factors.layerwise = DenseMatrix(grads.sample_count(), bounds.size());
  for (std::size_t i = 0; i < grads.sample_count(); ++i) {
    for (std::size_t r = 0; r < bounds.size(); ++r) {
      if (!(bounds[r] > 0.0)) throw std::invalid_argument("clip bound must be positive");
      factors.layerwise(i, r) = clip_factor(grads.layer_norm(i, r), bounds[r]);
    }
  }
  return factors;
}

ClipFactors global_layerwise_factors(const PerSampleGrads& grads,
                                     const std::vector<double>& bounds) {
  if (bounds.size() != grads.layer_count()) {
    throw std::invalid_argument("layerwise bounds length must equal layer count");
  }
  ClipFactors factors;
  factors.scope = ClipScope::kLayerwise;
  factors.layerwise = DenseMatrix(grads.sample_count(), bounds.size());
  for (std::size_t r = 0; r < bounds.size(); ++r) {
    if (!(bounds[r] > 0.0)) throw std::invalid_argument("clip bound must be positive");
    double max_norm = 0.0;
    for (std::size_t i = 0; i < grads.sample_count(); ++i) {
      max_norm = std::max(max_norm, grads.layer_norm(i, r));
    }
    const double shared = clip_factor(max_norm, bounds[r]);
    for (std::size_t i = 0; i < grads.sample_count(); ++i) factors.layerwise(i, r) = shared;
  }
  return factors;
}

ClipFactors compute_factors(const PerSampleGrads& grads, const ClipConfig& config) {
  switch (config.mode) {
    case ClipMode::kNone: {
      ClipFactors factors;
      factors.scope = config.scope;
      if (config.scope == ClipScope::kFlat) {
        factors.flat.assign(grads.sample_count(), 1.0);
      } else {
        factors.layerwise = DenseMatrix(grads.sample_count(), grads.layer_count(), 1.0);
      }
      return factors;
    }
    case ClipMode::kLocal:
      return config.scope == ClipScope::kFlat
                 ? local_flat_factors(grads, config.flat_bound)
                 : local_layerwise_factors(grads, config.layer_bounds);
    case ClipMode::kGlobal:
      return config.scope == ClipScope::kFlat
                 ? global_flat_factors(grads, config.flat_bound)
                 : global_layerwise_factors(grads, config.layer_bounds);
    case ClipMode::kBatch:
      throw std::invalid_argument("batch clipping acts on the mean gradient, not per sample");
  }
  throw std::invalid_argument("unknown clip mode");
}

ClippedGrads apply_factors(const PerSampleGrads& grads, const ClipFactors& factors) {
  if (factors.sample_count() != grads.sample_count()) {
    throw std::invalid_argument("apply_factors: factor count does not match sample count");
  }
  ClippedGrads clipped;
  clipped.grads = grads;
  const std::size_t n = grads.sample_count();
  if (factors.scope == ClipScope::kFlat) {
    for (std::size_t i = 0; i < n; ++i) {
      const double f = factors.factor(i);
      for (double& v : clipped.grads.sample(i)) v *= f;
    }
  } else {
    if (factors.layerwise.cols() != grads.layer_count()) {
      throw std::invalid_argument("apply_factors: layer count mismatch");
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t r = 0; r < grads.layer_count(); ++r) {
        const double f = factors.factor(i, r);
        for (double& v : clipped.grads.layer_block(i, r)) v *= f;
      }
    }
  }
  clipped.summed.assign(grads.param_count(), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = clipped.grads.sample(i);
    for (std::size_t k = 0; k < row.size(); ++k) clipped.summed[k] += row[k];
  }
  return clipped;
}

Vector clipped_sum(const PerSampleGrads& grads, const ClipFactors& factors) {
  if (factors.sample_count() != grads.sample_count()) {
    throw std::invalid_argument("clipped_sum: factor count does not match sample count");
  }
  Vector sum(grads.param_count(), 0.0);
  const std::size_t n = grads.sample_count();
  if (factors.scope == ClipScope::kFlat) {
    for (std::size_t i = 0; i < n; ++i) {
      const double f = factors.factor(i);
      const auto row = grads.sample(i);
      for (std::size_t k = 0; k < row.size(); ++k) sum[k] += f * row[k];
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t r = 0; r < grads.layer_count(); ++r) {
        const double f = factors.factor(i, r);
        const auto block = grads.layer_block(i, r);
        const std::size_t base = grads.layer_offsets[r];
        for (std::size_t k = 0; k < block.size(); ++k) sum[base + k] += f * block[k];
      }
    }
  }
  return sum;
}

Vector batch_clip(const Vector& mean_grad, double bound) {
  if (!(bound > 0.0)) throw std::invalid_argument("batch clip bound must be positive");
  const double factor = clip_factor(l2_norm(mean_grad), bound);
  Vector out = mean_grad;
  for (double& v : out) v *= factor;
  return out;
}

}  // namespace clipflow
