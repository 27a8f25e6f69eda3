#pragma once

#include <string>
#include <vector>

#include "clipflow/clipping.hpp"
#include "clipflow/network.hpp"
#include "clipflow/spectral.hpp"

namespace clipflow {

// Which clipped kernel a report describes: the raw Gram matrix, its
// right-scaling by per-sample factors (local flat), the scalar multiple
// (global flat), or the per-layer sums (layerwise).
enum class KernelKind {
  kUnclipped,
  kLocalFlat,
  kGlobalFlat,
  kLocalLayerwise,
  kGlobalLayerwise,
};

std::string to_string(KernelKind k);

struct NtkReport {
  KernelKind kind = KernelKind::kUnclipped;
  DenseMatrix kernel;
  SpectrumReport spectrum;
  double predicted_loss_derivative = 0.0;
};

// Gram matrix of per-sample prediction gradients for scalar-output
// networks: entry (i, j) = grad_w f(x_i) . grad_w f(x_j).
DenseMatrix ntk(const Network& net, const Batch& batch);

// Layer-r kernels from the layer blocks of the Jacobian; they sum to the
// full kernel.
std::vector<DenseMatrix> per_layer_ntk(const Network& net, const Batch& batch);

// Multi-output networks analyzed one logit at a time (block-diagonal
// convention; cross-logit blocks are dropped).
std::vector<DenseMatrix> per_logit_ntk(const Network& net, const Batch& batch);

// kernel * diag(factors.flat); a constant factor vector degenerates to the
// scalar multiple.
DenseMatrix clipped_kernel(const DenseMatrix& kernel, const ClipFactors& factors);

// sum_r layer_kernels[r] * diag(factors column r).
DenseMatrix clipped_kernel(const std::vector<DenseMatrix>& layer_kernels,
                           const ClipFactors& factors);

SpectrumReport classify(const DenseMatrix& kernel);

// Instantaneous loss decay under the kernel's flow:
// -(1/n^2) * g^T K g, where g_i = d loss_i / d f_i.
double predict_loss_derivative(const DenseMatrix& kernel, const Vector& loss_grad);

NtkReport analyze_kernel(KernelKind kind, DenseMatrix kernel, const Vector& loss_grad);

// Ordered eigenvalue comparison of a symmetric PSD kernel against its
// right-scaling by factors in (0, 1].
struct ShrinkageReport {
  std::vector<double> original;  // descending
  std::vector<double> scaled;    // descending real parts
  double max_excess = 0.0;       // max_j (scaled_j - original_j)
  bool within_tolerance = false; // scaled_j <= original_j + 1e-10 for all j
  bool strictly_below = false;   // scaled_j < original_j for all j
};

ShrinkageReport eig_shrinkage_check(const DenseMatrix& kernel, const Vector& factors);

}  // namespace clipflow
