#include "clipflow/ntk.hpp"

#include <cmath>
#include <stdexcept>

namespace clipflow {

namespace {

DenseMatrix gram_of_rows(const DenseMatrix& jac, std::size_t row_begin, std::size_t row_stride,
                         std::size_t count, std::size_t col_begin, std::size_t col_end) {
  DenseMatrix gram(count, count);
  for (std::size_t i = 0; i < count; ++i) {
    const auto ri = jac.row(row_begin + i * row_stride).subspan(col_begin, col_end - col_begin);
    for (std::size_t j = i; j < count; ++j) {
      const auto rj = jac.row(row_begin + j * row_stride).subspan(col_begin, col_end - col_begin);
      const double v = dot(ri, rj);
      gram(i, j) = v;
      gram(j, i) = v;
    }
  }
  return gram;
}

}  // namespace

std::string to_string(KernelKind k) {
  switch (k) {
    case KernelKind::kUnclipped: return "unclipped";
    case KernelKind::kLocalFlat: return "local_flat";
    case KernelKind::kGlobalFlat: return "global_flat";
    case KernelKind::kLocalLayerwise: return "local_layerwise";
    case KernelKind::kGlobalLayerwise: return "global_layerwise";
  }
  return "unclipped";
}

DenseMatrix ntk(const Network& net, const Batch& batch) {
  if (net.output_dim() != 1) {
    throw std::invalid_argument("ntk: scalar-output networks only; see per_logit_ntk");
  }
  const DenseMatrix jac = jacobian(net, batch);
  return gram_of_rows(jac, 0, 1, batch.size(), 0, net.param_count());
}

std::vector<DenseMatrix> per_layer_ntk(const Network& net, const Batch& batch) {
  if (net.output_dim() != 1) {
    throw std::invalid_argument("per_layer_ntk: scalar-output networks only");
  }
  const DenseMatrix jac = jacobian(net, batch);
  const auto& offsets = net.layer_offsets();
  std::vector<DenseMatrix> kernels;
  kernels.reserve(net.layer_count());
  for (std::size_t r = 0; r < net.layer_count(); ++r) {
    kernels.push_back(gram_of_rows(jac, 0, 1, batch.size(), offsets[r], offsets[r + 1]));
  }
  return kernels;
}

std::vector<DenseMatrix> per_logit_ntk(const Network& net, const Batch& batch) {
  const DenseMatrix jac = jacobian(net, batch);
  const std::size_t m = net.output_dim();
  std::vector<DenseMatrix> kernels;
  kernels.reserve(m);
  for (std::size_t k = 0; k < m; ++k) {
    kernels.push_back(gram_of_rows(jac, k, m, batch.size(), 0, net.param_count()));
  }
  return kernels;
}

DenseMatrix clipped_kernel(const DenseMatrix& kernel, const ClipFactors& factors) {
  if (factors.scope != ClipScope::kFlat) {
    throw std::invalid_argument("clipped_kernel: flat factors expected for a single kernel");
  }
  if (factors.flat.size() != kernel.cols()) {
    throw std::invalid_argument("clipped_kernel: factor count does not match kernel size");
  }
  DenseMatrix scaled = kernel;
  for (std::size_t i = 0; i < scaled.rows(); ++i) {
    for (std::size_t j = 0; j < scaled.cols(); ++j) scaled(i, j) *= factors.flat[j];
  }
  return scaled;
}

DenseMatrix clipped_kernel(const std::vector<DenseMatrix>& layer_kernels,
                           const ClipFactors& factors) {
  if (layer_kernels.empty()) throw std::invalid_argument("clipped_kernel: no layer kernels");
  if (factors.scope != ClipScope::kLayerwise) {
    throw std::invalid_argument("clipped_kernel: layerwise factors expected");
  }
  const std::size_t n = layer_kernels.front().rows();
  if (factors.layerwise.rows() != n || factors.layerwise.cols() != layer_kernels.size()) {
    throw std::invalid_argument("clipped_kernel: factor shape mismatch");
  }
  DenseMatrix sum(n, n);
  for (std::size_t r = 0; r < layer_kernels.size(); ++r) {
    const DenseMatrix& kr = layer_kernels[r];
    if (kr.rows() != n || kr.cols() != n) {
      throw std::invalid_argument("clipped_kernel: layer kernel shape mismatch");
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) sum(i, j) += kr(i, j) * factors.layerwise(j, r);
    }
  }
  return sum;
}

SpectrumReport classify(const DenseMatrix& kernel) { return classify_spectrum(kernel); }

double predict_loss_derivative(const DenseMatrix& kernel, const Vector& loss_grad) {
  if (kernel.rows() != loss_grad.size()) {
    throw std::invalid_argument("predict_loss_derivative: dimension mismatch");
  }
  const double n = static_cast<double>(loss_grad.size());
  return -quadratic_form(kernel, loss_grad) / (n * n);
}

NtkReport analyze_kernel(KernelKind kind, DenseMatrix kernel, const Vector& loss_grad) {
  NtkReport report;
  report.kind = kind;
  report.spectrum = classify(kernel);
  report.predicted_loss_derivative = predict_loss_derivative(kernel, loss_grad);
  report.kernel = std::move(kernel);
  return report;
}

ShrinkageReport eig_shrinkage_check(const DenseMatrix& kernel, const Vector& factors) {
  if (!is_symmetric_within_tolerance(kernel)) {
    throw std::invalid_argument("eig_shrinkage_check: kernel must be symmetric");
  }
  if (kernel.rows() != factors.size()) {
    throw std::invalid_argument("eig_shrinkage_check: factor count mismatch");
  }
  for (double f : factors) {
    if (!(f > 0.0 && f <= 1.0)) {
      throw std::invalid_argument("eig_shrinkage_check: factors must lie in (0, 1]");
    }
  }
  ShrinkageReport report;
  report.original = eigenvalues_symmetric(kernel);

  ClipFactors clip;
  clip.scope = ClipScope::kFlat;
  clip.flat = factors;
  const DenseMatrix scaled = clipped_kernel(kernel, clip);
  const auto eigs = eigenvalues_general(scaled);
  report.scaled.reserve(eigs.size());
  for (const auto& e : eigs) report.scaled.push_back(e.real());

  report.max_excess = -std::numeric_limits<double>::infinity();
  bool strict = true;
  for (std::size_t j = 0; j < report.original.size(); ++j) {
    const double excess = report.scaled[j] - report.original[j];
    report.max_excess = std::max(report.max_excess, excess);
    if (!(report.scaled[j] < report.original[j])) strict = false;
  }
  report.within_tolerance = report.max_excess <= 1e-10;
  report.strictly_below = strict;
  return report;
}

}  // namespace clipflow
