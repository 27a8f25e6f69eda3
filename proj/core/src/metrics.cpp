#include "clipflow/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "clipflow/rng.hpp"

namespace clipflow {

namespace {

std::size_t bin_index(double confidence, std::size_t bin_count) {
  // Bin b covers ((b-1)/B, b/B]; membership is decided against the same
  // double-precision edges the report carries.
  const double b_count = static_cast<double>(bin_count);
  std::size_t idx = std::min<std::size_t>(
      bin_count - 1, static_cast<std::size_t>(std::max(0.0, std::ceil(confidence * b_count) - 1.0)));
  while (idx > 0 && confidence <= static_cast<double>(idx) / b_count) --idx;
  while (idx + 1 < bin_count && confidence > static_cast<double>(idx + 1) / b_count) ++idx;
  return idx;
}

std::vector<CalibrationBin> empty_bins(std::size_t bin_count) {
  std::vector<CalibrationBin> bins(bin_count);
  for (std::size_t b = 0; b < bin_count; ++b) {
    bins[b].edge_lo = static_cast<double>(b) / static_cast<double>(bin_count);
    bins[b].edge_hi = static_cast<double>(b + 1) / static_cast<double>(bin_count);
  }
  return bins;
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

DenseMatrix attack_features(const DenseMatrix& logits, const std::vector<int>& labels,
                            std::size_t class_count) {
  DenseMatrix features(logits.rows(), logits.cols() + class_count);
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    auto dst = features.row(i);
    const auto src = logits.row(i);
    std::copy(src.begin(), src.end(), dst.begin());
    const int label = labels[i];
    if (label < 0 || static_cast<std::size_t>(label) >= class_count) {
      throw std::invalid_argument("mia_attack: label out of range");
    }
    dst[logits.cols() + static_cast<std::size_t>(label)] = 1.0;
  }
  return features;
}

std::vector<std::size_t> shuffled_indices(std::size_t n, const CounterRng& rng,
                                          std::uint64_t lane) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t j = 0; j + 1 < n; ++j) {
    const std::size_t pick = j + rng.uniform_index(lane * n + j, n - j);
    std::swap(idx[j], idx[pick]);
  }
  return idx;
}

}  // namespace

ConfidenceResult confidences(const DenseMatrix& probabilities, const std::vector<int>& labels) {
  if (probabilities.rows() != labels.size()) {
    throw std::invalid_argument("confidences: label count mismatch");
  }
  ConfidenceResult result;
  result.confidence.resize(probabilities.rows());
  result.correctness.resize(probabilities.rows());
  for (std::size_t i = 0; i < probabilities.rows(); ++i) {
    const auto row = probabilities.row(i);
    double sum = 0.0;
    for (double p : row) {
      if (!(p >= 0.0) || !std::isfinite(p)) {
        throw std::invalid_argument("confidences: malformed probability row");
      }
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      throw std::invalid_argument("confidences: probability row does not sum to 1");
    }
    std::size_t best = 0;
    for (std::size_t k = 1; k < row.size(); ++k) {
      if (row[k] > row[best]) best = k;  // lowest index wins ties
    }
    result.confidence[i] = row[best];
    result.correctness[i] = (static_cast<int>(best) == labels[i]) ? 1 : 0;
  }
  return result;
}

CalibrationReport calibration(const Vector& confidence, const std::vector<int>& correctness,
                              std::size_t bin_count) {
  if (confidence.empty()) throw std::invalid_argument("calibration: empty input");
  if (confidence.size() != correctness.size()) {
    throw std::invalid_argument("calibration: size mismatch");
  }
  if (bin_count == 0) throw std::invalid_argument("calibration: need at least one bin");

  CalibrationReport report;
  report.bins = empty_bins(bin_count);
  report.total = confidence.size();
  std::vector<double> conf_sum(bin_count, 0.0);
  std::vector<double> correct_sum(bin_count, 0.0);
  for (std::size_t i = 0; i < confidence.size(); ++i) {
    const std::size_t b = bin_index(confidence[i], bin_count);
    report.bins[b].count += 1;
    conf_sum[b] += confidence[i];
    correct_sum[b] += correctness[i];
  }
  const double n = static_cast<double>(confidence.size());
  double ece = 0.0;
  double mce = 0.0;
  for (std::size_t b = 0; b < bin_count; ++b) {
    auto& bin = report.bins[b];
    if (bin.count == 0) continue;
    bin.mean_confidence = conf_sum[b] / static_cast<double>(bin.count);
    bin.accuracy = correct_sum[b] / static_cast<double>(bin.count);
    const double gap = std::abs(bin.accuracy - bin.mean_confidence);
    ece += (static_cast<double>(bin.count) / n) * gap;
    mce = std::max(mce, gap);
  }
  report.ece = ece;
  report.mce = mce;
  return report;
}

std::vector<CalibrationBin> confidence_histogram(const Vector& confidence,
                                                 std::size_t bin_count) {
  if (bin_count == 0) throw std::invalid_argument("confidence_histogram: need at least one bin");
  auto bins = empty_bins(bin_count);
  for (double c : confidence) bins[bin_index(c, bin_count)].count += 1;
  return bins;
}

double LogisticModel::score(std::span<const double> features) const {
  double z = weights.back();
  for (std::size_t k = 0; k < features.size(); ++k) z += weights[k] * features[k];
  return sigmoid(z);
}

LogisticModel train_logistic_regression(const DenseMatrix& features,
                                        const std::vector<int>& labels, int iterations,
                                        double learning_rate, double l2_penalty) {
  if (features.rows() != labels.size() || features.rows() == 0) {
    throw std::invalid_argument("train_logistic_regression: bad shapes");
  }
  const std::size_t n = features.rows();
  const std::size_t d = features.cols();
  LogisticModel model;
  model.weights.assign(d + 1, 0.0);
  Vector grad(d + 1);
  for (int it = 0; it < iterations; ++it) {
    std::fill(grad.begin(), grad.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto x = features.row(i);
      const double err = model.score(x) - static_cast<double>(labels[i]);
      for (std::size_t k = 0; k < d; ++k) grad[k] += err * x[k];
      grad[d] += err;
    }
    const double inv = 1.0 / static_cast<double>(n);
    for (std::size_t k = 0; k < d; ++k) {
      // Intercept stays unpenalized.
      model.weights[k] -= learning_rate * (grad[k] * inv + l2_penalty * model.weights[k]);
    }
    model.weights[d] -= learning_rate * grad[d] * inv;
  }
  return model;
}

double auc_from_scores(const Vector& positive_scores, const Vector& negative_scores) {
  if (positive_scores.empty() || negative_scores.empty()) {
    throw std::invalid_argument("auc_from_scores: both classes must be nonempty");
  }
  struct Tagged {
    double score;
    int positive;
  };
  std::vector<Tagged> all;
  all.reserve(positive_scores.size() + negative_scores.size());
  for (double s : positive_scores) all.push_back({s, 1});
  for (double s : negative_scores) all.push_back({s, 0});
  std::sort(all.begin(), all.end(), [](const Tagged& a, const Tagged& b) { return a.score < b.score; });

  // Mid-ranks over tied scores; ties count half.
  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < all.size()) {
    std::size_t j = i;
    while (j < all.size() && all[j].score == all[i].score) ++j;
    const double mid_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
    for (std::size_t k = i; k < j; ++k) {
      if (all[k].positive) rank_sum_pos += mid_rank;
    }
    i = j;
  }
  const double np = static_cast<double>(positive_scores.size());
  const double nn = static_cast<double>(negative_scores.size());
  return (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn);
}

MiaResult mia_attack(const DenseMatrix& member_logits, const std::vector<int>& member_labels,
                     const DenseMatrix& nonmember_logits, const std::vector<int>& nonmember_labels,
                     std::uint64_t seed) {
  if (member_logits.rows() == 0 || nonmember_logits.rows() == 0) {
    throw std::invalid_argument("mia_attack: both sets must be nonempty");
  }
  if (member_logits.cols() != nonmember_logits.cols()) {
    throw std::invalid_argument("mia_attack: logit dimensions differ");
  }
  const std::size_t class_count = member_logits.cols();
  const DenseMatrix member_feats = attack_features(member_logits, member_labels, class_count);
  const DenseMatrix nonmember_feats =
      attack_features(nonmember_logits, nonmember_labels, class_count);

  const CounterRng rng(seed, StreamSalt::kGeneric);
  const auto member_order = shuffled_indices(member_feats.rows(), rng, 0);
  const auto nonmember_order = shuffled_indices(nonmember_feats.rows(), rng, 1);
  const std::size_t member_train = (member_order.size() + 1) / 2;
  const std::size_t nonmember_train = (nonmember_order.size() + 1) / 2;
  if (member_train == member_order.size() || nonmember_train == nonmember_order.size()) {
    throw std::invalid_argument("mia_attack: sets too small to hold out an evaluation split");
  }

  const std::size_t dim = member_feats.cols();
  DenseMatrix train(member_train + nonmember_train, dim);
  std::vector<int> train_labels(train.rows());
  for (std::size_t i = 0; i < member_train; ++i) {
    const auto src = member_feats.row(member_order[i]);
    std::copy(src.begin(), src.end(), train.row(i).begin());
    train_labels[i] = 1;
  }
  for (std::size_t i = 0; i < nonmember_train; ++i) {
    const auto src = nonmember_feats.row(nonmember_order[i]);
    std::copy(src.begin(), src.end(), train.row(member_train + i).begin());
    train_labels[member_train + i] = 0;
  }

  MiaResult result;
  result.attacker = train_logistic_regression(train, train_labels, 500, 0.1, 1e-4);

  for (std::size_t i = member_train; i < member_order.size(); ++i) {
    result.member_scores.push_back(result.attacker.score(member_feats.row(member_order[i])));
    result.member_labels.push_back(member_labels[member_order[i]]);
  }
  for (std::size_t i = nonmember_train; i < nonmember_order.size(); ++i) {
    result.nonmember_scores.push_back(
        result.attacker.score(nonmember_feats.row(nonmember_order[i])));
    result.nonmember_labels.push_back(nonmember_labels[nonmember_order[i]]);
  }
  result.auc = auc_from_scores(result.member_scores, result.nonmember_scores);
  return result;
}

std::vector<PerClassAuc> per_class_auc(const MiaResult& result, std::size_t class_count) {
  std::vector<PerClassAuc> table;
  for (std::size_t c = 0; c < class_count; ++c) {
    PerClassAuc row;
    row.label = static_cast<int>(c);
    Vector pos, neg;
    for (std::size_t i = 0; i < result.member_scores.size(); ++i) {
      if (result.member_labels[i] == row.label) pos.push_back(result.member_scores[i]);
    }
    for (std::size_t i = 0; i < result.nonmember_scores.size(); ++i) {
      if (result.nonmember_labels[i] == row.label) neg.push_back(result.nonmember_scores[i]);
    }
    row.members = pos.size();
    row.nonmembers = neg.size();
    if (pos.empty() || neg.empty()) {
      row.defined = false;
    } else {
      row.auc = auc_from_scores(pos, neg);
    }
    table.push_back(std::move(row));
  }
  return table;
}

}  // namespace clipflow
