#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "clipflow/matrix.hpp"

namespace clipflow {

// P_hat_i = max_k probabilities(i, k) and whether the argmax class (lowest
// index on ties) equals the label.
struct ConfidenceResult {
  Vector confidence;            // in [1/M, 1]
  std::vector<int> correctness; // 0/1
};

ConfidenceResult confidences(const DenseMatrix& probabilities, const std::vector<int>& labels);

struct CalibrationBin {
  double edge_lo = 0.0;
  double edge_hi = 0.0;
  std::size_t count = 0;
  double accuracy = 0.0;
  double mean_confidence = 0.0;
};

// Binned calibration estimate over B equal-width bins on (0, 1]:
// ece = sum_b (count_b / n) |acc_b - conf_b|, mce = max over nonempty bins.
struct CalibrationReport {
  std::vector<CalibrationBin> bins;
  double ece = 0.0;
  double mce = 0.0;
  std::size_t total = 0;
};

CalibrationReport calibration(const Vector& confidence, const std::vector<int>& correctness,
                              std::size_t bin_count);

// Histogram of confidences over the same bin grid; empty bins included.
std::vector<CalibrationBin> confidence_histogram(const Vector& confidence, std::size_t bin_count);

// Binary logistic regression trained by full-batch gradient descent.
struct LogisticModel {
  Vector weights;  // last entry is the intercept
  double score(std::span<const double> features) const;  // probability of class 1
};

LogisticModel train_logistic_regression(const DenseMatrix& features, const std::vector<int>& labels,
                                        int iterations, double learning_rate, double l2_penalty);

// Rank-statistic AUC with ties counted half.
double auc_from_scores(const Vector& positive_scores, const Vector& negative_scores);

struct MiaResult {
  LogisticModel attacker;
  Vector member_scores;                  // held-out members
  std::vector<int> member_labels;        // labels aligned with member_scores
  Vector nonmember_scores;               // held-out non-members
  std::vector<int> nonmember_labels;
  double auc = 0.5;
};

struct PerClassAuc {
  int label = 0;
  double auc = 0.5;
  std::size_t members = 0;
  std::size_t nonmembers = 0;
  bool defined = true;  // false when a class is missing on one side
};

// Black-box membership attack: a logistic regression over concat(logits,
// one-hot label) trained on half of each set, AUC reported on the held-out
// halves. Hyperparameters fixed: 500 iterations, lr 0.1, l2 1e-4.
MiaResult mia_attack(const DenseMatrix& member_logits, const std::vector<int>& member_labels,
                     const DenseMatrix& nonmember_logits, const std::vector<int>& nonmember_labels,
                     std::uint64_t seed);

// AUC restricted to each class's held-out samples; classes absent on one
// side come back with defined = false.
std::vector<PerClassAuc> per_class_auc(const MiaResult& result, std::size_t class_count);

}  // namespace clipflow
