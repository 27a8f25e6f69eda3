#pragma once

#include <optional>
#include <string>
#include <vector>

#include "clipflow/clipping.hpp"

namespace clipflow {

// Standard normal CDF. Accurate to well under 1e-12 absolute on [-8, 8].
double normal_cdf(double x);

// Worst-case l2 change of the per-step clipped gradient sum when one
// sample changes. Flat scope: R. Layerwise scope: one bound per layer.
// Mode kNone carries no bound; `unbounded` is set instead.
struct SensitivityBound {
  bool unbounded = false;
  std::vector<double> per_layer;  // single entry for flat scope

  double total() const;  // sqrt of the sum of squared per-layer bounds
};

SensitivityBound sensitivity_bound(const ClipConfig& config);

// Central-limit accumulation of the Gaussian mechanism over T steps at
// sampling rate p: mu = p * sqrt(T * (exp(1/sigma^2) - 1)).
// Returns +infinity when sigma == 0.
double gdp_mu(double sigma, double sampling_rate, long steps);

// delta achieved at a given epsilon under a mu-parameterized guarantee:
// delta(eps; mu) = Phi(-eps/mu + mu/2) - e^eps * Phi(-eps/mu - mu/2).
double delta_for_epsilon(double epsilon, double mu);

// Inverts delta_for_epsilon by bisection to |delta error| <= 1e-9.
// Returns 0 when the target delta is already met at epsilon = 0.
double mu_to_eps(double mu, double delta);

// Running privacy spend of one training run.
struct PrivacyLedger {
  double sigma = 0.0;
  double sampling_rate = 1.0;
  long steps = 0;
  double delta = 1e-5;
  bool unbounded_sensitivity = false;

  double mu = 0.0;
  double epsilon = 0.0;

  static PrivacyLedger accumulate(double sigma, double sampling_rate, long steps, double delta,
                                  bool unbounded_sensitivity = false);
};

struct LedgerComparison {
  bool equal = false;
  std::string diff;  // empty when equal
};

// Bitwise equality of two ledgers; mismatches are reported field by field.
LedgerComparison ledger_equality_check(const PrivacyLedger& a, const PrivacyLedger& b);

}  // namespace clipflow
