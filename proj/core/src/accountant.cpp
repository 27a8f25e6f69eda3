#include "clipflow/accountant.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace clipflow {

namespace {

constexpr double kInvSqrt2 = 0.7071067811865475244;
constexpr double kHalfLog2Pi = 0.9189385332046727418;

// log Phi(x); asymptotic expansion once erfc underflows (x < -30).
double normal_logcdf(double x) {
  if (x > -30.0) return std::log(normal_cdf(x));
  const double z = -x;
  // Phi(-z) = phi(z)/z * (1 - 1/z^2 + 3/z^4 - 15/z^6 + ...)
  const double z2 = z * z;
  const double series = 1.0 - 1.0 / z2 + 3.0 / (z2 * z2) - 15.0 / (z2 * z2 * z2);
  return -0.5 * z2 - kHalfLog2Pi - std::log(z) + std::log(series);
}

}  // namespace

double normal_cdf(double x) { return 0.5 * std::erfc(-x * kInvSqrt2); }

double SensitivityBound::total() const {
  if (unbounded) return std::numeric_limits<double>::infinity();
  double s = 0.0;
  for (double b : per_layer) s += b * b;
  return std::sqrt(s);
}

SensitivityBound sensitivity_bound(const ClipConfig& config) {
  SensitivityBound bound;
  switch (config.mode) {
    case ClipMode::kNone:
      bound.unbounded = true;
      return bound;
    case ClipMode::kLocal:
    case ClipMode::kGlobal:
      // Local and global clipping bound every per-sample gradient by the
      // same norm, so the sensitivity of the summed gradient is identical.
      if (config.scope == ClipScope::kFlat) {
        bound.per_layer = {config.flat_bound};
      } else {
        bound.per_layer = config.layer_bounds;
      }
      return bound;
    case ClipMode::kBatch:
      // Clipping the averaged gradient does not bound the per-sample
      // contribution; no DP guarantee follows.
      bound.unbounded = true;
      return bound;
  }
  bound.unbounded = true;
  return bound;
}

double gdp_mu(double sigma, double sampling_rate, long steps) {
  if (sigma < 0.0) throw std::invalid_argument("gdp_mu: sigma must be nonnegative");
  if (sampling_rate <= 0.0 || sampling_rate > 1.0) {
    throw std::invalid_argument("gdp_mu: sampling rate must be in (0, 1]");
  }
  if (steps < 0) throw std::invalid_argument("gdp_mu: steps must be nonnegative");
  if (steps == 0) return 0.0;
  if (sigma == 0.0) return std::numeric_limits<double>::infinity();
  const double growth = std::expm1(1.0 / (sigma * sigma));
  return sampling_rate * std::sqrt(static_cast<double>(steps) * growth);
}

double delta_for_epsilon(double epsilon, double mu) {
  if (!(mu > 0.0)) throw std::invalid_argument("delta_for_epsilon: mu must be positive");
  if (epsilon < 0.0) throw std::invalid_argument("delta_for_epsilon: epsilon must be nonnegative");
  const double a = -epsilon / mu + mu / 2.0;
  const double b = -epsilon / mu - mu / 2.0;
  // Second term computed in log space; e^eps alone can overflow while the
  // product stays tiny.
  const double log_term2 = epsilon + normal_logcdf(b);
  const double term2 = log_term2 < -745.0 ? 0.0 : std::exp(log_term2);
  const double delta = normal_cdf(a) - term2;
  return std::min(1.0, std::max(0.0, delta));
}

double mu_to_eps(double mu, double delta) {
  if (!(mu > 0.0)) throw std::invalid_argument("mu_to_eps: mu must be positive");
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("mu_to_eps: delta must be in (0,1)");
  if (!std::isfinite(mu)) return std::numeric_limits<double>::infinity();

  if (delta_for_epsilon(0.0, mu) <= delta) return 0.0;

  double lo = 0.0;
  double hi = 1.0;
  int grow = 0;
  while (delta_for_epsilon(hi, mu) > delta) {
    lo = hi;
    hi *= 2.0;
    if (++grow > 64) throw std::runtime_error("mu_to_eps: bracket failure");
  }
  // delta(.; mu) is strictly decreasing on [lo, hi]; bisect to 1e-9 in delta.
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double d = delta_for_epsilon(mid, mu);
    if (std::abs(d - delta) <= 1e-9 && (hi - lo) <= 1e-12 * (1.0 + mid)) return mid;
    if (d > delta) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

PrivacyLedger PrivacyLedger::accumulate(double sigma, double sampling_rate, long steps,
                                        double delta, bool unbounded_sensitivity) {
  PrivacyLedger ledger;
  ledger.sigma = sigma;
  ledger.sampling_rate = sampling_rate;
  ledger.steps = steps;
  ledger.delta = delta;
  ledger.unbounded_sensitivity = unbounded_sensitivity;
  if (unbounded_sensitivity || sigma == 0.0) {
    ledger.mu = std::numeric_limits<double>::infinity();
    ledger.epsilon = std::numeric_limits<double>::infinity();
    if (steps == 0) {
      ledger.mu = 0.0;
      ledger.epsilon = 0.0;
    }
    return ledger;
  }
  ledger.mu = gdp_mu(sigma, sampling_rate, steps);
  ledger.epsilon = ledger.mu == 0.0 ? 0.0 : mu_to_eps(ledger.mu, delta);
  return ledger;
}

LedgerComparison ledger_equality_check(const PrivacyLedger& a, const PrivacyLedger& b) {
  std::ostringstream diff;
  auto compare = [&diff](const char* field, double x, double y) {
    if (x != y && !(std::isnan(x) && std::isnan(y))) {
      diff << field << ": " << x << " vs " << y << "; ";
    }
  };
  compare("sigma", a.sigma, b.sigma);
  compare("sampling_rate", a.sampling_rate, b.sampling_rate);
  compare("steps", static_cast<double>(a.steps), static_cast<double>(b.steps));
  compare("delta", a.delta, b.delta);
  compare("mu", a.mu, b.mu);
  compare("epsilon", a.epsilon, b.epsilon);
  if (a.unbounded_sensitivity != b.unbounded_sensitivity) diff << "unbounded_sensitivity; ";
  LedgerComparison result;
  result.diff = diff.str();
  result.equal = result.diff.empty();
  return result;
}

}  // namespace clipflow
