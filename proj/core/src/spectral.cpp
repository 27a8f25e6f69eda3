#include "clipflow/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace clipflow {

namespace {

constexpr std::size_t kMaxDim = 512;
constexpr double kDeflationTol = 1e-12;  // relative to local scale
constexpr double kJacobiTol = 1e-12;     // off-diagonal Frobenius, relative

double sign_of(double magnitude, double sign_source) {
  return sign_source >= 0.0 ? std::abs(magnitude) : -std::abs(magnitude);
}

// Diagonal similarity scaling with powers of two; exact, eigenvalues unchanged.
void balance_in_place(DenseMatrix& a) {
  const std::size_t n = a.rows();
  bool done = false;
  while (!done) {
    done = true;
    for (std::size_t i = 0; i < n; ++i) {
      double col = 0.0, row = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        col += std::abs(a(j, i));
        row += std::abs(a(i, j));
      }
      if (col == 0.0 || row == 0.0) continue;
      double f = 1.0;
      const double s = col + row;
      double g = row / 2.0;
      while (col < g) {
        f *= 2.0;
        col *= 4.0;
      }
      g = row * 2.0;
      while (col > g) {
        f /= 2.0;
        col /= 4.0;
      }
      if ((col + row) / f < 0.95 * s) {
        done = false;
        const double inv = 1.0 / f;
        for (std::size_t j = 0; j < n; ++j) a(i, j) *= inv;
        for (std::size_t j = 0; j < n; ++j) a(j, i) *= f;
      }
    }
  }
}

// Householder reduction to upper Hessenberg form (similarity transform).
void hessenberg_in_place(DenseMatrix& a) {
  const std::size_t n = a.rows();
  if (n < 3) return;
  std::vector<double> v(n);
  for (std::size_t k = 0; k + 2 < n; ++k) {
    double scale = 0.0;
    for (std::size_t i = k + 1; i < n; ++i) scale += std::abs(a(i, k));
    if (scale == 0.0) continue;
    double norm_sq = 0.0;
    for (std::size_t i = k + 1; i < n; ++i) {
      v[i] = a(i, k) / scale;
      norm_sq += v[i] * v[i];
    }
    const double norm = std::sqrt(norm_sq);
    if (norm == 0.0) continue;
    const double alpha = -sign_of(norm, v[k + 1]);
    v[k + 1] -= alpha;
    double vtv = 0.0;
    for (std::size_t i = k + 1; i < n; ++i) vtv += v[i] * v[i];
    if (vtv == 0.0) continue;
    const double beta = 2.0 / vtv;
    // Left: rows k+1..n-1.
    for (std::size_t j = k; j < n; ++j) {
      double s = 0.0;
      for (std::size_t i = k + 1; i < n; ++i) s += v[i] * a(i, j);
      s *= beta;
      for (std::size_t i = k + 1; i < n; ++i) a(i, j) -= s * v[i];
    }
    // Right: columns k+1..n-1.
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t j = k + 1; j < n; ++j) s += a(i, j) * v[j];
      s *= beta;
      for (std::size_t j = k + 1; j < n; ++j) a(i, j) -= s * v[j];
    }
    a(k + 1, k) = alpha * scale;
    for (std::size_t i = k + 2; i < n; ++i) a(i, k) = 0.0;
  }
}

// Francis double-shift QR on an upper Hessenberg matrix; eigenvalues only.
// Deflates converged 1x1 blocks (real eigenvalues) and 2x2 blocks (complex
// conjugate pairs or close real pairs). Sweep budget is 100*n overall.
std::vector<ComplexScalar> hessenberg_qr(DenseMatrix h) {
  const std::size_t dim = h.rows();
  std::vector<ComplexScalar> out;
  out.reserve(dim);

  double anorm = 0.0;
  for (std::size_t i = 0; i < dim; ++i)
    for (std::size_t j = (i == 0 ? 0 : i - 1); j < dim; ++j) anorm += std::abs(h(i, j));
  if (anorm == 0.0) {
    out.assign(dim, ComplexScalar(0.0, 0.0));
    return out;
  }

  const long budget = 100 * static_cast<long>(dim);
  long sweeps = 0;
  double shift_total = 0.0;
  long nn = static_cast<long>(dim) - 1;
  auto at = [&h](long i, long j) -> double& { return h(static_cast<std::size_t>(i), static_cast<std::size_t>(j)); };

  while (nn >= 0) {
    long its = 0;
    long l;
    do {
      // Find the largest l with a negligible subdiagonal entry.
      for (l = nn; l >= 1; --l) {
        double s = std::abs(at(l - 1, l - 1)) + std::abs(at(l, l));
        if (s == 0.0) s = anorm;
        if (std::abs(at(l, l - 1)) <= kDeflationTol * s) {
          at(l, l - 1) = 0.0;
          break;
        }
      }
      if (l < 0) l = 0;
      double x = at(nn, nn);
      if (l == nn) {
        out.emplace_back(x + shift_total, 0.0);
        --nn;
      } else {
        double y = at(nn - 1, nn - 1);
        double w = at(nn, nn - 1) * at(nn - 1, nn);
        if (l == nn - 1) {
          double p = 0.5 * (y - x);
          double q = p * p + w;
          double z = std::sqrt(std::abs(q));
          x += shift_total;
          if (q >= 0.0) {
            z = p + sign_of(z, p);
            double r1 = x + z;
            double r2 = (z != 0.0) ? x - w / z : r1;
            out.emplace_back(r1, 0.0);
            out.emplace_back(r2, 0.0);
          } else {
            out.emplace_back(x + p, z);
            out.emplace_back(x + p, -z);
          }
          nn -= 2;
        } else {
          if (++sweeps > budget) {
            throw std::runtime_error("eigenvalues_general: iteration budget exceeded");
          }
          double p = 0.0, q = 0.0, r = 0.0;
          if (its == 10 || its == 20) {
            // Exceptional shift to escape stagnation.
            shift_total += x;
            for (long i = 0; i <= nn; ++i) at(i, i) -= x;
            double s = std::abs(at(nn, nn - 1)) + std::abs(at(nn - 1, nn - 2));
            y = x = 0.75 * s;
            w = -0.4375 * s * s;
          }
          ++its;
          long m;
          for (m = nn - 2; m >= l; --m) {
            double z = at(m, m);
            double rr = x - z;
            double ss = y - z;
            p = (rr * ss - w) / at(m + 1, m) + at(m, m + 1);
            q = at(m + 1, m + 1) - z - rr - ss;
            r = at(m + 2, m + 1);
            double s = std::abs(p) + std::abs(q) + std::abs(r);
            p /= s;
            q /= s;
            r /= s;
            if (m == l) break;
            const double u = std::abs(at(m, m - 1)) * (std::abs(q) + std::abs(r));
            const double v = std::abs(p) * (std::abs(at(m - 1, m - 1)) + std::abs(z) +
                                            std::abs(at(m + 1, m + 1)));
            if (u <= kDeflationTol * v) break;
          }
          for (long i = m + 2; i <= nn; ++i) {
            at(i, i - 2) = 0.0;
            if (i != m + 2) at(i, i - 3) = 0.0;
          }
          // Chase the bulge down the subdiagonal.
          for (long k = m; k <= nn - 1; ++k) {
            if (k != m) {
              p = at(k, k - 1);
              q = at(k + 1, k - 1);
              r = (k != nn - 1) ? at(k + 2, k - 1) : 0.0;
              double x2 = std::abs(p) + std::abs(q) + std::abs(r);
              if (x2 != 0.0) {
                p /= x2;
                q /= x2;
                r /= x2;
              }
            }
            double s = sign_of(std::sqrt(p * p + q * q + r * r), p);
            if (s == 0.0) continue;
            if (k == m) {
              if (l != m) at(k, k - 1) = -at(k, k - 1);
            } else {
              double x2 = std::abs(at(k, k - 1)) + std::abs(at(k + 1, k - 1)) +
                          ((k != nn - 1) ? std::abs(at(k + 2, k - 1)) : 0.0);
              at(k, k - 1) = -s * x2;
            }
            p += s;
            const double x3 = p / s;
            const double y3 = q / s;
            const double z3 = r / s;
            q /= p;
            r /= p;
            for (long j = k; j <= nn; ++j) {
              double pp = at(k, j) + q * at(k + 1, j);
              if (k != nn - 1) {
                pp += r * at(k + 2, j);
                at(k + 2, j) -= pp * z3;
              }
              at(k + 1, j) -= pp * y3;
              at(k, j) -= pp * x3;
            }
            const long mmin = std::min(nn, k + 3);
            for (long i = l; i <= mmin; ++i) {
              double pp = x3 * at(i, k) + y3 * at(i, k + 1);
              if (k != nn - 1) {
                pp += z3 * at(i, k + 2);
                at(i, k + 2) -= pp * r;
              }
              at(i, k + 1) -= pp * q;
              at(i, k) -= pp;
            }
          }
        }
      }
    } while (l < nn - 1 && nn >= 0);
  }
  return out;
}

void require_square(const DenseMatrix& m, const char* what) {
  if (!m.square()) throw std::invalid_argument(std::string(what) + ": matrix not square");
  if (m.rows() > kMaxDim) throw std::invalid_argument(std::string(what) + ": dimension exceeds 512");
  if (!m.all_finite()) throw std::invalid_argument(std::string(what) + ": non-finite entries");
}

}  // namespace

double positivity_tolerance(const DenseMatrix& m) {
  return 1e-10 * std::max(1.0, m.frobenius_norm());
}

double symmetry_tolerance(const DenseMatrix& m) {
  return 1e-10 * (1.0 + m.max_abs());
}

bool is_symmetric_within_tolerance(const DenseMatrix& m) {
  return m.square() && m.max_asymmetry() <= symmetry_tolerance(m);
}

void sort_descending(std::vector<ComplexScalar>& eigenvalues) {
  std::sort(eigenvalues.begin(), eigenvalues.end(), [](const ComplexScalar& a, const ComplexScalar& b) {
    if (a.real() != b.real()) return a.real() > b.real();
    return a.imag() > b.imag();
  });
}

std::vector<ComplexScalar> eigenvalues_general(const DenseMatrix& m) {
  require_square(m, "eigenvalues_general");
  if (m.rows() == 0) return {};
  DenseMatrix work = m;
  balance_in_place(work);
  hessenberg_in_place(work);
  auto eigs = hessenberg_qr(std::move(work));
  sort_descending(eigs);
  return eigs;
}

std::vector<double> eigenvalues_symmetric(const DenseMatrix& m) {
  require_square(m, "eigenvalues_symmetric");
  if (!is_symmetric_within_tolerance(m)) {
    throw std::invalid_argument("eigenvalues_symmetric: asymmetry beyond tolerance");
  }
  const std::size_t n = m.rows();
  if (n == 0) return {};

  // Work on the exactly symmetrized matrix.
  DenseMatrix a(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a(i, j) = 0.5 * (m(i, j) + m(j, i));

  const double target = kJacobiTol * std::max(a.frobenius_norm(), 1e-300);
  const int max_sweeps = 100;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off_sq = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) off_sq += 2.0 * a(i, j) * a(i, j);
    if (std::sqrt(off_sq) <= target) break;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = sign_of(1.0, theta) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        a(p, p) -= t * apq;
        a(q, q) += t * apq;
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          if (k == p || k == q) continue;
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(p, k) = a(k, p);
          a(k, q) = s * akp + c * akq;
          a(q, k) = a(k, q);
        }
      }
    }
  }

  std::vector<double> eigs(n);
  for (std::size_t i = 0; i < n; ++i) eigs[i] = a(i, i);
  std::sort(eigs.begin(), eigs.end(), std::greater<>());
  return eigs;
}

bool is_positive_quadratic_form(const DenseMatrix& m) {
  require_square(m, "is_positive_quadratic_form");
  const std::size_t n = m.rows();
  DenseMatrix sym(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) sym(i, j) = 0.5 * (m(i, j) + m(j, i));
  const auto eigs = eigenvalues_symmetric(sym);
  return !eigs.empty() && eigs.back() > positivity_tolerance(m);
}

SpectrumReport classify_spectrum(const DenseMatrix& m) {
  SpectrumReport report;
  report.eigenvalues = eigenvalues_general(m);
  report.is_symmetric = is_symmetric_within_tolerance(m);
  const double tol = positivity_tolerance(m);
  report.positive_in_eigenvalues =
      !report.eigenvalues.empty() &&
      std::all_of(report.eigenvalues.begin(), report.eigenvalues.end(),
                  [tol](const ComplexScalar& e) { return e.real() > tol; });
  report.positive_in_quadratic_form = is_positive_quadratic_form(m);
  return report;
}

}  // namespace clipflow
