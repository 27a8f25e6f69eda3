#include "clipflow/fixtures.hpp"

#include <cmath>
#include <sstream>

namespace clipflow {

namespace {

DenseMatrix mat2(double a, double b, double c, double d) {
  return DenseMatrix(2, 2, {a, b, c, d});
}

}  // namespace

std::vector<CounterexampleFixture> positivity_counterexamples() {
  std::vector<CounterexampleFixture> out;

  {
    // Product of a positive definite matrix and a non-constant positive
    // diagonal: positive eigenvalues, yet asymmetric and indefinite in
    // quadratic form.
    CounterexampleFixture f;
    f.name = "pd_times_diagonal";
    f.statement =
        "product of positive definite matrix and positive diagonal is positive in "
        "eigenvalues but may be asymmetric and non-positive in quadratic form";
    f.matrix = mat2(1.0, 0.1, 1.0, 0.2);  // [[1,1],[1,2]] * diag(1, 0.1)
    f.expect_symmetric = false;
    f.expect_positive_quadratic_form = false;
    f.expect_positive_eigenvalues = true;
    f.witness_vector = Vector{1.0, -2.0};
    f.witness_value = -0.4;
    out.push_back(std::move(f));
  }

  {
    // All eigenvalues positive, quadratic form still takes negative values.
    CounterexampleFixture f;
    f.name = "positive_eigenvalues_not_quadratic";
    f.statement = "positive eigenvalues do not imply positive quadratic form";
    f.matrix = mat2(-1.0, 3.0, -3.0, 8.0);
    f.expect_symmetric = false;
    f.expect_positive_quadratic_form = false;
    f.expect_positive_eigenvalues = true;
    const double root = 3.0 * std::sqrt(5.0);
    f.known_eigenvalues = {ComplexScalar((7.0 + root) / 2.0, 0.0),
                           ComplexScalar((7.0 - root) / 2.0, 0.0)};
    f.witness_vector = Vector{1.0, 0.0};
    f.witness_value = -1.0;
    out.push_back(std::move(f));
  }

  {
    // Positive quadratic form (x^2 + y^2) with a complex conjugate pair:
    // the eigenvalues are not real, though their real parts are positive.
    CounterexampleFixture f;
    f.name = "rotation_like_quadratic_positive";
    f.statement = "positive quadratic form with non-real eigenvalues";
    f.matrix = mat2(1.0, 1.0, -1.0, 1.0);
    f.expect_symmetric = false;
    f.expect_positive_quadratic_form = true;
    f.known_eigenvalues = {ComplexScalar(1.0, 1.0), ComplexScalar(1.0, -1.0)};
    f.note = "complex pair 1 +/- i; real parts positive";
    out.push_back(std::move(f));
  }

  {
    // Sum of per-layer products: [[8/9,2],[2,7]]*diag(0.9,0.4) +
    // [[3,2],[2,2]]*diag(0.1,0.6) = [[1.1,2.0],[2.0,4.0]].
    // Sometimes quoted as having a zero eigenvalue; the directly computed
    // smallest eigenvalue is (5.1 - sqrt(24.41))/2 ~= 0.0797, recorded here
    // as the ground truth rather than zero.
    CounterexampleFixture f;
    f.name = "layer_sum_near_singular";
    f.statement = "sum of pd-times-diagonal products can lose definiteness";
    f.matrix = mat2(1.1, 2.0, 2.0, 4.0);
    f.expect_symmetric = true;
    const double disc = std::sqrt(5.1 * 5.1 - 4.0 * 0.4);  // trace^2 - 4 det
    f.known_eigenvalues = {ComplexScalar((5.1 + disc) / 2.0, 0.0),
                           ComplexScalar((5.1 - disc) / 2.0, 0.0)};
    f.expected_determinant = 0.4;
    f.note =
        "smallest eigenvalue ~= 0.0797, positive; the often-quoted zero eigenvalue does not match "
        "the printed matrices";
    out.push_back(std::move(f));
  }

  {
    // Same construction with the top-left entry of the first factor lowered
    // to 0.7 (still positive definite): the sum acquires a negative
    // eigenvalue, det = 0.93*4 - 4 = -0.28.
    CounterexampleFixture f;
    f.name = "layer_sum_negative_eigenvalue";
    f.statement = "layer sum with a genuinely negative eigenvalue";
    f.matrix = mat2(0.93, 2.0, 2.0, 4.0);
    f.expect_symmetric = true;
    f.expect_positive_quadratic_form = false;
    f.expect_positive_eigenvalues = false;
    f.expected_determinant = -0.28;
    out.push_back(std::move(f));
  }

  return out;
}

std::vector<std::string> check_fixture(const CounterexampleFixture& fixture) {
  std::vector<std::string> failures;
  auto fail = [&failures, &fixture](const std::string& msg) {
    failures.push_back(fixture.name + ": " + msg);
  };

  const SpectrumReport report = classify_spectrum(fixture.matrix);

  if (fixture.expect_symmetric && report.is_symmetric != *fixture.expect_symmetric) {
    fail("symmetry flag mismatch");
  }
  if (fixture.expect_positive_quadratic_form &&
      report.positive_in_quadratic_form != *fixture.expect_positive_quadratic_form) {
    fail("quadratic-form positivity mismatch");
  }
  if (fixture.expect_positive_eigenvalues &&
      report.positive_in_eigenvalues != *fixture.expect_positive_eigenvalues) {
    fail("eigenvalue positivity mismatch");
  }

  if (!fixture.known_eigenvalues.empty()) {
    auto expected = fixture.known_eigenvalues;
    sort_descending(expected);
    if (expected.size() != report.eigenvalues.size()) {
      fail("eigenvalue count mismatch");
    } else {
      for (std::size_t i = 0; i < expected.size(); ++i) {
        const double err = std::abs(expected[i] - report.eigenvalues[i]);
        if (err > 1e-8) {
          std::ostringstream os;
          os << "eigenvalue " << i << " off by " << err;
          fail(os.str());
        }
      }
    }
  }

  if (fixture.witness_vector && fixture.witness_value) {
    const double value = quadratic_form(fixture.matrix, *fixture.witness_vector);
    if (std::abs(value - *fixture.witness_value) > 1e-10) {
      std::ostringstream os;
      os << "witness quadratic form = " << value << ", expected " << *fixture.witness_value;
      fail(os.str());
    }
  }

  if (fixture.expected_determinant) {
    const double det = determinant(fixture.matrix);
    if (std::abs(det - *fixture.expected_determinant) > 1e-10) {
      std::ostringstream os;
      os << "determinant = " << det << ", expected " << *fixture.expected_determinant;
      fail(os.str());
    }
  }

  return failures;
}

}  // namespace clipflow
