#pragma once

#include <optional>
#include <string>
#include <vector>

#include "clipflow/matrix.hpp"
#include "clipflow/spectral.hpp"

namespace clipflow {

// A hard-coded counterexample matrix together with the classification
// facts it is expected to witness.
struct CounterexampleFixture {
  std::string name;
  std::string statement;
  DenseMatrix matrix;
  // Expected classification; nullopt means "not part of this fixture's claim".
  std::optional<bool> expect_symmetric;
  std::optional<bool> expect_positive_quadratic_form;
  std::optional<bool> expect_positive_eigenvalues;
  // Known eigenvalues when the fixture pins them exactly.
  std::vector<ComplexScalar> known_eigenvalues;
  // Quadratic-form witness: x with x^T A x = witness_value.
  std::optional<Vector> witness_vector;
  std::optional<double> witness_value;
  std::optional<double> expected_determinant;
  std::string note;
};

// Four counterexample sets separating "positive in quadratic form" from
// "positive in eigenvalues" for products and layer-sums of positive
// definite matrices with positive diagonal scalings. Matrices are
// hard-coded exactly; includes the layer-sum variant whose top-left entry
// is lowered to 0.7, which flips an eigenvalue negative.
std::vector<CounterexampleFixture> positivity_counterexamples();

// Evaluates one fixture against the live classifiers; returns a list of
// human-readable failures (empty = pass).
std::vector<std::string> check_fixture(const CounterexampleFixture& fixture);

}  // namespace clipflow
