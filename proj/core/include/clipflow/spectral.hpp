#pragma once

#include <complex>
#include <vector>

#include "clipflow/matrix.hpp"

namespace clipflow {

using ComplexScalar = std::complex<double>;

// Spectrum classification of a (possibly non-symmetric) square matrix.
// "Positive in eigenvalues" and "positive in quadratic form" are distinct
// notions for non-symmetric matrices; they coincide on symmetric ones.
struct SpectrumReport {
  std::vector<ComplexScalar> eigenvalues;  // descending real part, ties by descending imag
  bool is_symmetric = false;
  bool positive_in_eigenvalues = false;
  bool positive_in_quadratic_form = false;
};

// An eigenvalue counts as positive iff its real part exceeds this.
double positivity_tolerance(const DenseMatrix& m);

// Max entry deviation allowed before a matrix is considered asymmetric.
double symmetry_tolerance(const DenseMatrix& m);

bool is_symmetric_within_tolerance(const DenseMatrix& m);

// All eigenvalues (with multiplicity) of a general real square matrix.
// Balances, reduces to upper Hessenberg, then runs shifted QR with 2x2
// block deflation for complex conjugate pairs. Dimension capped at 512.
// Throws on non-square input or when the iteration budget (100*n sweeps)
// is exhausted, which signals severe ill-conditioning.
std::vector<ComplexScalar> eigenvalues_general(const DenseMatrix& m);

// Real eigenvalues of a symmetric matrix, descending. Cyclic Jacobi
// rotations until the off-diagonal Frobenius norm drops below 1e-12*|m|.
// Throws if the input is asymmetric beyond tolerance.
std::vector<double> eigenvalues_symmetric(const DenseMatrix& m);

// True iff x^T m x > 0 for every nonzero x, decided via the minimum
// eigenvalue of the symmetric part (m + m^T)/2.
bool is_positive_quadratic_form(const DenseMatrix& m);

// Fills all flags and the sorted spectrum for a square matrix.
SpectrumReport classify_spectrum(const DenseMatrix& m);

void sort_descending(std::vector<ComplexScalar>& eigenvalues);

}  // namespace clipflow
