// Copyright 2026 The qsc Authors. SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace qsc {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;
using RVec = Eigen::VectorXd;

inline constexpr cplx kI{0.0, 1.0};

/// Invalid input: dimension mismatch, broken precondition, malformed data.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A computation refused because it would exceed a configured budget.
class ResourceLimit : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numerical failure: divergence, blow-up, loss of stabilizability.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void require(bool cond, const std::string& what);
void require_same_dim(const Mat& a, const Mat& b, const std::string& what);
void require_square(const Mat& a, const std::string& what);

Mat herm(const Mat& a);
Mat commutator(const Mat& a, const Mat& b);
double hermitian_defect(const Mat& a);
double unitary_defect(const Mat& a);
double min_eigenvalue(const Mat& hermitian);
bool is_hermitian(const Mat& a, double tol = 1e-10);
bool is_unitary(const Mat& a, double tol = 1e-10);
bool is_psd(const Mat& a, double tol = 1e-10);

/// Principal square root of a Hermitian PSD matrix (eigenvalues clipped at 0).
Mat psd_sqrt(const Mat& a);

Mat expm(const Mat& a);

/// Solves A* X + X A + C = 0 for X (A, C complex square).
Mat solve_lyapunov(const Mat& a, const Mat& c);

/// Solves A X + X B = C by the complex Schur method.
Mat solve_sylvester(const Mat& a, const Mat& b, const Mat& c);

}  // namespace qsc
