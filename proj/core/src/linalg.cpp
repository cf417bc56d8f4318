// Copyright 2026 The qsc Authors. SPDX-License-Identifier: Apache-2.0
#include "qsc/linalg.hpp"

#include <unsupported/Eigen/MatrixFunctions>

namespace qsc {

void require(bool cond, const std::string& what) {
  if (!cond) throw InvalidArgument(what);
}

void require_same_dim(const Mat& a, const Mat& b, const std::string& what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw InvalidArgument(what + ": dimension mismatch (" + std::to_string(a.rows()) + "x" +
                          std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                          std::to_string(b.cols()) + ")");
  }
}

void require_square(const Mat& a, const std::string& what) {
  if (a.rows() != a.cols()) {
    throw InvalidArgument(what + ": expected a square matrix, got " + std::to_string(a.rows()) +
                          "x" + std::to_string(a.cols()));
  }
}

Mat herm(const Mat& a) { return 0.5 * (a + a.adjoint()); }

Mat commutator(const Mat& a, const Mat& b) { return a * b - b * a; }

double hermitian_defect(const Mat& a) { return (a - a.adjoint()).norm(); }

double unitary_defect(const Mat& a) {
  const Mat id = Mat::Identity(a.rows(), a.cols());
  return std::max((a * a.adjoint() - id).norm(), (a.adjoint() * a - id).norm());
}

double min_eigenvalue(const Mat& hermitian) {
  if (hermitian.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Mat> es(herm(hermitian), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

bool is_hermitian(const Mat& a, double tol) {
  return a.rows() == a.cols() && hermitian_defect(a) <= tol * std::max(1.0, a.norm());
}

bool is_unitary(const Mat& a, double tol) {
  return a.rows() == a.cols() && unitary_defect(a) <= tol;
}

bool is_psd(const Mat& a, double tol) { return is_hermitian(a, tol) && min_eigenvalue(a) >= -tol; }

Mat psd_sqrt(const Mat& a) {
  Eigen::SelfAdjointEigenSolver<Mat> es(herm(a));
  const RVec ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.cast<cplx>().asDiagonal() * es.eigenvectors().adjoint();
}

Mat expm(const Mat& a) { return a.exp(); }

Mat solve_sylvester(const Mat& a, const Mat& b, const Mat& c) {
  require_square(a, "solve_sylvester(A)");
  require_square(b, "solve_sylvester(B)");
  require(c.rows() == a.rows() && c.cols() == b.rows(), "solve_sylvester: C has wrong shape");
  Eigen::ComplexSchur<Mat> sa(a), sb(b);
  const Mat& t = sa.matrixT();
  const Mat& s = sb.matrixT();
  const Mat ct = sa.matrixU().adjoint() * c * sb.matrixU();
  const Eigen::Index n = a.rows(), m = b.rows();
  Mat y = Mat::Zero(n, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    Vec rhs = ct.col(j);
    for (Eigen::Index i = 0; i < j; ++i) rhs -= s(i, j) * y.col(i);
    Mat tj = t;
    tj.diagonal().array() += s(j, j);
    const double scale = std::max(1.0, tj.cwiseAbs().maxCoeff());
    for (Eigen::Index i = 0; i < n; ++i) {
      if (std::abs(tj(i, i)) <= 1e-14 * scale) {
        throw NumericalError("solve_sylvester: spectra of A and -B intersect");
      }
    }
    y.col(j) = tj.triangularView<Eigen::Upper>().solve(rhs);
  }
  return sa.matrixU() * y * sb.matrixU().adjoint();
}

Mat solve_lyapunov(const Mat& a, const Mat& c) {
  return solve_sylvester(a.adjoint(), a, -c);
}

}  // namespace qsc
