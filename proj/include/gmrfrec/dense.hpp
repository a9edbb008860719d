#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "gmrfrec/common.hpp"
#include "gmrfrec/preprocess.hpp"

namespace gmrfrec {

enum class SolverKind { dense, dense_mean_constrained, sparse };

inline std::string solver_name(SolverKind k) {
  switch (k) {
    case SolverKind::dense: return "dense";
    case SolverKind::dense_mean_constrained: return "dense-mean-constrained";
    case SolverKind::sparse: return "sparse";
  }
  return "?";
}

struct ModelMeta {
  SolverKind solver = SolverKind::dense;
  double lambda = 0.0;
  double alpha = 0.0;
  bool center = true;
  double r = 0.0;                // sparse solver only
  double target_density = 1.0;   // sparse solver only
  std::uint32_t cap = 1000;      // sparse solver only
};

// Item-item coefficients with a structurally zero diagonal: the diagonal is
// never stored, so reading it yields exact 0.0 for every model.
struct WeightMatrix {
  std::size_t m = 0;
  SparseMat B;  // column-major
  ModelMeta meta;

  Matrix dense() const { return Matrix(B); }
  std::size_t nnz() const { return static_cast<std::size_t>(B.nonZeros()); }
  double density() const {
    return m == 0 ? 0.0 : static_cast<double>(nnz()) / (static_cast<double>(m) * static_cast<double>(m));
  }
};

namespace detail {

inline SparseMat compress_zero_diagonal(const Matrix& Bd) {
  const Eigen::Index m = Bd.rows();
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(Bd.size()));
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      if (j != i && Bd(j, i) != 0.0) trips.emplace_back(j, i, Bd(j, i));
    }
  }
  SparseMat B(m, m);
  B.setFromTriplets(trips.begin(), trips.end());
  B.makeCompressed();
  return B;
}

inline Matrix invert_spd(const Matrix& S) {
  Eigen::LLT<Matrix> llt(S);
  if (llt.info() != Eigen::Success) {
    // the factorization failed, so spend the extra O(m^3) on a diagnostic
    Eigen::SelfAdjointEigenSolver<Matrix> es(S, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff();
    throw numerical_error(
        "Gram matrix is not positive definite (smallest eigenvalue " + std::to_string(lo) +
        "); duplicated item columns or lambda = 0 are the usual causes");
  }
  return llt.solve(Matrix::Identity(S.rows(), S.cols()));
}

}  // namespace detail

// Closed-form estimate from the inverse of the regularized Gram matrix:
// B = I - C * dMat(1 ./ diag(C)) with C = S^-1, i.e. B_ji = -C_ji / C_ii for
// j != i. The diagonal is written as literal zero rather than trusting the
// cancellation.
inline WeightMatrix solve_dense(const GramMatrix& S) {
  const Eigen::Index m = S.S.rows();
  Matrix C = detail::invert_spd(S.S);
  Matrix Bd(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    Bd.col(i) = -C.col(i) / C(i, i);
    Bd(i, i) = 0.0;
  }
  if (!Bd.allFinite()) throw numerical_error("non-finite coefficients in closed-form solution");

  WeightMatrix w;
  w.m = static_cast<std::size_t>(m);
  w.B = detail::compress_zero_diagonal(Bd);
  w.meta.solver = SolverKind::dense;
  w.meta.lambda = S.lambda;
  return w;
}

// Variant with the additional eigenvector constraint mu^T B = mu^T, which
// makes the estimate invariant under column-centering of the training data:
// B = I - (I - C mu mu^T / (mu^T C mu)) * C * dMat(gamma),
// gamma_i = 1 / diag((I - C mu mu^T / (mu^T C mu)) * C)_i.
inline WeightMatrix solve_dense_mean_constrained(const GramMatrix& S, const Vector& mu) {
  const Eigen::Index m = S.S.rows();
  if (mu.size() != m) throw config_error("mean vector length does not match Gram size");
  if (mu.isZero(0.0)) throw config_error("mean vector must be nonzero");

  Matrix C = detail::invert_spd(S.S);
  const Vector cmu = C * mu;
  const double denom = mu.dot(cmu);
  if (!(denom > 0.0) || !std::isfinite(denom)) {
    throw numerical_error("mu^T C mu is not positive; mean vector lies in a degenerate direction");
  }
  // (I - C mu mu^T / denom) * C = C - (C mu)(C mu)^T / denom since C is symmetric
  Matrix M = C - (cmu * cmu.transpose()) / denom;

  Matrix Bd(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    if (M(i, i) == 0.0 || !std::isfinite(M(i, i))) {
      throw numerical_error("degenerate diagonal in mean-constrained solution at item " +
                            std::to_string(i));
    }
    Bd.col(i) = -M.col(i) / M(i, i);
    Bd(i, i) = 0.0;
  }
  if (!Bd.allFinite()) throw numerical_error("non-finite coefficients in mean-constrained solution");

  WeightMatrix w;
  w.m = static_cast<std::size_t>(m);
  w.B = detail::compress_zero_diagonal(Bd);
  w.meta.solver = SolverKind::dense_mean_constrained;
  w.meta.lambda = S.lambda;
  return w;
}

// ||X - X B||_F^2 + lambda ||B||_F^2 evaluated through the Gram identity
// trace((I - B)^T (X^T X) (I - B)) + lambda ||B||_F^2. Verification only;
// gram_raw is X^T X without ridge or 1/n normalization.
inline double objective(const Matrix& gram_raw, const Matrix& B, double lambda) {
  if (gram_raw.rows() != B.rows() || gram_raw.cols() != B.cols()) {
    throw config_error("objective: shape mismatch");
  }
  const Matrix E = Matrix::Identity(B.rows(), B.cols()) - B;
  return (E.transpose() * gram_raw * E).trace() + lambda * B.squaredNorm();
}

}  // namespace gmrfrec
