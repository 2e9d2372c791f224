#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "ppm/blockmat.hpp"
#include "ppm/types.hpp"

namespace ppm {

/// A symmetric linear operator on R^dim, applied to a block of columns.
struct SymmetricOperator {
  std::size_t dim = 0;
  std::function<void(const Eigen::MatrixXd& in, Eigen::MatrixXd& out)> apply;
};

SymmetricOperator as_operator(const CirculantBlockMatrix& L);

struct OrthoOptions {
  int max_iters = 200;
  /// Stop once ||U_t U_t^T - U_{t-1} U_{t-1}^T||_F <= tol.
  double tol = 1e-8;
  std::uint64_t seed = 0;
};

/// Rank-r factorization L_hat = U diag(S) V^T of a symmetric operator.
///
/// U has orthonormal columns spanning the dominant (largest-magnitude)
/// invariant subspace; S holds the corresponding singular values in
/// nonincreasing order and V = U diag(sign(lambda)).
struct LowRankFactor {
  Eigen::MatrixXd U;
  std::vector<double> S;
  Eigen::MatrixXd V;
  std::vector<double> eigenvalues;  ///< signed Ritz values, same order as S
  int rank = 0;
  int iterations = 0;
  double residual = 0.0;
  bool converged = false;

  /// Column c of U diag(S) V^T.
  Eigen::VectorXd column(std::size_t c) const;
};

/// Orthogonal (block power) iteration with Householder QR and a final
/// Rayleigh-Ritz step. Deterministic for a given seed. When max_iters is hit
/// the best estimate is returned with converged = false.
LowRankFactor orthogonal_iteration(const SymmetricOperator& op, int r,
                                   const OrthoOptions& opts = {});
LowRankFactor orthogonal_iteration(const CirculantBlockMatrix& L, int r,
                                   const OrthoOptions& opts = {});

/// z0 = P(mu0 * z_hat) where z_hat is a uniformly chosen (seeded) column of
/// the low-rank approximation. `column_out`, if given, receives the index.
BlockVector initial_guess(const CirculantBlockMatrix& L, const LowRankFactor& fac, Scale mu0,
                          std::uint64_t seed, std::size_t* column_out = nullptr);

}  // namespace ppm
