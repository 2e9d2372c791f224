#include "ppm/spectral_init.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "ppm/error.hpp"
#include "ppm/rng.hpp"
#include "ppm/simplex.hpp"

namespace ppm {

SymmetricOperator as_operator(const CirculantBlockMatrix& L) {
  SymmetricOperator op;
  op.dim = L.dim();
  op.apply = [&L](const Eigen::MatrixXd& in, Eigen::MatrixXd& out) { L.apply(in, out); };
  return op;
}

Eigen::VectorXd LowRankFactor::column(std::size_t c) const {
  Eigen::VectorXd coeff(rank);
  for (int k = 0; k < rank; ++k) {
    coeff(k) = S[k] * V(static_cast<Eigen::Index>(c), k);
  }
  return U * coeff;
}

namespace {

Eigen::MatrixXd thin_q(const Eigen::MatrixXd& W) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(W);
  return qr.householderQ() * Eigen::MatrixXd::Identity(W.rows(), W.cols());
}

}  // namespace

LowRankFactor orthogonal_iteration(const SymmetricOperator& op, int r, const OrthoOptions& opts) {
  const auto N = static_cast<Eigen::Index>(op.dim);
  if (!(r >= 1 && static_cast<std::size_t>(r) <= op.dim)) {
    throw Error(ErrorKind::InvalidInput, "factorization rank " + std::to_string(r) +
                                             " must lie in [1, " + std::to_string(op.dim) + "]");
  }
  if (!(opts.max_iters >= 0 && opts.tol >= 0.0)) {
    throw Error(ErrorKind::InvalidInput, "orthogonal iteration needs max_iters >= 0 and tol >= 0");
  }

  Rng rng(opts.seed);
  std::normal_distribution<double> gauss;
  Eigen::MatrixXd U(N, r);
  for (Eigen::Index c = 0; c < r; ++c) {
    for (Eigen::Index k = 0; k < N; ++k) {
      U(k, c) = gauss(rng);
    }
  }
  U = thin_q(U);

  LowRankFactor fac;
  fac.rank = r;
  fac.residual = std::numeric_limits<double>::infinity();
  Eigen::MatrixXd W;
  bool zero_operator = false;
  for (int t = 0; t < opts.max_iters; ++t) {
    op.apply(U, W);
    if (W.norm() == 0.0) {
      zero_operator = true;
      fac.residual = 0.0;
      fac.converged = true;
      fac.iterations = t + 1;
      break;
    }
    Eigen::MatrixXd next = thin_q(W);
    // ||P' - P||_F = sqrt(2) ||(I - P) U'||_F for equal-rank subspaces.
    const Eigen::MatrixXd R = next - U * (U.transpose() * next);
    fac.residual = std::sqrt(2.0) * R.norm();
    U = std::move(next);
    fac.iterations = t + 1;
    if (fac.residual <= opts.tol) {
      fac.converged = true;
      break;
    }
  }

  // Rayleigh-Ritz on the final subspace.
  if (zero_operator) {
    W = Eigen::MatrixXd::Zero(N, r);
  } else {
    op.apply(U, W);
  }
  Eigen::MatrixXd B = U.transpose() * W;
  B = 0.5 * (B + B.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(B);
  std::vector<int> order(static_cast<std::size_t>(r));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return std::abs(eig.eigenvalues()(a)) > std::abs(eig.eigenvalues()(b));
  });
  Eigen::MatrixXd Q(r, r);
  fac.S.resize(static_cast<std::size_t>(r));
  fac.eigenvalues.resize(static_cast<std::size_t>(r));
  for (int k = 0; k < r; ++k) {
    Q.col(k) = eig.eigenvectors().col(order[k]);
    const double lambda = eig.eigenvalues()(order[k]);
    fac.eigenvalues[k] = lambda;
    fac.S[k] = std::abs(lambda);
  }
  fac.U = U * Q;
  fac.V = fac.U;
  for (int k = 0; k < r; ++k) {
    if (fac.eigenvalues[k] < 0.0) {
      fac.V.col(k) *= -1.0;
    }
  }
  return fac;
}

LowRankFactor orthogonal_iteration(const CirculantBlockMatrix& L, int r, const OrthoOptions& opts) {
  return orthogonal_iteration(as_operator(L), r, opts);
}

BlockVector initial_guess(const CirculantBlockMatrix& L, const LowRankFactor& fac, Scale mu0,
                          std::uint64_t seed, std::size_t* column_out) {
  if (!(fac.U.rows() == static_cast<Eigen::Index>(L.dim()))) {
    throw Error(ErrorKind::DimensionMismatch,
                "factorization does not match the operator dimension");
  }
  Rng rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, L.dim() - 1);
  const std::size_t c = pick(rng);
  if (column_out != nullptr) {
    *column_out = c;
  }
  const Eigen::VectorXd col = fac.column(c);
  BlockVector zhat(static_cast<std::size_t>(L.n()), L.m(),
                   std::vector<double>(col.data(), col.data() + col.size()));
  return project_blockwise(zhat, mu0);
}

}  // namespace ppm
