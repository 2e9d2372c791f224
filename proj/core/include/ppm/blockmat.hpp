#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "ppm/likelihood.hpp"
#include "ppm/types.hpp"

namespace ppm {

enum class BlockForm {
  Loglik,          ///< (L_ij)_{a,b} = log P0(y_ij - a + b)
  Agreement,       ///< identity circularly shifted by y_ij
  DebiasedLoglik,  ///< Loglik minus each block's mean times 1 1^T
};

/// Largest nm for which a dense expansion is built.
inline constexpr std::size_t kDenseCap = 4096;

/// Direct O(m^2) block products are used below this block size; FFTs above.
inline constexpr int kFftMinBlock = 8;

/// One stored block (i, j), i > j. Its entries are
/// L_ij(a, b) = column[(a - b) mod m]; the mirror block L_ji is its transpose.
struct CirculantBlock {
  int i;
  int j;
  std::vector<double> column;
};

/// Symmetric nm x nm matrix of m x m circulant blocks supported on Omega.
/// Diagonal blocks and unobserved blocks are zero. Immutable after
/// construction.
class CirculantBlockMatrix {
 public:
  CirculantBlockMatrix(int n, int m, std::vector<CirculantBlock> blocks,
                       bool debias_applied = false);

  int n() const noexcept { return n_; }
  int m() const noexcept { return m_; }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(n_) * m_; }
  std::size_t num_blocks() const noexcept { return edges_.size(); }
  bool debias_applied() const noexcept { return debias_applied_; }

  /// Stored (i > j) block k.
  int block_row(std::size_t k) const { return edges_[k].first; }
  int block_col(std::size_t k) const { return edges_[k].second; }
  std::span<const double> block_column(std::size_t k) const {
    return {columns_.data() + k * static_cast<std::size_t>(m_), static_cast<std::size_t>(m_)};
  }

  /// out = L * in, both of length nm.
  void apply(std::span<const double> in, std::span<double> out) const;
  /// out = L * in for an nm x k matrix `in`.
  void apply(const Eigen::MatrixXd& in, Eigen::MatrixXd& out) const;

  /// Dense expansion. Throws Error(SizeCapExceeded) above kDenseCap.
  Eigen::MatrixXd to_dense() const;

 private:
  struct Neighbor {
    int col;    // block column index j of row i
    int block;  // stored block id
    bool transposed;
    int kernel;  // index into expanded_ when blocks are deduplicated, else -1
  };

  // Row-major operands: element (row, c) of an nm x k operand sits at [row * k + c].
  void apply_direct(const double* in, double* out, std::size_t k) const;
  void apply_fft(std::span<const double> in, std::span<double> out) const;

  int n_;
  int m_;
  bool debias_applied_;
  std::vector<std::pair<int, int>> edges_;
  std::vector<double> columns_;
  std::vector<std::size_t> row_start_;
  std::vector<Neighbor> neighbors_;
  std::vector<std::complex<double>> spectra_;
  // Dense m x m expansions (both orientations) of the distinct block columns,
  // kept for small m when few distinct columns occur.
  std::vector<double> expanded_;
};

/// Input matrix from observations. Loglik forms need d strictly above the
/// probability floor; Agreement ignores d.
CirculantBlockMatrix build(const PairwiseObservations& obs, const NoiseDistribution& d,
                           BlockForm form);

/// w_i = sum_j L_ij z_j.
BlockVector matvec(const CirculantBlockMatrix& L, const BlockVector& z);

/// E[L] for ground truth with all labels equal: off-diagonal blocks p_obs * K
/// with K(a, b) = -KL(P0 || P_{a-b}) - H(P0). Dense; nm <= kDenseCap.
Eigen::MatrixXd expected_matrix(int n, int m, double p_obs, const NoiseDistribution& d);

/// i-th largest singular value (1-based) of L from a rank-m orthogonal
/// iteration. `converged` (optional) reports whether the subspace settled.
double estimate_sigma(const CirculantBlockMatrix& L, int i, int iters, double tol,
                      std::uint64_t seed = 0, bool* converged = nullptr);

/// a[ref] - max_{l != ref} a[l].
double separation(std::span<const double> w, std::size_t ref = 0);

/// Write stored block k as `alpha,beta,value` rows.
void dump_block_csv(std::ostream& os, const CirculantBlockMatrix& L, std::size_t k);

}  // namespace ppm
