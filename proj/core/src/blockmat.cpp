#include "ppm/blockmat.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <string>

#include "fft.hpp"
#include "ppm/error.hpp"
#include "ppm/spectral_init.hpp"

namespace ppm {

namespace {

// w (m x k, row-major) += blk (m x m) * z (m x k). K > 0 fixes k at compile time.
template <int K>
void block_product(const double* blk, const double* z, double* w, int m, std::size_t k) {
  const std::size_t cols = K > 0 ? static_cast<std::size_t>(K) : k;
  for (int a = 0; a < m; ++a) {
    double acc[K > 0 ? K : 1] = {};
    double* wa = w + static_cast<std::size_t>(a) * cols;
    for (int b = 0; b < m; ++b) {
      const double coef = blk[a * m + b];
      const double* zb = z + static_cast<std::size_t>(b) * cols;
      if constexpr (K > 0) {
        for (int c = 0; c < K; ++c) {
          acc[c] += coef * zb[c];
        }
      } else {
        for (std::size_t c = 0; c < cols; ++c) {
          wa[c] += coef * zb[c];
        }
      }
    }
    if constexpr (K > 0) {
      for (int c = 0; c < K; ++c) {
        wa[c] += acc[c];
      }
    }
  }
}

}  // namespace

CirculantBlockMatrix::CirculantBlockMatrix(int n, int m, std::vector<CirculantBlock> blocks,
                                           bool debias_applied)
    : n_(n), m_(m), debias_applied_(debias_applied) {
  if (!(n >= 1 && m >= 1)) {
    throw Error(ErrorKind::InvalidInput, "block matrix needs n >= 1 and m >= 1");
  }
  std::sort(blocks.begin(), blocks.end(), [](const CirculantBlock& a, const CirculantBlock& b) {
    return a.i != b.i ? a.i < b.i : a.j < b.j;
  });

  const auto M = static_cast<std::size_t>(m);
  edges_.reserve(blocks.size());
  columns_.reserve(blocks.size() * M);
  std::vector<std::size_t> degree(static_cast<std::size_t>(n), 0);
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    const auto& b = blocks[k];
    if (!(b.i > b.j && b.j >= 0 && b.i < n)) {
      throw Error(ErrorKind::InvalidInput, "stored block (" + std::to_string(b.i) + ", " +
                                               std::to_string(b.j) +
                                               ") must satisfy n > i > j >= 0");
    }
    if (!(b.column.size() == M)) {
      throw Error(ErrorKind::DimensionMismatch, "block column has length " +
                                                    std::to_string(b.column.size()) +
                                                    ", expected " + std::to_string(m));
    }
    if (!(k == 0 || blocks[k - 1].i != b.i || blocks[k - 1].j != b.j)) {
      throw Error(ErrorKind::InvalidInput,
                  "duplicate block (" + std::to_string(b.i) + ", " + std::to_string(b.j) + ")");
    }
    for (double v : b.column) {
      if (!std::isfinite(v)) {
        throw Error(ErrorKind::InvalidInput, "non-finite block entry");
      }
    }
    edges_.emplace_back(b.i, b.j);
    columns_.insert(columns_.end(), b.column.begin(), b.column.end());
    ++degree[b.i];
    ++degree[b.j];
  }

  // Row adjacency (CSR), neighbors of each row sorted by column index so the
  // accumulation order is fixed.
  row_start_.assign(static_cast<std::size_t>(n) + 1, 0);
  for (int r = 0; r < n; ++r) {
    row_start_[r + 1] = row_start_[r] + degree[r];
  }
  neighbors_.resize(row_start_.back());
  std::vector<std::size_t> fill(row_start_.begin(), row_start_.end() - 1);
  for (std::size_t k = 0; k < edges_.size(); ++k) {
    const auto [i, j] = edges_[k];
    neighbors_[fill[i]++] = {j, static_cast<int>(k), false, -1};
    neighbors_[fill[j]++] = {i, static_cast<int>(k), true, -1};
  }
  for (int r = 0; r < n; ++r) {
    std::sort(neighbors_.begin() + static_cast<std::ptrdiff_t>(row_start_[r]),
              neighbors_.begin() + static_cast<std::ptrdiff_t>(row_start_[r + 1]),
              [](const Neighbor& a, const Neighbor& b) { return a.col < b.col; });
  }

  if (m_ < kFftMinBlock) {
    // Observation-built matrices reuse at most m distinct columns.
    constexpr std::size_t kMaxKernels = 64;
    std::map<std::vector<double>, int> ids;
    std::vector<int> block_kernel(edges_.size());
    for (std::size_t k = 0; k < edges_.size() && ids.size() <= kMaxKernels; ++k) {
      const auto c = block_column(k);
      auto [it, inserted] =
          ids.try_emplace(std::vector<double>(c.begin(), c.end()), static_cast<int>(ids.size()));
      block_kernel[k] = it->second;
    }
    if (ids.size() <= kMaxKernels) {
      const std::size_t MM = M * M;
      expanded_.resize(ids.size() * 2 * MM);
      for (const auto& [col, id] : ids) {
        double* plain = expanded_.data() + static_cast<std::size_t>(id) * 2 * MM;
        double* transposed = plain + MM;
        for (int a = 0; a < m; ++a) {
          for (int b = 0; b < m; ++b) {
            plain[a * m + b] = col[static_cast<std::size_t>((a - b + m) % m)];
            transposed[a * m + b] = col[static_cast<std::size_t>((b - a + m) % m)];
          }
        }
      }
      for (auto& nb : neighbors_) {
        nb.kernel = 2 * block_kernel[static_cast<std::size_t>(nb.block)] + (nb.transposed ? 1 : 0);
      }
    }
  }

  if (m_ >= kFftMinBlock) {
    detail::RealFft fft(m_);
    const auto S = static_cast<std::size_t>(fft.spectrum_size());
    spectra_.resize(edges_.size() * S);
    for (std::size_t k = 0; k < edges_.size(); ++k) {
      fft.forward(block_column(k), std::span(spectra_.data() + k * S, S));
    }
  }
}

void CirculantBlockMatrix::apply(std::span<const double> in, std::span<double> out) const {
  if (!(in.size() == dim() && out.size() == dim())) {
    throw Error(ErrorKind::DimensionMismatch, "matvec operand has length " +
                                                  std::to_string(in.size()) + ", expected " +
                                                  std::to_string(dim()));
  }
  if (m_ >= kFftMinBlock) {
    apply_fft(in, out);
  } else {
    apply_direct(in.data(), out.data(), 1);
  }
}

void CirculantBlockMatrix::apply_direct(const double* in, double* out, std::size_t k) const {
  const int m = m_;
  const auto M = static_cast<std::size_t>(m);
  double scratch[kFftMinBlock * kFftMinBlock];
  for (int i = 0; i < n_; ++i) {
    double* w = out + static_cast<std::size_t>(i) * M * k;
    std::fill(w, w + M * k, 0.0);
    for (std::size_t t = row_start_[i]; t < row_start_[i + 1]; ++t) {
      const Neighbor& nb = neighbors_[t];
      const double* blk = scratch;
      if (nb.kernel >= 0) {
        blk = expanded_.data() + static_cast<std::size_t>(nb.kernel) * M * M;
      } else {
        const double* c = columns_.data() + static_cast<std::size_t>(nb.block) * M;
        for (int a = 0; a < m; ++a) {
          for (int b = 0; b < m; ++b) {
            int d = nb.transposed ? b - a : a - b;
            d += d < 0 ? m : 0;
            scratch[a * m + b] = c[d];
          }
        }
      }
      const double* z = in + static_cast<std::size_t>(nb.col) * M * k;
      switch (k) {
        case 1:
          block_product<1>(blk, z, w, m, k);
          break;
        case 2:
          block_product<2>(blk, z, w, m, k);
          break;
        case 3:
          block_product<3>(blk, z, w, m, k);
          break;
        case 4:
          block_product<4>(blk, z, w, m, k);
          break;
        case 5:
          block_product<5>(blk, z, w, m, k);
          break;
        case 6:
          block_product<6>(blk, z, w, m, k);
          break;
        case 7:
          block_product<7>(blk, z, w, m, k);
          break;
        default:
          block_product<0>(blk, z, w, m, k);
      }
    }
  }
}

void CirculantBlockMatrix::apply(const Eigen::MatrixXd& in, Eigen::MatrixXd& out) const {
  if (static_cast<std::size_t>(in.rows()) != dim()) {
    throw Error(ErrorKind::DimensionMismatch, "matvec operand has " + std::to_string(in.rows()) +
                                                  " rows, expected " + std::to_string(dim()));
  }
  out.resize(in.rows(), in.cols());
  if (m_ >= kFftMinBlock || in.cols() == 1) {
    const auto N = dim();
    for (Eigen::Index c = 0; c < in.cols(); ++c) {
      apply(std::span<const double>(in.col(c).data(), N), std::span<double>(out.col(c).data(), N));
    }
    return;
  }
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const RowMajor z = in;
  RowMajor w(in.rows(), in.cols());
  apply_direct(z.data(), w.data(), static_cast<std::size_t>(in.cols()));
  out = w;
}

void CirculantBlockMatrix::apply_fft(std::span<const double> in, std::span<double> out) const {
  detail::RealFft fft(m_);
  const auto M = static_cast<std::size_t>(m_);
  const auto S = static_cast<std::size_t>(fft.spectrum_size());

  std::vector<std::complex<double>> zf(static_cast<std::size_t>(n_) * S);
  for (int j = 0; j < n_; ++j) {
    fft.forward(in.subspan(static_cast<std::size_t>(j) * M, M), std::span(zf.data() + j * S, S));
  }

  // The transpose of a real circulant block has the conjugate spectrum.
  std::vector<std::complex<double>> acc(S);
  const double scale = 1.0 / static_cast<double>(m_);
  for (int i = 0; i < n_; ++i) {
    std::fill(acc.begin(), acc.end(), std::complex<double>{});
    for (std::size_t t = row_start_[i]; t < row_start_[i + 1]; ++t) {
      const Neighbor& nb = neighbors_[t];
      const auto* c = spectra_.data() + static_cast<std::size_t>(nb.block) * S;
      const auto* z = zf.data() + static_cast<std::size_t>(nb.col) * S;
      if (nb.transposed) {
        for (std::size_t f = 0; f < S; ++f) {
          acc[f] += std::conj(c[f]) * z[f];
        }
      } else {
        for (std::size_t f = 0; f < S; ++f) {
          acc[f] += c[f] * z[f];
        }
      }
    }
    auto w = out.subspan(static_cast<std::size_t>(i) * M, M);
    fft.inverse(acc, w);
    for (double& x : w) {
      x *= scale;
    }
  }
}

Eigen::MatrixXd CirculantBlockMatrix::to_dense() const {
  if (!(dim() <= kDenseCap)) {
    throw Error(ErrorKind::SizeCapExceeded, "dense expansion of a " + std::to_string(dim()) +
                                                "-dimensional operator exceeds the cap of " +
                                                std::to_string(kDenseCap));
  }
  Eigen::MatrixXd dense =
      Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim()), static_cast<Eigen::Index>(dim()));
  for (std::size_t k = 0; k < edges_.size(); ++k) {
    const auto [i, j] = edges_[k];
    const auto c = block_column(k);
    for (int a = 0; a < m_; ++a) {
      for (int b = 0; b < m_; ++b) {
        const double v = c[static_cast<std::size_t>(((a - b) % m_ + m_) % m_)];
        dense(i * m_ + a, j * m_ + b) = v;
        dense(j * m_ + b, i * m_ + a) = v;
      }
    }
  }
  return dense;
}

CirculantBlockMatrix build(const PairwiseObservations& obs, const NoiseDistribution& d,
                           BlockForm form) {
  const int m = obs.m();
  if (form != BlockForm::Agreement) {
    if (!(d.m() == m)) {
      throw Error(ErrorKind::DimensionMismatch,
                  "noise distribution has m = " + std::to_string(d.m()) +
                      ", observations have m = " + std::to_string(m));
    }
  }
  // A block depends only on y, so the m possible columns are built once.
  std::vector<std::vector<double>> by_residue(static_cast<std::size_t>(m));
  for (int y = 0; y < m; ++y) {
    auto& col = by_residue[static_cast<std::size_t>(y)];
    col = form == BlockForm::Agreement ? agreement_block_column(m, y) : loglik_block_column(d, y);
    if (form == BlockForm::DebiasedLoglik) {
      // 1^T L_ij 1 / m^2 equals the mean of the first column.
      const double mean = std::accumulate(col.begin(), col.end(), 0.0) / m;
      for (double& v : col) {
        v -= mean;
      }
    }
  }
  std::vector<CirculantBlock> blocks;
  blocks.reserve(obs.edges().size());
  for (const Edge& e : obs.edges()) {
    blocks.push_back({e.i, e.j, by_residue[static_cast<std::size_t>(e.y)]});
  }
  return CirculantBlockMatrix(obs.n(), m, std::move(blocks), form == BlockForm::DebiasedLoglik);
}

BlockVector matvec(const CirculantBlockMatrix& L, const BlockVector& z) {
  if (!(z.n() == static_cast<std::size_t>(L.n()) && z.m() == L.m())) {
    throw Error(ErrorKind::DimensionMismatch,
                "matvec: operator is " + std::to_string(L.n()) + "x" + std::to_string(L.m()) +
                    " blocks, vector is " + std::to_string(z.n()) + "x" + std::to_string(z.m()));
  }
  BlockVector w(z.n(), z.m());
  L.apply(z.data(), w.data());
  return w;
}

Eigen::MatrixXd expected_matrix(int n, int m, double p_obs, const NoiseDistribution& d) {
  if (!(d.m() == m)) {
    throw Error(ErrorKind::DimensionMismatch, "noise distribution does not match m");
  }
  const std::size_t dim = static_cast<std::size_t>(n) * static_cast<std::size_t>(m);
  if (!(dim <= kDenseCap)) {
    throw Error(ErrorKind::SizeCapExceeded,
                "expected matrix of dimension " + std::to_string(dim) + " exceeds the dense cap");
  }
  const double h = entropy(d);
  std::vector<double> neg_kl(static_cast<std::size_t>(m));
  for (int l = 0; l < m; ++l) {
    neg_kl[l] = -kl(d, shift_distribution(d, l));
  }

  Eigen::MatrixXd K(m, m);
  for (int a = 0; a < m; ++a) {
    for (int b = 0; b < m; ++b) {
      K(a, b) = neg_kl[((a - b) % m + m) % m] - h;
    }
  }
  Eigen::MatrixXd E =
      Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i != j) {
        E.block(i * m, j * m, m, m) = p_obs * K;
      }
    }
  }
  return E;
}

double estimate_sigma(const CirculantBlockMatrix& L, int i, int iters, double tol,
                      std::uint64_t seed, bool* converged) {
  if (!(i >= 1 && i <= L.m())) {
    throw Error(ErrorKind::InvalidInput,
                "singular value index must lie in [1, m], got " + std::to_string(i));
  }
  OrthoOptions opts;
  opts.max_iters = iters;
  opts.tol = tol;
  opts.seed = seed;
  const LowRankFactor fac = orthogonal_iteration(L, L.m(), opts);
  if (converged != nullptr) {
    *converged = fac.converged;
  }
  return fac.S[static_cast<std::size_t>(i - 1)];
}

double separation(std::span<const double> w, std::size_t ref) {
  if (!(w.size() >= 2)) {
    throw Error(ErrorKind::InvalidInput, "separation needs m >= 2");
  }
  if (!(ref < w.size())) {
    throw Error(ErrorKind::InvalidInput, "separation reference index out of range");
  }
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t l = 0; l < w.size(); ++l) {
    if (l != ref) {
      best = std::max(best, w[l]);
    }
  }
  return w[ref] - best;
}

void dump_block_csv(std::ostream& os, const CirculantBlockMatrix& L, std::size_t k) {
  if (!(k < L.num_blocks())) {
    throw Error(ErrorKind::InvalidInput, "block index out of range");
  }
  const auto dense = expand_circulant(L.block_column(k));
  const int m = L.m();
  os << "alpha,beta,value\n";
  char buf[64];
  for (int a = 0; a < m; ++a) {
    for (int b = 0; b < m; ++b) {
      std::snprintf(buf, sizeof buf, "%.17g", dense[static_cast<std::size_t>(a) * m + b]);
      os << a << ',' << b << ',' << buf << '\n';
    }
  }
}

}  // namespace ppm
