#include "ppm/matching.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <string>

#include "csv.hpp"
#include "ppm/error.hpp"
#include "ppm/rng.hpp"

namespace ppm {

Permutation::Permutation(std::vector<int> perm) : perm_(std::move(perm)) {
  std::vector<bool> seen(perm_.size(), false);
  for (int v : perm_) {
    if (!(v >= 0 && static_cast<std::size_t>(v) < perm_.size() && !seen[v])) {
      throw Error(ErrorKind::InvalidInput, "permutation images must form a bijection on [0, m)");
    }
    seen[v] = true;
  }
}

Permutation Permutation::identity(int m) {
  std::vector<int> p(static_cast<std::size_t>(m));
  std::iota(p.begin(), p.end(), 0);
  return Permutation(std::move(p));
}

Permutation Permutation::inverse() const {
  std::vector<int> inv(perm_.size());
  for (std::size_t k = 0; k < perm_.size(); ++k) {
    inv[perm_[k]] = static_cast<int>(k);
  }
  return Permutation(std::move(inv));
}

Permutation Permutation::compose(const Permutation& other) const {
  // (A B)(k, l) = 1 iff l = b(a(k)).
  if (!(other.size() == size())) {
    throw Error(ErrorKind::DimensionMismatch, "permutation sizes differ");
  }
  std::vector<int> out(perm_.size());
  for (std::size_t k = 0; k < perm_.size(); ++k) {
    out[k] = other.perm_[perm_[k]];
  }
  return Permutation(std::move(out));
}

Eigen::MatrixXd Permutation::matrix() const {
  const int m = size();
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(m, m);
  for (int k = 0; k < m; ++k) {
    X(k, perm_[k]) = 1.0;
  }
  return X;
}

double assignment_score(const Eigen::MatrixXd& M, const Permutation& perm) {
  if (!(M.rows() == perm.size() && M.cols() == perm.size())) {
    throw Error(ErrorKind::DimensionMismatch, "score matrix and permutation differ in size");
  }
  double s = 0.0;
  for (int k = 0; k < perm.size(); ++k) {
    s += M(k, perm[k]);
  }
  return s;
}

namespace {

/// Maximum-weight assignment with the optimal dual potentials: cost
/// -M(r, c) - u[r] - v[c] is nonnegative everywhere and zero on the matching.
struct DualAssignment {
  std::vector<int> col_of_row;
  std::vector<double> u, v;
};

DualAssignment hungarian_max(const Eigen::MatrixXd& M) {
  const auto k = static_cast<std::size_t>(M.rows());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(k + 1, 0.0), v(k + 1, 0.0);
  std::vector<std::size_t> p(k + 1, 0), way(k + 1, 0);
  std::vector<double> minv(k + 1);
  std::vector<char> used(k + 1);
  auto cost = [&](std::size_t r, std::size_t c) {
    return -M(static_cast<Eigen::Index>(r - 1), static_cast<Eigen::Index>(c - 1));
  };

  for (std::size_t i = 1; i <= k; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= k; ++j) {
        if (used[j]) {
          continue;
        }
        const double cur = cost(i0, j) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= k; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  DualAssignment out;
  out.col_of_row.resize(k);
  out.u.assign(u.begin() + 1, u.end());
  out.v.assign(v.begin() + 1, v.end());
  for (std::size_t j = 1; j <= k; ++j) {
    out.col_of_row[p[j] - 1] = static_cast<int>(j - 1);
  }
  return out;
}

void check_square_finite(const Eigen::MatrixXd& M) {
  if (!(M.rows() == M.cols() && M.rows() >= 1)) {
    throw Error(ErrorKind::InvalidInput, "assignment needs a non-empty square matrix");
  }
  if (!M.allFinite()) {
    throw Error(ErrorKind::InvalidInput, "assignment matrix has non-finite entries");
  }
}

}  // namespace

Assignment solve_assignment(const Eigen::MatrixXd& M) {
  check_square_finite(M);
  Permutation perm(hungarian_max(M).col_of_row);
  return {perm, assignment_score(M, perm)};
}

Permutation lap_project(const Eigen::MatrixXd& M) {
  check_square_finite(M);
  const int m = static_cast<int>(M.rows());
  const DualAssignment dual = hungarian_max(M);
  // Optimal assignments are exactly the perfect matchings on tight edges.
  const double tol = 1e-9 * std::max(1.0, M.cwiseAbs().maxCoeff());
  auto tight = [&](int r, int c) { return -M(r, c) - dual.u[r] - dual.v[c] <= tol; };

  std::vector<int> col_of = dual.col_of_row;
  std::vector<int> row_of(static_cast<std::size_t>(m));
  for (int r = 0; r < m; ++r) {
    row_of[col_of[r]] = r;
  }

  // Rows 0..k-1 are fixed. Moving row k to column c frees col_of[k]; this
  // keeps a tight perfect matching iff an alternating path leads from the
  // current owner of c to the freed column through unfixed rows.
  std::vector<int> from_row(static_cast<std::size_t>(m));
  std::vector<char> seen(static_cast<std::size_t>(m));
  std::vector<int> queue;
  for (int k = 0; k < m; ++k) {
    for (int c = 0; c < col_of[k]; ++c) {
      if (row_of[c] < k || !tight(k, c)) {
        continue;
      }
      const int target = col_of[k];
      const int start = row_of[c];
      std::fill(seen.begin(), seen.end(), 0);
      seen[c] = 1;
      queue.assign(1, start);
      int found_row = -1;
      for (std::size_t head = 0; head < queue.size() && found_row < 0; ++head) {
        const int r = queue[head];
        for (int q = 0; q < m; ++q) {
          if (seen[q] || row_of[q] < k || !tight(r, q)) {
            continue;
          }
          seen[q] = 1;
          if (q == target) {
            found_row = r;
            break;
          }
          from_row[row_of[q]] = r;
          queue.push_back(row_of[q]);
        }
      }
      if (found_row < 0) {
        continue;
      }
      // Each row on the path takes the column of its successor.
      int r = found_row;
      int take = target;
      for (;;) {
        const int old = col_of[r];
        col_of[r] = take;
        row_of[take] = r;
        if (r == start) {
          break;
        }
        take = old;
        r = from_row[r];
      }
      col_of[k] = c;
      row_of[c] = k;
      break;
    }
  }
  return Permutation(std::move(col_of));
}

MatchObservations::MatchObservations(int n, int m, std::vector<MatchBlock> blocks)
    : n_(n), m_(m), blocks_(std::move(blocks)) {
  if (!(n >= 1 && m >= 1)) {
    throw Error(ErrorKind::InvalidInput, "match observations need n, m >= 1");
  }
  std::sort(blocks_.begin(), blocks_.end(), [](const MatchBlock& a, const MatchBlock& b) {
    return a.i != b.i ? a.i < b.i : a.j < b.j;
  });
  rows_.assign(static_cast<std::size_t>(n), {});
  for (std::size_t k = 0; k < blocks_.size(); ++k) {
    const auto& b = blocks_[k];
    if (!(b.i > b.j && b.j >= 0 && b.i < n)) {
      throw Error(ErrorKind::InvalidInput, "match block (" + std::to_string(b.i) + ", " +
                                               std::to_string(b.j) +
                                               ") must satisfy n > i > j >= 0");
    }
    if (!(b.scores.rows() == m && b.scores.cols() == m)) {
      throw Error(ErrorKind::DimensionMismatch, "match block must be m x m");
    }
    if (!(k == 0 || blocks_[k - 1].i != b.i || blocks_[k - 1].j != b.j)) {
      throw Error(ErrorKind::InvalidInput, "duplicate match block");
    }
    rows_[b.i].emplace_back(b.j, static_cast<int>(k));
    rows_[b.j].emplace_back(b.i, static_cast<int>(k));
  }
  for (auto& r : rows_) {
    std::sort(r.begin(), r.end());
  }
}

void MatchObservations::apply(const Eigen::MatrixXd& in, Eigen::MatrixXd& out) const {
  const Eigen::Index dim = static_cast<Eigen::Index>(n_) * m_;
  if (!(in.rows() == dim)) {
    throw Error(ErrorKind::DimensionMismatch, "match operator operand has wrong height");
  }
  out = Eigen::MatrixXd::Zero(dim, in.cols());
  for (int i = 0; i < n_; ++i) {
    auto dst = out.middleRows(static_cast<Eigen::Index>(i) * m_, m_);
    for (const auto& [j, k] : rows_[i]) {
      const auto& b = blocks_[static_cast<std::size_t>(k)];
      const auto src = in.middleRows(static_cast<Eigen::Index>(j) * m_, m_);
      if (b.i == i) {
        dst.noalias() += b.scores * src;
      } else {
        dst.noalias() += b.scores.transpose() * src;
      }
    }
  }
}

SymmetricOperator MatchObservations::as_operator() const {
  SymmetricOperator op;
  op.dim = static_cast<std::size_t>(n_) * static_cast<std::size_t>(m_);
  op.apply = [this](const Eigen::MatrixXd& in, Eigen::MatrixXd& out) { apply(in, out); };
  return op;
}

Eigen::MatrixXd MatchObservations::to_dense() const {
  const Eigen::Index dim = static_cast<Eigen::Index>(n_) * m_;
  if (!(static_cast<std::size_t>(dim) <= kDenseCap)) {
    throw Error(ErrorKind::SizeCapExceeded, "dense match matrix exceeds the cap");
  }
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(dim, dim);
  for (const auto& b : blocks_) {
    D.block(b.i * m_, b.j * m_, m_, m_) = b.scores;
    D.block(b.j * m_, b.i * m_, m_, m_) = b.scores.transpose();
  }
  return D;
}

namespace {

std::vector<Permutation> round_blocks(const Eigen::MatrixXd& Y, int n, int m) {
  std::vector<Permutation> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    out.push_back(lap_project(Y.middleRows(static_cast<Eigen::Index>(i) * m, m)));
  }
  return out;
}

Eigen::MatrixXd stack(std::span<const Permutation> perms, int m) {
  Eigen::MatrixXd Z = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(perms.size()) * m, m);
  for (std::size_t i = 0; i < perms.size(); ++i) {
    for (int k = 0; k < m; ++k) {
      Z(static_cast<Eigen::Index>(i) * m + k, perms[i][k]) = 1.0;
    }
  }
  return Z;
}

}  // namespace

MatchReport match_solve(const MatchObservations& obs, int iterations, std::uint64_t seed,
                        const std::vector<Permutation>* truth, const OrthoOptions& init) {
  const int n = obs.n();
  const int m = obs.m();
  if (obs.blocks().empty()) {
    throw Error(ErrorKind::InvalidInput, "match_solve needs at least one observed block");
  }
  if (!(iterations >= 0)) {
    throw Error(ErrorKind::InvalidInput, "iteration budget must be >= 0");
  }
  if (truth != nullptr) {
    if (!(truth->size() == static_cast<std::size_t>(n))) {
      throw Error(ErrorKind::DimensionMismatch, "truth must hold one permutation per image");
    }
  }

  MatchReport rep;
  if (truth != nullptr) {
    rep.input_rate = pairwise_mismatch_rate(obs, *truth);
  }

  OrthoOptions opts = init;
  opts.seed = derive_seed(seed, 1);
  const LowRankFactor fac = orthogonal_iteration(obs.as_operator(), m, opts);

  Rng rng(derive_seed(seed, 2));
  std::uniform_int_distribution<int> pick(0, n - 1);
  const int c = pick(rng);
  rep.init_column_block = static_cast<std::size_t>(c);
  Eigen::MatrixXd coeff(fac.rank, m);
  for (int k = 0; k < fac.rank; ++k) {
    for (int q = 0; q < m; ++q) {
      coeff(k, q) = fac.S[k] * fac.V(static_cast<Eigen::Index>(c) * m + q, k);
    }
  }
  rep.estimates = round_blocks(fac.U * coeff, n, m);
  if (truth != nullptr) {
    rep.rate_trace.push_back(mismatch_rate(rep.estimates, *truth));
  }

  Eigen::MatrixXd Y;
  for (int t = 0; t < iterations; ++t) {
    obs.apply(stack(rep.estimates, m), Y);
    std::vector<Permutation> next = round_blocks(Y, n, m);
    const bool fixed = next == rep.estimates;
    rep.estimates = std::move(next);
    rep.iterations_run = t + 1;
    if (truth != nullptr) {
      rep.rate_trace.push_back(mismatch_rate(rep.estimates, *truth));
    }
    if (fixed) {
      rep.converged = true;
      break;
    }
  }
  return rep;
}

double mismatch_rate(std::span<const Permutation> estimates, std::span<const Permutation> truth) {
  if (!(estimates.size() == truth.size() && !truth.empty())) {
    throw Error(ErrorKind::DimensionMismatch, "estimates and truth differ in length");
  }
  const int m = truth[0].size();
  // A = sum_i X_i^T Xhat_i; the best global alignment G maximizes <A, G>.
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m, m);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (!(estimates[i].size() == m && truth[i].size() == m)) {
      throw Error(ErrorKind::DimensionMismatch, "permutation sizes differ");
    }
    for (int k = 0; k < m; ++k) {
      A(truth[i][k], estimates[i][k]) += 1.0;
    }
  }
  const double agree = solve_assignment(A).score;
  return 1.0 - agree / (static_cast<double>(truth.size()) * m);
}

double pairwise_mismatch_rate(const MatchObservations& obs, std::span<const Permutation> truth) {
  if (!(truth.size() == static_cast<std::size_t>(obs.n()))) {
    throw Error(ErrorKind::DimensionMismatch, "truth must hold one permutation per image");
  }
  if (obs.blocks().empty()) {
    return 0.0;
  }
  std::size_t miss = 0;
  for (const auto& b : obs.blocks()) {
    const Permutation p = lap_project(b.scores);
    // X_i X_j^T maps feature k of image i to feature x_j^{-1}(x_i(k)) of image j.
    const Permutation expect = truth[b.i].compose(truth[b.j].inverse());
    for (int k = 0; k < obs.m(); ++k) {
      miss += p[k] != expect[k];
    }
  }
  return static_cast<double>(miss) / (static_cast<double>(obs.blocks().size()) * obs.m());
}

std::vector<Permutation> random_permutations(int n, int m, std::uint64_t seed) {
  if (!(n >= 1 && m >= 1)) {
    throw Error(ErrorKind::InvalidInput, "need n, m >= 1");
  }
  Rng rng(seed);
  std::vector<Permutation> out;
  out.reserve(static_cast<std::size_t>(n));
  std::vector<int> p(static_cast<std::size_t>(m));
  for (int i = 0; i < n; ++i) {
    std::iota(p.begin(), p.end(), 0);
    std::shuffle(p.begin(), p.end(), rng);
    out.emplace_back(p);
  }
  return out;
}

MatchObservations sample_match_observations(std::span<const Permutation> truth, double corrupt,
                                            double p_obs, std::uint64_t seed) {
  if (truth.empty()) {
    throw Error(ErrorKind::InvalidInput, "truth must be non-empty");
  }
  if (!(corrupt >= 0.0 && corrupt <= 1.0)) {
    throw Error(ErrorKind::InvalidInput, "corruption rate must lie in [0, 1]");
  }
  if (!(p_obs >= 0.0 && p_obs <= 1.0)) {
    throw Error(ErrorKind::InvalidInput, "p_obs must lie in [0, 1]");
  }
  const int n = static_cast<int>(truth.size());
  const int m = truth[0].size();
  Rng rng(seed);
  std::bernoulli_distribution keep(p_obs);
  std::bernoulli_distribution bad(corrupt);
  std::vector<int> scratch(static_cast<std::size_t>(m));
  std::vector<MatchBlock> blocks;
  for (int i = 1; i < n; ++i) {
    for (int j = 0; j < i; ++j) {
      if (!keep(rng)) {
        continue;
      }
      Permutation p;
      if (bad(rng)) {
        std::iota(scratch.begin(), scratch.end(), 0);
        std::shuffle(scratch.begin(), scratch.end(), rng);
        p = Permutation(scratch);
      } else {
        p = truth[i].compose(truth[j].inverse());
      }
      blocks.push_back({i, j, p.matrix()});
    }
  }
  return MatchObservations(n, m, std::move(blocks));
}

void write_match_observations_csv(std::ostream& os, const MatchObservations& obs) {
  os << "i,j,row,col,value\n";
  char buf[64];
  for (const auto& b : obs.blocks()) {
    for (int r = 0; r < obs.m(); ++r) {
      for (int c = 0; c < obs.m(); ++c) {
        const double v = b.scores(r, c);
        if (v == 0.0) {
          continue;
        }
        std::snprintf(buf, sizeof buf, "%.17g", v);
        os << b.i << ',' << b.j << ',' << r << ',' << c << ',' << buf << '\n';
      }
    }
  }
}

MatchObservations read_match_observations_csv(std::istream& is, int n, int m) {
  const auto rows = csv::read_numeric(is, {"i", "j", "row", "col", "value"});
  std::map<std::pair<int, int>, Eigen::MatrixXd> acc;
  for (const auto& r : rows) {
    int i = static_cast<int>(r[0]);
    int j = static_cast<int>(r[1]);
    int row = static_cast<int>(r[2]);
    int col = static_cast<int>(r[3]);
    if (!(i != j && i >= 0 && j >= 0 && i < n && j < n)) {
      throw Error(ErrorKind::Io, "match CSV has an invalid image pair");
    }
    if (!(row >= 0 && col >= 0 && row < m && col < m)) {
      throw Error(ErrorKind::Io, "match CSV has an out-of-range feature index");
    }
    if (i < j) {
      std::swap(i, j);
      std::swap(row, col);
    }
    auto [it, inserted] = acc.try_emplace({i, j}, Eigen::MatrixXd::Zero(m, m));
    it->second(row, col) += r[4];
  }
  std::vector<MatchBlock> blocks;
  blocks.reserve(acc.size());
  for (auto& [key, M] : acc) {
    blocks.push_back({key.first, key.second, std::move(M)});
  }
  return MatchObservations(n, m, std::move(blocks));
}

void write_match_estimates_csv(std::ostream& os, std::span<const Permutation> estimates) {
  os << "i,feature,assigned\n";
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    for (int k = 0; k < estimates[i].size(); ++k) {
      os << i << ',' << k << ',' << estimates[i][k] << '\n';
    }
  }
}

}  // namespace ppm
