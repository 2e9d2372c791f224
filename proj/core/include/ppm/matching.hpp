#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "ppm/spectral_init.hpp"

namespace ppm {

/// Permutation matrix X stored as its row images: X(k, perm[k]) = 1.
class Permutation {
 public:
  Permutation() = default;
  explicit Permutation(std::vector<int> perm);
  static Permutation identity(int m);

  int size() const noexcept { return static_cast<int>(perm_.size()); }
  int operator[](int k) const { return perm_[static_cast<std::size_t>(k)]; }
  const std::vector<int>& images() const noexcept { return perm_; }

  Permutation inverse() const;
  /// Matrix product this * other.
  Permutation compose(const Permutation& other) const;
  Eigen::MatrixXd matrix() const;

  friend bool operator==(const Permutation&, const Permutation&) = default;

 private:
  std::vector<int> perm_;
};

/// Score of `perm` on M: sum_k M(k, perm[k]).
double assignment_score(const Eigen::MatrixXd& M, const Permutation& perm);

struct Assignment {
  Permutation perm;
  double score;
};

/// Exact maximum-weight perfect assignment (shortest augmenting paths).
Assignment solve_assignment(const Eigen::MatrixXd& M);

/// Nearest permutation to M in Frobenius distance, i.e. the maximizer of
/// sum_k M(k, perm[k]). Among optimal permutations the lexicographically
/// smallest is returned.
Permutation lap_project(const Eigen::MatrixXd& M);

struct MatchBlock {
  int i;
  int j;
  Eigen::MatrixXd scores;  ///< noisy version of X_i X_j^T
};

/// Pairwise match scores on Omega. Stored with i > j; block (j, i) is the
/// transpose of block (i, j).
class MatchObservations {
 public:
  MatchObservations(int n, int m, std::vector<MatchBlock> blocks);

  int n() const noexcept { return n_; }
  int m() const noexcept { return m_; }
  std::span<const MatchBlock> blocks() const noexcept { return blocks_; }

  /// out = L * in for an nm x k matrix `in`.
  void apply(const Eigen::MatrixXd& in, Eigen::MatrixXd& out) const;
  SymmetricOperator as_operator() const;
  Eigen::MatrixXd to_dense() const;

 private:
  int n_;
  int m_;
  std::vector<MatchBlock> blocks_;
  std::vector<std::vector<std::pair<int, int>>> rows_;  // (neighbor, block id)
};

struct MatchReport {
  std::vector<Permutation> estimates;
  int iterations_run = 0;
  /// A full update left every block unchanged.
  bool converged = false;
  std::size_t init_column_block = 0;
  /// Mismatching rates against truth (empty/absent without truth).
  std::optional<double> input_rate;
  std::vector<double> rate_trace;  ///< t = 0..iterations_run

  double final_rate() const { return rate_trace.empty() ? -1.0 : rate_trace.back(); }
};

/// Joint matching by projected power iterations with permutation rounding,
/// initialized from a random column block of the rank-m approximation.
MatchReport match_solve(const MatchObservations& obs, int iterations, std::uint64_t seed,
                        const std::vector<Permutation>* truth = nullptr,
                        const OrthoOptions& init = {});

/// Fraction of (i, feature) pairs that disagree with truth after the best
/// global permutation alignment.
double mismatch_rate(std::span<const Permutation> estimates, std::span<const Permutation> truth);

/// Fraction of (pair, feature) entries whose LAP-rounded observed block
/// disagrees with X_i X_j^T.
double pairwise_mismatch_rate(const MatchObservations& obs, std::span<const Permutation> truth);

std::vector<Permutation> random_permutations(int n, int m, std::uint64_t seed);

/// Every pair observed with probability p_obs; an observed block is X_i X_j^T
/// or, with probability `corrupt`, a uniformly random permutation matrix.
MatchObservations sample_match_observations(std::span<const Permutation> truth, double corrupt,
                                            double p_obs, std::uint64_t seed);

/// `i,j,row,col,value` rows; zero entries are omitted.
void write_match_observations_csv(std::ostream& os, const MatchObservations& obs);
MatchObservations read_match_observations_csv(std::istream& is, int n, int m);

/// `i,feature,assigned` rows.
void write_match_estimates_csv(std::ostream& os, std::span<const Permutation> estimates);

}  // namespace ppm
