#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ppm/types.hpp"

namespace ppm {

/// Probabilities below this are treated as zero by loglik_block, which then
/// demands regularization.
inline constexpr double kProbabilityFloor = 1e-12;
inline constexpr double kDefaultVarsigma = 0.01;

/// Law P0 of the additive noise eta over {0, ..., m-1}.
class NoiseDistribution {
 public:
  /// `pmf` must be non-negative and sum to one within 1e-12 (relative to m).
  explicit NoiseDistribution(std::vector<double> pmf);

  /// Normalizes arbitrary non-negative weights.
  static NoiseDistribution from_weights(std::vector<double> weights);

  int m() const noexcept { return static_cast<int>(p_.size()); }
  /// P0(y mod m) for any integer y.
  double operator()(long long y) const noexcept;
  std::span<const double> pmf() const noexcept { return p_; }
  double min_probability() const noexcept;

  /// P0(y) == P0(m - y) for y = 1..m-1 (within 1e-12).
  bool symmetric() const noexcept { return symmetric_; }

 private:
  std::vector<double> p_;
  bool symmetric_ = false;
};

/// P0(0) = pi0 + (1 - pi0)/m, P0(y) = (1 - pi0)/m otherwise.
NoiseDistribution random_corruption(double pi0, int m);

/// P0(z mod m) proportional to exp(-z^2 / (2 sigma^2)) for |z| <= (m-1)/2. m odd.
NoiseDistribution modified_gaussian(double sigma, int m);

/// P_l(y) = P0(y - l).
NoiseDistribution shift_distribution(const NoiseDistribution& d, long long l);

/// Mixture (1 - varsigma) P0 + varsigma Unif(m).
NoiseDistribution regularize(const NoiseDistribution& d, double varsigma);

/// KL(p || q) in nats. Returns +infinity when p puts mass where q has none.
double kl(const NoiseDistribution& p, const NoiseDistribution& q);

/// Squared Hellinger distance 0.5 * sum (sqrt p - sqrt q)^2, in [0, 1].
double hellinger_sq(const NoiseDistribution& p, const NoiseDistribution& q);

/// Shannon entropy in nats.
double entropy(const NoiseDistribution& d);

struct KlRange {
  double kl_min;
  double kl_max;
  int argmin;  ///< shift l in [1, m) attaining kl_min (smallest such l)
  int argmax;
};

/// Extremes of KL(P0 || P_l) over l = 1..m-1.
KlRange kl_min_max(const NoiseDistribution& d);

/// Minimum squared Hellinger distance between P0 and its shifts.
double hellinger_min(const NoiseDistribution& d);

struct Edge {
  int i;
  int j;
  int y;
  friend bool operator==(const Edge&, const Edge&) = default;
};

/// Observed pairwise differences y_{i,j} on the edge set Omega.
///
/// Each unordered pair is stored once with i > j, sorted by (i, j). The
/// mirrored entry is implicit: y_{j,i} = -y_{i,j} mod m.
class PairwiseObservations {
 public:
  PairwiseObservations(int n, int m, double p_obs, std::vector<Edge> edges);

  int n() const noexcept { return n_; }
  int m() const noexcept { return m_; }
  double p_obs() const noexcept { return p_obs_; }
  std::span<const Edge> edges() const noexcept { return edges_; }

  /// y_{i,j} for either orientation, or nullopt if (i, j) is unobserved.
  std::optional<int> lookup(int i, int j) const;

 private:
  int n_;
  int m_;
  double p_obs_;
  std::vector<Edge> edges_;
};

/// Draw Omega and y_{i,j} = x_i - x_j + eta mod m, eta ~ d. Pairs are visited
/// in (i, j) lexicographic order with i > j, so the stream is reproducible.
PairwiseObservations sample_observations(const LabelVector& x, const NoiseDistribution& d,
                                         double p_obs, std::uint64_t seed);

/// Replace each y by a fresh Unif(m) draw with probability varsigma.
PairwiseObservations regularize_observations(const PairwiseObservations& obs, double varsigma,
                                             std::uint64_t seed);

/// First column c of the circulant log-likelihood block for observation y:
/// entry (alpha, beta) = c[(alpha - beta) mod m] = log P0(y - alpha + beta).
/// Throws Error(RequiresRegularization) when some P0 value is below the floor.
std::vector<double> loglik_block_column(const NoiseDistribution& d, int y);

/// Agreement block: the identity circularly shifted by y.
std::vector<double> agreement_block_column(int m, int y);

/// Dense m x m expansion of a circulant first column, row-major.
std::vector<double> expand_circulant(std::span<const double> column);

/// Dense log-likelihood block, row-major.
std::vector<double> loglik_block(const NoiseDistribution& d, int y);

/// Sufficient pi0 level 2 sqrt(1.01 ln n / (m n p_obs)).
double threshold_random_corruption(int n, int m, double p_obs);
/// Converse level 2 sqrt(0.99 ln n / (m n p_obs)).
double threshold_random_corruption_necessary(int n, int m, double p_obs);

struct KlThreshold {
  double sufficient;  ///< 4.01 ln n / (n p_obs)
  double necessary;   ///< 3.99 ln n / (n p_obs)
};
KlThreshold threshold_kl(int n, double p_obs);

/// Hellinger level 1.01 ln n / (n p_obs).
double threshold_hellinger(int n, double p_obs);

void write_observations_csv(std::ostream& os, const PairwiseObservations& obs);
/// Reads `i,j,y` rows. n and m must be supplied since the file does not carry them.
PairwiseObservations read_observations_csv(std::istream& is, int n, int m, double p_obs);

}  // namespace ppm
