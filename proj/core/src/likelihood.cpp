#include "ppm/likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <string>

#include "csv.hpp"
#include "ppm/error.hpp"
#include "ppm/rng.hpp"

namespace ppm {

namespace {

int mod(long long a, int m) {
  const long long r = a % m;
  return static_cast<int>(r < 0 ? r + m : r);
}

void require_same_alphabet(const NoiseDistribution& p, const NoiseDistribution& q) {
  if (!(p.m() == q.m())) {
    throw Error(ErrorKind::DimensionMismatch, "distributions over alphabets of size " +
                                                  std::to_string(p.m()) + " and " +
                                                  std::to_string(q.m()));
  }
}

}  // namespace

NoiseDistribution::NoiseDistribution(std::vector<double> pmf) : p_(std::move(pmf)) {
  if (!(p_.size() >= 1)) {
    throw Error(ErrorKind::InvalidInput, "noise distribution needs m >= 1");
  }
  double sum = 0.0;
  for (std::size_t y = 0; y < p_.size(); ++y) {
    if (!(std::isfinite(p_[y]) && p_[y] >= 0.0)) {
      throw Error(ErrorKind::InvalidInput,
                  "probability P0(" + std::to_string(y) + ") must be finite and non-negative");
    }
    sum += p_[y];
  }
  if (!(std::abs(sum - 1.0) <= 1e-12 * static_cast<double>(p_.size()))) {
    throw Error(ErrorKind::InvalidInput,
                "noise probabilities sum to " + std::to_string(sum) + ", expected 1");
  }
  const int m = this->m();
  symmetric_ = true;
  for (int y = 1; y < m; ++y) {
    if (std::abs(p_[y] - p_[m - y]) > 1e-12) {
      symmetric_ = false;
      break;
    }
  }
}

NoiseDistribution NoiseDistribution::from_weights(std::vector<double> weights) {
  double sum = 0.0;
  for (double w : weights) {
    if (!(std::isfinite(w) && w >= 0.0)) {
      throw Error(ErrorKind::InvalidInput, "noise weights must be finite and non-negative");
    }
    sum += w;
  }
  if (!(sum > 0.0)) {
    throw Error(ErrorKind::InvalidInput, "noise weights sum to zero");
  }
  for (double& w : weights) {
    w /= sum;
  }
  return NoiseDistribution(std::move(weights));
}

double NoiseDistribution::operator()(long long y) const noexcept { return p_[mod(y, m())]; }

double NoiseDistribution::min_probability() const noexcept {
  return *std::min_element(p_.begin(), p_.end());
}

NoiseDistribution random_corruption(double pi0, int m) {
  if (!(pi0 >= 0.0 && pi0 <= 1.0)) {
    throw Error(ErrorKind::InvalidInput, "pi0 must lie in [0, 1], got " + std::to_string(pi0));
  }
  if (!(m >= 2)) {
    throw Error(ErrorKind::InvalidInput, "random corruption needs m >= 2");
  }
  const double off = (1.0 - pi0) / m;
  std::vector<double> p(static_cast<std::size_t>(m), off);
  p[0] = pi0 + off;
  return NoiseDistribution(std::move(p));
}

NoiseDistribution modified_gaussian(double sigma, int m) {
  if (!(std::isfinite(sigma) && sigma > 0.0)) {
    throw Error(ErrorKind::InvalidInput, "sigma must be positive, got " + std::to_string(sigma));
  }
  if (!(m >= 3 && m % 2 == 1)) {
    throw Error(ErrorKind::InvalidInput,
                "modified Gaussian noise needs an odd m >= 3, got " + std::to_string(m));
  }
  const int half = (m - 1) / 2;
  std::vector<double> w(static_cast<std::size_t>(m));
  for (int z = -half; z <= half; ++z) {
    w[mod(z, m)] = std::exp(-static_cast<double>(z) * z / (2.0 * sigma * sigma));
  }
  return NoiseDistribution::from_weights(std::move(w));
}

NoiseDistribution shift_distribution(const NoiseDistribution& d, long long l) {
  const int m = d.m();
  std::vector<double> p(static_cast<std::size_t>(m));
  for (int y = 0; y < m; ++y) {
    p[y] = d(static_cast<long long>(y) - l);
  }
  return NoiseDistribution(std::move(p));
}

NoiseDistribution regularize(const NoiseDistribution& d, double varsigma) {
  if (!(varsigma > 0.0 && varsigma < 1.0)) {
    throw Error(ErrorKind::InvalidInput,
                "varsigma must lie in (0, 1), got " + std::to_string(varsigma));
  }
  const double u = varsigma / d.m();
  std::vector<double> p(d.pmf().begin(), d.pmf().end());
  for (double& x : p) {
    x = (1.0 - varsigma) * x + u;
  }
  return NoiseDistribution(std::move(p));
}

double kl(const NoiseDistribution& p, const NoiseDistribution& q) {
  require_same_alphabet(p, q);
  double acc = 0.0;
  for (int y = 0; y < p.m(); ++y) {
    const double a = p(y);
    const double b = q(y);
    if (a == 0.0) {
      continue;
    }
    if (b == 0.0) {
      return std::numeric_limits<double>::infinity();
    }
    acc += a * std::log(a / b);
  }
  return std::max(acc, 0.0);
}

double hellinger_sq(const NoiseDistribution& p, const NoiseDistribution& q) {
  require_same_alphabet(p, q);
  double acc = 0.0;
  for (int y = 0; y < p.m(); ++y) {
    const double d = std::sqrt(p(y)) - std::sqrt(q(y));
    acc += d * d;
  }
  return std::clamp(0.5 * acc, 0.0, 1.0);
}

double entropy(const NoiseDistribution& d) {
  double h = 0.0;
  for (double x : d.pmf()) {
    if (x > 0.0) {
      h -= x * std::log(x);
    }
  }
  return h;
}

KlRange kl_min_max(const NoiseDistribution& d) {
  if (!(d.m() >= 2)) {
    throw Error(ErrorKind::InvalidInput, "KL range needs m >= 2");
  }
  KlRange r{std::numeric_limits<double>::infinity(), -1.0, 1, 1};
  for (int l = 1; l < d.m(); ++l) {
    const double v = kl(d, shift_distribution(d, l));
    if (v < r.kl_min) {
      r.kl_min = v;
      r.argmin = l;
    }
    if (v > r.kl_max) {
      r.kl_max = v;
      r.argmax = l;
    }
  }
  return r;
}

double hellinger_min(const NoiseDistribution& d) {
  if (!(d.m() >= 2)) {
    throw Error(ErrorKind::InvalidInput, "Hellinger range needs m >= 2");
  }
  double best = 1.0;
  for (int l = 1; l < d.m(); ++l) {
    best = std::min(best, hellinger_sq(d, shift_distribution(d, l)));
  }
  return best;
}

PairwiseObservations::PairwiseObservations(int n, int m, double p_obs, std::vector<Edge> edges)
    : n_(n), m_(m), p_obs_(p_obs), edges_(std::move(edges)) {
  if (!(n >= 1)) {
    throw Error(ErrorKind::InvalidInput, "observations need n >= 1");
  }
  if (!(m >= 2)) {
    throw Error(ErrorKind::InvalidInput, "observations need m >= 2");
  }
  if (!(p_obs >= 0.0 && p_obs <= 1.0)) {
    throw Error(ErrorKind::InvalidInput, "p_obs must lie in [0, 1]");
  }
  std::sort(edges_.begin(), edges_.end(),
            [](const Edge& a, const Edge& b) { return a.i != b.i ? a.i < b.i : a.j < b.j; });
  for (std::size_t k = 0; k < edges_.size(); ++k) {
    const Edge& e = edges_[k];
    if (!(e.i > e.j && e.j >= 0 && e.i < n)) {
      throw Error(ErrorKind::InvalidInput, "edge (" + std::to_string(e.i) + ", " +
                                               std::to_string(e.j) +
                                               ") must satisfy n > i > j >= 0");
    }
    if (!(e.y >= 0 && e.y < m)) {
      throw Error(ErrorKind::InvalidInput,
                  "observation y = " + std::to_string(e.y) + " outside [0, m)");
    }
    if (k > 0) {
      if (edges_[k - 1].i == e.i && edges_[k - 1].j == e.j) {
        throw Error(ErrorKind::InvalidInput,
                    "duplicate edge (" + std::to_string(e.i) + ", " + std::to_string(e.j) + ")");
      }
    }
  }
}

std::optional<int> PairwiseObservations::lookup(int i, int j) const {
  if (i == j) {
    return std::nullopt;
  }
  const bool flip = i < j;
  const int a = flip ? j : i;
  const int b = flip ? i : j;
  auto it = std::lower_bound(edges_.begin(), edges_.end(), std::pair{a, b},
                             [](const Edge& e, const std::pair<int, int>& key) {
                               return e.i != key.first ? e.i < key.first : e.j < key.second;
                             });
  if (it == edges_.end() || it->i != a || it->j != b) {
    return std::nullopt;
  }
  return flip ? mod(-static_cast<long long>(it->y), m_) : it->y;
}

PairwiseObservations sample_observations(const LabelVector& x, const NoiseDistribution& d,
                                         double p_obs, std::uint64_t seed) {
  if (!(x.m() == d.m())) {
    throw Error(ErrorKind::DimensionMismatch, "labels and noise distribution disagree on m");
  }
  if (!(p_obs >= 0.0 && p_obs <= 1.0)) {
    throw Error(ErrorKind::InvalidInput, "p_obs must lie in [0, 1]");
  }
  const int n = static_cast<int>(x.size());
  const int m = d.m();
  Rng rng(seed);
  std::bernoulli_distribution keep(p_obs);
  std::discrete_distribution<int> noise(d.pmf().begin(), d.pmf().end());

  std::vector<Edge> edges;
  if (p_obs > 0.0) {
    edges.reserve(static_cast<std::size_t>(p_obs * 0.5 * n * (n - 1.0)) + 16);
  }
  for (int i = 1; i < n; ++i) {
    for (int j = 0; j < i; ++j) {
      if (!keep(rng)) {
        continue;
      }
      const int eta = noise(rng);
      edges.push_back({i, j, mod(static_cast<long long>(x[i]) - x[j] + eta, m)});
    }
  }
  return PairwiseObservations(n, m, p_obs, std::move(edges));
}

PairwiseObservations regularize_observations(const PairwiseObservations& obs, double varsigma,
                                             std::uint64_t seed) {
  if (!(varsigma > 0.0 && varsigma < 1.0)) {
    throw Error(ErrorKind::InvalidInput, "varsigma must lie in (0, 1)");
  }
  Rng rng(seed);
  std::bernoulli_distribution resample(varsigma);
  std::uniform_int_distribution<int> uniform(0, obs.m() - 1);
  std::vector<Edge> edges(obs.edges().begin(), obs.edges().end());
  for (Edge& e : edges) {
    if (resample(rng)) {
      e.y = uniform(rng);
    }
  }
  return PairwiseObservations(obs.n(), obs.m(), obs.p_obs(), std::move(edges));
}

std::vector<double> loglik_block_column(const NoiseDistribution& d, int y) {
  const int m = d.m();
  std::vector<double> c(static_cast<std::size_t>(m));
  for (int k = 0; k < m; ++k) {
    const int residue = mod(static_cast<long long>(y) - k, m);
    const double p = d(residue);
    if (!(p >= kProbabilityFloor)) {
      throw Error(ErrorKind::RequiresRegularization,
                  "P0(" + std::to_string(residue) + ") = " + std::to_string(p) +
                      " is below the probability floor; regularize the noise model first");
    }
    c[k] = std::log(p);
  }
  return c;
}

std::vector<double> agreement_block_column(int m, int y) {
  if (!(m >= 1)) {
    throw Error(ErrorKind::InvalidInput, "block size must be >= 1");
  }
  std::vector<double> c(static_cast<std::size_t>(m), 0.0);
  c[mod(y, m)] = 1.0;
  return c;
}

std::vector<double> expand_circulant(std::span<const double> column) {
  const int m = static_cast<int>(column.size());
  std::vector<double> dense(static_cast<std::size_t>(m) * m);
  for (int a = 0; a < m; ++a) {
    for (int b = 0; b < m; ++b) {
      dense[static_cast<std::size_t>(a) * m + b] = column[mod(a - b, m)];
    }
  }
  return dense;
}

std::vector<double> loglik_block(const NoiseDistribution& d, int y) {
  return expand_circulant(loglik_block_column(d, y));
}

double threshold_random_corruption(int n, int m, double p_obs) {
  if (!(n >= 2 && m >= 1 && p_obs > 0.0)) {
    throw Error(ErrorKind::InvalidInput, "threshold needs n >= 2, m >= 1, p_obs > 0");
  }
  return 2.0 *
         std::sqrt(1.01 * std::log(static_cast<double>(n)) / (m * static_cast<double>(n) * p_obs));
}

double threshold_random_corruption_necessary(int n, int m, double p_obs) {
  if (!(n >= 2 && m >= 1 && p_obs > 0.0)) {
    throw Error(ErrorKind::InvalidInput, "threshold needs n >= 2, m >= 1, p_obs > 0");
  }
  return 2.0 *
         std::sqrt(0.99 * std::log(static_cast<double>(n)) / (m * static_cast<double>(n) * p_obs));
}

KlThreshold threshold_kl(int n, double p_obs) {
  if (!(n >= 2 && p_obs > 0.0)) {
    throw Error(ErrorKind::InvalidInput, "threshold needs n >= 2, p_obs > 0");
  }
  const double base = std::log(static_cast<double>(n)) / (n * p_obs);
  return {4.01 * base, 3.99 * base};
}

double threshold_hellinger(int n, double p_obs) {
  if (!(n >= 2 && p_obs > 0.0)) {
    throw Error(ErrorKind::InvalidInput, "threshold needs n >= 2, p_obs > 0");
  }
  return 1.01 * std::log(static_cast<double>(n)) / (n * p_obs);
}

void write_observations_csv(std::ostream& os, const PairwiseObservations& obs) {
  os << "i,j,y\n";
  for (const Edge& e : obs.edges()) {
    os << e.i << ',' << e.j << ',' << e.y << '\n';
  }
}

PairwiseObservations read_observations_csv(std::istream& is, int n, int m, double p_obs) {
  const auto rows = csv::read_numeric(is, {"i", "j", "y"});
  std::vector<Edge> edges;
  edges.reserve(rows.size());
  for (const auto& r : rows) {
    int i = static_cast<int>(r[0]);
    int j = static_cast<int>(r[1]);
    int y = mod(static_cast<long long>(r[2]), m);
    if (i < j) {
      std::swap(i, j);
      y = mod(-static_cast<long long>(y), m);
    }
    edges.push_back({i, j, y});
  }
  return PairwiseObservations(n, m, p_obs, std::move(edges));
}

}  // namespace ppm
