#include "ppm/blockmat.hpp"

#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "ppm/error.hpp"

namespace {

ppm::LabelVector random_labels(int n, int m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> u(0, m - 1);
  std::vector<int> x(static_cast<std::size_t>(n));
  for (int& v : x) {
    v = u(rng);
  }
  return ppm::LabelVector(x, m);
}

Eigen::VectorXd apply(const ppm::CirculantBlockMatrix& L, const Eigen::VectorXd& z) {
  Eigen::VectorXd w(z.size());
  L.apply(std::span<const double>(z.data(), static_cast<std::size_t>(z.size())),
          std::span<double>(w.data(), static_cast<std::size_t>(w.size())));
  return w;
}

std::vector<ppm::CirculantBlock> random_blocks(int n, int m, double p, std::mt19937_64& rng) {
  std::bernoulli_distribution keep(p);
  std::normal_distribution<double> g;
  std::vector<ppm::CirculantBlock> blocks;
  for (int i = 1; i < n; ++i) {
    for (int j = 0; j < i; ++j) {
      if (!keep(rng)) {
        continue;
      }
      std::vector<double> c(static_cast<std::size_t>(m));
      for (double& v : c) {
        v = g(rng);
      }
      blocks.push_back({i, j, c});
    }
  }
  return blocks;
}

TEST(Build, EmptyGraphIsZeroOperator) {
  const ppm::PairwiseObservations obs(6, 3, 1.0, {});
  const auto L = ppm::build(obs, ppm::random_corruption(0.5, 3), ppm::BlockForm::Loglik);
  EXPECT_EQ(L.num_blocks(), 0u);
  Eigen::VectorXd z = Eigen::VectorXd::Random(18);
  EXPECT_EQ(apply(L, z).norm(), 0.0);
  EXPECT_EQ(L.to_dense().norm(), 0.0);
}

TEST(Build, AgreementZeroObservationIsIdentity) {
  const ppm::PairwiseObservations obs(2, 4, 1.0, {{1, 0, 0}});
  const auto L = ppm::build(obs, ppm::random_corruption(0.5, 4), ppm::BlockForm::Agreement);
  const Eigen::MatrixXd D = L.to_dense();
  EXPECT_TRUE(D.block(4, 0, 4, 4).isIdentity());
  EXPECT_TRUE(D.block(0, 4, 4, 4).isIdentity());
  EXPECT_TRUE(D.block(0, 0, 4, 4).isZero());
}

TEST(Build, MatchesEntrywiseOracle) {
  for (auto form :
       {ppm::BlockForm::Loglik, ppm::BlockForm::Agreement, ppm::BlockForm::DebiasedLoglik}) {
    const auto x = random_labels(9, 5, 1);
    const auto d = ppm::modified_gaussian(1.3, 5);
    const auto obs = ppm::sample_observations(x, d, 0.6, 2);
    const auto L = ppm::build(obs, d, form);
    EXPECT_LE((L.to_dense() - oracle::dense_input(obs, d, form)).norm(), 1e-12);
    EXPECT_EQ(L.debias_applied(), form == ppm::BlockForm::DebiasedLoglik);
  }
}

TEST(Build, DebiasedBlocksSumToZero) {
  const auto x = random_labels(20, 6, 3);
  const auto d = ppm::regularize(ppm::random_corruption(0.4, 6), 0.05);
  const auto L =
      ppm::build(ppm::sample_observations(x, d, 0.5, 4), d, ppm::BlockForm::DebiasedLoglik);
  for (std::size_t k = 0; k < L.num_blocks(); ++k) {
    double s = 0.0;
    for (double v : ppm::expand_circulant(L.block_column(k))) {
      s += v;
    }
    EXPECT_NEAR(s, 0.0, 1e-8);
  }
}

TEST(Build, DebiasOffsetIndependentOfObservation) {
  const auto d = ppm::modified_gaussian(1.1, 7);
  double offset = 0.0;
  for (int y = 0; y < 7; ++y) {
    const ppm::PairwiseObservations obs(2, 7, 1.0, {{1, 0, y}});
    const auto raw = ppm::build(obs, d, ppm::BlockForm::Loglik);
    const auto deb = ppm::build(obs, d, ppm::BlockForm::DebiasedLoglik);
    const auto r = raw.block_column(0), b = deb.block_column(0);
    const double c = r[0] - b[0];
    for (int k = 0; k < 7; ++k) {
      EXPECT_NEAR(r[k] - b[k], c, 1e-12);
    }
    if (y > 0) {
      EXPECT_NEAR(c, offset, 1e-12);
    }
    offset = c;
  }
}

TEST(Build, RequiresRegularization) {
  const ppm::PairwiseObservations obs(2, 3, 1.0, {{1, 0, 0}});
  EXPECT_THROW(ppm::build(obs, ppm::random_corruption(1.0, 3), ppm::BlockForm::Loglik), ppm::Error);
  EXPECT_NO_THROW(ppm::build(obs, ppm::random_corruption(1.0, 3), ppm::BlockForm::Agreement));
}

TEST(Matvec, ZeroInput) {
  const auto x = random_labels(10, 3, 4);
  const auto d = ppm::random_corruption(0.5, 3);
  const auto L = ppm::build(ppm::sample_observations(x, d, 1.0, 1), d, ppm::BlockForm::Loglik);
  const auto w = ppm::matvec(L, ppm::BlockVector(10, 3));
  for (double v : w.data()) {
    EXPECT_EQ(v, 0.0);
  }
}

TEST(Matvec, AgreementBlocksPermute) {
  for (int m : {3, 11}) {
    const auto x = random_labels(12, m, 5);
    const auto obs = ppm::sample_observations(x, ppm::random_corruption(0.2, m), 0.7, 6);
    const auto L = ppm::build(obs, ppm::random_corruption(0.2, m), ppm::BlockForm::Agreement);
    ppm::BlockVector z(12, m);
    std::mt19937_64 rng(1);
    std::normal_distribution<double> g;
    for (double& v : z.data()) {
      v = g(rng);
    }
    const auto w = ppm::matvec(L, z);
    for (int i = 0; i < 12; ++i) {
      std::vector<double> expect(static_cast<std::size_t>(m), 0.0);
      for (int j = 0; j < 12; ++j) {
        const auto y = obs.lookup(i, j);
        if (!y) {
          continue;
        }
        // (L_ij z_j)_a = z_j[a - y_ij].
        for (int a = 0; a < m; ++a) {
          expect[a] += z.block(j)[((a - *y) % m + m) % m];
        }
      }
      for (int a = 0; a < m; ++a) {
        EXPECT_NEAR(w.block(i)[a], expect[a], 1e-12);
      }
    }
  }
}

TEST(Matvec, MatchesDenseExpansion) {
  std::mt19937_64 rng(77);
  for (int m : {2, 3, 4, 7, 8, 9, 16, 31}) {
    for (double p : {0.2, 1.0}) {
      const int n = 5 + m % 7;
      const auto blocks = random_blocks(n, m, p, rng);
      const ppm::CirculantBlockMatrix L(n, m, blocks);
      const Eigen::MatrixXd D = oracle::dense_from_blocks(n, m, blocks);
      for (int t = 0; t < 3; ++t) {
        Eigen::VectorXd z = Eigen::VectorXd::Random(n * m);
        const Eigen::VectorXd ref = D * z;
        EXPECT_LE((apply(L, z) - ref).norm(), 1e-8 * std::max(1.0, ref.norm())) << "m=" << m;
      }
      Eigen::MatrixXd Z = Eigen::MatrixXd::Random(n * m, 4), W;
      L.apply(Z, W);
      EXPECT_LE((W - D * Z).norm(), 1e-8 * std::max(1.0, (D * Z).norm()));
    }
  }
}

TEST(Matvec, DenseExpansionIsSymmetric) {
  std::mt19937_64 rng(78);
  const auto blocks = random_blocks(8, 5, 0.5, rng);
  const Eigen::MatrixXd D = ppm::CirculantBlockMatrix(8, 5, blocks).to_dense();
  EXPECT_EQ((D - D.transpose()).norm(), 0.0);
  const auto x = random_labels(10, 4, 1);
  const auto d = ppm::random_corruption(0.3, 4);
  const Eigen::MatrixXd E =
      ppm::build(ppm::sample_observations(x, d, 1.0, 2), d, ppm::BlockForm::Loglik).to_dense();
  EXPECT_EQ((E - E.transpose()).norm(), 0.0);
}

TEST(Matvec, DimensionMismatch) {
  const ppm::CirculantBlockMatrix L(3, 2, {});
  EXPECT_THROW(ppm::matvec(L, ppm::BlockVector(3, 3)), ppm::Error);
  EXPECT_THROW(ppm::matvec(L, ppm::BlockVector(4, 2)), ppm::Error);
}

TEST(CirculantBlockMatrix, Validation) {
  EXPECT_THROW(ppm::CirculantBlockMatrix(3, 2, {{1, 1, {0, 0}}}), ppm::Error);
  EXPECT_THROW(ppm::CirculantBlockMatrix(3, 2, {{1, 0, {0, 0, 0}}}), ppm::Error);
  EXPECT_THROW(ppm::CirculantBlockMatrix(3, 2, {{1, 0, {0, 0}}, {1, 0, {1, 1}}}), ppm::Error);
  EXPECT_THROW(ppm::CirculantBlockMatrix(100, 50, {}).to_dense(), ppm::Error);
}

TEST(Matvec, NearLinearInEdges) {
  const int m = 16;
  auto time_per_call = [&](int n) {
    std::mt19937_64 rng(5);
    const auto blocks = random_blocks(n, m, 1.0, rng);
    const ppm::CirculantBlockMatrix L(n, m, blocks);
    ppm::BlockVector z(static_cast<std::size_t>(n), m), w(static_cast<std::size_t>(n), m);
    for (double& v : z.data()) {
      v = 1.0;
    }
    double best = 1e300;
    for (int rep = 0; rep < 5; ++rep) {
      const auto t0 = std::chrono::steady_clock::now();
      for (int k = 0; k < 5; ++k) {
        L.apply(z.data(), w.data());
      }
      const auto t1 = std::chrono::steady_clock::now();
      best = std::min(best, std::chrono::duration<double>(t1 - t0).count() / 5);
    }
    return std::make_pair(best, static_cast<double>(L.num_blocks()));
  };
  const auto [t_small, e_small] = time_per_call(150);
  const auto [t_large, e_large] = time_per_call(600);
  // 16x the edges; a quadratic-in-edges kernel would take ~256x as long.
  const double ratio = (t_large / t_small) / (e_large / e_small);
  EXPECT_LT(ratio, 3.0) << "time ratio " << t_large / t_small << " edge ratio "
                        << e_large / e_small;
}

TEST(ExpectedMatrix, UniformNoise) {
  const auto E = ppm::expected_matrix(4, 3, 0.5, ppm::random_corruption(0.0, 3));
  for (int r = 0; r < 12; ++r) {
    for (int c = 0; c < 12; ++c) {
      const double expect = r / 3 == c / 3 ? 0.0 : -0.5 * std::log(3.0);
      EXPECT_NEAR(E(r, c), expect, 1e-14);
    }
  }
}

TEST(ExpectedMatrix, DiagonalHoldsBlockMaxima) {
  const auto d = ppm::modified_gaussian(1.2, 5);
  const auto E = ppm::expected_matrix(3, 5, 1.0, d);
  const Eigen::MatrixXd K = E.block(5, 0, 5, 5);
  for (int a = 0; a < 5; ++a) {
    EXPECT_NEAR(K(a, a), -ppm::entropy(d), 1e-14);
    for (int b = 0; b < 5; ++b) {
      if (a != b) {
        EXPECT_LT(K(a, b), K(a, a));
      }
    }
  }
  EXPECT_THROW(ppm::expected_matrix(1000, 5, 1.0, d), ppm::Error);
}

TEST(ExpectedMatrix, MonteCarloMean) {
  const int n = 4, m = 3, trials = 200;
  const double p_obs = 0.7;
  const auto d = ppm::NoiseDistribution({0.6, 0.2, 0.2});
  const ppm::LabelVector x(std::vector<int>(n, 0), m);
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(n * m, n * m), sq = sum;
  for (int t = 0; t < trials; ++t) {
    const auto L =
        ppm::build(ppm::sample_observations(x, d, p_obs, 1000 + t), d, ppm::BlockForm::Loglik);
    const Eigen::MatrixXd D = L.to_dense();
    sum += D;
    sq += D.cwiseProduct(D);
  }
  const Eigen::MatrixXd mean = sum / trials;
  const Eigen::MatrixXd var = sq / trials - mean.cwiseProduct(mean);
  const auto E = ppm::expected_matrix(n, m, p_obs, d);
  for (int r = 0; r < n * m; ++r) {
    for (int c = 0; c < n * m; ++c) {
      const double se = std::sqrt(std::max(var(r, c), 0.0) / trials);
      EXPECT_LE(std::abs(mean(r, c) - E(r, c)), 5 * se + 1e-12) << r << "," << c;
    }
  }
}

TEST(EstimateSigma, ZeroMatrix) {
  const ppm::CirculantBlockMatrix L(5, 3, {});
  EXPECT_EQ(ppm::estimate_sigma(L, 1, 100, 1e-10), 0.0);
}

TEST(EstimateSigma, NoiselessCompleteAgreement) {
  for (int n : {8, 20, 32}) {
    const int m = 3;
    const ppm::LabelVector x(std::vector<int>(n, 1), m);
    const auto L = ppm::build(ppm::sample_observations(x, ppm::random_corruption(1.0, m), 1.0, 1),
                              ppm::random_corruption(1.0, m), ppm::BlockForm::Agreement);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(L.to_dense());
    const double top = eig.eigenvalues().cwiseAbs().maxCoeff();
    EXPECT_NEAR(top, n - 1, 1e-9);
    bool converged = false;
    EXPECT_NEAR(ppm::estimate_sigma(L, 1, 500, 1e-10, 0, &converged), n - 1, 1e-8);
    EXPECT_TRUE(converged);
    EXPECT_NEAR(ppm::estimate_sigma(L, 2, 500, 1e-10), n - 1, 1e-8);
    EXPECT_THROW(ppm::estimate_sigma(L, 0, 10, 1e-6), ppm::Error);
    EXPECT_THROW(ppm::estimate_sigma(L, m + 1, 10, 1e-6), ppm::Error);
  }
}

TEST(Separation, Examples) {
  EXPECT_EQ(ppm::separation(std::vector<double>{2.5, 0, 0}), 2.5);
  EXPECT_EQ(ppm::separation(std::vector<double>{4, 4, 4, 4}), 0.0);
  EXPECT_EQ(ppm::separation(std::vector<double>{3, 1, 2}), 1.0);
  EXPECT_EQ(ppm::separation(std::vector<double>{3, 1, 2}, 2), -1.0);
}

TEST(DumpBlock, Csv) {
  const ppm::PairwiseObservations obs(2, 2, 1.0, {{1, 0, 1}});
  const auto L = ppm::build(obs, ppm::random_corruption(0.5, 2), ppm::BlockForm::Agreement);
  std::ostringstream os;
  ppm::dump_block_csv(os, L, 0);
  EXPECT_EQ(os.str(), "alpha,beta,value\n0,0,0\n0,1,1\n1,0,1\n1,1,0\n");
}

}  // namespace
