#include "ppm/power_method.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "ppm/error.hpp"
#include "ppm/simplex.hpp"
#include "ppm/spectral_init.hpp"

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

ppm::LabelVector corrupt(const ppm::LabelVector& x, int flips, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<int> v = x.values();
  std::vector<int> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), rng);
  std::uniform_int_distribution<int> off(1, x.m() - 1);
  for (int k = 0; k < flips; ++k) {
    v[idx[k]] = (v[idx[k]] + off(rng)) % x.m();
  }
  return ppm::LabelVector(v, x.m());
}

TEST(Mcr, Examples) {
  const ppm::LabelVector a({0, 2, 1, 1, 0}, 3);
  EXPECT_EQ(ppm::mcr(a, a), 0.0);
  EXPECT_EQ(ppm::mcr(a.shifted(2), a), 0.0);
  // Labels 1-based in the example: a = [1,1,1,1], b = [2,2,2,1].
  EXPECT_DOUBLE_EQ(ppm::mcr(ppm::LabelVector({0, 0, 0, 0}, 3), ppm::LabelVector({1, 1, 1, 0}, 3)),
                   0.25);
  EXPECT_THROW(ppm::mcr(a, ppm::LabelVector({0, 1}, 3)), ppm::Error);
}

TEST(Mcr, SymmetricAndShiftInvariant) {
  for (std::uint64_t s = 0; s < 50; ++s) {
    const int m = 2 + static_cast<int>(s % 6);
    const auto a = random_labels(40, m, s), b = random_labels(40, m, s + 1000);
    EXPECT_EQ(ppm::mcr(a, b), ppm::mcr(b, a));
    EXPECT_EQ(ppm::mcr(a.shifted(static_cast<int>(s)), b.shifted(static_cast<int>(s))),
              ppm::mcr(a, b));
    EXPECT_EQ(ppm::mcr(a, b), oracle::mcr(a.values(), b.values(), m));
  }
}

TEST(DistModShift, Examples) {
  const auto x = random_labels(10, 4, 1);
  EXPECT_EQ(ppm::dist_mod_shift(ppm::BlockVector::lift(x), x), 0.0);
  EXPECT_EQ(ppm::dist_mod_shift(ppm::BlockVector::lift(x.shifted(3)), x), 0.0);
  const ppm::BlockVector z(1, 2, {0.6, 0.4});
  EXPECT_NEAR(ppm::dist_mod_shift(z, ppm::LabelVector({0}, 2)), 0.4 * std::sqrt(2.0), 1e-15);
}

TEST(DistModShift, RelatesToMcrOnVertices) {
  for (std::uint64_t s = 0; s < 30; ++s) {
    const int m = 2 + static_cast<int>(s % 5);
    const auto a = random_labels(25, m, s), b = random_labels(25, m, s + 77);
    EXPECT_NEAR(ppm::dist_mod_shift(ppm::BlockVector::lift(a), b),
                std::sqrt(2.0 * 25 * ppm::mcr(a, b)), 1e-12);
  }
}

TEST(ScalingPolicy, Parse) {
  EXPECT_EQ(ppm::ScalingPolicy::parse("inf").kind, ppm::ScalingPolicy::Kind::Infinite);
  const auto a = ppm::ScalingPolicy::parse("10/sigma2");
  EXPECT_EQ(a.kind, ppm::ScalingPolicy::Kind::ConstantOverSigma);
  EXPECT_EQ(a.c, 10.0);
  EXPECT_EQ(a.sigma_ref, ppm::SigmaRef::Second);
  const auto b = ppm::ScalingPolicy::parse("20/sigmam");
  EXPECT_EQ(b.sigma_ref, ppm::SigmaRef::Mth);
  EXPECT_EQ(b.c, 20.0);
  const auto c = ppm::ScalingPolicy::parse("c/sigma2");
  EXPECT_EQ(c.c, 10.0);
  EXPECT_EQ(ppm::ScalingPolicy::parse("c/sigmam").c, 20.0);
  EXPECT_EQ(ppm::ScalingPolicy::parse("0.5").kind, ppm::ScalingPolicy::Kind::Fixed);
  for (const char* bad : {"", "abc", "-1", "0", "0/sigma2", "3/sigma7"}) {
    EXPECT_THROW(ppm::ScalingPolicy::parse(bad), ppm::Error) << bad;
  }
}

TEST(ResolveScale, Policies) {
  const std::vector<double> s{8.0, 4.0, 2.0};
  EXPECT_TRUE(ppm::resolve_scale(ppm::ScalingPolicy::infinite(), {}, 3).is_infinite());
  EXPECT_DOUBLE_EQ(
      ppm::resolve_scale(ppm::ScalingPolicy::over_sigma(10, ppm::SigmaRef::Second), s, 3).value(),
      2.5);
  EXPECT_DOUBLE_EQ(
      ppm::resolve_scale(ppm::ScalingPolicy::over_sigma(10, ppm::SigmaRef::Mth), s, 3).value(),
      5.0);
  EXPECT_DOUBLE_EQ(ppm::resolve_scale(ppm::ScalingPolicy::fixed(0.7), {}, 3).value(), 0.7);
  try {
    ppm::resolve_scale(ppm::ScalingPolicy::over_sigma(10, ppm::SigmaRef::Mth),
                       std::vector<double>{1.0}, 3);
    FAIL();
  } catch (const ppm::Error& e) {
    EXPECT_EQ(e.kind(), ppm::ErrorKind::MissingSigma);
  }
  EXPECT_TRUE(ppm::resolve_scale(ppm::ScalingPolicy::over_sigma(10, ppm::SigmaRef::Second),
                                 std::vector<double>{0.0, 0.0}, 2)
                  .is_infinite());
}

TEST(DefaultIterations, CeilThreeLogN) {
  EXPECT_EQ(ppm::default_iterations(500), 19);
  EXPECT_EQ(ppm::default_iterations(1000), 21);
  EXPECT_EQ(ppm::default_iterations(2), 3);
}

TEST(Solve, NoiselessContractsFast) {
  for (int n : {50, 200}) {
    const int m = 3;
    const auto x = random_labels(n, m, static_cast<std::uint64_t>(n));
    const auto d = ppm::random_corruption(1.0, m);
    const auto L = ppm::build(ppm::sample_observations(x, d, 1.0, 1), d, ppm::BlockForm::Agreement);
    const auto z0 = ppm::project_blockwise(
        ppm::BlockVector::lift(corrupt(x, static_cast<int>(0.45 * n), 2)), ppm::Scale::infinite());
    ASSERT_LT(ppm::mcr(z0.round(), x), 0.49);
    ppm::SolveOptions opts;
    opts.iterations = 50;
    const auto rep = ppm::solve(L, z0, opts, &x);
    ASSERT_TRUE(rep.first_exact_iteration().has_value());
    EXPECT_LE(*rep.first_exact_iteration(), static_cast<int>(std::ceil(std::log2(n))) + 2);
    EXPECT_EQ(rep.final_mcr(), 0.0);
    EXPECT_TRUE(rep.converged);
  }
}

TEST(Solve, ZeroIterationsRoundsStart) {
  const auto x = random_labels(20, 4, 3);
  const auto d = ppm::random_corruption(0.5, 4);
  const auto L = ppm::build(ppm::sample_observations(x, d, 1.0, 1), d, ppm::BlockForm::Loglik);
  ppm::BlockVector z(20, 4);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  for (double& v : z.data()) {
    v = g(rng);
  }
  const auto z0 = ppm::project_blockwise(z, ppm::Scale::finite(1.0));
  ppm::SolveOptions opts;
  opts.iterations = 0;
  const auto rep = ppm::solve(L, z0, opts, &x);
  EXPECT_EQ(rep.estimate, z0.round());
  EXPECT_EQ(rep.iterations_run, 0);
  ASSERT_EQ(rep.iterates_mcr.size(), 1u);
  EXPECT_EQ(rep.iterates_mcr[0], ppm::mcr(z0.round(), x));
}

TEST(Solve, ZeroOperatorFixedPoint) {
  const ppm::CirculantBlockMatrix L(6, 3, {});
  const auto z0 = ppm::project_blockwise(ppm::BlockVector(6, 3), ppm::Scale::finite(1.0));
  ppm::SolveOptions opts;
  opts.policy = ppm::ScalingPolicy::fixed(2.0);
  opts.iterations = 5;
  const auto rep = ppm::solve(L, z0, opts);
  EXPECT_EQ(rep.estimate, ppm::LabelVector(std::vector<int>(6, 0), 3));
  EXPECT_TRUE(rep.converged);
  EXPECT_EQ(rep.iterations_run, 1);
}

TEST(Solve, MissingSigma) {
  const ppm::CirculantBlockMatrix L(3, 2, {});
  const auto z0 = ppm::project_blockwise(ppm::BlockVector(3, 2), ppm::Scale::infinite());
  ppm::SolveOptions opts;
  opts.policy = ppm::ScalingPolicy::over_sigma(10, ppm::SigmaRef::Second);
  opts.iterations = 3;
  try {
    ppm::solve(L, z0, opts);
    FAIL();
  } catch (const ppm::Error& e) {
    EXPECT_EQ(e.kind(), ppm::ErrorKind::MissingSigma);
  }
}

TEST(Solve, RejectsInfeasibleStart) {
  const ppm::CirculantBlockMatrix L(3, 2, {});
  ppm::SolveOptions opts;
  EXPECT_THROW(ppm::solve(L, ppm::BlockVector(3, 2), opts), ppm::Error);
}

TEST(Solve, IteratesStayFeasible) {
  const int n = 60, m = 5;
  const auto x = random_labels(n, m, 4);
  const auto d = ppm::random_corruption(0.3, m);
  const auto L = ppm::build(ppm::sample_observations(x, d, 0.5, 1), d, ppm::BlockForm::Loglik);
  const auto fac = ppm::orthogonal_iteration(L, m);
  auto z = ppm::initial_guess(L, fac, ppm::Scale::finite(0.05), 3);
  for (int t = 0; t < 10; ++t) {
    ppm::SolveOptions opts;
    opts.policy = ppm::ScalingPolicy::fixed(0.05);
    opts.iterations = 1;
    opts.early_stop = false;
    z = ppm::project_blockwise(ppm::matvec(L, z), ppm::Scale::finite(0.05));
    for (std::size_t i = 0; i < z.n(); ++i) {
      EXPECT_TRUE(ppm::in_simplex(z.block(i)));
    }
  }
}

TEST(Solve, AgreementAndLoglikStepsAgreeAtInfiniteScale) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const int n = 40, m = 2 + static_cast<int>(s % 4);
    const auto x = random_labels(n, m, s);
    const auto d = ppm::random_corruption(0.4, m);
    const auto obs = ppm::sample_observations(x, d, 0.6, s + 1);
    const auto La = ppm::build(obs, d, ppm::BlockForm::Agreement);
    const auto Ll = ppm::build(obs, d, ppm::BlockForm::Loglik);
    const auto z = ppm::BlockVector::lift(random_labels(n, m, s + 50));
    const auto wa = ppm::matvec(La, z), wl = ppm::matvec(Ll, z);
    // Per block the two products differ by a positive scale and a constant
    // shift, so they round identically unless a tie is broken by roundoff.
    for (std::size_t i = 0; i < z.n(); ++i) {
      std::vector<double> a(wa.block(i).begin(), wa.block(i).end());
      std::sort(a.rbegin(), a.rend());
      if (a[0] - a[1] < 0.5) {
        continue;
      }
      EXPECT_EQ(ppm::argmax(wa.block(i)), ppm::argmax(wl.block(i)));
    }
  }
}

TEST(Solve, ObjectiveMatchesDense) {
  const auto x = random_labels(12, 3, 1);
  const auto d = ppm::random_corruption(0.5, 3);
  const auto obs = ppm::sample_observations(x, d, 0.8, 2);
  const auto L = ppm::build(obs, d, ppm::BlockForm::Loglik);
  const Eigen::VectorXd z = oracle::lift(x.values(), 3);
  EXPECT_NEAR(ppm::objective(L, ppm::BlockVector::lift(x)),
              z.dot(oracle::dense_input(obs, d, ppm::BlockForm::Loglik) * z), 1e-9);
}

TEST(CheckContraction, NoiselessRatioIsZero) {
  const auto x = random_labels(100, 3, 1);
  const auto d = ppm::random_corruption(1.0, 3);
  const auto L = ppm::build(ppm::sample_observations(x, d, 1.0, 1), d, ppm::BlockForm::Agreement);
  const auto rep = ppm::check_contraction(L, x, ppm::ScalingPolicy::infinite(), {}, 30, 5);
  EXPECT_EQ(rep.max_ratio, 0.0);
  EXPECT_TRUE(rep.contracts);
}

TEST(CheckContraction, AboveThresholdContracts) {
  const auto x = random_labels(500, 2, 2);
  const auto d = ppm::random_corruption(0.3, 2);
  const auto L = ppm::build(ppm::sample_observations(x, d, 1.0, 3), d, ppm::BlockForm::Agreement);
  const auto fac = ppm::orthogonal_iteration(L, 2);
  const auto rep = ppm::check_contraction(
      L, x, ppm::ScalingPolicy::over_sigma(10, ppm::SigmaRef::Second), fac.S, 100, 4);
  EXPECT_EQ(rep.probes, 100);
  EXPECT_LT(rep.max_ratio, 1.0);
  EXPECT_TRUE(rep.contracts);
}

TEST(CheckContraction, FarBelowThresholdIsFlagged) {
  const auto x = random_labels(200, 2, 3);
  const auto d = ppm::random_corruption(0.01, 2);
  const auto L = ppm::build(ppm::sample_observations(x, d, 1.0, 3), d, ppm::BlockForm::Agreement);
  const auto rep = ppm::check_contraction(L, x, ppm::ScalingPolicy::infinite(), {}, 50, 4);
  EXPECT_FALSE(rep.contracts);
  EXPECT_GE(rep.max_ratio, 1.0);
}

TEST(ReportCsv, Format) {
  ppm::SolveReport rep;
  rep.iterates_mcr = {0.25, 0.125, 0.0};
  std::ostringstream os;
  ppm::write_report_csv(os, rep);
  EXPECT_EQ(os.str(), "t,mcr\n0,0.25\n1,0.125\n2,0\nfinal,0\n");
  EXPECT_EQ(*rep.first_exact_iteration(), 2);
}

}  // namespace
