#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ppm/blockmat.hpp"
#include "ppm/types.hpp"

namespace ppm {

enum class SigmaRef {
  Second,  ///< sigma_2 of the factorized input matrix
  Mth,     ///< sigma_m of the factorized input matrix
};

/// How mu_t is chosen. mu_t is held constant across iterations.
struct ScalingPolicy {
  enum class Kind { ConstantOverSigma, Infinite, Fixed };

  Kind kind = Kind::Infinite;
  double c = 0.0;  ///< numerator for ConstantOverSigma, mu itself for Fixed
  SigmaRef sigma_ref = SigmaRef::Second;

  static ScalingPolicy infinite() { return {}; }
  static ScalingPolicy over_sigma(double c, SigmaRef ref);
  static ScalingPolicy fixed(double mu);

  /// Accepts "inf", "<c>/sigma2", "<c>/sigmam" or a positive number.
  static ScalingPolicy parse(std::string_view text);
  std::string describe() const;

  bool needs_sigma() const noexcept { return kind == Kind::ConstantOverSigma; }
};

/// Turn a policy into a concrete mu. `singular_values` are sorted
/// nonincreasing (as produced by orthogonal_iteration). A zero reference
/// singular value (empty operator) resolves to an infinite scale.
Scale resolve_scale(const ScalingPolicy& policy, std::span<const double> singular_values, int m);

/// Default iteration budget ceil(3 ln n).
int default_iterations(std::size_t n);

/// Misclassification rate: (1/n) min_l #{i : a_i != b_i + l mod m}.
double mcr(const LabelVector& a, const LabelVector& b);

/// min_l || zhat - lift(shift_l(x)) ||_2.
double dist_mod_shift(const BlockVector& zhat, const LabelVector& x);

/// z^T L z.
double objective(const CirculantBlockMatrix& L, const BlockVector& z);

struct SolveOptions {
  ScalingPolicy policy = ScalingPolicy::infinite();
  int iterations = 0;
  /// Stop once the rounded iterate repeats (infinite mu) or the iterate moves
  /// by at most 1e-10 in max-norm (finite mu).
  bool early_stop = true;
};

struct SolveReport {
  LabelVector estimate;
  /// MCR of the rounded iterate z^(t), t = 0..iterations_run. Empty without truth.
  std::vector<double> iterates_mcr;
  int iterations_run = 0;
  /// Last update met the stopping rule.
  bool converged = false;
  /// First t after which the rounded iterate never changed.
  int settle_iteration = 0;
  Scale mu_used = Scale::infinite();
  std::vector<double> sigma_estimates;

  std::optional<int> first_exact_iteration() const;
  double final_mcr() const { return iterates_mcr.empty() ? -1.0 : iterates_mcr.back(); }
};

/// Projected power iterations z <- P(mu L z) from a feasible z0.
/// Throws Error(MissingSigma) when the policy needs singular values and none
/// were supplied.
SolveReport solve(const CirculantBlockMatrix& L, const BlockVector& z0, const SolveOptions& opts,
                  const LabelVector* truth = nullptr, std::span<const double> singular_values = {});

struct ContractionReport {
  int probes = 0;
  double max_ratio = 0.0;
  double mean_ratio = 0.0;
  /// max_ratio < 1.
  bool contracts = false;
};

/// Apply one update to random vertex perturbations of the truth with
/// MCR <= 0.49 and record MCR(after) / MCR(before).
ContractionReport check_contraction(const CirculantBlockMatrix& L, const LabelVector& truth,
                                    const ScalingPolicy& policy,
                                    std::span<const double> singular_values, int trials,
                                    std::uint64_t seed);

/// `t,mcr` rows for the trace followed by a `final,<mcr>` row.
void write_report_csv(std::ostream& os, const SolveReport& report);

}  // namespace ppm
