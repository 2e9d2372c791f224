#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ppm/blockmat.hpp"
#include "ppm/likelihood.hpp"
#include "ppm/power_method.hpp"

namespace ppm {

enum class NoiseModel { RandomCorruption, ModifiedGaussian, Custom };

/// One Monte Carlo experiment. Grid cells are (n, param) pairs visited with
/// n outermost; param is pi0 (random corruption) or sigma (modified Gaussian).
struct ExperimentConfig {
  NoiseModel model = NoiseModel::RandomCorruption;
  std::vector<int> n_grid{100, 200, 300, 400, 500};
  std::vector<double> param_grid;  ///< empty: model default
  int m = 2;
  double p_obs = 1.0;
  ScalingPolicy policy = ScalingPolicy::over_sigma(10.0, SigmaRef::Second);
  int trials = 20;
  std::optional<int> iterations;  ///< default ceil(3 ln n) per cell
  std::uint64_t seed = 1;
  std::optional<BlockForm> form;  ///< default agreement for random corruption, loglik otherwise
  std::vector<double> p0;         ///< custom model weights
  double varsigma = kDefaultVarsigma;
  bool early_stop = false;
  int threads = 0;  ///< 0: hardware concurrency
  int init_iters = 200;
  double init_tol = 1e-8;
  int init_rank = 0;  ///< 0: m

  /// Throws Error(Config) naming the offending field.
  void validate() const;

  BlockForm resolved_form() const;
  std::vector<double> resolved_params() const;
  int resolved_iterations(int n) const;
  int resolved_rank() const;
  NoiseDistribution noise(double param) const;
};

/// Set one `key = value` field. Keys match the CLI flag names: model, n, m,
/// pobs, pi0, sigma, mu, form, trials, iters, seed, p0, varsigma, threads,
/// early_stop, init_iters, init_tol, init_rank. Unknown keys and malformed
/// values throw Error(Config).
void apply_setting(ExperimentConfig& cfg, std::string_view key, std::string_view value);

/// Flat `key = value` lines; `#` starts a comment.
void apply_config_text(ExperimentConfig& cfg, std::istream& is);

std::string_view to_string(NoiseModel model);
std::string_view to_string(BlockForm form);
BlockForm parse_form(std::string_view text);

struct TrialOutcome {
  SolveReport report;
  LabelVector truth;
  double init_mcr = 0.0;
  std::size_t edges = 0;
};

/// Seed of trial `trial` in grid cell `cell`.
std::uint64_t trial_seed(std::uint64_t seed, std::size_t cell, int trial);

/// Draw labels, observations, build L, initialize spectrally and run PPM.
TrialOutcome run_trial(const ExperimentConfig& cfg, int n, double param, std::uint64_t seed);

struct SweepRow {
  int n;
  double param;
  int m;
  double p_obs;
  int trials;
  double mean_mcr;
  double exact_recovery_frac;
  double mean_iters;  ///< mean settle iteration
};

std::vector<SweepRow> run_sweep(const ExperimentConfig& cfg);
void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows);

/// First grid cell, first trial, full MCR trace.
TrialOutcome run_single(const ExperimentConfig& cfg);

struct ThresholdRow {
  int n;
  int m;
  double p_obs;
  double pi0_sufficient;
  double pi0_necessary;
  double kl_sufficient;
  double kl_necessary;
};

std::vector<ThresholdRow> threshold_table(const std::vector<int>& n_grid, int m, double p_obs);
void write_threshold_csv(std::ostream& os, const std::vector<ThresholdRow>& rows);

}  // namespace ppm
