#include "ppm/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <istream>
#include <mutex>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <thread>

#include "csv.hpp"
#include "ppm/error.hpp"
#include "ppm/rng.hpp"
#include "ppm/spectral_init.hpp"

namespace ppm {

namespace {

[[noreturn]] void config_error(std::string_view key, const std::string& msg) {
  throw Error(ErrorKind::Config, "config field '" + std::string(key) + "': " + msg);
}

std::string trim(std::string_view s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) {
    return {};
  }
  const auto e = s.find_last_not_of(ws);
  return std::string(s.substr(b, e - b + 1));
}

template <class T>
T parse_number(std::string_view key, std::string_view text) {
  const std::string t = trim(text);
  T v{};
  const char* end = t.data() + t.size();
  auto [ptr, ec] = std::from_chars(t.data(), end, v);
  if (t.empty() || ec != std::errc() || ptr != end) {
    config_error(key, "'" + t + "' is not a valid number");
  }
  return v;
}

template <class T>
std::vector<T> parse_list(std::string_view key, std::string_view text) {
  std::vector<T> out;
  std::string item;
  std::stringstream ss{std::string(text)};
  while (std::getline(ss, item, ',')) {
    out.push_back(parse_number<T>(key, item));
  }
  if (out.empty()) {
    config_error(key, "expected a comma-separated list");
  }
  return out;
}

bool parse_bool(std::string_view key, std::string_view text) {
  const std::string t = trim(text);
  if (t == "1" || t == "true" || t == "on" || t == "yes") {
    return true;
  }
  if (t == "0" || t == "false" || t == "off" || t == "no") {
    return false;
  }
  config_error(key, "'" + t + "' is not a boolean");
}

}  // namespace

std::string_view to_string(NoiseModel model) {
  switch (model) {
    case NoiseModel::RandomCorruption:
      return "random_corruption";
    case NoiseModel::ModifiedGaussian:
      return "modified_gaussian";
    case NoiseModel::Custom:
      return "custom";
  }
  return "?";
}

std::string_view to_string(BlockForm form) {
  switch (form) {
    case BlockForm::Loglik:
      return "loglik";
    case BlockForm::Agreement:
      return "agreement";
    case BlockForm::DebiasedLoglik:
      return "debiased-loglik";
  }
  return "?";
}

BlockForm parse_form(std::string_view text) {
  if (text == "loglik") {
    return BlockForm::Loglik;
  }
  if (text == "agreement") {
    return BlockForm::Agreement;
  }
  if (text == "debiased-loglik" || text == "debiased") {
    return BlockForm::DebiasedLoglik;
  }
  throw Error(ErrorKind::Config,
              "form '" + std::string(text) + "' must be loglik, agreement or debiased-loglik");
}

void apply_setting(ExperimentConfig& cfg, std::string_view key_in, std::string_view value_in) {
  const std::string key = trim(key_in);
  const std::string value = trim(value_in);
  if (key == "model") {
    if (value == "random_corruption" || value == "rcm") {
      cfg.model = NoiseModel::RandomCorruption;
    } else if (value == "modified_gaussian" || value == "gaussian") {
      cfg.model = NoiseModel::ModifiedGaussian;
    } else if (value == "custom" || value == "custom-p0") {
      cfg.model = NoiseModel::Custom;
    } else {
      config_error(key, "'" + value + "' must be random_corruption, modified_gaussian or custom");
    }
  } else if (key == "n") {
    cfg.n_grid = parse_list<int>(key, value);
  } else if (key == "m") {
    cfg.m = parse_number<int>(key, value);
  } else if (key == "pobs" || key == "p_obs") {
    cfg.p_obs = parse_number<double>(key, value);
  } else if (key == "pi0" || key == "sigma" || key == "param") {
    cfg.param_grid = parse_list<double>(key, value);
  } else if (key == "mu") {
    try {
      cfg.policy = ScalingPolicy::parse(value);
    } catch (const Error& e) {
      config_error(key, e.what());
    }
  } else if (key == "form") {
    try {
      cfg.form = parse_form(value);
    } catch (const Error& e) {
      config_error(key, e.what());
    }
  } else if (key == "trials") {
    cfg.trials = parse_number<int>(key, value);
  } else if (key == "iters") {
    cfg.iterations = parse_number<int>(key, value);
  } else if (key == "seed") {
    cfg.seed = parse_number<std::uint64_t>(key, value);
  } else if (key == "p0") {
    cfg.p0 = parse_list<double>(key, value);
  } else if (key == "varsigma") {
    cfg.varsigma = parse_number<double>(key, value);
  } else if (key == "threads") {
    cfg.threads = parse_number<int>(key, value);
  } else if (key == "early_stop") {
    cfg.early_stop = parse_bool(key, value);
  } else if (key == "init_iters") {
    cfg.init_iters = parse_number<int>(key, value);
  } else if (key == "init_tol") {
    cfg.init_tol = parse_number<double>(key, value);
  } else if (key == "init_rank") {
    cfg.init_rank = parse_number<int>(key, value);
  } else {
    config_error(key, "unknown key");
  }
}

void apply_config_text(ExperimentConfig& cfg, std::istream& is) {
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) {
      line.erase(hash);
    }
    if (trim(line).empty()) {
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorKind::Config,
                  "config line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    apply_setting(cfg, std::string_view(line).substr(0, eq), std::string_view(line).substr(eq + 1));
  }
}

void ExperimentConfig::validate() const {
  if (n_grid.empty()) {
    config_error("n", "grid is empty");
  }
  for (int n : n_grid) {
    if (n < 2) {
      config_error("n", "every n must be >= 2");
    }
  }
  if (m < 2) {
    config_error("m", "must be >= 2");
  }
  if (!(p_obs > 0.0 && p_obs <= 1.0)) {
    config_error("pobs", "must lie in (0, 1]");
  }
  if (trials < 1) {
    config_error("trials", "must be >= 1");
  }
  if (iterations && *iterations < 0) {
    config_error("iters", "must be >= 0");
  }
  if (!(varsigma > 0.0 && varsigma < 1.0)) {
    config_error("varsigma", "must lie in (0, 1)");
  }
  if (threads < 0) {
    config_error("threads", "must be >= 0");
  }
  if (init_iters < 1) {
    config_error("init_iters", "must be >= 1");
  }
  if (!(init_tol >= 0.0)) {
    config_error("init_tol", "must be >= 0");
  }
  if (init_rank < 0 || init_rank > m) {
    config_error("init_rank", "must lie in [0, m]");
  }
  if (policy.needs_sigma()) {
    const int needed = policy.sigma_ref == SigmaRef::Second ? 2 : m;
    if (resolved_rank() < needed) {
      config_error("mu", "policy needs sigma_" + std::to_string(needed) + " but init_rank is " +
                             std::to_string(resolved_rank()));
    }
  }
  const auto params = resolved_params();
  if (params.empty()) {
    config_error("param", "grid is empty");
  }
  switch (model) {
    case NoiseModel::RandomCorruption:
      for (double p : params) {
        if (!(p >= 0.0 && p <= 1.0)) {
          config_error("pi0", "every pi0 must lie in [0, 1]");
        }
      }
      break;
    case NoiseModel::ModifiedGaussian:
      if (m % 2 == 0) {
        config_error("m", "modified Gaussian noise needs an odd m");
      }
      for (double s : params) {
        if (!(s > 0.0 && std::isfinite(s))) {
          config_error("sigma", "every sigma must be positive");
        }
      }
      break;
    case NoiseModel::Custom:
      if (static_cast<int>(p0.size()) != m) {
        config_error("p0", "needs exactly m weights");
      }
      try {
        (void)NoiseDistribution::from_weights(p0);
      } catch (const Error& e) {
        config_error("p0", e.what());
      }
      break;
  }
}

BlockForm ExperimentConfig::resolved_form() const {
  if (form) {
    return *form;
  }
  return model == NoiseModel::RandomCorruption ? BlockForm::Agreement : BlockForm::Loglik;
}

std::vector<double> ExperimentConfig::resolved_params() const {
  if (model == NoiseModel::Custom) {
    return {0.0};
  }
  if (!param_grid.empty()) {
    return param_grid;
  }
  if (model == NoiseModel::RandomCorruption) {
    return {0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.4};
  }
  return {0.75, 1.0, 1.25, 1.5, 1.75, 2.0, 2.5};
}

int ExperimentConfig::resolved_iterations(int n) const {
  return iterations ? *iterations : default_iterations(static_cast<std::size_t>(n));
}

int ExperimentConfig::resolved_rank() const { return init_rank > 0 ? init_rank : m; }

NoiseDistribution ExperimentConfig::noise(double param) const {
  switch (model) {
    case NoiseModel::RandomCorruption:
      return random_corruption(param, m);
    case NoiseModel::ModifiedGaussian:
      return modified_gaussian(param, m);
    case NoiseModel::Custom:
      return NoiseDistribution::from_weights(p0);
  }
  throw Error(ErrorKind::Config, "unknown noise model");
}

std::uint64_t trial_seed(std::uint64_t seed, std::size_t cell, int trial) {
  return derive_seed(seed, static_cast<std::uint64_t>(cell), static_cast<std::uint64_t>(trial));
}

TrialOutcome run_trial(const ExperimentConfig& cfg, int n, double param, std::uint64_t seed) {
  const int m = cfg.m;
  TrialOutcome out;

  Rng label_rng(derive_seed(seed, 1));
  std::uniform_int_distribution<int> uniform_label(0, m - 1);
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (int& x : labels) {
    x = uniform_label(label_rng);
  }
  out.truth = LabelVector(std::move(labels), m);

  NoiseDistribution d = cfg.noise(param);
  PairwiseObservations obs = sample_observations(out.truth, d, cfg.p_obs, derive_seed(seed, 2));
  const BlockForm form = cfg.resolved_form();
  if (form != BlockForm::Agreement && d.min_probability() < kProbabilityFloor) {
    // Inject extra uniform noise into the samples and use the matching mixture law.
    obs = regularize_observations(obs, cfg.varsigma, derive_seed(seed, 3));
    d = regularize(d, cfg.varsigma);
  }
  out.edges = obs.edges().size();

  const CirculantBlockMatrix L = build(obs, d, form);
  OrthoOptions oo;
  oo.max_iters = cfg.init_iters;
  oo.tol = cfg.init_tol;
  oo.seed = derive_seed(seed, 4);
  const LowRankFactor fac = orthogonal_iteration(L, cfg.resolved_rank(), oo);

  const Scale mu0 = resolve_scale(cfg.policy, fac.S, m);
  const BlockVector z0 = initial_guess(L, fac, mu0, derive_seed(seed, 5));
  out.init_mcr = mcr(z0.round(), out.truth);

  SolveOptions so;
  so.policy = cfg.policy;
  so.iterations = cfg.resolved_iterations(n);
  so.early_stop = cfg.early_stop;
  out.report = solve(L, z0, so, &out.truth, fac.S);
  return out;
}

std::vector<SweepRow> run_sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto params = cfg.resolved_params();
  struct Cell {
    int n;
    double param;
  };
  std::vector<Cell> cells;
  for (int n : cfg.n_grid) {
    for (double p : params) {
      cells.push_back({n, p});
    }
  }

  struct Result {
    double mcr;
    bool exact;
    int settle;
  };
  const std::size_t jobs = cells.size() * static_cast<std::size_t>(cfg.trials);
  std::vector<Result> results(jobs);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;

  auto worker = [&] {
    for (;;) {
      const std::size_t job = next.fetch_add(1);
      if (job >= jobs) {
        return;
      }
      const std::size_t cell = job / static_cast<std::size_t>(cfg.trials);
      const int trial = static_cast<int>(job % static_cast<std::size_t>(cfg.trials));
      try {
        const TrialOutcome t =
            run_trial(cfg, cells[cell].n, cells[cell].param, trial_seed(cfg.seed, cell, trial));
        const double final_mcr = t.report.final_mcr();
        results[job] = {final_mcr, final_mcr == 0.0, t.report.settle_iteration};
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) {
          failure = std::current_exception();
        }
        next.store(jobs);
        return;
      }
    }
  };

  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t workers =
      std::min<std::size_t>(jobs, cfg.threads > 0 ? static_cast<std::size_t>(cfg.threads) : hw);
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back(worker);
    }
  }
  if (failure) {
    std::rethrow_exception(failure);
  }

  std::vector<SweepRow> rows;
  rows.reserve(cells.size());
  for (std::size_t c = 0; c < cells.size(); ++c) {
    double sum_mcr = 0.0;
    double sum_iters = 0.0;
    int exact = 0;
    for (int t = 0; t < cfg.trials; ++t) {
      const Result& r =
          results[c * static_cast<std::size_t>(cfg.trials) + static_cast<std::size_t>(t)];
      sum_mcr += r.mcr;
      sum_iters += r.settle;
      exact += r.exact;
    }
    const double T = cfg.trials;
    rows.push_back({cells[c].n, cells[c].param, cfg.m, cfg.p_obs, cfg.trials, sum_mcr / T,
                    exact / T, sum_iters / T});
  }
  return rows;
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
  os << "n,param,m,p_obs,trials,mean_mcr,exact_recovery_frac,mean_iters\n";
  for (const auto& r : rows) {
    os << r.n << ',' << csv::num(r.param) << ',' << r.m << ',' << csv::num(r.p_obs) << ','
       << r.trials << ',' << csv::num(r.mean_mcr) << ',' << csv::num(r.exact_recovery_frac) << ','
       << csv::num(r.mean_iters) << '\n';
  }
}

TrialOutcome run_single(const ExperimentConfig& cfg) {
  cfg.validate();
  return run_trial(cfg, cfg.n_grid.front(), cfg.resolved_params().front(),
                   trial_seed(cfg.seed, 0, 0));
}

std::vector<ThresholdRow> threshold_table(const std::vector<int>& n_grid, int m, double p_obs) {
  std::vector<ThresholdRow> rows;
  rows.reserve(n_grid.size());
  for (int n : n_grid) {
    const KlThreshold kl = threshold_kl(n, p_obs);
    rows.push_back({n, m, p_obs, threshold_random_corruption(n, m, p_obs),
                    threshold_random_corruption_necessary(n, m, p_obs), kl.sufficient,
                    kl.necessary});
  }
  return rows;
}

void write_threshold_csv(std::ostream& os, const std::vector<ThresholdRow>& rows) {
  os << "n,m,p_obs,pi0_sufficient,pi0_necessary,kl_sufficient,kl_necessary\n";
  for (const auto& r : rows) {
    os << r.n << ',' << r.m << ',' << csv::num(r.p_obs) << ',' << csv::num(r.pi0_sufficient) << ','
       << csv::num(r.pi0_necessary) << ',' << csv::num(r.kl_sufficient) << ','
       << csv::num(r.kl_necessary) << '\n';
  }
}

}  // namespace ppm
