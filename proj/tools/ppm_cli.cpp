// ppm: projected power method experiments from the command line.
#include <CLI11.hpp>
#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ppm/error.hpp"
#include "ppm/harness.hpp"
#include "ppm/matching.hpp"
#include "ppm/rng.hpp"

namespace {

constexpr int kConfigExit = 2;

struct CommonFlags {
  std::string config;
  std::string out;
  // Flag name -> raw value, applied on top of the config file.
  std::map<std::string, std::string> overrides;
};

void add_setting(CLI::App* cmd, CommonFlags& flags, const std::string& key,
                 const std::string& help) {
  cmd->add_option_function<std::string>(
      "--" + key, [&flags, key](const std::string& v) { flags.overrides[key] = v; }, help);
}

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config, "key = value config file");
  cmd->add_option("--out", flags.out, "output CSV path (default: stdout)");
  add_setting(cmd, flags, "seed", "base RNG seed");
  add_setting(cmd, flags, "n", "number of variables (comma list for sweeps)");
  add_setting(cmd, flags, "m", "number of states");
  add_setting(cmd, flags, "pobs", "edge observation probability");
}

void add_experiment(CLI::App* cmd, CommonFlags& flags) {
  add_common(cmd, flags);
  add_setting(cmd, flags, "model", "random_corruption | modified_gaussian | custom");
  add_setting(cmd, flags, "pi0", "non-corruption rate(s)");
  add_setting(cmd, flags, "sigma", "modified Gaussian width(s)");
  add_setting(cmd, flags, "mu", "inf | c/sigma2 | c/sigmam | number");
  add_setting(cmd, flags, "form", "loglik | agreement | debiased-loglik");
  add_setting(cmd, flags, "trials", "Monte Carlo trials per cell");
  add_setting(cmd, flags, "iters", "PPM iterations");
  add_setting(cmd, flags, "p0", "custom noise weights (comma list)");
  add_setting(cmd, flags, "varsigma", "regularization weight");
  add_setting(cmd, flags, "threads", "worker threads (0: all cores)");
  add_setting(cmd, flags, "early_stop", "stop once iterates settle");
  add_setting(cmd, flags, "init_iters", "orthogonal iteration cap");
  add_setting(cmd, flags, "init_tol", "orthogonal iteration tolerance");
  add_setting(cmd, flags, "init_rank", "factorization rank (0: m)");
}

ppm::ExperimentConfig load_config(const CommonFlags& flags) {
  ppm::ExperimentConfig cfg;
  if (!flags.config.empty()) {
    std::ifstream in(flags.config);
    if (!in) {
      throw ppm::Error(ppm::ErrorKind::Config, "cannot open config file '" + flags.config + "'");
    }
    ppm::apply_config_text(cfg, in);
  }
  for (const auto& [key, value] : flags.overrides) {
    ppm::apply_setting(cfg, key, value);
  }
  cfg.validate();
  return cfg;
}

// Flat key = value file restricted to an explicit key set.
std::map<std::string, std::string> read_plain_config(const std::string& path,
                                                     const std::vector<std::string>& allowed) {
  std::map<std::string, std::string> out;
  if (path.empty()) {
    return out;
  }
  std::ifstream in(path);
  if (!in) {
    throw ppm::Error(ppm::ErrorKind::Config, "cannot open config file '" + path + "'");
  }
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) {
      line.erase(h);
    }
    const auto eq = line.find('=');
    if (line.find_first_not_of(" \t\r") == std::string::npos) {
      continue;
    }
    if (eq == std::string::npos) {
      throw ppm::Error(ppm::ErrorKind::Config,
                       "config line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    auto trim = [](std::string s) {
      s.erase(0, s.find_first_not_of(" \t\r"));
      s.erase(s.find_last_not_of(" \t\r") + 1);
      return s;
    };
    const std::string key = trim(line.substr(0, eq));
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ppm::Error(ppm::ErrorKind::Config, "config field '" + key + "': unknown key");
    }
    out[key] = trim(line.substr(eq + 1));
  }
  return out;
}

template <class T>
T number(const std::map<std::string, std::string>& kv, const std::string& key, T fallback) {
  const auto it = kv.find(key);
  if (it == kv.end()) {
    return fallback;
  }
  std::istringstream is(it->second);
  T v{};
  if (!(is >> v) || !(is >> std::ws).eof()) {
    throw ppm::Error(ppm::ErrorKind::Config,
                     "config field '" + key + "': '" + it->second + "' is not a valid number");
  }
  return v;
}

class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty()) {
      file_.open(path, std::ios::binary);
      if (!file_) {
        throw ppm::Error(ppm::ErrorKind::Io, "cannot write '" + path + "'");
      }
    }
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

int cmd_align(const CommonFlags& flags, const std::string& observations_out) {
  const ppm::ExperimentConfig cfg = load_config(flags);
  const ppm::TrialOutcome t = ppm::run_single(cfg);
  Output out(flags.out);
  ppm::write_report_csv(out.stream(), t.report);
  if (!observations_out.empty()) {
    // Re-derive the instance so the dump matches the run exactly.
    std::ofstream obs_file(observations_out, std::ios::binary);
    if (!obs_file) {
      throw ppm::Error(ppm::ErrorKind::Io, "cannot write '" + observations_out + "'");
    }
    const auto seed = ppm::trial_seed(cfg.seed, 0, 0);
    const auto obs = ppm::sample_observations(t.truth, cfg.noise(cfg.resolved_params().front()),
                                              cfg.p_obs, ppm::derive_seed(seed, 2));
    ppm::write_observations_csv(obs_file, obs);
  }
  std::fprintf(
      stderr, "n=%zu m=%d edges=%zu mu=%s init_mcr=%.6g final_mcr=%.6g iterations=%d\n",
      t.truth.size(), cfg.m, t.edges,
      t.report.mu_used.is_infinite() ? "inf" : std::to_string(t.report.mu_used.value()).c_str(),
      t.init_mcr, t.report.final_mcr(), t.report.iterations_run);
  return 0;
}

int cmd_sweep(const CommonFlags& flags) {
  const ppm::ExperimentConfig cfg = load_config(flags);
  const auto rows = ppm::run_sweep(cfg);
  Output out(flags.out);
  ppm::write_sweep_csv(out.stream(), rows);
  return 0;
}

int cmd_thresholds(const CommonFlags& flags) {
  auto kv = read_plain_config(flags.config, {"n", "m", "pobs", "seed"});
  for (const auto& [k, v] : flags.overrides) {
    kv[k] = v;
  }
  ppm::ExperimentConfig cfg;
  for (const auto& [k, v] : kv) {
    ppm::apply_setting(cfg, k, v);
  }
  if (cfg.m < 2) {
    throw ppm::Error(ppm::ErrorKind::Config, "config field 'm': must be >= 2");
  }
  if (!(cfg.p_obs > 0.0 && cfg.p_obs <= 1.0)) {
    throw ppm::Error(ppm::ErrorKind::Config, "config field 'pobs': must lie in (0, 1]");
  }
  for (int n : cfg.n_grid) {
    if (n < 2) {
      throw ppm::Error(ppm::ErrorKind::Config, "config field 'n': every n must be >= 2");
    }
  }
  Output out(flags.out);
  ppm::write_threshold_csv(out.stream(), ppm::threshold_table(cfg.n_grid, cfg.m, cfg.p_obs));
  return 0;
}

int cmd_match(const CommonFlags& flags, const std::string& input) {
  auto kv = read_plain_config(flags.config, {"n", "m", "pobs", "seed", "corrupt", "iters"});
  for (const auto& [k, v] : flags.overrides) {
    kv[k] = v;
  }
  const int n = number<int>(kv, "n", 50);
  const int m = number<int>(kv, "m", 10);
  const double p_obs = number<double>(kv, "pobs", 1.0);
  const double corrupt = number<double>(kv, "corrupt", 0.3);
  const std::uint64_t seed = number<std::uint64_t>(kv, "seed", 1);
  const int iters =
      number<int>(kv, "iters", ppm::default_iterations(static_cast<std::size_t>(std::max(n, 2))));
  if (n < 2) {
    throw ppm::Error(ppm::ErrorKind::Config, "config field 'n': must be >= 2");
  }
  if (m < 1) {
    throw ppm::Error(ppm::ErrorKind::Config, "config field 'm': must be >= 1");
  }
  if (!(p_obs > 0.0 && p_obs <= 1.0)) {
    throw ppm::Error(ppm::ErrorKind::Config, "config field 'pobs': must lie in (0, 1]");
  }
  if (!(corrupt >= 0.0 && corrupt <= 1.0)) {
    throw ppm::Error(ppm::ErrorKind::Config, "config field 'corrupt': must lie in [0, 1]");
  }
  if (iters < 0) {
    throw ppm::Error(ppm::ErrorKind::Config, "config field 'iters': must be >= 0");
  }

  Output out(flags.out);
  if (!input.empty()) {
    std::ifstream in(input);
    if (!in) {
      throw ppm::Error(ppm::ErrorKind::Io, "cannot open '" + input + "'");
    }
    const auto obs = ppm::read_match_observations_csv(in, n, m);
    const auto report = ppm::match_solve(obs, iters, seed);
    ppm::write_match_estimates_csv(out.stream(), report.estimates);
    std::fprintf(stderr, "n=%d m=%d iterations=%d converged=%d\n", n, m, report.iterations_run,
                 report.converged ? 1 : 0);
    return 0;
  }
  const auto truth = ppm::random_permutations(n, m, ppm::derive_seed(seed, 1));
  const auto obs = ppm::sample_match_observations(truth, corrupt, p_obs, ppm::derive_seed(seed, 2));
  const auto report = ppm::match_solve(obs, iters, ppm::derive_seed(seed, 3), &truth);
  ppm::write_match_estimates_csv(out.stream(), report.estimates);
  std::fprintf(stderr, "n=%d m=%d input_rate=%.6g final_rate=%.6g iterations=%d\n", n, m,
               report.input_rate.value_or(-1.0), report.final_rate(), report.iterations_run);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Joint alignment by the projected power method"};
  app.require_subcommand(1);

  CommonFlags align_flags, sweep_flags, match_flags, threshold_flags;
  std::string observations_out, match_input;

  auto* align = app.add_subcommand("align", "solve one synthetic instance, print the MCR trace");
  add_experiment(align, align_flags);
  align->add_option("--dump-observations", observations_out,
                    "write the sampled i,j,y observations here");

  auto* sweep = app.add_subcommand("sweep", "Monte Carlo sweep over (n, param) grid");
  add_experiment(sweep, sweep_flags);

  auto* match = app.add_subcommand("match", "joint permutation matching");
  add_common(match, match_flags);
  add_setting(match, match_flags, "corrupt",
              "probability a pairwise block is a random permutation");
  add_setting(match, match_flags, "iters", "iterations");
  match->add_option("--input", match_input, "i,j,row,col,value CSV instead of synthetic data");

  auto* thresholds = app.add_subcommand("thresholds", "recovery thresholds per n");
  add_common(thresholds, threshold_flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigExit;
  }

  try {
    if (*align) {
      return cmd_align(align_flags, observations_out);
    }
    if (*sweep) {
      return cmd_sweep(sweep_flags);
    }
    if (*match) {
      return cmd_match(match_flags, match_input);
    }
    if (*thresholds) {
      return cmd_thresholds(threshold_flags);
    }
  } catch (const ppm::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return e.kind() == ppm::ErrorKind::Config ? kConfigExit : 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
