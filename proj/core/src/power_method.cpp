#include "ppm/power_method.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <string>

#include "csv.hpp"
#include "ppm/error.hpp"
#include "ppm/rng.hpp"
#include "ppm/simplex.hpp"

namespace ppm {

ScalingPolicy ScalingPolicy::over_sigma(double c, SigmaRef ref) {
  if (!(std::isfinite(c) && c > 0.0)) {
    throw Error(ErrorKind::InvalidInput,
                "scaling constant must be positive, got " + std::to_string(c));
  }
  return {Kind::ConstantOverSigma, c, ref};
}

ScalingPolicy ScalingPolicy::fixed(double mu) {
  if (!(std::isfinite(mu) && mu > 0.0)) {
    throw Error(ErrorKind::InvalidInput, "fixed mu must be positive, got " + std::to_string(mu));
  }
  return {Kind::Fixed, mu, SigmaRef::Second};
}

namespace {

double parse_positive(std::string_view s, std::string_view what) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (!(ec == std::errc() && ptr == end && std::isfinite(v) && v > 0.0)) {
    throw Error(ErrorKind::InvalidInput, "bad " + std::string(what) + " '" + std::string(s) + "'");
  }
  return v;
}

}  // namespace

ScalingPolicy ScalingPolicy::parse(std::string_view text) {
  if (text == "inf" || text == "infinity") {
    return infinite();
  }
  const auto slash = text.find('/');
  if (slash == std::string_view::npos) {
    return fixed(parse_positive(text, "mu"));
  }
  const auto head = text.substr(0, slash);
  const auto ref = text.substr(slash + 1);
  // A literal "c" selects the default constant for the reference.
  if (ref == "sigma2") {
    return over_sigma(head == "c" ? 10.0 : parse_positive(head, "mu constant"), SigmaRef::Second);
  }
  if (ref == "sigmam") {
    return over_sigma(head == "c" ? 20.0 : parse_positive(head, "mu constant"), SigmaRef::Mth);
  }
  throw Error(ErrorKind::InvalidInput,
              "mu policy '" + std::string(text) + "' must be inf, c/sigma2, c/sigmam or a number");
}

std::string ScalingPolicy::describe() const {
  switch (kind) {
    case Kind::Infinite:
      return "inf";
    case Kind::Fixed:
      return csv::num(c);
    case Kind::ConstantOverSigma:
      return csv::num(c) + (sigma_ref == SigmaRef::Second ? "/sigma2" : "/sigmam");
  }
  return "?";
}

Scale resolve_scale(const ScalingPolicy& policy, std::span<const double> singular_values, int m) {
  switch (policy.kind) {
    case ScalingPolicy::Kind::Infinite:
      return Scale::infinite();
    case ScalingPolicy::Kind::Fixed:
      return Scale::finite(policy.c);
    case ScalingPolicy::Kind::ConstantOverSigma: {
      const std::size_t idx =
          policy.sigma_ref == SigmaRef::Second ? 1 : static_cast<std::size_t>(m - 1);
      if (!(singular_values.size() > idx)) {
        throw Error(ErrorKind::MissingSigma,
                    "scaling policy " + policy.describe() + " needs singular value #" +
                        std::to_string(idx + 1) + " but only " +
                        std::to_string(singular_values.size()) + " are available");
      }
      const double sigma = singular_values[idx];
      if (!(sigma > 0.0)) {
        return Scale::infinite();
      }
      return Scale::finite(policy.c / sigma);
    }
  }
  return Scale::infinite();
}

int default_iterations(std::size_t n) {
  if (n < 2) {
    return 1;
  }
  return static_cast<int>(std::ceil(3.0 * std::log(static_cast<double>(n))));
}

double mcr(const LabelVector& a, const LabelVector& b) {
  if (!(a.size() == b.size() && a.m() == b.m())) {
    throw Error(ErrorKind::DimensionMismatch, "MCR operands differ in n or m");
  }
  if (a.size() == 0) {
    return 0.0;
  }
  const int m = a.m();
  std::size_t best = a.size();
  for (int l = 0; l < m; ++l) {
    std::size_t miss = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      miss += a[i] != (b[i] + l) % m;
    }
    best = std::min(best, miss);
  }
  return static_cast<double>(best) / static_cast<double>(a.size());
}

double dist_mod_shift(const BlockVector& zhat, const LabelVector& x) {
  if (!(zhat.n() == x.size() && zhat.m() == x.m())) {
    throw Error(ErrorKind::DimensionMismatch, "dist operands differ in n or m");
  }
  const int m = x.m();
  double best = std::numeric_limits<double>::infinity();
  for (int l = 0; l < m; ++l) {
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const auto b = zhat.block(i);
      const int hot = (x[i] + l) % m;
      for (int k = 0; k < m; ++k) {
        const double d = b[k] - (k == hot ? 1.0 : 0.0);
        acc += d * d;
      }
    }
    best = std::min(best, acc);
  }
  return std::sqrt(best);
}

double objective(const CirculantBlockMatrix& L, const BlockVector& z) {
  const BlockVector w = matvec(L, z);
  double acc = 0.0;
  for (std::size_t k = 0; k < z.dim(); ++k) {
    acc += z.data()[k] * w.data()[k];
  }
  return acc;
}

std::optional<int> SolveReport::first_exact_iteration() const {
  for (std::size_t t = 0; t < iterates_mcr.size(); ++t) {
    if (iterates_mcr[t] == 0.0) {
      return static_cast<int>(t);
    }
  }
  return std::nullopt;
}

SolveReport solve(const CirculantBlockMatrix& L, const BlockVector& z0, const SolveOptions& opts,
                  const LabelVector* truth, std::span<const double> singular_values) {
  if (!(z0.n() == static_cast<std::size_t>(L.n()) && z0.m() == L.m())) {
    throw Error(ErrorKind::DimensionMismatch, "initial iterate does not match the operator");
  }
  if (!z0.feasible()) {
    throw Error(ErrorKind::InvalidInput, "initial iterate must be block-wise feasible");
  }
  if (!(opts.iterations >= 0)) {
    throw Error(ErrorKind::InvalidInput, "iteration budget must be >= 0");
  }
  if (truth != nullptr) {
    if (!(truth->size() == z0.n() && truth->m() == z0.m())) {
      throw Error(ErrorKind::DimensionMismatch, "truth labels do not match the operator");
    }
  }

  SolveReport report;
  report.mu_used = resolve_scale(opts.policy, singular_values, L.m());
  report.sigma_estimates.assign(singular_values.begin(), singular_values.end());

  BlockVector z = z0;
  LabelVector rounded = z.round();
  if (truth != nullptr) {
    report.iterates_mcr.push_back(mcr(rounded, *truth));
  }

  for (int t = 0; t < opts.iterations; ++t) {
    BlockVector next = project_blockwise(matvec(L, z), report.mu_used);
    LabelVector next_rounded = next.round();

    bool stop;
    if (report.mu_used.is_infinite()) {
      stop = next_rounded == rounded;
    } else {
      double diff = 0.0;
      for (std::size_t k = 0; k < z.dim(); ++k) {
        diff = std::max(diff, std::abs(next.data()[k] - z.data()[k]));
      }
      stop = diff <= 1e-10;
    }
    if (!(next_rounded == rounded)) {
      report.settle_iteration = t + 1;
    }

    z = std::move(next);
    rounded = std::move(next_rounded);
    report.iterations_run = t + 1;
    report.converged = stop;
    if (truth != nullptr) {
      report.iterates_mcr.push_back(mcr(rounded, *truth));
    }
    if (stop && opts.early_stop) {
      break;
    }
  }
  report.estimate = std::move(rounded);
  return report;
}

ContractionReport check_contraction(const CirculantBlockMatrix& L, const LabelVector& truth,
                                    const ScalingPolicy& policy,
                                    std::span<const double> singular_values, int trials,
                                    std::uint64_t seed) {
  if (!(truth.size() == static_cast<std::size_t>(L.n()) && truth.m() == L.m())) {
    throw Error(ErrorKind::DimensionMismatch, "truth labels do not match the operator");
  }
  if (!(trials >= 1)) {
    throw Error(ErrorKind::InvalidInput, "contraction check needs at least one probe");
  }
  const Scale mu = resolve_scale(policy, singular_values, L.m());
  const int n = L.n();
  const int m = L.m();
  const int max_flips = static_cast<int>(std::floor(0.49 * n));

  ContractionReport rep;
  Rng rng(seed);
  std::vector<int> order(static_cast<std::size_t>(n));
  double sum = 0.0;
  for (int trial = 0; trial < trials; ++trial) {
    std::vector<int> labels = truth.values();
    if (max_flips >= 1) {
      std::uniform_int_distribution<int> count(1, max_flips);
      std::uniform_int_distribution<int> offset(1, m - 1);
      const int k = count(rng);
      std::iota(order.begin(), order.end(), 0);
      std::shuffle(order.begin(), order.end(), rng);
      for (int f = 0; f < k; ++f) {
        labels[order[f]] = (labels[order[f]] + offset(rng)) % m;
      }
    }
    const BlockVector z = BlockVector::lift(LabelVector(labels, m));
    const double before = mcr(z.round(), truth);
    const double after = mcr(project_blockwise(matvec(L, z), mu).round(), truth);
    const double ratio = before > 0.0
                             ? after / before
                             : (after > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
    rep.max_ratio = std::max(rep.max_ratio, ratio);
    sum += ratio;
    ++rep.probes;
  }
  rep.mean_ratio = sum / rep.probes;
  rep.contracts = rep.max_ratio < 1.0;
  return rep;
}

void write_report_csv(std::ostream& os, const SolveReport& report) {
  if (report.iterates_mcr.empty()) {
    throw Error(ErrorKind::InvalidInput,
                "an MCR trace needs ground truth; write the estimate instead");
  }
  os << "t,mcr\n";
  for (std::size_t t = 0; t < report.iterates_mcr.size(); ++t) {
    os << t << ',' << csv::num(report.iterates_mcr[t]) << '\n';
  }
  os << "final," << csv::num(report.iterates_mcr.back()) << '\n';
}

}  // namespace ppm
