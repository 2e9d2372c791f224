#include "ppm/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "ppm/error.hpp"

namespace ppm {

namespace {

void check_finite(std::span<const double> v) {
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (!std::isfinite(v[k])) {
      throw Error(ErrorKind::InvalidInput,
                  "non-finite entry at index " + std::to_string(k) + " in simplex projection");
    }
  }
}

}  // namespace

void project_simplex(std::span<const double> v, std::span<double> out) {
  if (v.empty()) {
    throw Error(ErrorKind::InvalidInput, "cannot project an empty vector");
  }
  if (!(out.size() == v.size())) {
    throw Error(ErrorKind::DimensionMismatch, "projection output has the wrong length");
  }
  check_finite(v);

  std::vector<double> u(v.begin(), v.end());
  std::sort(u.begin(), u.end(), std::greater<>());

  // theta is the threshold of the largest support size rho with
  // u_rho - (sum_{k<=rho} u_k - 1) / rho > 0.
  double css = 0.0;
  double theta = u[0] - 1.0;
  std::size_t rho = 1;
  for (std::size_t j = 0; j < u.size(); ++j) {
    css += u[j];
    const double t = (css - 1.0) / static_cast<double>(j + 1);
    if (u[j] - t > 0.0) {
      theta = t;
      rho = j + 1;
    }
  }
  if (rho == 1) {
    // A unique maximum: return the vertex exactly.
    const auto top = static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
    std::fill(out.begin(), out.end(), 0.0);
    out[top] = 1.0;
    return;
  }
  for (std::size_t k = 0; k < v.size(); ++k) {
    out[k] = std::max(v[k] - theta, 0.0);
  }
}

std::vector<double> project_simplex(std::span<const double> v) {
  std::vector<double> out(v.size());
  project_simplex(v, out);
  return out;
}

std::size_t argmax(std::span<const double> v) {
  if (v.empty()) {
    throw Error(ErrorKind::InvalidInput, "argmax of an empty vector");
  }
  check_finite(v);
  std::size_t best = 0;
  for (std::size_t k = 1; k < v.size(); ++k) {
    if (v[k] > v[best]) {
      best = k;
    }
  }
  return best;
}

std::vector<double> round_to_vertex(std::span<const double> v) {
  std::vector<double> e(v.size(), 0.0);
  e[argmax(v)] = 1.0;
  return e;
}

BlockVector project_blockwise(const BlockVector& z, Scale mu) {
  BlockVector out(z.n(), z.m());
  std::vector<double> scaled(static_cast<std::size_t>(z.m()));
  for (std::size_t i = 0; i < z.n(); ++i) {
    auto src = z.block(i);
    auto dst = out.block(i);
    if (mu.is_infinite()) {
      dst[argmax(src)] = 1.0;
    } else {
      for (std::size_t k = 0; k < src.size(); ++k) {
        scaled[k] = mu.value() * src[k];
      }
      project_simplex(scaled, dst);
    }
  }
  out.mark_feasible(true);
  return out;
}

bool in_simplex(std::span<const double> v, double tol) {
  double sum = 0.0;
  for (double x : v) {
    if (!std::isfinite(x) || x < -1e-12) {
      return false;
    }
    sum += x;
  }
  return std::abs(sum - 1.0) <= tol;
}

}  // namespace ppm
