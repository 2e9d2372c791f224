#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ppm/types.hpp"

namespace ppm {

/// Tolerance on |sum - 1| for simplex membership checks.
inline constexpr double kSimplexSumTol = 1e-9;

/// Euclidean projection onto the standard simplex {s >= 0, sum(s) = 1}.
///
/// Sort-and-threshold algorithm, O(m log m). Throws Error(InvalidInput) on a
/// non-finite entry or an empty input.
std::vector<double> project_simplex(std::span<const double> v);

/// Same as above, writing into `out` (|out| == |v|). `out` may alias `v`.
void project_simplex(std::span<const double> v, std::span<double> out);

/// Index of the largest entry; ties go to the smallest index.
std::size_t argmax(std::span<const double> v);

/// The vertex e_j with j = argmax(v). The mu -> infinity limit of
/// project_simplex(mu * v).
std::vector<double> round_to_vertex(std::span<const double> v);

/// Block-wise projection P(mu * z). For infinite mu every block is rounded
/// to its argmax vertex. The result is marked feasible.
BlockVector project_blockwise(const BlockVector& z, Scale mu);

bool in_simplex(std::span<const double> v, double tol = kSimplexSumTol);

}  // namespace ppm
