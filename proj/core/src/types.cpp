#include "ppm/types.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "ppm/error.hpp"
#include "ppm/simplex.hpp"

namespace ppm {

LabelVector::LabelVector(std::vector<int> labels, int m) : labels_(std::move(labels)), m_(m) {
  if (!(m >= 1)) {
    throw Error(ErrorKind::InvalidInput, "label alphabet size must be >= 1");
  }
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (!(labels_[i] >= 0 && labels_[i] < m)) {
      throw Error(ErrorKind::InvalidInput, "label " + std::to_string(labels_[i]) + " at position " +
                                               std::to_string(i) + " outside [0, " +
                                               std::to_string(m) + ")");
    }
  }
}

LabelVector LabelVector::shifted(int l) const {
  std::vector<int> out(labels_.size());
  const int s = ((l % m_) + m_) % m_;
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    out[i] = (labels_[i] + s) % m_;
  }
  return LabelVector(std::move(out), m_);
}

Scale Scale::finite(double value) {
  if (!(std::isfinite(value) && value > 0.0)) {
    throw Error(ErrorKind::InvalidInput,
                "finite scale must be positive, got " + std::to_string(value));
  }
  return Scale(false, value);
}

BlockVector::BlockVector(std::size_t n, int m)
    : n_(n), m_(m), data_(n * static_cast<std::size_t>(m), 0.0) {
  if (!(m >= 1)) {
    throw Error(ErrorKind::InvalidInput, "block length must be >= 1");
  }
}

BlockVector::BlockVector(std::size_t n, int m, std::vector<double> data)
    : n_(n), m_(m), data_(std::move(data)) {
  if (!(m >= 1)) {
    throw Error(ErrorKind::InvalidInput, "block length must be >= 1");
  }
  if (!(data_.size() == n * static_cast<std::size_t>(m))) {
    throw Error(ErrorKind::DimensionMismatch,
                "block vector data has " + std::to_string(data_.size()) + " entries, expected " +
                    std::to_string(n * static_cast<std::size_t>(m)));
  }
}

BlockVector BlockVector::lift(const LabelVector& x) {
  BlockVector z(x.size(), x.m());
  for (std::size_t i = 0; i < x.size(); ++i) {
    z.block(i)[static_cast<std::size_t>(x[i])] = 1.0;
  }
  z.mark_feasible(true);
  return z;
}

LabelVector BlockVector::round() const {
  std::vector<int> labels(n_);
  for (std::size_t i = 0; i < n_; ++i) {
    labels[i] = static_cast<int>(argmax(block(i)));
  }
  return LabelVector(std::move(labels), m_);
}

}  // namespace ppm
