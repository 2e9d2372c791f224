#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace ppm {

/// Discrete labels x_1..x_n, stored as residues in [0, m). Label k here is
/// the basis vector e_{k+1} of the lifted representation.
class LabelVector {
 public:
  LabelVector() = default;
  LabelVector(std::vector<int> labels, int m);

  std::size_t size() const noexcept { return labels_.size(); }
  int m() const noexcept { return m_; }
  int operator[](std::size_t i) const { return labels_[i]; }
  const std::vector<int>& values() const noexcept { return labels_; }

  /// Every label moved by l positions, modulo m.
  LabelVector shifted(int l) const;

  friend bool operator==(const LabelVector&, const LabelVector&) = default;

 private:
  std::vector<int> labels_;
  int m_ = 0;
};

/// The scaling factor mu. Infinity is a separate state rather than a
/// floating-point infinity so it never enters arithmetic.
class Scale {
 public:
  static Scale infinite() { return Scale(true, 0.0); }
  static Scale finite(double value);

  bool is_infinite() const noexcept { return infinite_; }
  /// Only meaningful when !is_infinite().
  double value() const noexcept { return value_; }

 private:
  Scale(bool inf, double v) : infinite_(inf), value_(v) {}
  bool infinite_;
  double value_;
};

/// Lifted vector z in R^{nm}, n contiguous blocks of length m.
class BlockVector {
 public:
  BlockVector() = default;
  BlockVector(std::size_t n, int m);
  BlockVector(std::size_t n, int m, std::vector<double> data);

  /// Vertex lift: block i is e_{x_i}.
  static BlockVector lift(const LabelVector& x);

  std::size_t n() const noexcept { return n_; }
  int m() const noexcept { return m_; }
  std::size_t dim() const noexcept { return data_.size(); }

  std::span<double> block(std::size_t i) {
    return {data_.data() + i * static_cast<std::size_t>(m_), static_cast<std::size_t>(m_)};
  }
  std::span<const double> block(std::size_t i) const {
    return {data_.data() + i * static_cast<std::size_t>(m_), static_cast<std::size_t>(m_)};
  }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  /// Set by block-wise projection: every block lies in the simplex.
  bool feasible() const noexcept { return feasible_; }
  void mark_feasible(bool f) noexcept { feasible_ = f; }

  /// Per-block argmax, smallest index on ties.
  LabelVector round() const;

 private:
  std::size_t n_ = 0;
  int m_ = 0;
  std::vector<double> data_;
  bool feasible_ = false;
};

}  // namespace ppm
