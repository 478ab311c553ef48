#pragma once

#include <cstddef>
#include <vector>

namespace moscolab {

/// Symmetric N x N matrix of pairwise distances. Storage is canonical: every
/// mutation writes both (i,j) and (j,i) from the same double, so lookups are
/// bitwise symmetric no matter how the matrix was filled.
class DistanceMatrix {
public:
  DistanceMatrix() = default;
  explicit DistanceMatrix(std::size_t n) : n_(n), a_(n * n, 0.0) {}

  /// Builds from row data that already passed symmetry validation. The upper
  /// triangle is the source of truth; the lower triangle is mirrored from it.
  static DistanceMatrix from_validated_rows(const std::vector<std::vector<double>>& rows);

  std::size_t size() const { return n_; }
  bool empty() const { return n_ == 0; }

  double operator()(std::size_t i, std::size_t j) const { return a_[i * n_ + j]; }

  void set_symmetric(std::size_t i, std::size_t j, double v) {
    a_[i * n_ + j] = v;
    a_[j * n_ + i] = v;
  }

  /// Row-major copy, mostly for CSV emission.
  std::vector<std::vector<double>> to_rows() const;

  double max_entry() const;
  /// Smallest strictly positive entry; +inf when none exists (N <= 1).
  double min_positive_entry() const;
  double max_offdiag_abs_gap(const DistanceMatrix& other) const;

  const std::vector<double>& data() const { return a_; }

private:
  std::size_t n_ = 0;
  std::vector<double> a_;
};

}  // namespace moscolab
