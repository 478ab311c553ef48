#include "moscolab/distance_matrix.hpp"

#include <cmath>
#include <limits>

namespace moscolab {

DistanceMatrix DistanceMatrix::from_validated_rows(const std::vector<std::vector<double>>& rows) {
  DistanceMatrix m(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    m.set_symmetric(i, i, rows[i][i]);
    for (std::size_t j = i + 1; j < rows.size(); ++j) {
      m.set_symmetric(i, j, rows[i][j]);
    }
  }
  return m;
}

std::vector<std::vector<double>> DistanceMatrix::to_rows() const {
  std::vector<std::vector<double>> rows(n_, std::vector<double>(n_, 0.0));
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t j = 0; j < n_; ++j) rows[i][j] = (*this)(i, j);
  }
  return rows;
}

double DistanceMatrix::max_entry() const {
  double m = 0.0;
  for (double v : a_) m = std::max(m, v);
  return m;
}

double DistanceMatrix::min_positive_entry() const {
  double m = std::numeric_limits<double>::infinity();
  for (double v : a_) {
    if (v > 0.0 && v < m) m = v;
  }
  return m;
}

double DistanceMatrix::max_offdiag_abs_gap(const DistanceMatrix& other) const {
  double g = 0.0;
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t j = i + 1; j < n_; ++j) {
      g = std::max(g, std::abs((*this)(i, j) - other(i, j)));
    }
  }
  return g;
}

}  // namespace moscolab
