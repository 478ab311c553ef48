#pragma once

#include <cstddef>
#include <vector>

namespace moscolab {

/// Real value per point plus an explicit support set (the points where the
/// value may be nonzero). Values are identically zero off the support.
class ScalarField {
public:
  ScalarField() = default;

  /// Support inferred as the exact nonzero set.
  explicit ScalarField(std::vector<double> values);

  /// Explicit support; throws ParameterError if a value is nonzero off it.
  ScalarField(std::vector<double> values, std::vector<std::size_t> support);

  static ScalarField zeros(std::size_t n);

  std::size_t size() const { return values_.size(); }
  const std::vector<double>& values() const { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  const std::vector<std::size_t>& support() const { return support_; }
  bool support_empty() const { return support_.empty(); }

private:
  std::vector<double> values_;
  std::vector<std::size_t> support_;  // sorted ascending
};

ScalarField add(const ScalarField& a, const ScalarField& b);
ScalarField sub(const ScalarField& a, const ScalarField& b);
ScalarField scaled(const ScalarField& a, double factor);

double sup_abs(const ScalarField& f);
double linf_gap(const ScalarField& a, const ScalarField& b);
/// Max of |a - b| over a point subset.
double linf_gap_on(const ScalarField& a, const ScalarField& b,
                   const std::vector<std::size_t>& subset);
/// Integral of |a - b|^p against the weights, summed in point order.
double lp_gap_integral(const ScalarField& a, const ScalarField& b, double p,
                       const std::vector<double>& measure);
/// Integral of |f|^p against the weights.
double lp_integral(const ScalarField& f, double p, const std::vector<double>& measure);

}  // namespace moscolab
