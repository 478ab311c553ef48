#include "moscolab/scalar_field.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "moscolab/errors.hpp"

namespace moscolab {

ScalarField::ScalarField(std::vector<double> values) : values_(std::move(values)) {
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) throw ParameterError("scalar field has a non-finite value");
    if (values_[i] != 0.0) support_.push_back(i);
  }
}

ScalarField::ScalarField(std::vector<double> values, std::vector<std::size_t> support)
    : values_(std::move(values)), support_(std::move(support)) {
  std::sort(support_.begin(), support_.end());
  support_.erase(std::unique(support_.begin(), support_.end()), support_.end());
  if (!support_.empty() && support_.back() >= values_.size()) {
    throw ParameterError("support index out of range");
  }
  std::size_t cursor = 0;
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) throw ParameterError("scalar field has a non-finite value");
    const bool in_support = cursor < support_.size() && support_[cursor] == i;
    if (in_support) {
      ++cursor;
    } else if (values_[i] != 0.0) {
      throw ParameterError("scalar field is nonzero at point " + std::to_string(i) +
                           " outside its declared support");
    }
  }
}

ScalarField ScalarField::zeros(std::size_t n) {
  return ScalarField(std::vector<double>(n, 0.0), {});
}

namespace {
std::vector<std::size_t> support_union(const ScalarField& a, const ScalarField& b) {
  std::vector<std::size_t> out;
  out.reserve(a.support().size() + b.support().size());
  std::set_union(a.support().begin(), a.support().end(),
                 b.support().begin(), b.support().end(), std::back_inserter(out));
  return out;
}

void check_same_size(const ScalarField& a, const ScalarField& b) {
  if (a.size() != b.size()) throw ParameterError("scalar fields live on different point sets");
}
}  // namespace

ScalarField add(const ScalarField& a, const ScalarField& b) {
  check_same_size(a, b);
  std::vector<double> v(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) v[i] = a[i] + b[i];
  return ScalarField(std::move(v), support_union(a, b));
}

ScalarField sub(const ScalarField& a, const ScalarField& b) {
  check_same_size(a, b);
  std::vector<double> v(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) v[i] = a[i] - b[i];
  return ScalarField(std::move(v), support_union(a, b));
}

ScalarField scaled(const ScalarField& a, double factor) {
  if (!std::isfinite(factor)) throw ParameterError("scale factor must be finite");
  std::vector<double> v(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) v[i] = factor * a[i];
  return ScalarField(std::move(v), a.support());
}

double sup_abs(const ScalarField& f) {
  double m = 0.0;
  for (double v : f.values()) m = std::max(m, std::abs(v));
  return m;
}

double linf_gap(const ScalarField& a, const ScalarField& b) {
  check_same_size(a, b);
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double linf_gap_on(const ScalarField& a, const ScalarField& b,
                   const std::vector<std::size_t>& subset) {
  check_same_size(a, b);
  double m = 0.0;
  for (std::size_t i : subset) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double lp_gap_integral(const ScalarField& a, const ScalarField& b, double p,
                       const std::vector<double>& measure) {
  check_same_size(a, b);
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    total += std::pow(std::abs(a[i] - b[i]), p) * measure[i];
  }
  return total;
}

double lp_integral(const ScalarField& f, double p, const std::vector<double>& measure) {
  double total = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    total += std::pow(std::abs(f[i]), p) * measure[i];
  }
  return total;
}

}  // namespace moscolab
