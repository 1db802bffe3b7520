// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace clover::loss {

using ScalarFn = std::function<double(std::span<const double>)>;

struct GradCheckReport {
  std::vector<double> numeric;
  double max_rel_error = 0;
  std::size_t worst_index = 0;
  bool passed = false;
  std::string diagnostic;  // set when the check could not run cleanly
};

/// Denominator floor for relative error, so coordinates whose true
/// derivative is ~0 compare on an absolute scale.
inline constexpr double kRelErrorFloor = 1e-8;

/// |a - b| / max(|a|, |b|, kRelErrorFloor)
double relative_error(double a, double b);

/// Central differences (f(x + h e_k) - f(x - h e_k)) / 2h per coordinate,
/// compared with `analytic`. Fails with a diagnostic naming the coordinate
/// when f is non-finite at a perturbed point.
GradCheckReport grad_check(const ScalarFn& f, std::span<const double> x, std::span<const double> analytic,
                           double h = 1e-4, double tol = 1e-5);

}  // namespace clover::loss
