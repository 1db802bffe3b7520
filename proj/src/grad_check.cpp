// SPDX-License-Identifier: Apache-2.0
#include "clover/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "clover/error.hpp"

namespace clover::loss {

double relative_error(double a, double b) {
  const double denom = std::max({std::abs(a), std::abs(b), kRelErrorFloor});
  return std::abs(a - b) / denom;
}

GradCheckReport grad_check(const ScalarFn& f, std::span<const double> x, std::span<const double> analytic, double h,
                           double tol) {
  if (x.size() != analytic.size()) {
    throw InvalidArgument(fmt::format("gradient has {} entries for {} inputs", analytic.size(), x.size()));
  }
  if (!(h > 0)) throw InvalidArgument("finite-difference step must be positive");

  GradCheckReport report;
  report.numeric.resize(x.size());
  std::vector<double> probe(x.begin(), x.end());

  for (std::size_t k = 0; k < x.size(); ++k) {
    probe[k] = x[k] + h;
    const double up = f(probe);
    probe[k] = x[k] - h;
    const double down = f(probe);
    probe[k] = x[k];
    if (!std::isfinite(up) || !std::isfinite(down)) {
      report.diagnostic = fmt::format("loss is non-finite at coordinate {} (f(x+h)={}, f(x-h)={})", k, up, down);
      report.worst_index = k;
      report.max_rel_error = std::numeric_limits<double>::infinity();
      report.passed = false;
      return report;
    }
    report.numeric[k] = (up - down) / (2 * h);
    const double err = relative_error(analytic[k], report.numeric[k]);
    if (k == 0 || err > report.max_rel_error) {
      report.max_rel_error = err;
      report.worst_index = k;
    }
  }
  report.passed = report.max_rel_error < tol;
  return report;
}

}  // namespace clover::loss
