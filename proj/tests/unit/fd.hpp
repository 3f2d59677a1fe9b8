#pragma once

// Central finite differences and the mixed relative/absolute comparison used
// by the gradient checks.

#include <algorithm>
#include <cmath>

namespace amdn::fd {

template <typename F>
double central_difference(F&& f, double& x, double h = 1e-5) {
  const double saved = x;
  x = saved + h;
  const double up = f();
  x = saved - h;
  const double down = f();
  x = saved;
  return (up - down) / (2.0 * h);
}

inline bool gradients_agree(double analytic, double numeric, double rel, double abs_floor) {
  const double diff = std::abs(analytic - numeric);
  return diff <= abs_floor || diff <= rel * std::max(std::abs(analytic), std::abs(numeric));
}

}  // namespace amdn::fd
