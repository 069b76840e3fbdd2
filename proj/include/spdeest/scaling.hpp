#pragma once

#include <cmath>
#include <stdexcept>

#include "spdeest/profile.hpp"
#include "spdeest/spectral.hpp"

namespace spdeest {

/// Grid L2 norm of Delta_h(z_{delta,x0}) - delta^{-2} (Delta z)_{delta,x0}, where
/// Delta_h is the second difference and the right side uses the exact second
/// derivative of z. The rescaling identity makes this pure discretisation
/// error, so it decays like h^2.
template <Profile P>
double check_scaling_identity(const P& z, double delta, double x0, const Grid1D& grid) {
  if (!(delta > 0.0)) throw std::invalid_argument("check_scaling_identity: delta must be positive");
  const double rho = delta * z.support_radius();
  if (x0 - rho < 0.0 || x0 + rho > 1.0)
    throw std::invalid_argument("check_scaling_identity: scaled profile leaks outside (0,1)");
  const double a = std::pow(delta, -0.5);
  const Vector scaled = grid.sample([&](double y) { return a * z.value((y - x0) / delta, 0); });
  const Vector lap = second_difference(scaled, grid);
  double s = 0.0;
  for (std::size_t j = 1; j < grid.num_points(); ++j) {
    const double exact = a * z.value((grid.node(j) - x0) / delta, 2) / (delta * delta);
    const double d = lap[j] - exact;
    s += d * d;
  }
  return std::sqrt(grid.step() * s);
}

}  // namespace spdeest
