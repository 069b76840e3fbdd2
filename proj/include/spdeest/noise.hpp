#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>

#include "spdeest/spectral.hpp"

namespace spdeest {

/// B = sigma (-Delta)^{-gamma}, acting on mode k as b_k = sigma lambda_k^{-gamma}.
/// gamma = 0 is space-time white noise scaled by sigma.
struct NoiseModel {
  double gamma = 0.0;
  double sigma = 1.0;

  void validate() const {
    if (!(gamma >= 0.0)) throw std::invalid_argument("NoiseModel: gamma must be >= 0");
    if (!(sigma >= 0.0)) throw std::invalid_argument("NoiseModel: sigma must be >= 0");
  }

  bool is_white() const noexcept { return gamma == 0.0; }

  /// 1-based mode index.
  double multiplier(std::size_t k) const {
    return gamma == 0.0 ? sigma : sigma * std::pow(dirichlet_eigenvalue(k), -gamma);
  }

  Vector multipliers(std::size_t mode_count) const {
    Vector b(mode_count);
    for (std::size_t k = 1; k <= mode_count; ++k) b[k - 1] = multiplier(k);
    return b;
  }
};

}  // namespace spdeest
