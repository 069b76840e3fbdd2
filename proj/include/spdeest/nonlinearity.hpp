#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "spdeest/spectral.hpp"

namespace spdeest {

/// Conservative central difference of -u^2/2:
/// out_j = -(u_{j+1}^2 - u_{j-1}^2) / (4h), boundary outputs 0.
inline void burgers_drift(std::span<const double> u, std::span<double> out, const Grid1D& grid) {
  const std::size_t m = grid.num_points();
  if (u.size() != grid.num_nodes() || out.size() != grid.num_nodes())
    throw std::invalid_argument("burgers_drift: size mismatch");
  const double c = -1.0 / (4.0 * grid.step());
  out[0] = 0.0;
  out[m] = 0.0;
  for (std::size_t j = 1; j < m; ++j) out[j] = c * (u[j + 1] * u[j + 1] - u[j - 1] * u[j - 1]);
}

inline Vector burgers_drift(std::span<const double> u, const Grid1D& grid) {
  Vector out(grid.num_nodes());
  burgers_drift(u, out, grid);
  return out;
}

/// Drift term F of the semilinear equation. Reaction kinds act pointwise;
/// burgers uses the conservative discretisation above.
class Nonlinearity {
 public:
  enum class Kind { none, allen_cahn, polynomial, burgers, bounded_smooth };

  Nonlinearity() = default;

  static Nonlinearity none() { return {}; }
  /// 10 u (1-u) (u-0.5) = -5u + 15u^2 - 10u^3
  static Nonlinearity allen_cahn() { return {Kind::allen_cahn, {0.0, -5.0, 15.0, -10.0}, {}}; }
  /// sum_i a_i u^i
  static Nonlinearity polynomial(std::vector<double> coeffs) {
    return {Kind::polynomial, std::move(coeffs), {}};
  }
  static Nonlinearity burgers() { return {Kind::burgers, {}, {}}; }
  static Nonlinearity bounded_smooth(std::function<double(double)> f) {
    if (!f) throw std::invalid_argument("Nonlinearity: empty callable");
    return {Kind::bounded_smooth, {}, std::move(f)};
  }

  Kind kind() const noexcept { return kind_; }
  bool is_none() const noexcept { return kind_ == Kind::none; }
  const std::vector<double>& coefficients() const noexcept { return coeffs_; }

  std::string name() const {
    switch (kind_) {
      case Kind::none: return "none";
      case Kind::allen_cahn: return "allen_cahn";
      case Kind::polynomial: return "polynomial";
      case Kind::burgers: return "burgers";
      case Kind::bounded_smooth: return "bounded_smooth";
    }
    return "unknown";
  }

  /// Reaction value f(u); not defined for burgers.
  double pointwise(double u) const {
    switch (kind_) {
      case Kind::none: return 0.0;
      case Kind::allen_cahn:
      case Kind::polynomial: {
        double v = 0.0;
        for (std::size_t i = coeffs_.size(); i-- > 0;) v = v * u + coeffs_[i];
        return v;
      }
      case Kind::bounded_smooth: return fn_(u);
      case Kind::burgers: break;
    }
    throw std::logic_error("Nonlinearity: burgers has no pointwise form");
  }

  /// out = F_h(u) on interior nodes, zero on the boundary.
  void apply(std::span<const double> u, std::span<double> out, const Grid1D& grid) const {
    if (kind_ == Kind::burgers) {
      burgers_drift(u, out, grid);
      return;
    }
    const std::size_t m = grid.num_points();
    out[0] = 0.0;
    out[m] = 0.0;
    for (std::size_t j = 1; j < m; ++j) out[j] = pointwise(u[j]);
  }

 private:
  Nonlinearity(Kind k, std::vector<double> c, std::function<double(double)> f)
      : kind_(k), coeffs_(std::move(c)), fn_(std::move(f)) {}

  Kind kind_ = Kind::none;
  std::vector<double> coeffs_;
  std::function<double(double)> fn_;
};

}  // namespace spdeest
