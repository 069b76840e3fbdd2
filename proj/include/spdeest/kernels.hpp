#pragma once

// Measurement kernels: base profile K~, induced kernel K = Delta^{ceil(gamma)} K~
// (in one dimension the 2 ceil(gamma)-th derivative, no sign flip), their
// (delta, x0)-scalings on the grid, and the asymptotic variance of the
// augmented MLE.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>

#include "spdeest/fourier.hpp"
#include "spdeest/noise.hpp"
#include "spdeest/profile.hpp"
#include "spdeest/spectral.hpp"

namespace spdeest {

class KernelSpec {
 public:
  KernelSpec(BumpProfile base, double gamma, std::string name = "custom")
      : base_(std::move(base)), gamma_(gamma), name_(std::move(name)) {
    if (!(gamma >= 0.0)) throw std::invalid_argument("KernelSpec: gamma must be >= 0");
    ceil_gamma_ = static_cast<int>(std::ceil(gamma));
    base_norm_sq_ = profile_norm_sq(base_, 0);
    base_grad_norm_sq_ = profile_norm_sq(base_, 1);
    kernel_norm_sq_ = profile_norm_sq(base_, 2 * ceil_gamma_);
    if (!(base_norm_sq_ > 0.0) || !(base_grad_norm_sq_ > 0.0))
      throw std::invalid_argument("KernelSpec: degenerate base profile");
  }

  const BumpProfile& base() const noexcept { return base_; }
  const std::string& name() const noexcept { return name_; }
  double gamma() const noexcept { return gamma_; }
  int ceil_gamma() const noexcept { return ceil_gamma_; }
  bool integer_gamma() const noexcept { return gamma_ == static_cast<double>(ceil_gamma_); }
  double support_radius() const noexcept { return base_.support_radius(); }

  /// d^order/dx^order of K = Delta^{ceil(gamma)} K~.
  double kernel(double x, int order = 0) const { return base_.value(x, 2 * ceil_gamma_ + order); }
  double base_value(double x, int order = 0) const { return base_.value(x, order); }

  double base_norm_sq() const noexcept { return base_norm_sq_; }
  double base_grad_norm_sq() const noexcept { return base_grad_norm_sq_; }
  double kernel_norm_sq() const noexcept { return kernel_norm_sq_; }

 private:
  BumpProfile base_;
  double gamma_;
  std::string name_;
  int ceil_gamma_ = 0;
  double base_norm_sq_ = 0.0;
  double base_grad_norm_sq_ = 0.0;
  double kernel_norm_sq_ = 0.0;
};

/// K~ = K = phi''' with gamma = 0.
inline KernelSpec paper_kernel() { return KernelSpec(BumpProfile::phi_derivative(3), 0.0, "phi3"); }

/// Kernel K built from poly * phi, differentiated derivative_order times.
inline KernelSpec custom_kernel(std::vector<double> poly, int derivative_order, double gamma) {
  return KernelSpec(BumpProfile(std::move(poly), derivative_order), gamma, "custom");
}

/// K_{delta,x0}(x) = delta^{-1/2} K((x - x0)/delta) and its Laplacian sampled on
/// the nodes strictly inside the support window.
class ScaledKernel {
 public:
  ScaledKernel(KernelSpec spec, double delta, double x0, const Grid1D& grid)
      : spec_(std::move(spec)), grid_(grid), delta_(delta), requested_x0_(x0) {
    if (!(delta > 0.0)) throw std::invalid_argument("scale_kernel: delta must be positive");
    if (!(x0 > 0.0 && x0 < 1.0)) throw std::invalid_argument("scale_kernel: x0 must lie in (0,1)");
    const double rho = delta * spec_.support_radius();
    if (2.0 * rho > 1.0)
      throw std::invalid_argument("scale_kernel: delta too large, kernel cannot fit inside (0,1)");
    center_ = x0;
    if (center_ < rho) center_ = rho;
    if (center_ > 1.0 - rho) center_ = 1.0 - rho;
    clamped_ = center_ != x0;

    const double m = static_cast<double>(grid.num_points());
    std::size_t first = static_cast<std::size_t>(std::max(1.0, std::ceil((center_ - rho) * m)));
    std::size_t last = static_cast<std::size_t>(std::min(m - 1.0, std::floor((center_ + rho) * m)));
    while (first <= last && !(std::abs(grid.node(first) - center_) < rho)) ++first;
    while (last >= first && !(std::abs(grid.node(last) - center_) < rho)) --last;
    if (first > last) throw std::invalid_argument("scale_kernel: support contains no grid node");
    first_ = first;
    values_.resize(last - first + 1);
    laplacian_.resize(last - first + 1);
    const double a = std::pow(delta, -0.5);
    const double b = std::pow(delta, -2.5);
    for (std::size_t j = first; j <= last; ++j) {
      const double u = (grid.node(j) - center_) / delta;
      values_[j - first] = a * spec_.kernel(u, 0);
      laplacian_[j - first] = b * spec_.kernel(u, 2);
    }
  }

  const KernelSpec& spec() const noexcept { return spec_; }
  const Grid1D& grid() const noexcept { return grid_; }
  double delta() const noexcept { return delta_; }
  double requested_x0() const noexcept { return requested_x0_; }
  double center() const noexcept { return center_; }
  bool clamped() const noexcept { return clamped_; }

  /// First grid index of the window; samples cover [first, first + size).
  std::size_t first() const noexcept { return first_; }
  std::size_t window_size() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }
  std::span<const double> laplacian_values() const noexcept { return laplacian_; }

  Vector full_values() const { return expand(values_); }
  Vector full_laplacian() const { return expand(laplacian_); }

  /// Trapezoid pairings <field, K> and <field, Delta K> over the window.
  std::pair<double, double> pair(std::span<const double> field) const {
    double s0 = 0.0;
    double s2 = 0.0;
    const double* f = field.data() + first_;
    for (std::size_t i = 0; i < values_.size(); ++i) {
      s0 += f[i] * values_[i];
      s2 += f[i] * laplacian_[i];
    }
    const double h = grid_.step();
    return {h * s0, h * s2};
  }

  double pair_values(std::span<const double> field) const {
    double s = 0.0;
    const double* f = field.data() + first_;
    for (std::size_t i = 0; i < values_.size(); ++i) s += f[i] * values_[i];
    return grid_.step() * s;
  }

 private:
  Vector expand(const Vector& w) const {
    Vector out(grid_.num_nodes(), 0.0);
    for (std::size_t i = 0; i < w.size(); ++i) out[first_ + i] = w[i];
    return out;
  }

  KernelSpec spec_;
  Grid1D grid_;
  double delta_;
  double requested_x0_;
  double center_ = 0.0;
  bool clamped_ = false;
  std::size_t first_ = 0;
  Vector values_;
  Vector laplacian_;
};

inline ScaledKernel scale_kernel(const KernelSpec& spec, double delta, double x0, const Grid1D& grid) {
  return ScaledKernel(spec, delta, x0, grid);
}

struct BStarNorm {
  double value = 0.0;
  /// Share of the partial sum carried by the top tenth of the modes.
  double tail_ratio = 0.0;
  bool truncation_warning = false;
};

/// ||B^* K_{delta,x0}||^2 = sum_k b_k^2 <K_{delta,x0}, Phi_k>^2 over
/// mode_count modes (mode_count = 0 means every resolvable mode, M-1).
inline BStarNorm b_star_norm_sq(const ScaledKernel& scaled, const NoiseModel& noise,
                                std::size_t mode_count = 0) {
  noise.validate();
  const Grid1D& grid = scaled.grid();
  if (mode_count == 0) mode_count = grid.num_interior();
  const Vector c = sine_transform(scaled.full_values(), grid, mode_count);
  const std::size_t tail_start = mode_count - std::max<std::size_t>(1, mode_count / 10);
  double total = 0.0;
  double tail = 0.0;
  for (std::size_t k = 1; k <= mode_count; ++k) {
    const double b = noise.multiplier(k);
    const double term = b * b * c[k - 1] * c[k - 1];
    total += term;
    if (k > tail_start) tail += term;
  }
  BStarNorm out;
  out.value = total;
  out.tail_ratio = total > 0.0 ? tail / total : 0.0;
  out.truncation_warning = out.tail_ratio > 1e-6;
  return out;
}

/// sigma^2 ||(-Delta)^{-gamma} K||^2_{L^2(R)}, the small-delta limit of
/// delta^{-4 gamma} ||B^* K_{delta,x0}||^2.
inline double b_star_norm_sq_limit(const KernelSpec& spec, const NoiseModel& noise) {
  if (noise.gamma == 0.0) return noise.sigma * noise.sigma * spec.kernel_norm_sq();
  const CompactFourierTransform ft(spec.base(), 2 * spec.ceil_gamma());
  return noise.sigma * noise.sigma * fourier_seminorm_sq(ft, -2.0 * noise.gamma);
}

/// Psi(z) = int_0^inf ||sigma e^{s Delta} z||^2 ds = (sigma^2/2) ||(-Delta)^{-1/2} z||^2
/// for z = (-Delta)^{extra_power} applied to the profile's derivative of the given order.
template <Profile P>
double psi_functional(const P& z, double sigma, int order = 0, double extra_power = 0.0) {
  const CompactFourierTransform ft(z, order);
  return 0.5 * sigma * sigma * fourier_seminorm_sq(ft, -1.0 + 2.0 * extra_power);
}

/// Integer-gamma shortcut Psi(Delta K~) = (sigma^2/2) ||K~'||^2.
inline double psi_laplacian_shortcut(const KernelSpec& spec, double sigma) {
  return 0.5 * sigma * sigma * spec.base_grad_norm_sq();
}

/// theta * Sigma through the general route
/// T^{-1} sigma^2 ||(-Delta)^{c-gamma} K~||^2 / Psi((-Delta)^{c-gamma} Delta K~), c = ceil(gamma).
/// Sigma does not depend on sigma; it is kept to show the cancellation.
inline double asymptotic_variance_general(const KernelSpec& spec, double theta, double horizon,
                                          double sigma = 1.0) {
  if (!(theta > 0.0) || !(horizon > 0.0))
    throw std::invalid_argument("asymptotic variance: theta and T must be positive");
  const double shift = static_cast<double>(spec.ceil_gamma()) - spec.gamma();
  const double num = sigma * sigma * fourier_seminorm_sq(spec.base(), 2.0 * shift);
  const double psi = psi_functional(spec.base(), sigma, 2, shift);
  return theta * num / (horizon * psi);
}

/// theta * Sigma = 2 theta ||K~||^2 / (T ||K~'||^2) for integer gamma; other
/// gamma go through the general formula.
inline double asymptotic_variance_sigma(const KernelSpec& spec, double theta, double horizon) {
  if (!(theta > 0.0) || !(horizon > 0.0))
    throw std::invalid_argument("asymptotic variance: theta and T must be positive");
  if (!spec.integer_gamma()) return asymptotic_variance_general(spec, theta, horizon);
  return 2.0 * theta * spec.base_norm_sq() / (horizon * spec.base_grad_norm_sq());
}

}  // namespace spdeest
