#pragma once

// Dirichlet Laplacian eigensystem on (0,1), fractional powers and sine
// transforms between grid samples and eigenfunction coefficients.
//
// Coordinates are physical: nodes y_j = j/M in [0,1] and
// Phi_k(y) = sqrt(2) sin(pi k y), lambda_k = pi^2 k^2.

#include <cmath>
#include <cstddef>
#include <functional>
#include <mutex>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <fftw3.h>

namespace spdeest {

using Vector = std::vector<double>;

/// Regular grid y_j = j/M, j = 0..M. Dirichlet fields store all M+1 values
/// with the two boundary entries held at zero.
class Grid1D {
 public:
  explicit Grid1D(std::size_t num_points) : m_(num_points) {
    if (m_ < 2) throw std::invalid_argument("Grid1D: need at least 2 cells");
  }

  std::size_t num_points() const noexcept { return m_; }
  std::size_t num_nodes() const noexcept { return m_ + 1; }
  std::size_t num_interior() const noexcept { return m_ - 1; }
  double step() const noexcept { return 1.0 / static_cast<double>(m_); }
  double node(std::size_t j) const noexcept {
    return static_cast<double>(j) / static_cast<double>(m_);
  }

  Vector nodes() const {
    Vector y(num_nodes());
    for (std::size_t j = 0; j < y.size(); ++j) y[j] = node(j);
    return y;
  }

  /// Samples f at every node, forcing the boundary values to zero.
  Vector sample(const std::function<double(double)>& f) const {
    Vector v(num_nodes(), 0.0);
    for (std::size_t j = 1; j < m_; ++j) v[j] = f(node(j));
    return v;
  }

  bool operator==(const Grid1D& other) const noexcept { return m_ == other.m_; }

 private:
  std::size_t m_;
};

inline double dirichlet_eigenvalue(std::size_t k) {
  const double kk = static_cast<double>(k);
  return std::numbers::pi * std::numbers::pi * kk * kk;
}

/// [pi^2 * 1^2, ..., pi^2 * mode_count^2]
inline Vector dirichlet_eigenvalues(std::size_t mode_count) {
  if (mode_count == 0)
    throw std::invalid_argument("dirichlet_eigenvalues: mode_count must be >= 1");
  Vector lambda(mode_count);
  for (std::size_t k = 1; k <= mode_count; ++k) lambda[k - 1] = dirichlet_eigenvalue(k);
  return lambda;
}

inline double dirichlet_eigenfunction(std::size_t k, double y) {
  return std::numbers::sqrt2 * std::sin(std::numbers::pi * static_cast<double>(k) * y);
}

/// Eigenpairs of the Dirichlet Laplacian truncated at mode_count modes.
class SpectralBasis {
 public:
  SpectralBasis(std::size_t mode_count, double x0 = 0.5)
      : x0_(x0), eigenvalues_(dirichlet_eigenvalues(mode_count)) {
    if (!(x0 > 0.0 && x0 < 1.0))
      throw std::invalid_argument("SpectralBasis: x0 must lie in (0,1)");
  }

  double domain_length() const noexcept { return 1.0; }
  double x0() const noexcept { return x0_; }
  std::size_t mode_count() const noexcept { return eigenvalues_.size(); }
  std::span<const double> eigenvalues() const noexcept { return eigenvalues_; }
  /// 1-based mode index.
  double eigenvalue(std::size_t k) const { return eigenvalues_.at(k - 1); }
  double eigenfunction(std::size_t k, double y) const { return dirichlet_eigenfunction(k, y); }

 private:
  double x0_;
  Vector eigenvalues_;
};

/// Multiplies coefficient k (stored at index k-1) by lambda_k^power.
inline Vector apply_fractional_laplacian(std::span<const double> coeffs, double power) {
  Vector out(coeffs.begin(), coeffs.end());
  if (power == 0.0) return out;
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] *= std::pow(dirichlet_eigenvalue(i + 1), power);
  return out;
}

namespace detail {

inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

inline void check_transform_shape(const Grid1D& grid, std::size_t mode_count) {
  if (mode_count == 0 || mode_count > grid.num_interior())
    throw std::invalid_argument("sine transform: mode count " + std::to_string(mode_count) +
                                " incompatible with grid of " +
                                std::to_string(grid.num_points()) + " cells");
}

}  // namespace detail

/// Reference O(M * M_s) transforms. Forward uses the trapezoid rule
/// c_k = h * sum_j f(y_j) Phi_k(y_j), which is exact for grid functions.
inline Vector naive_sine_transform(std::span<const double> field, const Grid1D& grid,
                                   std::size_t mode_count) {
  detail::check_transform_shape(grid, mode_count);
  if (field.size() != grid.num_nodes())
    throw std::invalid_argument("sine transform: field size does not match grid");
  const double h = grid.step();
  Vector c(mode_count, 0.0);
  for (std::size_t k = 1; k <= mode_count; ++k) {
    double s = 0.0;
    for (std::size_t j = 1; j < grid.num_points(); ++j)
      s += field[j] * dirichlet_eigenfunction(k, grid.node(j));
    c[k - 1] = h * s;
  }
  return c;
}

inline Vector naive_inverse_sine_transform(std::span<const double> coeffs, const Grid1D& grid) {
  detail::check_transform_shape(grid, coeffs.size());
  Vector f(grid.num_nodes(), 0.0);
  for (std::size_t j = 1; j < grid.num_points(); ++j) {
    double s = 0.0;
    for (std::size_t k = 1; k <= coeffs.size(); ++k)
      s += coeffs[k - 1] * dirichlet_eigenfunction(k, grid.node(j));
    f[j] = s;
  }
  return f;
}

/// FFTW-backed DST-I on the M-1 interior nodes. One instance owns its plan and
/// scratch buffer, so use one per thread.
class SineTransform {
 public:
  explicit SineTransform(const Grid1D& grid)
      : grid_(grid), n_(grid.num_interior()), buf_(n_), out_(n_) {
    std::lock_guard lock(detail::fftw_planner_mutex());
    plan_ = fftw_plan_r2r_1d(static_cast<int>(n_), buf_.data(), out_.data(), FFTW_RODFT00,
                             FFTW_ESTIMATE);
    if (plan_ == nullptr) throw std::runtime_error("SineTransform: FFTW planning failed");
  }
  SineTransform(const SineTransform& other) : SineTransform(other.grid_) {}
  SineTransform& operator=(const SineTransform&) = delete;
  ~SineTransform() {
    std::lock_guard lock(detail::fftw_planner_mutex());
    fftw_destroy_plan(plan_);
  }

  const Grid1D& grid() const noexcept { return grid_; }
  std::size_t max_modes() const noexcept { return n_; }

  /// Grid field (M+1 values, zero boundary) -> first mode_count coefficients.
  void forward(std::span<const double> field, std::span<double> coeffs) {
    detail::check_transform_shape(grid_, coeffs.size());
    if (field.size() != grid_.num_nodes())
      throw std::invalid_argument("sine transform: field size does not match grid");
    for (std::size_t j = 0; j < n_; ++j) buf_[j] = field[j + 1];
    fftw_execute(plan_);
    const double scale = 1.0 / (std::numbers::sqrt2 * static_cast<double>(grid_.num_points()));
    for (std::size_t k = 0; k < coeffs.size(); ++k) coeffs[k] = scale * out_[k];
  }

  /// Coefficients (modes 1..coeffs.size()) -> grid field with zero boundary.
  void inverse(std::span<const double> coeffs, std::span<double> field) {
    detail::check_transform_shape(grid_, coeffs.size());
    if (field.size() != grid_.num_nodes())
      throw std::invalid_argument("sine transform: field size does not match grid");
    std::size_t k = 0;
    for (; k < coeffs.size(); ++k) buf_[k] = coeffs[k];
    for (; k < n_; ++k) buf_[k] = 0.0;
    fftw_execute(plan_);
    const double scale = 0.5 * std::numbers::sqrt2;
    field[0] = 0.0;
    field[grid_.num_points()] = 0.0;
    for (std::size_t j = 0; j < n_; ++j) field[j + 1] = scale * out_[j];
  }

  Vector forward(std::span<const double> field, std::size_t mode_count) {
    Vector c(mode_count);
    forward(field, c);
    return c;
  }
  Vector inverse(std::span<const double> coeffs) {
    Vector f(grid_.num_nodes());
    inverse(coeffs, f);
    return f;
  }

 private:
  Grid1D grid_;
  std::size_t n_;
  Vector buf_;
  Vector out_;
  fftw_plan plan_ = nullptr;
};

inline Vector sine_transform(std::span<const double> field, const Grid1D& grid,
                             std::size_t mode_count) {
  SineTransform t(grid);
  return t.forward(field, mode_count);
}

inline Vector inverse_sine_transform(std::span<const double> coeffs, const Grid1D& grid) {
  SineTransform t(grid);
  return t.inverse(coeffs);
}

/// Trapezoid inner product of two Dirichlet grid fields.
inline double grid_inner(std::span<const double> a, std::span<const double> b, const Grid1D& grid) {
  if (a.size() != grid.num_nodes() || b.size() != grid.num_nodes())
    throw std::invalid_argument("grid_inner: size mismatch");
  double s = 0.0;
  for (std::size_t j = 1; j < grid.num_points(); ++j) s += a[j] * b[j];
  return grid.step() * s;
}

/// Standard second difference with Dirichlet rows; boundary entries are 0.
inline Vector second_difference(std::span<const double> field, const Grid1D& grid) {
  if (field.size() != grid.num_nodes())
    throw std::invalid_argument("second_difference: size mismatch");
  const double inv_h2 = 1.0 / (grid.step() * grid.step());
  Vector out(field.size(), 0.0);
  for (std::size_t j = 1; j < grid.num_points(); ++j)
    out[j] = (field[j + 1] - 2.0 * field[j] + field[j - 1]) * inv_h2;
  return out;
}

}  // namespace spdeest
