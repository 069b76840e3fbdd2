#pragma once

// Compactly supported profiles built from the bump phi(x) = exp(-12/(1-x^2)).
//
// Derivatives are evaluated in Taylor mode: the Taylor coefficients of
// exp(g) follow from those of g = -6/(1-x) - 6/(1+x) through
// f_k = (1/k) sum_j j g_j f_{k-j}, which stays accurate near the support edge
// where finite differences lose every digit.

#include <cmath>
#include <concepts>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace spdeest {

inline constexpr double kBumpExponent = 12.0;

/// Taylor coefficients f_0..f_order of phi at x, i.e. phi^{(n)}(x) = n! f_n.
inline std::vector<double> bump_taylor(double x, std::size_t order) {
  std::vector<double> f(order + 1, 0.0);
  if (!(std::abs(x) < 1.0)) return f;
  const double a = 1.0 - x;
  const double b = 1.0 + x;
  const double c = kBumpExponent / 2.0;
  std::vector<double> g(order + 1, 0.0);
  double pa = 1.0 / a;
  double pb = 1.0 / b;
  double sign = 1.0;
  for (std::size_t j = 0; j <= order; ++j) {
    g[j] = -c * (pa + sign * pb);
    pa /= a;
    pb /= b;
    sign = -sign;
  }
  f[0] = std::exp(g[0]);
  for (std::size_t k = 1; k <= order; ++k) {
    double s = 0.0;
    for (std::size_t j = 1; j <= k; ++j) s += static_cast<double>(j) * g[j] * f[k - j];
    f[k] = s / static_cast<double>(k);
  }
  return f;
}

/// phi^{(n)}(x); zero outside (-1,1).
inline double bump_derivative(double x, std::size_t n) {
  const auto f = bump_taylor(x, n);
  double fact = 1.0;
  for (std::size_t i = 2; i <= n; ++i) fact *= static_cast<double>(i);
  return fact * f[n];
}

inline double bump_phi(double x) {
  if (!(std::abs(x) < 1.0)) return 0.0;
  return std::exp(-kBumpExponent / (1.0 - x * x));
}

/// Anything that can report d^order/dx^order of itself and a support radius.
template <class P>
concept Profile = requires(const P& p, double x, int order) {
  { p.value(x, order) } -> std::convertible_to<double>;
  { p.support_radius() } -> std::convertible_to<double>;
};

/// x -> d^m/dx^m [ poly(x/width) phi(x/width) ], supported on
/// [-width, width]. The default is phi itself.
class BumpProfile {
 public:
  BumpProfile() = default;
  BumpProfile(std::vector<double> poly, int derivative_order, double width = 1.0)
      : poly_(std::move(poly)), order_(derivative_order), width_(width) {
    if (poly_.empty()) poly_ = {1.0};
    if (order_ < 0) throw std::invalid_argument("BumpProfile: negative derivative order");
    if (!(width_ > 0.0)) throw std::invalid_argument("BumpProfile: width must be positive");
  }

  static BumpProfile phi() { return {}; }
  static BumpProfile phi_derivative(int n, double width = 1.0) { return {{1.0}, n, width}; }

  double support_radius() const noexcept { return width_; }
  int derivative_order() const noexcept { return order_; }
  const std::vector<double>& polynomial() const noexcept { return poly_; }

  /// Derivative of the given order with respect to x.
  double value(double x, int order = 0) const {
    const double u = x / width_;
    if (!(std::abs(u) < 1.0)) return 0.0;
    const std::size_t n = static_cast<std::size_t>(order_ + order);
    const auto f = bump_taylor(u, n);
    // Taylor coefficients of poly(u + t) in t.
    std::vector<double> p(poly_.size(), 0.0);
    std::vector<double> work = poly_;
    for (std::size_t i = 0; i < p.size(); ++i) {
      double v = 0.0;
      for (std::size_t j = work.size(); j-- > 0;) v = v * u + work[j];
      p[i] = v;
      // differentiate and divide by (i+1) so the next value is a Taylor coefficient
      std::vector<double> d(work.size() > 1 ? work.size() - 1 : 1, 0.0);
      for (std::size_t j = 1; j < work.size(); ++j)
        d[j - 1] = work[j] * static_cast<double>(j) / static_cast<double>(i + 1);
      work = std::move(d);
    }
    double q = 0.0;
    for (std::size_t i = 0; i < p.size() && i <= n; ++i) q += p[i] * f[n - i];
    double fact = 1.0;
    for (std::size_t i = 2; i <= n; ++i) fact *= static_cast<double>(i);
    return fact * q * std::pow(width_, -order_ - order);
  }

  double operator()(double x) const { return value(x, 0); }

 private:
  std::vector<double> poly_{1.0};
  int order_ = 0;
  double width_ = 1.0;
};

/// Adaptive Gauss-Kronrod over the support, split at the centre.
template <class F>
double integrate_compact(F&& f, double radius, double rel_tol = 1e-13) {
  using boost::math::quadrature::gauss_kronrod;
  double err = 0.0;
  const double left = gauss_kronrod<double, 61>::integrate(f, -radius, 0.0, 30, rel_tol, &err);
  const double right = gauss_kronrod<double, 61>::integrate(f, 0.0, radius, 30, rel_tol, &err);
  return left + right;
}

/// ||d^order p||^2_{L^2(R)}
template <Profile P>
double profile_norm_sq(const P& p, int order = 0) {
  return integrate_compact(
      [&](double x) {
        const double v = p.value(x, order);
        return v * v;
      },
      p.support_radius());
}

template <Profile P>
double profile_integral(const P& p, int order = 0) {
  return integrate_compact([&](double x) { return p.value(x, order); }, p.support_radius());
}

}  // namespace spdeest
