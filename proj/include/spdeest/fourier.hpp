#pragma once

// Fourier-side norms on R for compactly supported profiles:
// ||(-Delta)^{s/2} f||^2 = (1/pi) int_0^inf w^{2s} |f^(w)|^2 dw.

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "spdeest/profile.hpp"

namespace spdeest {

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// |f^(w)|^2 by the trapezoid rule on a fine grid of the support. The rule is
/// spectrally accurate for smooth compactly supported f below the grid Nyquist
/// frequency.
class CompactFourierTransform {
 public:
  template <Profile P>
  explicit CompactFourierTransform(const P& f, int order = 0, std::size_t samples = 4096)
      : radius_(f.support_radius()) {
    step_ = 2.0 * radius_ / static_cast<double>(samples);
    x_.reserve(samples);
    v_.reserve(samples);
    double mass = 0.0;
    for (std::size_t i = 1; i < samples; ++i) {
      const double x = -radius_ + step_ * static_cast<double>(i);
      const double v = f.value(x, order);
      x_.push_back(x);
      v_.push_back(v);
      mass += std::abs(v);
    }
    l1_ = mass * step_;
  }

  double radius() const noexcept { return radius_; }
  double nyquist() const noexcept { return std::numbers::pi / step_; }
  double l1_norm() const noexcept { return l1_; }

  double power(double w) const {
    double re = 0.0;
    double im = 0.0;
    for (std::size_t i = 0; i < x_.size(); ++i) {
      re += v_[i] * std::cos(w * x_[i]);
      im -= v_[i] * std::sin(w * x_[i]);
    }
    re *= step_;
    im *= step_;
    return re * re + im * im;
  }

  double mean() const {
    double s = 0.0;
    for (double v : v_) s += v;
    return s * step_;
  }

 private:
  double radius_;
  double step_;
  double l1_ = 0.0;
  std::vector<double> x_;
  std::vector<double> v_;
};

/// (1/pi) int_0^inf w^{2s} |f^(w)|^2 dw with geometric panels, stopping once
/// a panel adds less than 1e-15 of the running total.
inline double fourier_seminorm_sq(const CompactFourierTransform& ft, double s) {
  const double mean = ft.mean();
  if (2.0 * s <= -1.0 && std::abs(mean) > 1e-10 * ft.l1_norm())
    throw DomainError("fractional norm diverges: profile has nonzero mean");
  if (2.0 * s <= -3.0)
    throw DomainError("fractional norm diverges for this negative power");
  using boost::math::quadrature::gauss_kronrod;
  auto integrand = [&](double w) {
    if (w == 0.0) return 0.0;
    return std::pow(w, 2.0 * s) * ft.power(w);
  };
  const double scale = 1.0 / ft.radius();
  double total = 0.0;
  double lo = 0.0;
  double hi = scale;
  const double limit = 0.5 * ft.nyquist();
  while (lo < limit) {
    double err = 0.0;
    const double part = gauss_kronrod<double, 31>::integrate(integrand, lo, hi, 5, 1e-13, &err);
    total += part;
    if (lo > 8.0 * scale && std::abs(part) <= 1e-15 * std::abs(total)) break;
    lo = hi;
    hi = std::min(2.0 * hi, limit);
  }
  return total / std::numbers::pi;
}

template <Profile P>
double fourier_seminorm_sq(const P& f, double s, int order = 0) {
  return fourier_seminorm_sq(CompactFourierTransform(f, order), s);
}

}  // namespace spdeest
