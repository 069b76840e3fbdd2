#pragma once

// Augmented MLE
//   theta_hat = int X^Delta dX / int (X^Delta)^2 dt
// with left-point (Ito) sums, observed Fisher information
//   I = ||B^* K||^{-2} int (X^Delta)^2 dt,
// and the error decomposition theta_hat = theta + I^{-1} R + I^{-1} M.

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

#include "spdeest/measurements.hpp"
#include "spdeest/stats.hpp"

namespace spdeest {

inline constexpr double kDegenerateDenominator = 1e-30;

class DegenerateEstimate : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class NormSource { spectral, quadratic_variation };

inline std::string to_string(NormSource s) {
  return s == NormSource::spectral ? "spectral" : "qv";
}

struct EstimateReport {
  double theta_hat = 0.0;
  double fisher_obs = 0.0;
  double numerator = 0.0;
  double denominator = 0.0;
  double b_norm_sq = 0.0;
  NormSource b_norm_source = NormSource::spectral;
  double alpha = 0.05;
  double ci_low = 0.0;
  double ci_high = 0.0;
  /// Plug-in theta_hat * Sigma when Sigma / theta was supplied, NaN otherwise.
  double sigma_theoretical = std::nan("");
  double delta = 0.0;
  double x0 = 0.0;
  std::uint64_t seed = 0;
};

/// [theta_hat - I^{-1/2} q, theta_hat + I^{-1/2} q], q = q_{1 - alpha/2}.
/// alpha = 1 gives the degenerate interval at theta_hat.
inline std::pair<double, double> confidence_interval(const EstimateReport& report, double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("confidence_interval: alpha must lie in (0,1]");
  if (!(report.fisher_obs > 0.0)) throw std::invalid_argument("confidence_interval: fisher information must be positive");
  const double half = normal_quantile(1.0 - alpha / 2.0) / std::sqrt(report.fisher_obs);
  return {report.theta_hat - half, report.theta_hat + half};
}

struct EstimateOptions {
  double alpha = 0.05;
  /// Use ||B^* K||^2 from the noise model when the series carries it.
  bool prefer_spectral = true;
  /// Sigma / theta (i.e. theta Sigma at theta = 1), for the plug-in report.
  std::optional<double> sigma_per_theta;
  std::uint64_t seed = 0;
};

inline EstimateReport augmented_mle(const MeasurementSeries& series, const EstimateOptions& opt = {}) {
  const std::size_t n = series.size();
  if (n < 2 || series.x_series.size() != n || series.xdelta_series.size() != n)
    throw std::invalid_argument("augmented_mle: malformed series");
  double num = 0.0;
  double den = 0.0;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const double xd = series.xdelta_series[k];
    const double dt = series.times[k + 1] - series.times[k];
    num += xd * (series.x_series[k + 1] - series.x_series[k]);
    den += xd * xd * dt;
  }
  if (!(den >= kDegenerateDenominator))
    throw DegenerateEstimate("augmented_mle: degenerate denominator " + std::to_string(den));

  EstimateReport r;
  r.numerator = num;
  r.denominator = den;
  r.theta_hat = num / den;
  const bool spectral = opt.prefer_spectral && std::isfinite(series.b_norm_sq_spectral);
  r.b_norm_sq = spectral ? series.b_norm_sq_spectral : series.b_norm_sq_qv;
  r.b_norm_source = spectral ? NormSource::spectral : NormSource::quadratic_variation;
  if (!(r.b_norm_sq > 0.0)) {
    // no noise: the information is unbounded and the interval collapses
    r.fisher_obs = INFINITY;
  } else {
    r.fisher_obs = den / r.b_norm_sq;
  }
  r.alpha = opt.alpha;
  if (std::isfinite(r.fisher_obs)) {
    const auto [lo, hi] = confidence_interval(r, opt.alpha);
    r.ci_low = lo;
    r.ci_high = hi;
  } else {
    r.ci_low = r.ci_high = r.theta_hat;
  }
  if (opt.sigma_per_theta) r.sigma_theoretical = r.theta_hat * *opt.sigma_per_theta;
  r.delta = series.delta;
  r.x0 = series.x0;
  r.seed = opt.seed;
  return r;
}

struct Decomposition {
  double fisher_obs = 0.0;
  /// ||B^* K||^{-2} int X^Delta <F, K> dt; NaN when the run was not instrumented.
  double nonlinear_bias = std::nan("");
  /// Residual I (theta_hat - theta) - R; closes the decomposition exactly.
  double martingale = std::nan("");
  /// ||B^* K||^{-2} sum_k X^Delta(t_k) <noise increment_k, K> from the driving noise record.
  double martingale_from_noise = std::nan("");
  double theta_hat = 0.0;
};

/// I, R and M for an instrumented series. Without instrumentation only I is
/// available; requesting R then throws.
inline Decomposition decomposition_diagnostics(const MeasurementSeries& series, double b_norm_sq,
                                               std::optional<double> true_theta = std::nullopt,
                                               bool require_bias = false) {
  if (!(b_norm_sq > 0.0)) throw std::invalid_argument("decomposition: ||B^*K||^2 must be positive");
  const std::size_t n = series.size();
  Decomposition d;
  double den = 0.0;
  double num = 0.0;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const double xd = series.xdelta_series[k];
    den += xd * xd * (series.times[k + 1] - series.times[k]);
    num += xd * (series.x_series[k + 1] - series.x_series[k]);
  }
  if (!(den >= kDegenerateDenominator)) throw DegenerateEstimate("decomposition: degenerate denominator");
  d.fisher_obs = den / b_norm_sq;
  d.theta_hat = num / den;

  const bool has_drift = series.f_pairing.size() + 1 == n;
  const bool has_noise = series.noise_pairing.size() + 1 == n;
  if (require_bias && !has_drift)
    throw std::logic_error("decomposition: nonlinear bias requires an instrumented run");
  if (has_drift) {
    double s = 0.0;
    for (std::size_t k = 0; k + 1 < n; ++k)
      s += series.xdelta_series[k] * series.f_pairing[k] * (series.times[k + 1] - series.times[k]);
    d.nonlinear_bias = s / b_norm_sq;
  } else if (series.f_pairing.empty() && series.noise_pairing.size() + 1 == n) {
    // linear runs carry no drift record; F = 0
    d.nonlinear_bias = 0.0;
  }
  if (has_noise) {
    double s = 0.0;
    for (std::size_t k = 0; k + 1 < n; ++k) s += series.xdelta_series[k] * series.noise_pairing[k];
    d.martingale_from_noise = s / b_norm_sq;
  }
  if (true_theta && std::isfinite(d.nonlinear_bias))
    d.martingale = d.fisher_obs * (d.theta_hat - *true_theta) - d.nonlinear_bias;
  return d;
}

}  // namespace spdeest
