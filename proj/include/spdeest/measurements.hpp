#pragma once

// Local observation processes X_{delta,x0}(t) = <X(t), K_{delta,x0}> and
// X^Delta_{delta,x0}(t) = <X(t), Delta K_{delta,x0}>, computed online from a
// simulator stream, plus their realised quadratic variation.

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "spdeest/kernels.hpp"
#include "spdeest/simulator.hpp"
#include "spdeest/stats.hpp"

namespace spdeest {

struct MeasurementSeries {
  Vector times;
  Vector x_series;
  Vector xdelta_series;
  double delta = 0.0;
  double x0 = 0.0;            // kernel centre actually used
  double requested_x0 = 0.0;  // before boundary clamping
  bool clamped = false;
  std::string kernel;
  double horizon = 0.0;
  double b_norm_sq_spectral = std::nan("");
  double b_norm_sq_qv = std::nan("");
  /// <F_h(X(t_k)), K> for k < N, filled on instrumented runs.
  Vector f_pairing;
  /// <noise increment over [t_k, t_{k+1}], K> for k < N, filled on instrumented runs.
  Vector noise_pairing;

  std::size_t size() const noexcept { return times.size(); }
  bool instrumented() const noexcept { return !f_pairing.empty() || !noise_pairing.empty(); }
};

/// sum_k (x_{k+1} - x_k)^2
inline double quadratic_variation(std::span<const double> x) {
  if (x.size() < 2) throw std::invalid_argument("quadratic_variation: need at least 2 samples");
  double s = 0.0;
  for (std::size_t k = 0; k + 1 < x.size(); ++k) {
    const double d = x[k + 1] - x[k];
    s += d * d;
  }
  return s;
}

/// Accumulates a MeasurementSeries from StepViews, one O(delta M) pairing per step.
class Measurer {
 public:
  explicit Measurer(ScaledKernel kernel, std::size_t expected_steps = 0) : kernel_(std::move(kernel)) {
    series_.delta = kernel_.delta();
    series_.x0 = kernel_.center();
    series_.requested_x0 = kernel_.requested_x0();
    series_.clamped = kernel_.clamped();
    series_.kernel = kernel_.spec().name();
    if (expected_steps > 0) {
      series_.times.reserve(expected_steps + 1);
      series_.x_series.reserve(expected_steps + 1);
      series_.xdelta_series.reserve(expected_steps + 1);
    }
  }

  const ScaledKernel& kernel() const noexcept { return kernel_; }

  void operator()(const StepView& step) {
    if (step.field.size() != kernel_.grid().num_nodes())
      throw std::invalid_argument("measure: grid and kernel do not match");
    const auto [x, xd] = kernel_.pair(step.field);
    series_.times.push_back(step.time);
    series_.x_series.push_back(x);
    series_.xdelta_series.push_back(xd);
    if (!step.drift.empty()) series_.f_pairing.push_back(kernel_.pair_values(step.drift));
    if (!step.noise.empty()) series_.noise_pairing.push_back(kernel_.pair_values(step.noise));
  }

  /// Fills the QV-based and (optionally) spectral ||B^* K||^2 and returns the series.
  MeasurementSeries finish(const std::optional<NoiseModel>& noise = std::nullopt) {
    if (series_.size() < 2) throw std::logic_error("measure: fewer than two steps observed");
    series_.horizon = series_.times.back() - series_.times.front();
    series_.b_norm_sq_qv = quadratic_variation(series_.x_series) / series_.horizon;
    if (noise) series_.b_norm_sq_spectral = b_star_norm_sq(kernel_, *noise).value;
    return std::move(series_);
  }

 private:
  ScaledKernel kernel_;
  MeasurementSeries series_;
};

/// Offline measurement of a stored trajectory.
inline MeasurementSeries measure(const TrajectoryField& field, const ScaledKernel& kernel,
                                 const std::optional<NoiseModel>& noise = std::nullopt) {
  if (!(field.grid == kernel.grid())) throw std::invalid_argument("measure: grid and kernel do not match");
  Measurer m(kernel, field.rows());
  for (std::size_t r = 0; r < field.rows(); ++r) m(StepView{r, field.times[r], field.row(r), {}, {}});
  return m.finish(noise);
}

struct GammaEstimate {
  double gamma = 0.0;
  double slope = 0.0;
  double residual = 0.0;
};

/// Fits log qv = a + slope log delta; since ||B^* K_delta||^2 ~ delta^{4 gamma},
/// gamma = slope / 4.
inline GammaEstimate estimate_gamma_from_qv(std::span<const double> deltas, std::span<const double> qvs) {
  if (deltas.size() != qvs.size()) throw std::invalid_argument("estimate_gamma_from_qv: size mismatch");
  std::vector<double> lx;
  std::vector<double> ly;
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    if (!(deltas[i] > 0.0) || !(qvs[i] > 0.0))
      throw std::invalid_argument("estimate_gamma_from_qv: values must be positive");
    bool seen = false;
    for (double d : lx) seen = seen || d == std::log(deltas[i]);
    if (!seen) lx.push_back(std::log(deltas[i]));
  }
  if (lx.size() < 3) throw std::invalid_argument("estimate_gamma_from_qv: need at least 3 distinct deltas");
  lx.clear();
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    lx.push_back(std::log(deltas[i]));
    ly.push_back(std::log(qvs[i]));
  }
  const LinearFit fit = linear_fit(lx, ly);
  return {fit.slope / 4.0, fit.slope, fit.residual};
}

}  // namespace spdeest
