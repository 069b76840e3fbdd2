#pragma once

// Trajectory generation on the grid y_j = j/M, t_k = kT/N.
//
// Both schemes consume the same driving noise: per step, M-1 iid standard
// normals xi_j at the interior nodes. Their orthonormal sine transform
// zeta_k = h^{-1/2} <xi, Phi_k>_h is again iid standard normal, which is the
// mode-space view used by the spectral paths. Running the two schemes with
// one seed therefore couples them pathwise.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <numbers>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/random/normal_distribution.hpp>

#include "spdeest/noise.hpp"
#include "spdeest/nonlinearity.hpp"
#include "spdeest/profile.hpp"
#include "spdeest/spectral.hpp"

namespace spdeest {

using Engine = std::mt19937_64;

/// Standard normal sampler with a fully specified algorithm (ziggurat), so
/// streams are reproducible across standard libraries.
class NormalStream {
 public:
  explicit NormalStream(std::uint64_t seed) : engine_(seed) {}
  double operator()() { return dist_(engine_); }
  void fill(std::span<double> out) {
    for (double& v : out) v = dist_(engine_);
  }

 private:
  Engine engine_;
  boost::random::normal_distribution<double> dist_;
};

enum class Scheme { spectral_exact, semi_implicit_fd };

inline std::string to_string(Scheme s) {
  return s == Scheme::spectral_exact ? "spectral_exact" : "semi_implicit_fd";
}

inline Scheme scheme_from_string(const std::string& s) {
  if (s == "spectral_exact" || s == "exact") return Scheme::spectral_exact;
  if (s == "semi_implicit_fd" || s == "fd") return Scheme::semi_implicit_fd;
  throw std::invalid_argument("unknown scheme: " + s);
}

class SimulationBlowUp : public std::runtime_error {
 public:
  SimulationBlowUp(std::size_t step, double value)
      : std::runtime_error("simulation blow-up at step " + std::to_string(step) +
                           " (|X| = " + std::to_string(value) + ")"),
        step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

inline constexpr double kOverflowGuard = 1e6;

/// Smooth plateau: 1 on [0.3, 0.7], 0 outside [0.3 - eps, 0.7 + eps], with
/// transitions given by the normalised running integral of phi.
class PlateauProfile {
 public:
  explicit PlateauProfile(double eps) : eps_(eps) {
    if (!(eps > 0.0 && eps < 0.3))
      throw std::invalid_argument("initial_plateau: eps must lie in (0, 0.3)");
    mass_ = integrate(1.0);
  }

  double operator()(double y) const {
    if (y >= 0.3 && y <= 0.7) return 1.0;
    if (y <= 0.3 - eps_ || y >= 0.7 + eps_) return 0.0;
    const double s = y < 0.3 ? (y - (0.3 - eps_)) / eps_ : ((0.7 + eps_) - y) / eps_;
    return integrate(2.0 * s - 1.0) / mass_;
  }

 private:
  static double integrate(double upper) {
    using boost::math::quadrature::gauss_kronrod;
    if (upper <= -1.0) return 0.0;
    return gauss_kronrod<double, 31>::integrate(bump_phi, -1.0, std::min(upper, 1.0), 15, 1e-14);
  }

  double eps_;
  double mass_ = 1.0;
};

inline Vector initial_plateau(const Grid1D& grid, double eps) {
  const PlateauProfile p(eps);
  return grid.sample([&](double y) { return p(y); });
}

struct SimConfig {
  double theta = 0.01;
  NoiseModel noise{0.0, 0.05};
  Nonlinearity nonlinearity;
  Grid1D grid{500};
  std::size_t time_steps = 10000;
  double horizon = 1.0;
  /// Grid samples of X_0 (M+1 values, zero boundary). Empty means X_0 = 0.
  Vector initial;
  std::string initial_name = "zero";
  std::uint64_t rng_seed = 0;
  Scheme scheme = Scheme::semi_implicit_fd;
  /// Spectral truncation M_s; 0 selects M-1.
  std::size_t mode_count = 0;
  /// Store every stride-th time step in the returned field; 0 stores nothing.
  std::size_t store_stride = 1;
  /// Expose the drift and noise increments of every step to the observer.
  bool instrument = false;

  double dt() const { return horizon / static_cast<double>(time_steps); }
  std::size_t modes() const { return mode_count == 0 ? grid.num_interior() : mode_count; }

  void validate() const {
    if (!(theta > 0.0)) throw std::invalid_argument("SimConfig: theta must be positive");
    noise.validate();
    if (time_steps == 0) throw std::invalid_argument("SimConfig: time_steps must be positive");
    if (!(horizon > 0.0)) throw std::invalid_argument("SimConfig: horizon must be positive");
    if (!initial.empty() && initial.size() != grid.num_nodes())
      throw std::invalid_argument("SimConfig: initial condition does not match grid");
    if (modes() > grid.num_interior())
      throw std::invalid_argument("SimConfig: mode_count exceeds M-1");
    if (scheme == Scheme::spectral_exact && !nonlinearity.is_none())
      throw std::invalid_argument("spectral_exact requires nonlinearity = none");
  }
};

/// What an online consumer sees at time t_k. For k < N, drift and noise are the
/// terms that carry X(t_k) to X(t_{k+1}) (drift is F_h(X(t_k)) without the dt
/// factor); they are empty unless the run is instrumented, and always empty at k = N.
struct StepView {
  std::size_t index;
  double time;
  std::span<const double> field;
  std::span<const double> drift;
  std::span<const double> noise;
};

using StepObserver = std::function<void(const StepView&)>;

/// Stored rows of X(t_k, y_j); row r holds time step r * stride.
struct TrajectoryField {
  Grid1D grid{2};
  std::size_t stride = 1;
  std::uint64_t seed = 0;
  Vector times;
  Vector values;

  std::size_t rows() const noexcept { return times.size(); }
  std::size_t cols() const noexcept { return grid.num_nodes(); }
  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(values).subspan(r * cols(), cols());
  }
};

namespace detail {

inline void check_finite(std::span<const double> x, std::size_t step) {
  for (double v : x)
    if (!std::isfinite(v) || std::abs(v) > kOverflowGuard) throw SimulationBlowUp(step, v);
}

class Recorder {
 public:
  Recorder(const SimConfig& cfg) : stride_(cfg.store_stride) {
    out_.grid = cfg.grid;
    out_.stride = stride_ == 0 ? 1 : stride_;
    out_.seed = cfg.rng_seed;
  }
  void record(std::size_t k, double t, std::span<const double> x) {
    if (stride_ == 0 || k % stride_ != 0) return;
    out_.times.push_back(t);
    out_.values.insert(out_.values.end(), x.begin(), x.end());
  }
  TrajectoryField take() { return std::move(out_); }

 private:
  std::size_t stride_;
  TrajectoryField out_;
};

}  // namespace detail

/// Semi-implicit Euler-Maruyama:
/// (I - dt theta Delta_h) X^{k+1} = X^k + dt F_h(X^k) + noise increment.
/// The noise increment is sigma sqrt(dt/h) xi_j for white noise and
/// sum_k b_k sqrt(dt) zeta_k Phi_k(y_j) otherwise.
inline TrajectoryField simulate_semilinear_fd(const SimConfig& cfg, const StepObserver& observer = {}) {
  cfg.validate();
  const Grid1D& grid = cfg.grid;
  const std::size_t m = grid.num_points();
  const std::size_t n = grid.num_interior();
  const double h = grid.step();
  const double dt = cfg.dt();
  const double r = cfg.theta * dt / (h * h);

  // Thomas factors for the constant tridiagonal matrix (diag 1+2r, off -r).
  Vector cprime(n);
  Vector inv_denom(n);
  {
    const double diag = 1.0 + 2.0 * r;
    double prev = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double denom = diag + r * prev;
      inv_denom[i] = 1.0 / denom;
      cprime[i] = -r * inv_denom[i];
      prev = cprime[i];
    }
  }

  Vector x = cfg.initial.empty() ? Vector(grid.num_nodes(), 0.0) : cfg.initial;
  x[0] = 0.0;
  x[m] = 0.0;
  Vector drift(grid.num_nodes(), 0.0);
  Vector noise(grid.num_nodes(), 0.0);
  Vector xi(grid.num_nodes(), 0.0);
  Vector coeffs(cfg.modes(), 0.0);
  const bool reaction = !cfg.nonlinearity.is_none();
  const bool noisy = cfg.noise.sigma > 0.0;
  const bool white = cfg.noise.is_white() && cfg.modes() == n;
  const Vector b = cfg.noise.multipliers(cfg.modes());
  std::unique_ptr<SineTransform> dst;
  if (!white) dst = std::make_unique<SineTransform>(grid);
  NormalStream normals(cfg.rng_seed);
  detail::Recorder rec(cfg);

  const double white_scale = cfg.noise.sigma * std::sqrt(dt / h);
  const double sqrt_dt = std::sqrt(dt);
  const double inv_sqrt_h = 1.0 / std::sqrt(h);

  for (std::size_t k = 0; k < cfg.time_steps; ++k) {
    const double t = static_cast<double>(k) * dt;
    if (reaction) cfg.nonlinearity.apply(x, drift, grid);
    if (noisy) {
      normals.fill(std::span<double>(xi).subspan(1, n));
      if (white) {
        for (std::size_t j = 1; j < m; ++j) noise[j] = white_scale * xi[j];
      } else {
        dst->forward(xi, coeffs);
        for (std::size_t i = 0; i < coeffs.size(); ++i) coeffs[i] *= b[i] * sqrt_dt * inv_sqrt_h;
        dst->inverse(coeffs, noise);
      }
    }
    rec.record(k, t, x);
    if (observer) {
      const bool inst = cfg.instrument;
      observer(StepView{k, t, x, inst ? std::span<const double>(drift) : std::span<const double>{},
                        inst ? std::span<const double>(noise) : std::span<const double>{}});
    }
    // forward sweep on rhs, then back substitution
    double prev = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t j = i + 1;
      const double rhs = x[j] + dt * drift[j] + noise[j];
      prev = (rhs + r * prev) * inv_denom[i];
      x[j] = prev;
    }
    for (std::size_t i = n - 1; i-- > 0;) x[i + 1] -= cprime[i] * x[i + 2];
    detail::check_finite(x, k + 1);
  }
  const double tn = cfg.horizon;
  rec.record(cfg.time_steps, tn, x);
  if (observer) observer(StepView{cfg.time_steps, tn, x, {}, {}});
  return rec.take();
}

/// Exact OU transitions for the linear equation, mode by mode:
/// c_k <- e^{-theta lambda_k dt} c_k + b_k sqrt((1 - e^{-2 theta lambda_k dt}) / (2 theta lambda_k)) zeta_k,
/// with the field synthesised on the grid at every step.
inline TrajectoryField simulate_linear_exact(const SimConfig& cfg, const StepObserver& observer = {}) {
  cfg.validate();
  if (!cfg.nonlinearity.is_none())
    throw std::invalid_argument("simulate_linear_exact requires nonlinearity = none");
  const Grid1D& grid = cfg.grid;
  const std::size_t n = grid.num_interior();
  const std::size_t ms = cfg.modes();
  const double dt = cfg.dt();
  const double inv_sqrt_h = 1.0 / std::sqrt(grid.step());

  SineTransform dst(grid);
  Vector field = cfg.initial.empty() ? Vector(grid.num_nodes(), 0.0) : cfg.initial;
  Vector c = dst.forward(field, ms);
  dst.inverse(c, field);

  Vector decay(ms);
  Vector sd(ms);
  for (std::size_t k = 1; k <= ms; ++k) {
    const double rate = cfg.theta * dirichlet_eigenvalue(k);
    decay[k - 1] = std::exp(-rate * dt);
    const double b = cfg.noise.multiplier(k);
    sd[k - 1] = b * std::sqrt(-std::expm1(-2.0 * rate * dt) / (2.0 * rate));
  }

  const bool noisy = cfg.noise.sigma > 0.0;
  NormalStream normals(cfg.rng_seed);
  Vector xi(grid.num_nodes(), 0.0);
  Vector zeta(ms, 0.0);
  Vector eta(ms, 0.0);
  Vector noise_field(cfg.instrument ? grid.num_nodes() : 0, 0.0);
  detail::Recorder rec(cfg);

  for (std::size_t k = 0; k < cfg.time_steps; ++k) {
    const double t = static_cast<double>(k) * dt;
    if (noisy) {
      normals.fill(std::span<double>(xi).subspan(1, n));
      dst.forward(xi, zeta);
      for (std::size_t i = 0; i < ms; ++i) eta[i] = sd[i] * zeta[i] * inv_sqrt_h;
      if (cfg.instrument) dst.inverse(eta, noise_field);
    }
    rec.record(k, t, field);
    if (observer)
      observer(StepView{k, t, field, {},
                        cfg.instrument ? std::span<const double>(noise_field) : std::span<const double>{}});
    for (std::size_t i = 0; i < ms; ++i) c[i] = decay[i] * c[i] + eta[i];
    dst.inverse(c, field);
    detail::check_finite(field, k + 1);
  }
  rec.record(cfg.time_steps, cfg.horizon, field);
  if (observer) observer(StepView{cfg.time_steps, cfg.horizon, field, {}, {}});
  return rec.take();
}

inline TrajectoryField simulate(const SimConfig& cfg, const StepObserver& observer = {}) {
  return cfg.scheme == Scheme::spectral_exact ? simulate_linear_exact(cfg, observer)
                                              : simulate_semilinear_fd(cfg, observer);
}

/// Cov(c_k(t), c_k(s)) for the mode process started from zero:
/// b_k^2 e^{-theta lambda_k |t - s|} (1 - e^{-2 theta lambda_k min(t, s)}) / (2 theta lambda_k).
inline double ou_mode_covariance(double theta, const NoiseModel& noise, std::size_t k, double t, double s) {
  const double rate = theta * dirichlet_eigenvalue(k);
  const double b = noise.multiplier(k);
  return b * b * std::exp(-rate * std::abs(t - s)) * -std::expm1(-2.0 * rate * std::min(t, s)) / (2.0 * rate);
}

/// Exact OU paths of selected mode coefficients alone (no field synthesis),
/// started from zero. Row k of the result holds c_{modes[i]}(t_k) at column i.
inline std::vector<Vector> simulate_mode_paths(double theta, const NoiseModel& noise, double horizon,
                                               std::size_t time_steps, std::span<const std::size_t> modes,
                                               std::uint64_t seed) {
  if (!(theta > 0.0) || !(horizon > 0.0) || time_steps == 0)
    throw std::invalid_argument("simulate_mode_paths: invalid parameters");
  const double dt = horizon / static_cast<double>(time_steps);
  const std::size_t n = modes.size();
  Vector decay(n);
  Vector sd(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double rate = theta * dirichlet_eigenvalue(modes[i]);
    decay[i] = std::exp(-rate * dt);
    sd[i] = noise.multiplier(modes[i]) * std::sqrt(-std::expm1(-2.0 * rate * dt) / (2.0 * rate));
  }
  NormalStream normals(seed);
  std::vector<Vector> path(time_steps + 1, Vector(n, 0.0));
  for (std::size_t k = 0; k < time_steps; ++k)
    for (std::size_t i = 0; i < n; ++i) path[k + 1][i] = decay[i] * path[k][i] + sd[i] * normals();
  return path;
}

}  // namespace spdeest
