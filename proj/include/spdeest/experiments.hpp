#pragma once

// Monte-Carlo orchestration: one simulation per (delta, replication), measured
// at every x0 of the plan, estimated, and reduced per (delta, x0) cell in
// replication order so results do not depend on the worker schedule.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "spdeest/estimator.hpp"
#include "spdeest/kernels.hpp"
#include "spdeest/measurements.hpp"
#include "spdeest/simulator.hpp"
#include "spdeest/stats.hpp"

namespace spdeest {

/// splitmix64 output function.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// seed = mix(mix(mix(base) + replication) + delta_index), mix = splitmix64.
inline std::uint64_t replication_seed(std::uint64_t base, std::uint64_t replication, std::uint64_t delta_index) {
  return splitmix64(splitmix64(splitmix64(base) + replication) + delta_index);
}

class ExperimentError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExperimentPlan {
  std::string equation = "linear";  // linear | allen_cahn | burgers | polynomial
  std::vector<double> polynomial;   // coefficients a_0..a_m for equation = polynomial
  double theta = 0.01;
  double sigma = 0.05;
  double gamma = 0.0;
  double horizon = 1.0;
  std::size_t grid = 500;
  std::size_t steps = 10000;
  std::string initial = "plateau";  // plateau | zero | sine
  double plateau_eps = 0.05;
  std::string scheme = "auto";      // auto | spectral_exact | semi_implicit_fd
  std::string kernel = "phi3";      // phi3 | custom
  std::vector<double> kernel_polynomial{1.0};
  int kernel_derivative = 3;
  std::vector<double> deltas{0.05};
  std::vector<double> x0s{0.4};
  std::size_t replications = 1000;
  std::uint64_t base_seed = 20200417;
  std::size_t workers = 1;
  double alpha = 0.05;
  bool exclude_clamped = false;
  bool instrument = false;
  std::string mode = "single";      // single | rates | qq | coverage
  std::string out_dir = "out";

  /// Original study sizes: N = 1e5 steps and 5000 replications.
  void apply_paper_scale() {
    steps = 100000;
    replications = 5000;
  }

  Scheme resolved_scheme() const {
    if (scheme == "auto") return equation == "linear" ? Scheme::spectral_exact : Scheme::semi_implicit_fd;
    return scheme_from_string(scheme);
  }

  Nonlinearity nonlinearity() const {
    if (equation == "linear") return Nonlinearity::none();
    if (equation == "allen_cahn") return Nonlinearity::allen_cahn();
    if (equation == "burgers") return Nonlinearity::burgers();
    if (equation == "polynomial") return Nonlinearity::polynomial(polynomial);
    throw std::invalid_argument("unknown equation: " + equation);
  }

  KernelSpec kernel_spec() const {
    if (kernel == "phi3") {
      if (gamma == 0.0) return paper_kernel();
      // Delta^{ceil(gamma)} applied on top of the phi''' profile's antiderivatives
      return KernelSpec(BumpProfile::phi_derivative(std::max(0, 3 - 2 * static_cast<int>(std::ceil(gamma)))),
                        gamma, "phi3");
    }
    if (kernel == "custom") return KernelSpec(BumpProfile(kernel_polynomial, kernel_derivative), gamma, "custom");
    throw std::invalid_argument("unknown kernel: " + kernel);
  }

  void validate() const {
    if (deltas.empty()) throw std::invalid_argument("plan: delta grid is empty");
    for (double d : deltas)
      if (!(d > 0.0 && d < 0.5)) throw std::invalid_argument("plan: every delta must lie in (0, 0.5)");
    if (x0s.empty()) throw std::invalid_argument("plan: x0 list is empty");
    for (double x : x0s)
      if (!(x > 0.0 && x < 1.0)) throw std::invalid_argument("plan: every x0 must lie in (0, 1)");
    if (replications == 0) throw std::invalid_argument("plan: replications must be >= 1");
    if (workers == 0) throw std::invalid_argument("plan: workers must be >= 1");
    if (!(theta > 0.0) || !(horizon > 0.0) || !(sigma >= 0.0) || !(gamma >= 0.0))
      throw std::invalid_argument("plan: invalid model parameters");
    if (steps == 0 || grid < 4) throw std::invalid_argument("plan: invalid discretisation");
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("plan: alpha must lie in (0,1)");
    (void)nonlinearity();
    if (resolved_scheme() == Scheme::spectral_exact && equation != "linear")
      throw std::invalid_argument("plan: spectral_exact only supports the linear equation");
    if (mode != "single" && mode != "rates" && mode != "qq" && mode != "coverage")
      throw std::invalid_argument("plan: unknown mode " + mode);
    if (mode == "rates" && deltas.size() < 3) throw std::invalid_argument("plan: rates mode needs at least 3 deltas");
    if (mode == "qq" && replications < 100) throw std::invalid_argument("plan: qq mode needs at least 100 replications");
    if (initial != "plateau" && initial != "zero" && initial != "sine")
      throw std::invalid_argument("plan: unknown initial condition " + initial);
  }
};

inline Vector initial_condition(const ExperimentPlan& plan, const Grid1D& grid) {
  if (plan.initial == "zero") return Vector(grid.num_nodes(), 0.0);
  if (plan.initial == "sine") return grid.sample([](double y) { return dirichlet_eigenfunction(1, y); });
  return initial_plateau(grid, plan.plateau_eps);
}

inline SimConfig make_sim_config(const ExperimentPlan& plan, std::uint64_t seed, const Vector& initial) {
  SimConfig cfg;
  cfg.theta = plan.theta;
  cfg.noise = NoiseModel{plan.gamma, plan.sigma};
  cfg.nonlinearity = plan.nonlinearity();
  cfg.grid = Grid1D(plan.grid);
  cfg.time_steps = plan.steps;
  cfg.horizon = plan.horizon;
  cfg.initial = initial;
  cfg.initial_name = plan.initial;
  cfg.rng_seed = seed;
  cfg.scheme = plan.resolved_scheme();
  cfg.store_stride = 0;
  cfg.instrument = plan.instrument;
  return cfg;
}

enum class RunStatus { ok, blowup, degenerate };

inline std::string to_string(RunStatus s) {
  switch (s) {
    case RunStatus::ok: return "ok";
    case RunStatus::blowup: return "blowup";
    case RunStatus::degenerate: return "degenerate";
  }
  return "unknown";
}

struct ReplicationRecord {
  std::size_t delta_index = 0;
  std::size_t x0_index = 0;
  std::size_t replication = 0;
  std::uint64_t seed = 0;
  RunStatus status = RunStatus::ok;
  bool clamped = false;
  double kernel_center = 0.0;
  double theta_hat = std::nan("");
  double fisher_obs = std::nan("");
  double b_norm_sq = std::nan("");
  double b_norm_sq_qv = std::nan("");
  double ci_low = std::nan("");
  double ci_high = std::nan("");
  bool covered = false;
  /// I^{-1} R on instrumented runs.
  double scaled_bias = std::nan("");
};

struct MCResult {
  double delta = 0.0;
  double x0 = 0.0;
  double kernel_center = 0.0;
  bool clamped = false;
  double theta_sigma = 0.0;
  std::size_t requested = 0;
  std::size_t completed = 0;
  std::size_t excluded = 0;
  std::vector<double> errors;      // theta_hat - theta, replication order
  std::vector<double> normalized;  // (theta Sigma)^{-1/2} delta^{-1} (theta_hat - theta)
  std::vector<double> fisher;
  std::vector<double> scaled_bias;
  double rmse = 0.0;
  double coverage = 0.0;
  double mean_fisher = 0.0;
  double mean_seconds = 0.0;  // wall clock, not part of any result file
};

struct MCRun {
  ExperimentPlan plan;
  std::vector<ReplicationRecord> records;  // (delta, replication, x0) order
  std::vector<MCResult> cells;             // (delta, x0) order
  double wall_seconds = 0.0;

  const MCResult& cell(std::size_t delta_index, std::size_t x0_index) const {
    return cells.at(delta_index * plan.x0s.size() + x0_index);
  }
};

/// Rough cost model used for the up-front runtime estimate.
inline double estimated_seconds(const ExperimentPlan& plan) {
  const double per_node_step = plan.resolved_scheme() == Scheme::spectral_exact ? 45e-9 : 18e-9;
  const double tasks = static_cast<double>(plan.deltas.size() * plan.replications);
  return tasks * static_cast<double>(plan.steps) * static_cast<double>(plan.grid) * per_node_step /
         static_cast<double>(plan.workers);
}

inline double root_mean_square(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return v.empty() ? 0.0 : std::sqrt(s / static_cast<double>(v.size()));
}

/// Simulate, measure and estimate one (delta, replication) task at every x0.
inline std::vector<ReplicationRecord> run_replication(const ExperimentPlan& plan, std::size_t delta_index,
                                                      std::size_t replication, const Vector& initial,
                                                      const std::vector<ScaledKernel>& kernels,
                                                      const std::vector<double>& spectral_norms) {
  const std::uint64_t seed = replication_seed(plan.base_seed, replication, delta_index);
  const SimConfig cfg = make_sim_config(plan, seed, initial);
  std::vector<Measurer> measurers;
  measurers.reserve(kernels.size());
  for (const auto& k : kernels) measurers.emplace_back(k, plan.steps);

  std::vector<ReplicationRecord> out(kernels.size());
  for (std::size_t i = 0; i < kernels.size(); ++i) {
    out[i].delta_index = delta_index;
    out[i].x0_index = i;
    out[i].replication = replication;
    out[i].seed = seed;
    out[i].clamped = kernels[i].clamped();
    out[i].kernel_center = kernels[i].center();
  }
  try {
    simulate(cfg, [&](const StepView& s) {
      for (auto& m : measurers) m(s);
    });
  } catch (const SimulationBlowUp&) {
    for (auto& r : out) r.status = RunStatus::blowup;
    return out;
  }
  for (std::size_t i = 0; i < kernels.size(); ++i) {
    MeasurementSeries series = measurers[i].finish();
    series.b_norm_sq_spectral = spectral_norms[i];
    auto& r = out[i];
    try {
      EstimateOptions opt;
      opt.alpha = plan.alpha;
      opt.seed = seed;
      const EstimateReport rep = augmented_mle(series, opt);
      r.theta_hat = rep.theta_hat;
      r.fisher_obs = rep.fisher_obs;
      r.b_norm_sq = rep.b_norm_sq;
      r.b_norm_sq_qv = series.b_norm_sq_qv;
      r.ci_low = rep.ci_low;
      r.ci_high = rep.ci_high;
      r.covered = rep.ci_low <= plan.theta && plan.theta <= rep.ci_high;
      if (plan.instrument && spectral_norms[i] > 0.0) {
        const Decomposition d = decomposition_diagnostics(series, spectral_norms[i]);
        if (std::isfinite(d.nonlinear_bias)) r.scaled_bias = d.nonlinear_bias / d.fisher_obs;
      }
    } catch (const DegenerateEstimate&) {
      r.status = RunStatus::degenerate;
    }
  }
  return out;
}

/// Runs the plan. Blow-ups and degenerate estimates are excluded and counted;
/// more than 1% exclusions in any cell throws ExperimentError.
inline MCRun run_plan(const ExperimentPlan& plan, std::ostream* log = nullptr) {
  plan.validate();
  const auto start = std::chrono::steady_clock::now();
  const Grid1D grid(plan.grid);
  const KernelSpec spec = plan.kernel_spec();
  const double theta_sigma = asymptotic_variance_sigma(spec, plan.theta, plan.horizon);
  const Vector initial = initial_condition(plan, grid);
  const NoiseModel noise{plan.gamma, plan.sigma};

  const std::size_t nd = plan.deltas.size();
  const std::size_t nx = plan.x0s.size();
  std::vector<std::vector<ScaledKernel>> kernels(nd);
  std::vector<std::vector<double>> norms(nd);
  for (std::size_t d = 0; d < nd; ++d)
    for (double x0 : plan.x0s) {
      kernels[d].emplace_back(spec, plan.deltas[d], x0, grid);
      norms[d].push_back(b_star_norm_sq(kernels[d].back(), noise).value);
    }

  if (log)
    *log << "plan: " << plan.equation << ", " << nd << " delta x " << nx << " x0 x " << plan.replications
         << " replications, N=" << plan.steps << ", M=" << plan.grid << ", scheme "
         << to_string(plan.resolved_scheme()) << ", " << plan.workers << " worker(s); estimated "
         << static_cast<long>(estimated_seconds(plan)) << " s" << std::endl;

  const std::size_t tasks = nd * plan.replications;
  std::vector<std::vector<ReplicationRecord>> results(tasks);
  std::vector<double> seconds(tasks, 0.0);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    for (;;) {
      const std::size_t t = next.fetch_add(1);
      if (t >= tasks) return;
      const std::size_t d = t / plan.replications;
      const std::size_t r = t % plan.replications;
      try {
        const auto t0 = std::chrono::steady_clock::now();
        results[t] = run_replication(plan, d, r, initial, kernels[d], norms[d]);
        seconds[t] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(tasks);
        return;
      }
    }
  };
  const std::size_t nthreads = std::min(plan.workers, tasks);
  if (nthreads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < nthreads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  MCRun run;
  run.plan = plan;
  run.cells.resize(nd * nx);
  for (std::size_t d = 0; d < nd; ++d) {
    for (std::size_t x = 0; x < nx; ++x) {
      MCResult& c = run.cells[d * nx + x];
      c.delta = plan.deltas[d];
      c.x0 = plan.x0s[x];
      c.kernel_center = kernels[d][x].center();
      c.clamped = kernels[d][x].clamped();
      c.theta_sigma = theta_sigma;
      c.requested = plan.replications;
    }
  }
  for (std::size_t t = 0; t < tasks; ++t) {
    const std::size_t d = t / plan.replications;
    for (const auto& r : results[t]) {
      run.records.push_back(r);
      MCResult& c = run.cells[d * nx + r.x0_index];
      c.mean_seconds += seconds[t] / static_cast<double>(plan.replications);
      if (r.status != RunStatus::ok || (plan.exclude_clamped && r.clamped)) {
        ++c.excluded;
        continue;
      }
      ++c.completed;
      const double err = r.theta_hat - plan.theta;
      c.errors.push_back(err);
      c.normalized.push_back(err / (c.delta * std::sqrt(theta_sigma)));
      c.fisher.push_back(r.fisher_obs);
      if (std::isfinite(r.scaled_bias)) c.scaled_bias.push_back(r.scaled_bias);
      if (r.covered) c.coverage += 1.0;
    }
  }
  for (auto& c : run.cells) {
    c.rmse = root_mean_square(c.errors);
    c.coverage = c.completed > 0 ? c.coverage / static_cast<double>(c.completed) : 0.0;
    c.mean_fisher = mean(c.fisher);
  }
  run.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  for (const auto& c : run.cells) {
    std::size_t failed = 0;
    for (const auto& r : run.records)
      if (r.status != RunStatus::ok && plan.deltas[r.delta_index] == c.delta && plan.x0s[r.x0_index] == c.x0)
        ++failed;
    if (static_cast<double>(failed) > 0.01 * static_cast<double>(c.requested))
      throw ExperimentError("too many failed replications (" + std::to_string(failed) + " of " +
                            std::to_string(c.requested) + ") at delta=" + std::to_string(c.delta) +
                            ", x0=" + std::to_string(c.x0));
  }
  return run;
}

struct RatesFit {
  double x0 = 0.0;
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;
  std::vector<double> deltas;
  std::vector<double> rmse;
};

/// Least-squares slope of log10 RMSE against log10 delta, one fit per x0.
inline std::vector<RatesFit> rates_table(std::span<const MCResult> cells) {
  std::vector<double> x0s;
  for (const auto& c : cells)
    if (std::find(x0s.begin(), x0s.end(), c.x0) == x0s.end()) x0s.push_back(c.x0);
  std::vector<RatesFit> fits;
  for (double x0 : x0s) {
    RatesFit f;
    f.x0 = x0;
    std::vector<double> lx;
    std::vector<double> ly;
    for (const auto& c : cells) {
      if (c.x0 != x0) continue;
      f.deltas.push_back(c.delta);
      f.rmse.push_back(c.rmse);
      lx.push_back(std::log10(c.delta));
      ly.push_back(std::log10(c.rmse));
    }
    if (lx.size() < 3) throw std::invalid_argument("rates_table: need at least 3 delta values");
    const auto [lo, hi] = std::minmax_element(f.rmse.begin(), f.rmse.end());
    if (*lo == *hi || !(*lo > 0.0)) throw std::invalid_argument("rates_table: degenerate RMSE values");
    const LinearFit fit = linear_fit(lx, ly);
    f.slope = fit.slope;
    f.intercept = fit.intercept;
    f.residual = fit.residual;
    fits.push_back(std::move(f));
  }
  return fits;
}

struct QQPoint {
  double p;
  double theoretical;
  double sample;
};

struct QQResult {
  std::vector<QQPoint> points;
  /// Largest |sample - theoretical| over plotting positions in [0.1, 0.9].
  double max_gap = 0.0;
  /// Same over every point, extremes included.
  double max_gap_all = 0.0;
  bool degenerate = false;
};

inline constexpr double kQQBand = 0.05;
inline constexpr std::size_t kQQMinSamples = 100;

/// Sorted sample against standard normal quantiles at (i - 0.5)/n.
inline QQResult qq_data(std::span<const double> sample) {
  if (sample.size() < kQQMinSamples)
    throw std::invalid_argument("qq_data: need at least " + std::to_string(kQQMinSamples) + " samples");
  std::vector<double> s(sample.begin(), sample.end());
  std::sort(s.begin(), s.end());
  QQResult q;
  q.degenerate = s.front() == s.back();
  const double n = static_cast<double>(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double p = (static_cast<double>(i) + 0.5) / n;
    const double th = normal_quantile(p);
    q.points.push_back({p, th, s[i]});
    const double gap = std::abs(s[i] - th);
    q.max_gap_all = std::max(q.max_gap_all, gap);
    if (p >= kQQBand && p <= 1.0 - kQQBand) q.max_gap = std::max(q.max_gap, gap);
  }
  return q;
}

}  // namespace spdeest
