// spdeest: simulate, estimate and run Monte-Carlo studies from the command line.
//
//   spdeest simulate --config plan.json --dump field.csv
//   spdeest estimate --delta 0.05 --x0 0.4 --seed 7
//   spdeest rates --config rates.json --workers 4 --out results/rates
//
// Errors are reported as a JSON object on stderr with a nonzero exit code.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "spdeest/estimator.hpp"
#include "spdeest/experiments.hpp"
#include "spdeest/io.hpp"
#include "spdeest/measurements.hpp"
#include "spdeest/simulator.hpp"

namespace {

using namespace spdeest;

struct Overrides {
  std::string config;
  std::optional<std::string> equation;
  std::optional<std::string> scheme;
  std::optional<double> theta, sigma, gamma, horizon, alpha;
  std::vector<double> deltas, x0s;
  std::optional<std::size_t> grid, steps, reps, workers;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  bool paper_scale = false;
  bool exclude_clamped = false;
  bool instrument = false;

  void attach(CLI::App* app) {
    app->add_option("-c,--config", config, "JSON config file");
    app->add_option("--equation", equation, "linear | allen_cahn | burgers | polynomial");
    app->add_option("--scheme", scheme, "auto | spectral_exact | semi_implicit_fd");
    app->add_option("--theta", theta);
    app->add_option("--sigma", sigma);
    app->add_option("--gamma", gamma);
    app->add_option("--horizon", horizon);
    app->add_option("--alpha", alpha, "CI level is 1 - alpha");
    app->add_option("--delta", deltas, "one or more delta values");
    app->add_option("--x0", x0s, "one or more x0 values");
    app->add_option("--grid", grid, "number of grid cells M");
    app->add_option("--steps", steps, "number of time steps N");
    app->add_option("--reps", reps, "replications per delta");
    app->add_option("--seed", seed, "base seed");
    app->add_option("--workers", workers, "worker threads");
    app->add_option("--out", out, "output directory");
    app->add_flag("--paper-scale", paper_scale, "N = 1e5 steps, 5000 replications");
    app->add_flag("--exclude-clamped", exclude_clamped, "drop boundary-clamped x0 from the statistics");
    app->add_flag("--instrument", instrument, "record the nonlinear bias term");
  }

  ExperimentPlan plan(const std::string& mode) const {
    ExperimentPlan p;
    if (!config.empty()) p = load_plan(config);
    if (paper_scale) p.apply_paper_scale();
    if (equation) p.equation = *equation;
    if (scheme) p.scheme = *scheme;
    if (theta) p.theta = *theta;
    if (sigma) p.sigma = *sigma;
    if (gamma) p.gamma = *gamma;
    if (horizon) p.horizon = *horizon;
    if (alpha) p.alpha = *alpha;
    if (!deltas.empty()) p.deltas = deltas;
    if (!x0s.empty()) p.x0s = x0s;
    if (grid) p.grid = *grid;
    if (steps) p.steps = *steps;
    if (reps) p.replications = *reps;
    if (seed) p.base_seed = *seed;
    if (workers) p.workers = *workers;
    if (out) p.out_dir = *out;
    if (exclude_clamped) p.exclude_clamped = true;
    if (instrument) p.instrument = true;
    if (!mode.empty()) p.mode = mode;
    p.validate();
    return p;
  }
};

int fail(const std::string& kind, const std::string& message, int code) {
  std::cerr << json{{"error", kind}, {"message", message}}.dump() << std::endl;
  return code;
}

int cmd_simulate(const ExperimentPlan& plan, const std::string& dump, const std::string& format,
                 std::size_t stride) {
  const Grid1D grid(plan.grid);
  SimConfig cfg = make_sim_config(plan, plan.base_seed, initial_condition(plan, grid));
  cfg.store_stride = dump.empty() ? 0 : stride;
  const TrajectoryField f = simulate(cfg);
  json summary{{"config", sim_config_json(cfg)}, {"stored_rows", f.rows()}};
  if (!dump.empty()) {
    write_trajectory(f, cfg, dump, format);
    summary["dump"] = dump;
  }
  std::cout << summary.dump(2) << std::endl;
  return 0;
}

int cmd_estimate(const ExperimentPlan& plan, const std::string& series_path) {
  const Grid1D grid(plan.grid);
  const SimConfig cfg = make_sim_config(plan, plan.base_seed, initial_condition(plan, grid));
  const KernelSpec spec = plan.kernel_spec();
  const NoiseModel noise{plan.gamma, plan.sigma};
  std::vector<Measurer> measurers;
  for (double d : plan.deltas)
    for (double x : plan.x0s) measurers.emplace_back(ScaledKernel(spec, d, x, grid), plan.steps);
  simulate(cfg, [&](const StepView& s) {
    for (auto& m : measurers) m(s);
  });
  const double sigma_per_theta = asymptotic_variance_sigma(spec, 1.0, plan.horizon);
  json reports = json::array();
  for (std::size_t i = 0; i < measurers.size(); ++i) {
    MeasurementSeries series = measurers[i].finish(noise);
    if (!series_path.empty()) {
      const std::string p = measurers.size() == 1 ? series_path : series_path + "." + std::to_string(i) + ".csv";
      write_series(series, p);
    }
    EstimateOptions opt;
    opt.alpha = plan.alpha;
    opt.sigma_per_theta = sigma_per_theta;
    opt.seed = plan.base_seed;
    json r = report_json(augmented_mle(series, opt));
    r["clamped"] = series.clamped;
    r["requested_x0"] = series.requested_x0;
    reports.push_back(r);
  }
  std::cout << (reports.size() == 1 ? reports[0] : reports).dump(2) << std::endl;
  return 0;
}

int cmd_plan(const ExperimentPlan& plan) {
  const MCRun run = run_plan(plan, &std::cerr);
  const json manifest = write_run_outputs(run, plan.out_dir);
  json summary{{"out_dir", plan.out_dir}, {"config_hash", manifest["config_hash"]}, {"cells", manifest["cells"]}};
  if (manifest.contains("rates")) summary["rates"] = manifest["rates"];
  std::cout << summary.dump(2) << std::endl;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Local-measurement diffusivity estimation for semilinear SPDEs"};
  app.require_subcommand(1);

  Overrides sim_o, est_o, mc_o, rates_o, qq_o, cov_o;
  std::string dump, format = "csv", series_path;
  std::size_t stride = 100;

  auto* sim = app.add_subcommand("simulate", "run one trajectory, optionally dumping the field");
  sim_o.attach(sim);
  sim->add_option("--dump", dump, "write the field to this path");
  sim->add_option("--format", format, "csv | bin")->check(CLI::IsMember({"csv", "bin"}));
  sim->add_option("--stride", stride, "store every stride-th time step");

  auto* est = app.add_subcommand("estimate", "one replication: simulate, measure, estimate");
  est_o.attach(est);
  est->add_option("--series", series_path, "write the measurement series CSV here");

  auto* mc = app.add_subcommand("mc", "run a full plan in the mode given by the config");
  mc_o.attach(mc);
  auto* rates = app.add_subcommand("rates", "RMSE against delta with log-log slope fits");
  rates_o.attach(rates);
  auto* qq = app.add_subcommand("qq", "normal Q-Q data for the normalized errors");
  qq_o.attach(qq);
  auto* cov = app.add_subcommand("coverage", "empirical coverage of the confidence intervals");
  cov_o.attach(cov);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what(), 2);
  }

  try {
    if (sim->parsed()) return cmd_simulate(sim_o.plan(""), dump, format, stride);
    if (est->parsed()) return cmd_estimate(est_o.plan(""), series_path);
    if (mc->parsed()) return cmd_plan(mc_o.plan(""));
    if (rates->parsed()) return cmd_plan(rates_o.plan("rates"));
    if (qq->parsed()) return cmd_plan(qq_o.plan("qq"));
    if (cov->parsed()) return cmd_plan(cov_o.plan("coverage"));
  } catch (const std::invalid_argument& e) {
    return fail("invalid_argument", e.what(), 2);
  } catch (const ExperimentError& e) {
    return fail("experiment_failed", e.what(), 3);
  } catch (const SimulationBlowUp& e) {
    return fail("simulation_blowup", e.what(), 3);
  } catch (const DegenerateEstimate& e) {
    return fail("degenerate_estimate", e.what(), 3);
  } catch (const std::exception& e) {
    return fail("error", e.what(), 1);
  }
  return 0;
}
