#pragma once

// File formats: plan JSON, result CSVs, manifests, trajectory and series dumps.
// Numbers are written with %.17g so equal doubles give equal bytes.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>

#include <boost/uuid/detail/sha1.hpp>
#include <nlohmann/json.hpp>

#include "spdeest/estimator.hpp"
#include "spdeest/experiments.hpp"
#include "spdeest/measurements.hpp"
#include "spdeest/simulator.hpp"

namespace spdeest {

using nlohmann::json;

inline std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline json plan_to_json(const ExperimentPlan& p) {
  return json{{"equation", p.equation},
              {"polynomial", p.polynomial},
              {"theta", p.theta},
              {"sigma", p.sigma},
              {"gamma", p.gamma},
              {"horizon", p.horizon},
              {"grid", p.grid},
              {"steps", p.steps},
              {"initial", p.initial},
              {"plateau_eps", p.plateau_eps},
              {"scheme", p.scheme},
              {"kernel", p.kernel},
              {"kernel_polynomial", p.kernel_polynomial},
              {"kernel_derivative", p.kernel_derivative},
              {"deltas", p.deltas},
              {"x0s", p.x0s},
              {"replications", p.replications},
              {"base_seed", p.base_seed},
              {"workers", p.workers},
              {"alpha", p.alpha},
              {"exclude_clamped", p.exclude_clamped},
              {"instrument", p.instrument},
              {"mode", p.mode},
              {"out_dir", p.out_dir}};
}

/// Overlays the keys of j onto p. Unknown keys are rejected.
inline void merge_plan_json(ExperimentPlan& p, const json& j) {
  if (!j.is_object()) throw std::invalid_argument("config: top level must be an object");
  for (const auto& [key, v] : j.items()) {
    if (key == "equation") p.equation = v.get<std::string>();
    else if (key == "polynomial") p.polynomial = v.get<std::vector<double>>();
    else if (key == "theta") p.theta = v.get<double>();
    else if (key == "sigma") p.sigma = v.get<double>();
    else if (key == "gamma") p.gamma = v.get<double>();
    else if (key == "horizon") p.horizon = v.get<double>();
    else if (key == "grid") p.grid = v.get<std::size_t>();
    else if (key == "steps") p.steps = v.get<std::size_t>();
    else if (key == "initial") p.initial = v.get<std::string>();
    else if (key == "plateau_eps") p.plateau_eps = v.get<double>();
    else if (key == "scheme") p.scheme = v.get<std::string>();
    else if (key == "kernel") p.kernel = v.get<std::string>();
    else if (key == "kernel_polynomial") p.kernel_polynomial = v.get<std::vector<double>>();
    else if (key == "kernel_derivative") p.kernel_derivative = v.get<int>();
    else if (key == "deltas") p.deltas = v.get<std::vector<double>>();
    else if (key == "x0s") p.x0s = v.get<std::vector<double>>();
    else if (key == "replications") p.replications = v.get<std::size_t>();
    else if (key == "base_seed") p.base_seed = v.get<std::uint64_t>();
    else if (key == "workers") p.workers = v.get<std::size_t>();
    else if (key == "alpha") p.alpha = v.get<double>();
    else if (key == "exclude_clamped") p.exclude_clamped = v.get<bool>();
    else if (key == "instrument") p.instrument = v.get<bool>();
    else if (key == "mode") p.mode = v.get<std::string>();
    else if (key == "out_dir") p.out_dir = v.get<std::string>();
    else if (key == "paper_scale") {
      if (v.get<bool>()) p.apply_paper_scale();
    } else {
      throw std::invalid_argument("config: unknown key '" + key + "'");
    }
  }
}

inline ExperimentPlan load_plan(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  ExperimentPlan p;
  merge_plan_json(p, json::parse(in));
  return p;
}

/// SHA-1 of "blob <size>\0<content>", as git hash-object computes it.
inline std::string git_blob_hash(const std::string& content) {
  boost::uuids::detail::sha1 h;
  const std::string header = "blob " + std::to_string(content.size());
  h.process_bytes(header.data(), header.size());
  const char nul = '\0';
  h.process_bytes(&nul, 1);
  h.process_bytes(content.data(), content.size());
  boost::uuids::detail::sha1::digest_type d;
  h.get_digest(d);
  std::ostringstream os;
  for (unsigned word : d) os << std::hex << std::setw(8) << std::setfill('0') << word;
  return os.str();
}

/// Hash of the plan with run-only settings (workers, output directory) removed.
inline std::string plan_hash(const ExperimentPlan& p) {
  json j = plan_to_json(p);
  j.erase("workers");
  j.erase("out_dir");
  return git_blob_hash(j.dump());
}

inline std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

inline void write_replications_csv(const MCRun& run, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "delta,x0,replication,seed,kernel_center,clamped,status,theta_hat,error,z,fisher_obs,b_norm_sq,"
         "b_norm_sq_qv,ci_low,ci_high,covered,scaled_bias\n";
  const double theta = run.plan.theta;
  for (const auto& r : run.records) {
    const double delta = run.plan.deltas[r.delta_index];
    const double err = r.theta_hat - theta;
    const double z = err / (delta * std::sqrt(run.cells.front().theta_sigma));
    out << fmt(delta) << ',' << fmt(run.plan.x0s[r.x0_index]) << ',' << r.replication << ',' << r.seed << ','
        << fmt(r.kernel_center) << ',' << r.clamped << ',' << to_string(r.status) << ',' << fmt(r.theta_hat)
        << ',' << fmt(err) << ',' << fmt(z) << ',' << fmt(r.fisher_obs) << ',' << fmt(r.b_norm_sq) << ','
        << fmt(r.b_norm_sq_qv) << ',' << fmt(r.ci_low) << ',' << fmt(r.ci_high) << ',' << r.covered << ','
        << fmt(r.scaled_bias) << '\n';
  }
}

inline void write_summary_csv(const MCRun& run, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "equation,delta,x0,kernel_center,clamped,requested,completed,excluded,rmse,mean_error,theta_sigma,"
         "mean_z,sd_z,coverage,delta2_mean_fisher\n";
  for (const auto& c : run.cells) {
    out << run.plan.equation << ',' << fmt(c.delta) << ',' << fmt(c.x0) << ',' << fmt(c.kernel_center) << ','
        << c.clamped << ',' << c.requested << ',' << c.completed << ',' << c.excluded << ',' << fmt(c.rmse) << ','
        << fmt(mean(c.errors)) << ',' << fmt(c.theta_sigma) << ',' << fmt(mean(c.normalized)) << ','
        << fmt(std::sqrt(variance(c.normalized))) << ',' << fmt(c.coverage) << ','
        << fmt(c.delta * c.delta * c.mean_fisher) << '\n';
  }
}

inline void write_rates_csv(const MCRun& run, const std::vector<RatesFit>& fits,
                            const std::filesystem::path& points_path, const std::filesystem::path& fit_path) {
  auto pts = open_out(points_path);
  pts << "equation,x0,delta,rmse,log10_delta,log10_rmse\n";
  for (const auto& f : fits)
    for (std::size_t i = 0; i < f.deltas.size(); ++i)
      pts << run.plan.equation << ',' << fmt(f.x0) << ',' << fmt(f.deltas[i]) << ',' << fmt(f.rmse[i]) << ','
          << fmt(std::log10(f.deltas[i])) << ',' << fmt(std::log10(f.rmse[i])) << '\n';
  auto out = open_out(fit_path);
  out << "equation,x0,slope,intercept,residual,points\n";
  for (const auto& f : fits)
    out << run.plan.equation << ',' << fmt(f.x0) << ',' << fmt(f.slope) << ',' << fmt(f.intercept) << ','
        << fmt(f.residual) << ',' << f.deltas.size() << '\n';
}

inline void write_qq_csv(const MCRun& run, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "equation,delta,x0,i,p,theoretical,sample\n";
  for (const auto& c : run.cells) {
    if (c.normalized.size() < kQQMinSamples) continue;
    const QQResult q = qq_data(c.normalized);
    for (std::size_t i = 0; i < q.points.size(); ++i)
      out << run.plan.equation << ',' << fmt(c.delta) << ',' << fmt(c.x0) << ',' << i + 1 << ','
          << fmt(q.points[i].p) << ',' << fmt(q.points[i].theoretical) << ',' << fmt(q.points[i].sample) << '\n';
  }
}

inline void write_coverage_csv(const MCRun& run, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "equation,delta,x0,alpha,completed,covered,coverage\n";
  for (const auto& c : run.cells) {
    const auto covered = static_cast<std::size_t>(std::llround(c.coverage * static_cast<double>(c.completed)));
    out << run.plan.equation << ',' << fmt(c.delta) << ',' << fmt(c.x0) << ',' << fmt(run.plan.alpha) << ','
        << c.completed << ',' << covered << ',' << fmt(c.coverage) << '\n';
  }
}

inline json cell_json(const MCResult& c) {
  json j{{"delta", c.delta},         {"x0", c.x0},
         {"kernel_center", c.kernel_center}, {"clamped", c.clamped},
         {"requested", c.requested}, {"completed", c.completed},
         {"excluded", c.excluded},   {"rmse", c.rmse},
         {"theta_sigma", c.theta_sigma}, {"coverage", c.coverage},
         {"delta2_mean_fisher", c.delta * c.delta * c.mean_fisher}};
  if (c.normalized.size() >= kQQMinSamples) {
    const QQResult q = qq_data(c.normalized);
    j["qq_max_gap"] = q.max_gap;
    j["qq_max_gap_all"] = q.max_gap_all;
    j["qq_degenerate"] = q.degenerate;
  }
  return j;
}

/// Writes every CSV for the plan's mode plus manifest.json; returns the manifest.
inline json write_run_outputs(const MCRun& run, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  json files = json::array();
  write_replications_csv(run, dir / "replications.csv");
  files.push_back("replications.csv");
  write_summary_csv(run, dir / "summary.csv");
  files.push_back("summary.csv");
  json manifest;
  const std::string& mode = run.plan.mode;
  if (mode == "rates") {
    const auto fits = rates_table(run.cells);
    write_rates_csv(run, fits, dir / "rates.csv", dir / "rates_fit.csv");
    files.push_back("rates.csv");
    files.push_back("rates_fit.csv");
    json fj = json::array();
    for (const auto& f : fits) fj.push_back({{"x0", f.x0}, {"slope", f.slope}, {"residual", f.residual}});
    manifest["rates"] = fj;
  } else if (mode == "qq") {
    write_qq_csv(run, dir / "qq.csv");
    files.push_back("qq.csv");
  } else if (mode == "coverage") {
    write_coverage_csv(run, dir / "coverage.csv");
    files.push_back("coverage.csv");
  }
  manifest["plan"] = plan_to_json(run.plan);
  manifest["config_hash"] = plan_hash(run.plan);
  manifest["files"] = files;
  json cells = json::array();
  for (const auto& c : run.cells) cells.push_back(cell_json(c));
  manifest["cells"] = cells;
  json timing = json::array();
  for (const auto& c : run.cells) timing.push_back({{"delta", c.delta}, {"x0", c.x0}, {"mean_seconds", c.mean_seconds}});
  manifest["timing"] = {{"wall_seconds", run.wall_seconds}, {"per_cell", timing}};
  auto out = open_out(dir / "manifest.json");
  out << manifest.dump(2) << '\n';
  return manifest;
}

inline json sim_config_json(const SimConfig& c) {
  return json{{"theta", c.theta},
              {"sigma", c.noise.sigma},
              {"gamma", c.noise.gamma},
              {"nonlinearity", c.nonlinearity.name()},
              {"grid", c.grid.num_points()},
              {"steps", c.time_steps},
              {"horizon", c.horizon},
              {"initial", c.initial_name},
              {"seed", c.rng_seed},
              {"scheme", to_string(c.scheme)},
              {"mode_count", c.modes()},
              {"store_stride", c.store_stride}};
}

/// Field dump, rows = stored times, columns = nodes y_0..y_M. "csv" writes a
/// header row of node positions and a leading time column; "bin" writes raw
/// little-endian doubles in the same row-major layout without the time column.
/// A JSON sidecar <path>.json echoes the configuration and layout.
inline void write_trajectory(const TrajectoryField& f, const SimConfig& cfg, const std::filesystem::path& path,
                             const std::string& format) {
  auto out = open_out(path);
  if (format == "csv") {
    out << "t";
    for (std::size_t j = 0; j < f.cols(); ++j) out << ',' << fmt(f.grid.node(j));
    out << '\n';
    for (std::size_t r = 0; r < f.rows(); ++r) {
      out << fmt(f.times[r]);
      for (double v : f.row(r)) out << ',' << fmt(v);
      out << '\n';
    }
  } else if (format == "bin") {
    out.write(reinterpret_cast<const char*>(f.values.data()),
              static_cast<std::streamsize>(f.values.size() * sizeof(double)));
  } else {
    throw std::invalid_argument("trajectory format must be csv or bin");
  }
  json side = {{"config", sim_config_json(cfg)},
               {"format", format},
               {"rows", f.rows()},
               {"cols", f.cols()},
               {"stride", f.stride},
               {"times", f.times}};
  auto s = open_out(path.string() + ".json");
  s << side.dump(2) << '\n';
}

/// Columns t, x_delta, x_delta_laplacian; metadata in <path>.json.
inline void write_series(const MeasurementSeries& s, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "t,x_delta,x_delta_laplacian\n";
  for (std::size_t k = 0; k < s.size(); ++k)
    out << fmt(s.times[k]) << ',' << fmt(s.x_series[k]) << ',' << fmt(s.xdelta_series[k]) << '\n';
  json meta = {{"delta", s.delta},
               {"x0", s.x0},
               {"requested_x0", s.requested_x0},
               {"clamped", s.clamped},
               {"kernel", s.kernel},
               {"horizon", s.horizon},
               {"samples", s.size()},
               {"b_norm_sq_qv", s.b_norm_sq_qv}};
  if (std::isfinite(s.b_norm_sq_spectral)) meta["b_norm_sq_spectral"] = s.b_norm_sq_spectral;
  auto m = open_out(path.string() + ".json");
  m << meta.dump(2) << '\n';
}

inline json report_json(const EstimateReport& r) {
  json j{{"theta_hat", r.theta_hat},
         {"fisher_obs", r.fisher_obs},
         {"numerator", r.numerator},
         {"denominator", r.denominator},
         {"b_norm_sq", r.b_norm_sq},
         {"b_norm_source", to_string(r.b_norm_source)},
         {"alpha", r.alpha},
         {"ci_low", r.ci_low},
         {"ci_high", r.ci_high},
         {"delta", r.delta},
         {"x0", r.x0},
         {"seed", r.seed}};
  if (!std::isfinite(r.fisher_obs)) j["fisher_obs"] = "inf";
  if (std::isfinite(r.sigma_theoretical)) j["sigma_theoretical"] = r.sigma_theoretical;
  return j;
}

}  // namespace spdeest
