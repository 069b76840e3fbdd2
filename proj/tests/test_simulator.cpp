#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "spdeest/nonlinearity.hpp"
#include "spdeest/simulator.hpp"
#include "spdeest/stats.hpp"

using namespace spdeest;

namespace {

SimConfig base_config(Scheme scheme) {
  SimConfig c;
  c.grid = Grid1D(100);
  c.time_steps = 500;
  c.horizon = 1.0;
  c.theta = 0.05;
  c.noise = {0.0, 0.05};
  c.scheme = scheme;
  c.store_stride = 50;
  c.rng_seed = 11;
  return c;
}

}  // namespace

TEST(Nonlinearity, AllenCahnPolynomial) {
  const Nonlinearity f = Nonlinearity::allen_cahn();
  EXPECT_DOUBLE_EQ(f.pointwise(0.0), 0.0);
  EXPECT_NEAR(f.pointwise(0.5), 0.0, 1e-15);
  EXPECT_NEAR(f.pointwise(1.0), 0.0, 1e-14);
  EXPECT_NEAR(f.pointwise(0.25), 10.0 * 0.25 * 0.75 * -0.25, 1e-15);
  EXPECT_THROW(Nonlinearity::burgers().pointwise(0.1), std::logic_error);
}

TEST(Burgers, SineDriftIsSecondOrderAccurate) {
  double prev = 0.0;
  for (std::size_t m : {100u, 200u, 400u}) {
    const Grid1D grid(m);
    const Vector u = grid.sample([](double y) { return std::sin(std::numbers::pi * y); });
    const Vector d = burgers_drift(u, grid);
    double err = 0.0;
    for (std::size_t j = 1; j < m; ++j)
      err = std::max(err, std::abs(d[j] + 0.5 * std::numbers::pi * std::sin(2.0 * std::numbers::pi * grid.node(j))));
    // leading term h^2 g'''/6 with max |g'''| = 2 pi^3
    EXPECT_LT(err, 10.5 * grid.step() * grid.step());
    if (prev > 0.0) {
      EXPECT_GT(prev / err, 3.5);
    }
    prev = err;
    EXPECT_EQ(d.front(), 0.0);
    EXPECT_EQ(d.back(), 0.0);
  }
}

TEST(Burgers, ConstantFieldAndEvenness) {
  const Grid1D grid(50);
  Vector c(grid.num_nodes(), 0.7);
  c.front() = c.back() = 0.0;
  const Vector d = burgers_drift(c, grid);
  for (std::size_t j = 2; j + 2 < grid.num_nodes(); ++j) EXPECT_EQ(d[j], 0.0);
  EXPECT_NE(d[1], 0.0);
  const Vector u = grid.sample([](double y) { return y * y * (1.0 - y); });
  Vector neg(u.size());
  for (std::size_t j = 0; j < u.size(); ++j) neg[j] = -u[j];
  EXPECT_EQ(burgers_drift(u, grid), burgers_drift(neg, grid));
}

TEST(Simulator, NoiselessHeatDecay) {
  for (Scheme s : {Scheme::semi_implicit_fd, Scheme::spectral_exact}) {
    SimConfig c = base_config(s);
    c.noise.sigma = 0.0;
    c.grid = Grid1D(200);
    c.time_steps = 1000;
    c.initial = c.grid.sample([](double y) { return dirichlet_eigenfunction(1, y); });
    const TrajectoryField f = simulate(c);
    const double decay = std::exp(-c.theta * dirichlet_eigenvalue(1) * c.horizon);
    const auto last = f.row(f.rows() - 1);
    for (std::size_t j = 1; j < c.grid.num_points(); ++j)
      EXPECT_NEAR(last[j], decay * c.initial[j], 0.01 * decay * std::abs(c.initial[j]) + 1e-14);
  }
}

TEST(Simulator, DeterministicForFixedSeed) {
  for (Scheme s : {Scheme::semi_implicit_fd, Scheme::spectral_exact}) {
    const SimConfig c = base_config(s);
    const TrajectoryField a = simulate(c);
    const TrajectoryField b = simulate(c);
    EXPECT_EQ(a.values, b.values);
    SimConfig other = c;
    other.rng_seed = 12;
    EXPECT_NE(simulate(other).values, a.values);
  }
}

TEST(Simulator, StoresRequestedRowsWithDirichletZeros) {
  SimConfig c = base_config(Scheme::semi_implicit_fd);
  c.nonlinearity = Nonlinearity::allen_cahn();
  c.initial = initial_plateau(c.grid, 0.05);
  const TrajectoryField f = simulate(c);
  ASSERT_EQ(f.rows(), 11u);
  EXPECT_DOUBLE_EQ(f.times.back(), 1.0);
  for (std::size_t r = 0; r < f.rows(); ++r) {
    EXPECT_EQ(f.row(r).front(), 0.0);
    EXPECT_EQ(f.row(r).back(), 0.0);
  }
  c.store_stride = 0;
  EXPECT_EQ(simulate(c).rows(), 0u);
}

TEST(Simulator, ObserverSeesEveryStepAndInstrumentation) {
  SimConfig c = base_config(Scheme::semi_implicit_fd);
  c.nonlinearity = Nonlinearity::allen_cahn();
  c.instrument = true;
  std::size_t calls = 0;
  std::size_t with_drift = 0;
  simulate(c, [&](const StepView& s) {
    EXPECT_EQ(s.index, calls);
    ++calls;
    if (!s.drift.empty() && !s.noise.empty()) ++with_drift;
  });
  EXPECT_EQ(calls, c.time_steps + 1);
  EXPECT_EQ(with_drift, c.time_steps);
}

TEST(Simulator, SchemesShareNoiseForTheSameSeed) {
  // linear, white noise: the two schemes are driven by the same normals, so
  // their low modes stay close along the path
  SimConfig fd = base_config(Scheme::semi_implicit_fd);
  fd.time_steps = 2000;
  fd.store_stride = 2000;
  SimConfig ex = fd;
  ex.scheme = Scheme::spectral_exact;
  const Vector a = sine_transform(simulate(fd).row(1), fd.grid, 3);
  const Vector b = sine_transform(simulate(ex).row(1), ex.grid, 3);
  for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(a[k], b[k], 0.05 * std::abs(b[k]) + 1e-4);
}

TEST(Simulator, RejectsInvalidConfigs) {
  SimConfig c = base_config(Scheme::spectral_exact);
  c.nonlinearity = Nonlinearity::allen_cahn();
  EXPECT_THROW(simulate(c), std::invalid_argument);
  c = base_config(Scheme::semi_implicit_fd);
  c.theta = 0.0;
  EXPECT_THROW(simulate(c), std::invalid_argument);
  c = base_config(Scheme::semi_implicit_fd);
  c.initial = Vector(3, 0.0);
  EXPECT_THROW(simulate(c), std::invalid_argument);
  c = base_config(Scheme::semi_implicit_fd);
  c.mode_count = 200;
  EXPECT_THROW(simulate(c), std::invalid_argument);
}

TEST(Simulator, BlowUpIsReported) {
  SimConfig c = base_config(Scheme::semi_implicit_fd);
  c.nonlinearity = Nonlinearity::polynomial({0.0, 0.0, 0.0, 50.0});
  c.initial = c.grid.sample([](double y) { return 5.0 * dirichlet_eigenfunction(1, y); });
  EXPECT_THROW(simulate(c), SimulationBlowUp);
}

TEST(Simulator, PlateauInitialCondition) {
  const Grid1D grid(200);
  const Vector x = initial_plateau(grid, 0.05);
  EXPECT_EQ(x.front(), 0.0);
  EXPECT_EQ(x.back(), 0.0);
  EXPECT_NEAR(x[100], 1.0, 1e-12);
  for (double v : x) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0 + 1e-12);
  }
}

TEST(ModePaths, CovarianceFormulaMatchesItoIsometry) {
  using boost::math::quadrature::gauss_kronrod;
  const NoiseModel noise{0.0, 0.3};
  const double theta = 0.2;
  for (std::size_t k : {1u, 2u, 5u})
    for (auto [t, s] : {std::pair{0.3, 0.7}, std::pair{1.0, 1.0}, std::pair{0.9, 0.2}}) {
      const double r = theta * dirichlet_eigenvalue(k);
      const double b = noise.multiplier(k);
      const double lo = std::min(t, s);
      const double numeric = gauss_kronrod<double, 61>::integrate(
          [&](double u) { return b * b * std::exp(-r * (t - u)) * std::exp(-r * (s - u)); }, 0.0, lo, 10, 1e-14);
      EXPECT_NEAR(ou_mode_covariance(theta, noise, k, t, s), numeric, 1e-12 * std::abs(numeric) + 1e-18);
    }
}

TEST(ModePaths, StationaryVarianceOfOU) {
  const NoiseModel noise{0.0, 1.0};
  const double theta = 1.0;
  const std::size_t modes[] = {1, 3};
  std::vector<double> c1;
  std::vector<double> c3;
  for (std::uint64_t seed = 0; seed < 4000; ++seed) {
    const auto path = simulate_mode_paths(theta, noise, 2.0, 20, modes, seed);
    c1.push_back(path.back()[0]);
    c3.push_back(path.back()[1]);
  }
  EXPECT_NEAR(variance(c1) * 2.0 * dirichlet_eigenvalue(1), 1.0, 0.08);
  EXPECT_NEAR(variance(c3) * 2.0 * dirichlet_eigenvalue(3), 1.0, 0.08);
}
