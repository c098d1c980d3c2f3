#include <gtest/gtest.h>

#include <cstdlib>
#include <set>

#include "nanonet/experiments.hpp"

using namespace nanonet;

namespace {

SamplingSetup small_setup() {
  const auto g = build_grid(3, 3);
  SamplingSetup s;
  s.device = make_device(g, place_electrodes(g, SetupA{}, standard_roles()));
  s.params.max_events = 20000;
  s.params.equilibration_events = 1000;
  return s;
}

class ScopedWorkers {
 public:
  explicit ScopedWorkers(const char* value) {
    if (const char* old = std::getenv("NANONET_WORKERS")) saved_ = old;
    setenv("NANONET_WORKERS", value, 1);
  }
  ~ScopedWorkers() {
    if (saved_.empty()) {
      unsetenv("NANONET_WORKERS");
    } else {
      setenv("NANONET_WORKERS", saved_.c_str(), 1);
    }
  }

 private:
  std::string saved_;
};

IVCurve curve_of(std::vector<std::pair<double, double>> pts) {
  IVCurve c;
  for (auto [u, i] : pts) c.points.push_back({u, i, 0.01, Termination::UncertaintyReached});
  return c;
}

}  // namespace

TEST(ElectrodeVoltages, Mapping) {
  const auto g = build_grid(7, 7);
  const auto el = place_electrodes(g, SetupA{}, standard_roles());
  const std::vector<double> ctrl = {1, 2, 3, 4, 5};
  const auto v = electrode_voltages(el, ctrl, 10, 20);
  ASSERT_EQ(v.size(), 8u);
  EXPECT_DOUBLE_EQ(v[el.input_index(1)], 0.010);
  EXPECT_DOUBLE_EQ(v[el.input_index(2)], 0.020);
  EXPECT_EQ(v[el.output_index()], 0.0);
  const auto idx = el.control_indices();
  for (std::size_t k = 0; k < idx.size(); ++k) EXPECT_DOUBLE_EQ(v[idx[k]], ctrl[k] * 1e-3);
  EXPECT_THROW(electrode_voltages(el, std::vector<double>{1.0}, 0, 0), ConfigError);
}

TEST(GateSampling, FourRunsPerSample) {
  const auto setup = small_setup();
  const auto samples = sample_gate_phase_space(setup, 4, 11);
  ASSERT_EQ(samples.size(), 4u);
  std::set<std::uint64_t> seeds;
  for (const auto& s : samples) {
    EXPECT_EQ(s.controls_mV.size(), 5u);
    for (double c : s.controls_mV) {
      EXPECT_GE(c, -50.0);
      EXPECT_LT(c, 50.0);
    }
    EXPECT_EQ(flags(s).size(), 4u);
    for (auto n : s.events) EXPECT_GT(n, 0);
    seeds.insert(s.seed);
  }
  EXPECT_EQ(seeds.size(), 4u);
}

TEST(GateSampling, SerialAndParallelAgree) {
  const auto setup = small_setup();
  std::vector<GateSample> serial;
  std::vector<GateSample> parallel;
  {
    ScopedWorkers w("1");
    serial = sample_gate_phase_space(setup, 6, 5);
  }
  {
    ScopedWorkers w("4");
    parallel = sample_gate_phase_space(setup, 6, 5);
  }
  EXPECT_EQ(serial, parallel);
}

TEST(GateSampling, SampleIndependentOfBatch) {
  const auto setup = small_setup();
  const auto batch = sample_gate_phase_space(setup, 3, 21);
  EXPECT_EQ(run_gate_sample(setup, 2, 21), batch[2]);
}

TEST(GateSampling, ScaleAppliesToControls) {
  auto setup = small_setup();
  const auto a = run_gate_sample(setup, 0, 3);
  setup.scale = 0.5;
  const auto b = run_gate_sample(setup, 0, 3);
  for (std::size_t k = 0; k < a.controls_mV.size(); ++k) EXPECT_DOUBLE_EQ(b.controls_mV[k], 0.5 * a.controls_mV[k]);
  setup.scale = 0.0;
  EXPECT_THROW(sample_gate_phase_space(setup, 1, 3), ConfigError);
}

TEST(GateSampling, NeedsBothInputs) {
  const auto g = build_grid(3, 3);
  ElectrodeConfig el(g, {{0, Role::Input1, "E_0"}, {8, Role::Output, "E_1"}});
  SamplingSetup setup;
  setup.device = make_device(g, el);
  EXPECT_THROW(sample_gate_phase_space(setup, 1, 1), ConfigError);
}

TEST(ParallelFor, RethrowsFirstError) {
  ScopedWorkers w("3");
  EXPECT_THROW(parallel_for(20,
                            [](std::size_t k) {
                              if (k == 7) throw std::runtime_error("boom");
                            }),
               std::runtime_error);
}

TEST(Inversion, Interpolates) {
  const auto c = curve_of({{0, 0}, {10, 1}, {20, 3}, {30, 2}, {40, 5}});
  EXPECT_DOUBLE_EQ(invert_monotone(c, 2.0).u_mV, 15.0);
  EXPECT_FALSE(invert_monotone(c, 2.0).clamped);
  // Only the non-decreasing prefix is used.
  const auto hi = invert_monotone(c, 4.0);
  EXPECT_DOUBLE_EQ(hi.u_mV, 20.0);
  EXPECT_TRUE(hi.clamped);
  EXPECT_DOUBLE_EQ(interpolate_current(c, 35.0), 3.5);
}

TEST(Inversion, BlockadeNoiseCountsAsZero) {
  IVCurve c;
  c.points = {{0, 0.0, 0, Termination::ZeroCurrent},
              {2, 1e-20, 0, Termination::ZeroCurrent},
              {4, -1e-20, 0, Termination::ZeroCurrent},
              {6, 1e-13, 0.01, Termination::UncertaintyReached},
              {8, 3e-13, 0.01, Termination::UncertaintyReached}};
  const auto inv = invert_monotone(c, 2e-13);
  EXPECT_FALSE(inv.clamped);
  EXPECT_NEAR(inv.u_mV, 7.0, 1e-12);
}

TEST(IVSweep, RejectsBadGrid) {
  const auto setup = small_setup();
  const std::vector<std::size_t> driven = {0};
  const std::vector<double> grid = {0, 10, 5};
  EXPECT_THROW(run_iv_sweep(setup.device, setup.params, driven, grid, 1), ConfigError);
  const std::vector<std::size_t> out = {setup.device->electrodes.output_index()};
  const std::vector<double> ok = {0, 10};
  EXPECT_THROW(run_iv_sweep(setup.device, setup.params, out, ok, 1), ConfigError);
}

TEST(Scaling, ReferenceHasUnitFactor) {
  SimulationParams p;
  p.max_events = 50000;
  p.equilibration_events = 2000;
  const std::vector<int> sides = {3};
  const std::vector<double> grid = {0, 20, 40, 60};
  const auto table = derive_voltage_scaling(sides, SetupA{}, p, grid, 20.0, 1);
  ASSERT_EQ(table.entries.size(), 2u);
  EXPECT_EQ(table.factor(7), 1.0);
  EXPECT_GT(table.factor(3), 0.0);
  EXPECT_THROW(table.factor(12), ConfigError);
  EXPECT_THROW(derive_voltage_scaling(sides, SetupA{}, p, grid, 80.0, 1), ConfigError);
}

TEST(Series, ControlCountConfigurations) {
  const auto g = build_grid(3, 3);
  const auto base = place_electrodes(g, SetupA{}, standard_roles());
  SimulationParams p;
  p.max_events = 10000;
  p.equilibration_events = 500;
  const std::vector<int> counts = {0, 2};
  const auto sets = control_count_series(g, base, ControlSeries::B, counts, p, {}, 2, 4);
  ASSERT_EQ(sets.size(), 2u);
  EXPECT_EQ(sets[0].name, "B0");
  EXPECT_EQ(sets[1].name, "B2");
  EXPECT_EQ(sets[0].electrodes.n_controls(), 0);
  EXPECT_EQ(sets[1].samples[0].controls_mV.size(), 2u);
}

TEST(Series, PositionScanCoversAllPairs) {
  const auto g = build_grid(3, 3);
  SimulationParams p;
  p.max_events = 5000;
  p.equilibration_events = 200;
  const auto scan = input_position_scan(g, SetupA{}, p, {}, 10.0, 2, 9);
  EXPECT_EQ(scan.labels.size(), 8u);
  EXPECT_EQ(scan.pairs.size(), 21u);
  EXPECT_EQ(scan.voltage_correlation.size(), 8u);
  EXPECT_FALSE(scan.voltage_correlation[7].has_value());
  for (const auto& pair : scan.pairs) {
    EXPECT_LT(pair.first, pair.second);
    EXPECT_NE(pair.second, 7u);
    EXPECT_EQ(pair.set.electrodes.n_controls(), 5);
  }
}

TEST(Bench, ReportsPositiveTimings) {
  const auto b = benchmark_step_costs(3, 200, 1);
  EXPECT_EQ(b.n_np, 9);
  EXPECT_EQ(b.n_events, 2u * 12u + 2u * 8u);
  EXPECT_GT(b.rebuild_ns, 0.0);
  EXPECT_GT(b.select_ns, 0.0);
  EXPECT_GT(b.update_ns, 0.0);
}
