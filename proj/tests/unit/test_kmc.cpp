#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "nanonet/constants.hpp"
#include "nanonet/kmc.hpp"
#include "oracle/ctmc.hpp"

using namespace nanonet;
using namespace nanonet::constants;

namespace {

std::shared_ptr<const Device> single_particle() {
  NetworkTopology one(1, 1, {});
  ElectrodeConfig el(one, {{0, Role::Input1, "S"}, {0, Role::Output, "D"}}, true);
  return make_device(one, el);
}

std::shared_ptr<const Device> particle_pair() {
  NetworkTopology two(1, 2, {});
  ElectrodeConfig el(two, {{0, Role::Input1, "S"}, {1, Role::Output, "D"}});
  return make_device(two, el);
}

std::shared_ptr<const Device> grid_device(int side) {
  const auto g = build_grid(side, side);
  return make_device(g, place_electrodes(g, SetupA{}, standard_roles()));
}

}  // namespace

TEST(Rate, ZeroBiasLimit) {
  const double t = 0.28;
  const double r = 25e6;
  const double limit = kBoltzmann * t / (kElementaryCharge * kElementaryCharge * r);
  for (double df : {0.0, 1e-31, -1e-31, 1e-30}) {
    EXPECT_NEAR(tunnel_rate(df, r, t) / limit, 1.0, 1e-6) << df;
  }
}

TEST(Rate, DetailedBalance) {
  const double t = 0.28;
  const double kt = kBoltzmann * t;
  for (double mev = -5.0; mev <= 5.0; mev += 0.05) {
    const double df = mev * kMeV;
    if (df == 0.0) continue;
    const double ratio = tunnel_rate(df, 25e6, t) / tunnel_rate(-df, 25e6, t);
    EXPECT_NEAR(ratio / std::exp(-df / kt), 1.0, 1e-12) << mev;
  }
}

TEST(Rate, ThermalEnergyAtDefaultTemperature) {
  const double kt_mev = kBoltzmann * 0.28 / kMeV;
  EXPECT_NEAR(kt_mev, 2.4e-2, 1e-3);
  EXPECT_LT(std::abs(kt_mev - 2.5e-2) / 2.5e-2, 0.05);
}

TEST(Rate, DownhillIsOhmicAndUphillSuppressed) {
  const double r = 25e6;
  const double df = -10.0 * kMeV;
  EXPECT_NEAR(tunnel_rate(df, r, 0.28) / (-df / (kElementaryCharge * kElementaryCharge * r)), 1.0, 1e-12);
  EXPECT_EQ(tunnel_rate(10.0 * kMeV, r, 1e-3), 0.0);
  EXPECT_GE(tunnel_rate(1.0 * kMeV, r, 0.28), 0.0);
}

TEST(Selection, MultinomialFrequencies) {
  const std::vector<double> rates = {0.5, 3.0, 0.0, 1.5, 5.0, 0.25};
  std::vector<double> cdf(rates.size());
  std::partial_sum(rates.begin(), rates.end(), cdf.begin());
  const double total = cdf.back();
  RandomStream rng(42);
  const int n = 200000;
  std::vector<int> counts(rates.size(), 0);
  for (int k = 0; k < n; ++k) ++counts[select_event(cdf, rng.open_closed())];
  for (std::size_t i = 0; i < rates.size(); ++i) {
    const double p = rates[i] / total;
    const double sigma = std::sqrt(n * p * (1.0 - p));
    EXPECT_LE(std::abs(counts[i] - n * p), 3.0 * sigma + 1e-9) << i;
  }
  EXPECT_EQ(counts[2], 0);
}

TEST(Selection, BoundaryValues) {
  const std::vector<double> cdf = {1.0, 1.0, 3.0};
  EXPECT_EQ(select_event(cdf, 1.0), 2u);
  EXPECT_EQ(select_event(cdf, 1e-300), 0u);
  EXPECT_THROW(select_event(std::vector<double>{0.0, 0.0}, 0.5), FrozenStateError);
}

TEST(Selection, WaitingTimesExponential) {
  RandomStream rng(9);
  const double k = 3.7e6;
  const int n = 100000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) sum += advance_time(0.0, k, rng.open_closed());
  const double mean = sum / n;
  EXPECT_NEAR(mean * k, 1.0, 3.0 / std::sqrt(n));
  EXPECT_THROW(advance_time(0.0, 0.0, 0.5), FrozenStateError);
}

TEST(Rng, OpenClosedNeverZero) {
  RandomStream rng(0);
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.open_closed();
    ASSERT_GT(u, 0.0);
    ASSERT_LE(u, 1.0);
  }
  EXPECT_NE(derive_seed(1, 0), derive_seed(1, 1));
  EXPECT_NE(derive_seed(1, 0), derive_seed(2, 0));
}

TEST(EventTable, CandidateCount) {
  const auto g = build_grid(2, 2);
  ElectrodeConfig el(g, {{0, Role::Input1, "E_0"}, {3, Role::Output, "E_1"}});
  const auto device = make_device(g, el);
  EventTable table(*device, SimulationParams{});
  EXPECT_EQ(table.size(), 12u);
  EXPECT_EQ(table.particle_events(), 8u);
}

TEST(EventTable, RatesMatchScalarRateFunction) {
  const auto device = grid_device(4);
  SimulationParams p;
  Simulation sim(device, p, {0.01, -0.02, 0.03, 0.0, 0.015, -0.01, 0.04, 0.0}, 5);
  for (int k = 0; k < 500; ++k) ASSERT_TRUE(sim.step());
  sim.refresh_rates();
  const auto& tab = sim.table();
  const auto& phi = sim.state().potentials;
  const std::vector<double> v = {0.01, -0.02, 0.03, 0.0, 0.015, -0.01, 0.04, 0.0};
  for (std::size_t n = 0; n < tab.size(); ++n) {
    const double df = tab.delta_f(n, {phi.data(), static_cast<std::size_t>(phi.size())}, v);
    const double expected = tunnel_rate(df, p.resistance_ohm, p.temperature_K);
    if (expected < 1e-300) {
      EXPECT_LT(tab.rates()[n], 1e-290);
    } else {
      EXPECT_NEAR(tab.rates()[n] / expected, 1.0, 1e-9) << n;
    }
  }
}

TEST(Simulation, ValidatesParameters) {
  SimulationParams p;
  p.resistance_ohm = 10e3;
  EXPECT_THROW(validate(p), ConfigError);
  p = SimulationParams{};
  p.temperature_K = 0.0;
  EXPECT_THROW(validate(p), ConfigError);
  EXPECT_THROW(Simulation(grid_device(3), SimulationParams{}, {0.0}, 1), ConfigError);
}

TEST(Simulation, ChargeConservation) {
  const auto device = grid_device(5);
  Simulation sim(device, SimulationParams{}, {0.05, 0.04, -0.03, 0.02, 0.01, -0.05, 0.03, 0.0}, 11);
  for (int k = 0; k < 20000; ++k) {
    ASSERT_TRUE(sim.step());
    if (k % 1000 == 0) {
      const auto& s = sim.state();
      const long q = std::accumulate(s.charges.begin(), s.charges.end(), 0L);
      const long inj = std::accumulate(s.injected.begin(), s.injected.end(), 0L);
      ASSERT_EQ(q, inj);
    }
  }
}

TEST(Simulation, IncrementalPotentialsStayConsistent) {
  const auto device = grid_device(7);
  Simulation sim(device, SimulationParams{}, {0.03, 0.01, -0.04, 0.01, 0.02, 0.05, -0.02, 0.0}, 3);
  for (int k = 0; k < 100000; ++k) ASSERT_TRUE(sim.step());
  const Eigen::VectorXd exact = sim.potentials_from_scratch();
  const double rel = (sim.state().potentials - exact).cwiseAbs().maxCoeff() / exact.cwiseAbs().maxCoeff();
  EXPECT_LT(rel, 1e-9);
}

TEST(Simulation, FrozenAtVanishingTemperature) {
  SimulationParams p;
  p.temperature_K = 1e-3;
  const auto est = run_current(grid_device(3), p, std::vector<double>(8, 0.0), 1);
  EXPECT_EQ(est.termination, Termination::FrozenState);
  EXPECT_EQ(est.current, 0.0);
}

TEST(Simulation, ZeroDriveGivesZeroCurrent) {
  SimulationParams p;
  p.temperature_K = 5.0;
  p.max_events = 200000;
  const auto est = run_current(particle_pair(), p, {0.0, 0.0}, 4);
  EXPECT_EQ(est.termination, Termination::ZeroCurrent);
}

TEST(Simulation, Deterministic) {
  SimulationParams p;
  p.max_events = 100000;
  const std::vector<double> v = {0.02, 0.01, -0.03, 0.01, 0.02, 0.04, -0.01, 0.0};
  const auto a = run_current(grid_device(4), p, v, 77);
  const auto b = run_current(grid_device(4), p, v, 77);
  EXPECT_EQ(a.current, b.current);
  EXPECT_EQ(a.blocks, b.blocks);
  EXPECT_EQ(a.events, b.events);
  const auto c = run_current(grid_device(4), p, v, 78);
  EXPECT_NE(a.current, c.current);
}

TEST(Simulation, TraceHasOneLinePerEvent) {
  std::ostringstream trace;
  Simulation sim(particle_pair(), SimulationParams{}, {0.05, 0.0}, 1);
  sim.set_trace(&trace);
  for (int k = 0; k < 10; ++k) ASSERT_TRUE(sim.step());
  const std::string s = trace.str();
  EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 10);
}

TEST(Simulation, BiasReversalFlipsCurrent) {
  SimulationParams p;
  p.temperature_K = 4.2;
  p.u_threshold = 0.01;
  const auto fwd = run_current(particle_pair(), p, {0.06, 0.0}, 5);
  const auto rev = run_current(particle_pair(), p, {-0.06, 0.0}, 6);
  EXPECT_GT(fwd.current, 0.0);
  EXPECT_LT(rev.current, 0.0);
  const double sem = std::hypot(fwd.uncertainty * fwd.current, rev.uncertainty * rev.current);
  EXPECT_LT(std::abs(fwd.current + rev.current), 3.0 * sem);
}

class OracleTest : public ::testing::TestWithParam<std::tuple<int, double>> {};

TEST_P(OracleTest, KmcMatchesStationaryCurrent) {
  const auto [n_np, u_mV] = GetParam();
  const auto device = n_np == 1 ? single_particle() : particle_pair();
  SimulationParams p;
  p.temperature_K = 4.2;
  p.u_threshold = 0.005;
  p.max_events = 4'000'000;
  const std::vector<double> v = {u_mV * kMilli, 0.0};
  const auto exact = oracle::stationary_current(*device, v, p, 3);
  ASSERT_LT(exact.boundary_mass, 1e-6);
  const auto est = run_current(device, p, v, derive_seed(1234, static_cast<std::uint64_t>(u_mV * 10)));
  const double se = est.uncertainty * std::abs(est.current);
  if (est.termination == Termination::ZeroCurrent || est.termination == Termination::FrozenState) {
    EXPECT_LT(std::abs(exact.current), 1e-18) << "exact " << exact.current;
    return;
  }
  EXPECT_LE(std::abs(est.current - exact.current), 3.0 * se)
      << "boundary " << exact.boundary_mass << " kmc " << est.current << " +- " << se << " exact " << exact.current;
}

INSTANTIATE_TEST_SUITE_P(SmallNetworks, OracleTest,
                         ::testing::Combine(::testing::Values(1, 2),
                                            ::testing::Values(4.0, 10.0, 16.0, 25.0, 35.0)));
