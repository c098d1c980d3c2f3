#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nanonet/electrostatics.hpp"
#include "nanonet/rng.hpp"
#include "nanonet/topology.hpp"

namespace nanonet {

struct SimulationParams {
  double temperature_K = 0.28;
  double resistance_ohm = 25e6;
  std::int64_t equilibration_events = 10'000;
  double u_threshold = 0.05;
  std::int64_t max_events = 10'000'000;
  std::int64_t block_events = 5'000;
  int min_blocks = 10;

  bool operator==(const SimulationParams&) const = default;
};

/// Throws ConfigError listing every violated bound (T > 0, R > 10 h/e^2, ...).
void validate(const SimulationParams& params);

/// Immutable network description shared by all simulations of one layout.
struct Device {
  NetworkTopology topology;
  ElectrodeConfig electrodes;
  CapacitanceModel capacitance;
};

std::shared_ptr<const Device> make_device(NetworkTopology topology, ElectrodeConfig electrodes,
                                          const Permittivities& perms = {}, int n_terms = kDefaultSeriesTerms);

// ---------------------------------------------------------------------------
// Free energies and rates. Energies in joules, potentials in volts.

/// Free-energy change of moving one elementary charge from particle i to its
/// neighbour j.
double free_energy_np_np(const Device& device, const Eigen::VectorXd& phi, int i, int j);

enum class Direction { ToElectrode, FromElectrode };

/// Free-energy change of a charge leaving particle-side toward electrode k
/// (ToElectrode) or entering the network from it (FromElectrode).
double free_energy_np_electrode(const Device& device, const Eigen::VectorXd& phi, std::size_t electrode,
                                double u_electrode, Direction direction);

/// Orthodox tunnel rate (1/s):  (-dF / (e^2 R)) / (1 - exp(dF / kT)).
/// Finite and non-negative for every finite dF; underflows to 0 only once
/// dF/kT exceeds the double exponent range.
double tunnel_rate(double delta_f, double resistance_ohm, double temperature_K);

// ---------------------------------------------------------------------------
// Event table.

/// Endpoints index the extended node list: [0, N) particles, N + k electrode k.
struct Event {
  int source = 0;
  int target = 0;
};

class EventTable {
 public:
  EventTable(const Device& device, const SimulationParams& params);

  std::size_t size() const { return source_.size(); }
  Event event(std::size_t n) const { return {source_[n], target_[n]}; }
  std::span<const double> rates() const { return rates_; }
  std::span<const double> cdf() const { return cdf_; }
  double total_rate() const { return cdf_.empty() ? 0.0 : cdf_.back(); }
  std::size_t particle_events() const { return n_particle_events_; }
  double delta_f(std::size_t n, std::span<const double> phi, std::span<const double> voltages) const;

  /// Recomputes every rate and the prefix sums from the particle potentials
  /// and electrode voltages (volts).
  void rebuild(std::span<const double> phi, std::span<const double> voltages);

 private:
  double potential(int node, std::span<const double> phi, std::span<const double> voltages) const {
    return node < n_particles_ ? phi[node] : voltages[node - n_particles_];
  }

  int n_particles_;
  std::size_t n_particle_events_;
  std::vector<int> source_;
  std::vector<int> target_;
  std::vector<double> charging_;  // e^2/2 (C^-1 diagonal combination) / kT per event
  std::vector<double> scaled_;    // dF / kT scratch
  std::vector<double> rates_;
  std::vector<double> cdf_;
  double inv_kt_;
  double rate_scale_;  // kT / (e^2 R)
};

/// Thrown when no event has a positive rate.
class FrozenStateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Index n with cdf[n-1] < r1 * cdf.back() <= cdf[n], by binary search.
std::size_t select_event(std::span<const double> cdf, double r1);

/// t - ln(r2) / k_tot.
double advance_time(double t, double total_rate, double r2);

// ---------------------------------------------------------------------------
// Simulation.

struct SimulationState {
  std::vector<int> charges;       // excess charge per particle, units of e
  Eigen::VectorXd potentials;     // volts
  double time = 0.0;              // seconds
  std::int64_t net_to_output = 0;
  std::int64_t output_to_net = 0;
  std::vector<std::int64_t> injected;  // net charges delivered per electrode
  std::int64_t event_count = 0;
};

enum class Termination { UncertaintyReached, MaxEvents, ZeroCurrent, FrozenState };

std::string to_string(Termination t);
char code(Termination t);

struct CurrentEstimate {
  double current = 0.0;      // A
  double uncertainty = 0.0;  // relative standard error of the block currents
  std::vector<double> blocks;
  Termination termination = Termination::MaxEvents;
  std::int64_t events = 0;
  double time = 0.0;
};

class Simulation {
 public:
  /// voltages_V holds one entry per electrode of the device.
  Simulation(std::shared_ptr<const Device> device, SimulationParams params, std::vector<double> voltages_V,
             std::uint64_t seed);

  const SimulationState& state() const { return state_; }
  const Device& device() const { return *device_; }
  const EventTable& table() const { return table_; }
  const SimulationParams& params() const { return params_; }

  /// Rebuilds the rate table for the current state.
  void refresh_rates();

  /// One KMC step: rates, selection, time, state update. Returns false and
  /// leaves the state untouched if the state is frozen.
  bool step();

  void apply(const Event& event);

  /// Runs n events without bookkeeping, then zeroes time and counters.
  /// Returns false if the state froze before the budget ran out.
  bool equilibrate(std::int64_t n_events);

  /// Block-averaged output current; stops at the uncertainty threshold or
  /// the event budget.
  CurrentEstimate measure_current();

  /// Optional CSV event trace: event_index,time,source,destination,dF,rate.
  void set_trace(std::ostream* out) { trace_ = out; }

  /// Full solve C^-1 q for consistency checks.
  Eigen::VectorXd potentials_from_scratch() const;

 private:
  void reset_counters();

  std::shared_ptr<const Device> device_;
  SimulationParams params_;
  SimulationState state_;
  RandomStream rng_;
  EventTable table_;
  std::vector<double> voltages_;
  int output_node_;
  std::ostream* trace_ = nullptr;
};

/// Convenience: equilibrate then measure, with the frozen case mapped to a
/// zero-current estimate.
CurrentEstimate run_current(std::shared_ptr<const Device> device, const SimulationParams& params,
                            std::vector<double> voltages_V, std::uint64_t seed);

}  // namespace nanonet
