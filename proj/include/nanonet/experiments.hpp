#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nanonet/analysis.hpp"
#include "nanonet/kmc.hpp"
#include "nanonet/topology.hpp"

namespace nanonet {

/// Unscaled voltage ranges in mV. Inputs switch between 0 and input_high;
/// controls are drawn uniformly from [control_min, control_max].
struct VoltageRanges {
  double input_high_mV = 10.0;
  double control_min_mV = -50.0;
  double control_max_mV = 50.0;

  bool operator==(const VoltageRanges&) const = default;
};

/// Electrode voltages in volts, ordered like the device's electrodes. Controls
/// take controls_mV in control_indices() order; the output stays at 0.
std::vector<double> electrode_voltages(const ElectrodeConfig& electrodes, std::span<const double> controls_mV,
                                       double input1_mV, double input2_mV);

struct GateSample {
  std::uint64_t sample_id = 0;
  std::uint64_t seed = 0;
  std::vector<double> controls_mV;  // scaled values actually applied
  Quad currents{};                   // A; order 00, 10, 01, 11
  Quad uncertainties{};
  std::array<Termination, 4> termination{};
  std::array<std::int64_t, 4> events{};

  bool operator==(const GateSample&) const = default;
};

/// Termination codes of the four runs, e.g. "UUMU".
std::string flags(const GateSample& sample);

std::vector<Quad> currents_of(std::span<const GateSample> samples);

/// Everything a sampling run needs besides the sample count and seed.
struct SamplingSetup {
  std::shared_ptr<const Device> device;
  SimulationParams params;
  VoltageRanges ranges;
  double scale = 1.0;
};

using Progress = std::function<void(std::size_t done, std::size_t total)>;

/// Worker threads for replica pools: NANONET_WORKERS if set, otherwise the
/// hardware concurrency. Never affects results.
int worker_count();

/// Runs fn(0..n-1) over the worker pool. The first exception is rethrown
/// after all workers stop.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn, const Progress& progress = {});

/// Sample k uses seed derive_seed(master, k): its control vector comes from
/// child stream 0 and input combination c from child stream c + 1.
GateSample run_gate_sample(const SamplingSetup& setup, std::uint64_t sample_id, std::uint64_t master_seed);

std::vector<GateSample> sample_gate_phase_space(const SamplingSetup& setup, std::size_t n_samples,
                                                std::uint64_t master_seed, const Progress& progress = {});

// ---------------------------------------------------------------------------
// Current-voltage curves and voltage scaling.

struct IVPoint {
  double u_mV = 0.0;
  double current = 0.0;
  double uncertainty = 0.0;
  Termination termination = Termination::MaxEvents;
};

struct IVCurve {
  std::vector<std::string> driven;  // electrode labels
  double temperature_K = 0.0;
  std::vector<IVPoint> points;
};

/// Drives the listed electrodes at each grid voltage with every other
/// electrode grounded. Point k runs with seed derive_seed(seed, k).
IVCurve run_iv_sweep(std::shared_ptr<const Device> device, const SimulationParams& params,
                     std::span<const std::size_t> driven, std::span<const double> u_grid_mV, std::uint64_t seed,
                     const Progress& progress = {});

struct Inversion {
  double u_mV = 0.0;
  bool clamped = false;  // target outside the monotone part of the curve
};

/// Piecewise-linear inverse of the leading non-decreasing part of a curve.
/// Zero-current and frozen points count as exactly zero.
Inversion invert_monotone(const IVCurve& curve, double target_current);

/// Piecewise-linear interpolation of the curve's current at u.
double interpolate_current(const IVCurve& curve, double u_mV);

inline constexpr int kReferenceSide = 7;

struct ScalingEntry {
  int side = 0;
  double factor = 1.0;
  bool clamped = false;
  IVCurve curve;
};

struct ScalingTable {
  double u_ref_mV = 20.0;
  double i_ref = 0.0;
  std::vector<ScalingEntry> entries;

  /// Throws ConfigError for sides missing from the table.
  double factor(int side) const;
};

/// For each square grid side: measures the both-inputs-driven I-V curve and
/// solves I_side(s U_ref) = I_7(U_ref). The 7x7 reference is always measured
/// and gets s = 1.
ScalingTable derive_voltage_scaling(std::span<const int> sides, const PlacementPolicy& policy,
                                    const SimulationParams& params, std::span<const double> u_grid_mV, double u_ref_mV,
                                    std::uint64_t seed, const Progress& progress = {});

// ---------------------------------------------------------------------------
// Experiment series.

struct SampleSet {
  std::string name;
  ElectrodeConfig electrodes;
  double scale = 1.0;
  std::vector<GateSample> samples;
};

/// One sample set per control count. All configurations reuse master_seed.
std::vector<SampleSet> control_count_series(const NetworkTopology& topology, const ElectrodeConfig& base,
                                            ControlSeries series, std::span<const int> counts,
                                            const SimulationParams& params, const VoltageRanges& ranges,
                                            std::size_t n_samples, std::uint64_t master_seed,
                                            const Progress& progress = {});

struct PairScan {
  std::size_t first = 0;  // site indices into the placement (E_first, E_second)
  std::size_t second = 0;
  SampleSet set;
  MomentStats stats;
  double q_ndr = 0.0;
  std::optional<double> q_nls;
};

struct PositionScan {
  std::vector<std::string> labels;  // E_k per placement site
  std::vector<PairScan> pairs;
  /// Pearson correlation between each electrode's random voltage and the
  /// output current, with all non-output electrodes randomised. Empty for
  /// the output.
  std::vector<std::optional<double>> voltage_correlation;
};

/// Every unordered pair of non-output sites acts as the input pair once, the
/// remaining sites as controls. Inputs switch between 0 and delta_mV.
PositionScan input_position_scan(const NetworkTopology& topology, const PlacementPolicy& policy,
                                 const SimulationParams& params, const VoltageRanges& ranges, double delta_mV,
                                 std::size_t n_samples, std::uint64_t master_seed, const Progress& progress = {});

/// Gate sampling on square grids of the given sides with standard roles and
/// voltage ranges scaled by the table.
std::vector<SampleSet> size_series(std::span<const int> sides, const PlacementPolicy& policy,
                                   const ScalingTable& scaling, const SimulationParams& params,
                                   const VoltageRanges& ranges, std::size_t n_samples, std::uint64_t master_seed,
                                   const Progress& progress = {});

// ---------------------------------------------------------------------------
// Cost benchmark.

struct BenchPoint {
  int side = 0;
  int n_np = 0;
  std::size_t n_events = 0;  // candidate tunnel events
  double rebuild_ns = 0.0;   // all free energies, rates and prefix sums
  double select_ns = 0.0;    // one binary search in the prefix sums
  double update_ns = 0.0;    // potential update after an event
};

/// Median-of-batches timings on a square grid with the standard electrodes
/// and random control voltages. Timings depend on the machine; only their
/// growth with size is meaningful.
BenchPoint benchmark_step_costs(int side, std::size_t batch, std::uint64_t seed);

}  // namespace nanonet
