#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "nanonet/electrostatics.hpp"
#include "nanonet/experiments.hpp"
#include "nanonet/kmc.hpp"
#include "nanonet/topology.hpp"

namespace nanonet {

/// Parameters of the individual experiments; all optional in the file.
struct ExperimentParams {
  std::vector<double> iv_grid_mV = {0, 2, 4, 6, 8, 10, 12, 14, 16, 18, 20, 25, 30, 35, 40, 50, 60, 80, 100};
  std::vector<std::string> iv_electrodes = {"E_0"};
  double u_ref_mV = 20.0;
  std::vector<int> scaling_sides = {3, 7, 12};
  std::vector<int> series_counts = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  double scan_delta_mV = 10.0;
  std::vector<int> size_sides = {3, 7, 12};
  std::vector<int> bench_sides = {3, 7, 10, 16};

  bool operator==(const ExperimentParams&) const = default;
};

struct RunConfig {
  int rows = 7;
  int cols = 7;
  NanoparticleSpec particle;
  Permittivities permittivity;
  int series_terms = kDefaultSeriesTerms;
  PlacementPolicy placement = SetupA{};
  std::vector<Role> roles = standard_roles();
  SimulationParams simulation;
  VoltageRanges voltages;
  double voltage_scale = 1.0;
  std::size_t n_samples = 500;
  std::uint64_t master_seed = 1;
  std::string output_dir = "out";
  ExperimentParams experiments;

  bool operator==(const RunConfig&) const = default;
};

/// Every violated precondition, one message each; empty when valid.
std::vector<std::string> config_problems(const RunConfig& config);

/// Non-fatal concerns, e.g. a charging energy below 100 k_B T.
std::vector<std::string> config_warnings(const RunConfig& config);

/// Strict reader: unknown keys, wrong types and physics violations are all
/// collected and thrown together as one ConfigError.
RunConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const RunConfig& config);

RunConfig parse_config(const std::filesystem::path& path);

/// Topology, electrodes and capacitance matrix described by the config.
std::shared_ptr<const Device> build_device(const RunConfig& config);

/// The shipped 7x7 reference configuration.
RunConfig default_config();

}  // namespace nanonet
