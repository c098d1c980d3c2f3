#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "nanonet/analysis.hpp"
#include "nanonet/config.hpp"
#include "nanonet/experiments.hpp"

namespace nanonet {

inline constexpr const char* kToolVersion = "1.0.0";
inline constexpr int kSchemaVersion = 1;

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view data);

/// Hash of the canonical JSON form of a config, as 16 hex digits.
std::string config_hash(const RunConfig& config);

// Wire units: voltages in mV, currents in A, time in s, energies in meV.

/// Columns: sample_id,seed,c_1..c_N,I00,u00,I10,u10,I01,u01,I11,u11,flags
void write_gate_samples_csv(std::ostream& out, std::span<const GateSample> samples, int n_controls);
std::vector<GateSample> read_gate_samples_csv(std::istream& in);

/// Columns: sample_id,gate,F,m,MSE,c,M_l,M_r,X (delta = 0).
void write_fitness_csv(std::ostream& out, std::span<const GateSample> samples);

/// Columns: U_mV,I,u,flag
void write_iv_csv(std::ostream& out, const IVCurve& curve);

nlohmann::json to_json(const MomentStats& stats);
nlohmann::json to_json(const MetricsSummary& summary);
nlohmann::json to_json(const ScalingTable& table);
ScalingTable scaling_from_json(const nlohmann::json& j);

/// Counts of termination codes and total events over all runs of a set.
nlohmann::json termination_stats(std::span<const GateSample> samples);

/// JSON sidecar tying output files to the config that produced them.
struct RunRecord {
  std::string command;
  std::string config_hash;
  std::uint64_t master_seed = 0;
  std::size_t n_samples = 0;
  std::vector<std::string> files;
  double wall_clock_s = 0.0;
  nlohmann::json metadata = nlohmann::json::object();

  nlohmann::json to_json(const RunConfig& config) const;
};

void write_text(const std::filesystem::path& path, const std::string& text);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace nanonet
