#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace nanonet {

/// Raised for any structurally invalid network or electrode layout.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Uniform nanoparticle geometry. Both lengths in nanometres; the spacing is
/// the surface-to-surface gap between neighbouring particles.
struct NanoparticleSpec {
  double radius_nm = 10.0;
  double spacing_nm = 1.0;

  bool operator==(const NanoparticleSpec&) const = default;
};

struct GridPos {
  int row = 0;
  int col = 0;

  bool operator==(const GridPos&) const = default;
};

/// Regular rows x cols grid of nanoparticles with 4-neighbour adjacency.
/// Particle index is row * cols + col. Any positive size is representable;
/// build_grid enforces the 2x2 minimum of the experiments.
class NetworkTopology {
 public:
  NetworkTopology(int rows, int cols, NanoparticleSpec spec);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int size() const { return rows_ * cols_; }
  const NanoparticleSpec& particle() const { return spec_; }

  /// Unordered pairs (i < j), row-major by i then j.
  const std::vector<std::pair<int, int>>& adjacency() const { return pairs_; }
  const std::vector<int>& neighbors(int np) const { return neighbors_.at(np); }
  int degree(int np) const { return static_cast<int>(neighbors(np).size()); }
  bool adjacent(int a, int b) const;

  int index(GridPos p) const;
  GridPos position(int np) const;
  bool contains(GridPos p) const;
  bool on_boundary(int np) const;
  bool is_corner(int np) const;

  /// Shortest-path hop count on the grid graph.
  int graph_distance(int a, int b) const;

 private:
  int rows_;
  int cols_;
  NanoparticleSpec spec_;
  std::vector<std::pair<int, int>> pairs_;
  std::vector<std::vector<int>> neighbors_;
};

NetworkTopology build_grid(int rows, int cols, NanoparticleSpec spec = {});

enum class Role { Input1, Input2, Output, Control };

std::string to_string(Role role);
Role role_from_string(const std::string& name);

struct Electrode {
  int np = 0;
  Role role = Role::Control;
  std::string label;

  bool operator==(const Electrode&) const = default;
};

/// Ordered electrode list. Validated on construction: exactly one Output, at
/// most one Input1 and one Input2, every attachment on the boundary and no
/// shared particles. Gate experiments additionally need both inputs.
class ElectrodeConfig {
 public:
  ElectrodeConfig() = default;
  /// allow_shared admits several electrodes on one particle, as in a
  /// single-particle transistor; grid layouts never need it.
  ElectrodeConfig(const NetworkTopology& topology, std::vector<Electrode> electrodes, bool allow_shared = false);

  const std::vector<Electrode>& electrodes() const { return electrodes_; }
  std::size_t size() const { return electrodes_.size(); }
  const Electrode& operator[](std::size_t k) const { return electrodes_[k]; }

  std::size_t output_index() const;
  std::size_t input_index(int which) const;  // which = 1 or 2
  std::vector<std::size_t> control_indices() const;
  int n_controls() const { return static_cast<int>(control_indices().size()); }
  /// Electrode index attached to np, or -1.
  int electrode_at(int np) const;

  bool operator==(const ElectrodeConfig&) const = default;

 private:
  std::vector<Electrode> electrodes_;
};

/// Corner/edge-midpoint sites that keep their relative place as the grid grows.
struct SetupA {
  bool operator==(const SetupA&) const = default;
};
/// Like SetupA, but the two sites flanking the output stay one particle away.
struct SetupB {
  bool operator==(const SetupB&) const = default;
};
struct Explicit {
  std::vector<GridPos> positions;

  bool operator==(const Explicit&) const = default;
};
using PlacementPolicy = std::variant<SetupA, SetupB, Explicit>;

/// Boundary sites prescribed by a policy, in label order E_0, E_1, ...
///
/// The eight standard sites are, with the output in the bottom-right corner:
///   E_0 top-left corner (opposite the output)   E_1 top edge midpoint
///   E_2 top-right corner                        E_3 left edge midpoint
///   E_4 bottom-left corner                      E_5 right edge, output side
///   E_6 bottom edge, output side                E_7 bottom-right corner
/// Midpoints on even-length edges round toward the lower index.
std::vector<GridPos> placement_sites(const NetworkTopology& topology, const PlacementPolicy& policy);

/// Output on E_7, inputs on the two edges opposite the output (E_1, E_3), the
/// remaining five sites as controls.
std::vector<Role> standard_roles();

/// Attaches roles.size() electrodes to the first roles.size() policy sites.
ElectrodeConfig place_electrodes(const NetworkTopology& topology, const PlacementPolicy& policy,
                                 const std::vector<Role>& roles);

enum class ControlSeries { A, B };

/// Number of control positions available to the control-count series.
inline constexpr int kSeriesControlSlots = 9;

/// Control positions of the control-count series, ordered from the input side
/// toward the output. Ties between the two input sides go to Input1 first.
std::vector<GridPos> series_control_sites(const NetworkTopology& topology);

/// A-series keeps the first n_controls sites; B-series keeps the last
/// n_controls (removal proceeds input side first). Inputs and output are taken
/// from base; any controls in base are discarded.
ElectrodeConfig control_series_config(const NetworkTopology& topology, const ElectrodeConfig& base,
                                      ControlSeries series, int n_controls);

}  // namespace nanonet
