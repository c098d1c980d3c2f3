#include "nanonet/topology.hpp"

#include <algorithm>
#include <cstdlib>
#include <fmt/format.h>
#include <set>

namespace nanonet {

NetworkTopology::NetworkTopology(int rows, int cols, NanoparticleSpec spec)
    : rows_(rows), cols_(cols), spec_(spec) {
  if (rows < 1 || cols < 1) {
    throw ConfigError(fmt::format("grid dimensions must be positive, got {}x{}", rows, cols));
  }
  if (!(spec.radius_nm > 0.0) || !(spec.spacing_nm > 0.0)) {
    throw ConfigError("nanoparticle radius and spacing must be positive");
  }
  neighbors_.resize(static_cast<std::size_t>(size()));
  for (int r = 0; r < rows_; ++r) {
    for (int c = 0; c < cols_; ++c) {
      const int i = r * cols_ + c;
      if (c + 1 < cols_) pairs_.emplace_back(i, i + 1);
      if (r + 1 < rows_) pairs_.emplace_back(i, i + cols_);
    }
  }
  for (auto [a, b] : pairs_) {
    neighbors_[a].push_back(b);
    neighbors_[b].push_back(a);
  }
  for (auto& n : neighbors_) std::sort(n.begin(), n.end());
}

bool NetworkTopology::adjacent(int a, int b) const {
  if (a < 0 || b < 0 || a >= size() || b >= size()) return false;
  const auto& n = neighbors_[a];
  return std::binary_search(n.begin(), n.end(), b);
}

int NetworkTopology::index(GridPos p) const {
  if (!contains(p)) {
    throw ConfigError(fmt::format("position ({}, {}) outside {}x{} grid", p.row, p.col, rows_, cols_));
  }
  return p.row * cols_ + p.col;
}

GridPos NetworkTopology::position(int np) const { return {np / cols_, np % cols_}; }

bool NetworkTopology::contains(GridPos p) const {
  return p.row >= 0 && p.row < rows_ && p.col >= 0 && p.col < cols_;
}

bool NetworkTopology::on_boundary(int np) const {
  const auto p = position(np);
  return p.row == 0 || p.col == 0 || p.row == rows_ - 1 || p.col == cols_ - 1;
}

bool NetworkTopology::is_corner(int np) const {
  const auto p = position(np);
  return (p.row == 0 || p.row == rows_ - 1) && (p.col == 0 || p.col == cols_ - 1);
}

int NetworkTopology::graph_distance(int a, int b) const {
  // A full rectangular grid has no holes, so hop distance is Manhattan distance.
  const auto pa = position(a);
  const auto pb = position(b);
  return std::abs(pa.row - pb.row) + std::abs(pa.col - pb.col);
}

NetworkTopology build_grid(int rows, int cols, NanoparticleSpec spec) {
  if (rows < 2 || cols < 2) {
    throw ConfigError(fmt::format("grid must be at least 2x2, got {}x{}", rows, cols));
  }
  return NetworkTopology(rows, cols, spec);
}

std::string to_string(Role role) {
  switch (role) {
    case Role::Input1: return "Input1";
    case Role::Input2: return "Input2";
    case Role::Output: return "Output";
    case Role::Control: return "Control";
  }
  return "?";
}

Role role_from_string(const std::string& name) {
  if (name == "Input1") return Role::Input1;
  if (name == "Input2") return Role::Input2;
  if (name == "Output") return Role::Output;
  if (name == "Control") return Role::Control;
  throw ConfigError(fmt::format("unknown electrode role '{}'", name));
}

ElectrodeConfig::ElectrodeConfig(const NetworkTopology& topology, std::vector<Electrode> electrodes,
                                 bool allow_shared)
    : electrodes_(std::move(electrodes)) {
  int outputs = 0;
  int in1 = 0;
  int in2 = 0;
  std::set<int> used;
  for (const auto& e : electrodes_) {
    if (e.np < 0 || e.np >= topology.size()) {
      throw ConfigError(fmt::format("electrode {} attached to missing particle {}", e.label, e.np));
    }
    if (!topology.on_boundary(e.np)) {
      throw ConfigError(fmt::format("electrode {} attached to interior particle {}", e.label, e.np));
    }
    if (!used.insert(e.np).second && !allow_shared) {
      throw ConfigError(fmt::format("two electrodes share particle {}", e.np));
    }
    outputs += e.role == Role::Output;
    in1 += e.role == Role::Input1;
    in2 += e.role == Role::Input2;
  }
  if (outputs != 1) throw ConfigError(fmt::format("expected exactly one Output, got {}", outputs));
  if (in1 > 1 || in2 > 1) {
    throw ConfigError(fmt::format("expected at most one Input1 and one Input2, got {} and {}", in1, in2));
  }
}

std::size_t ElectrodeConfig::output_index() const {
  for (std::size_t k = 0; k < electrodes_.size(); ++k) {
    if (electrodes_[k].role == Role::Output) return k;
  }
  throw ConfigError("electrode layout has no Output");
}

std::size_t ElectrodeConfig::input_index(int which) const {
  const Role wanted = which == 1 ? Role::Input1 : Role::Input2;
  for (std::size_t k = 0; k < electrodes_.size(); ++k) {
    if (electrodes_[k].role == wanted) return k;
  }
  throw ConfigError(fmt::format("electrode layout has no Input{}", which));
}

std::vector<std::size_t> ElectrodeConfig::control_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < electrodes_.size(); ++k) {
    if (electrodes_[k].role == Role::Control) out.push_back(k);
  }
  return out;
}

int ElectrodeConfig::electrode_at(int np) const {
  for (std::size_t k = 0; k < electrodes_.size(); ++k) {
    if (electrodes_[k].np == np) return static_cast<int>(k);
  }
  return -1;
}

namespace {

struct SiteVisitor {
  const NetworkTopology& topo;

  std::vector<GridPos> standard(bool pinned) const {
    const int last_r = topo.rows() - 1;
    const int last_c = topo.cols() - 1;
    const int mid_r = last_r / 2;
    const int mid_c = last_c / 2;
    const int side_r = pinned ? last_r - 1 : mid_r;
    const int side_c = pinned ? last_c - 1 : mid_c;
    return {
        {0, 0},           {0, mid_c},      {0, last_c},      {mid_r, 0},
        {last_r, 0},      {side_r, last_c}, {last_r, side_c}, {last_r, last_c},
    };
  }

  std::vector<GridPos> operator()(const SetupA&) const { return standard(false); }
  std::vector<GridPos> operator()(const SetupB&) const { return standard(true); }
  std::vector<GridPos> operator()(const Explicit& e) const { return e.positions; }
};

}  // namespace

std::vector<GridPos> placement_sites(const NetworkTopology& topology, const PlacementPolicy& policy) {
  return std::visit(SiteVisitor{topology}, policy);
}

std::vector<Role> standard_roles() {
  return {Role::Control, Role::Input1, Role::Control, Role::Input2,
          Role::Control, Role::Control, Role::Control, Role::Output};
}

ElectrodeConfig place_electrodes(const NetworkTopology& topology, const PlacementPolicy& policy,
                                 const std::vector<Role>& roles) {
  const auto sites = placement_sites(topology, policy);
  if (roles.size() > sites.size()) {
    throw ConfigError(fmt::format("{} electrodes requested but policy provides {} sites", roles.size(),
                                  sites.size()));
  }
  std::vector<Electrode> electrodes;
  electrodes.reserve(roles.size());
  for (std::size_t k = 0; k < roles.size(); ++k) {
    electrodes.push_back({topology.index(sites[k]), roles[k], fmt::format("E_{}", k)});
  }
  return ElectrodeConfig(topology, std::move(electrodes));
}

std::vector<GridPos> series_control_sites(const NetworkTopology& topology) {
  const int last_r = topology.rows() - 1;
  const int last_c = topology.cols() - 1;
  return {
      {0, 0},                                     // between both inputs
      {0, last_c - 1},     {last_r - 1, 0},       // just past each input
      {0, last_c},         {last_r, 0},           // far corners
      {last_r / 2, last_c}, {last_r, last_c / 2}, // edge midpoints on the output side
      {last_r - 1, last_c}, {last_r, last_c - 1}, // flanking the output
  };
}

ElectrodeConfig control_series_config(const NetworkTopology& topology, const ElectrodeConfig& base,
                                      ControlSeries series, int n_controls) {
  if (n_controls < 0 || n_controls > kSeriesControlSlots) {
    throw ConfigError(fmt::format("control count {} outside [0, {}]", n_controls, kSeriesControlSlots));
  }
  std::vector<Electrode> electrodes;
  electrodes.push_back(base[base.input_index(1)]);
  electrodes.push_back(base[base.input_index(2)]);
  const auto sites = series_control_sites(topology);
  const int first = series == ControlSeries::A ? 0 : kSeriesControlSlots - n_controls;
  for (int k = first; k < first + n_controls; ++k) {
    electrodes.push_back({topology.index(sites[k]), Role::Control, fmt::format("S_{}", k)});
  }
  electrodes.push_back(base[base.output_index()]);
  return ElectrodeConfig(topology, std::move(electrodes));
}

}  // namespace nanonet
