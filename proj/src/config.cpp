#include "nanonet/config.hpp"

#include <algorithm>
#include <fmt/format.h>
#include <fstream>
#include <set>
#include <type_traits>

#include "nanonet/constants.hpp"

namespace nanonet {

using nlohmann::json;

namespace {

// Collects every problem in a document instead of stopping at the first.
class Reader {
 public:
  std::vector<std::string> errors;

  const json* section(const json& parent, const std::string& path, const std::string& key, bool required,
                      std::initializer_list<const char*> allowed) {
    if (!parent.contains(key)) {
      if (required) errors.push_back(fmt::format("{}: missing section '{}'", path, key));
      return nullptr;
    }
    const json& obj = parent.at(key);
    const std::string sub = path.empty() ? key : path + "." + key;
    if (!obj.is_object()) {
      errors.push_back(fmt::format("{}: expected an object", sub));
      return nullptr;
    }
    keys(obj, sub, allowed);
    return &obj;
  }

  void keys(const json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [k, v] : obj.items()) {
      if (!ok.count(k)) errors.push_back(fmt::format("{}: unknown key '{}'", path.empty() ? "<root>" : path, k));
    }
  }

  template <class T>
  void get(const json* obj, const std::string& path, const char* key, T& out, bool required = false) {
    if (!obj) return;
    const std::string where = fmt::format("{}.{}", path, key);
    if (!obj->contains(key)) {
      if (required) errors.push_back(fmt::format("{}: required", where));
      return;
    }
    read(obj->at(key), where, out);
  }

 private:
  template <class T>
  void read(const json& v, const std::string& where, T& out) {
    if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) return fail(where, "a string");
      out = v.get<std::string>();
    } else if constexpr (std::is_same_v<T, double>) {
      if (!v.is_number()) return fail(where, "a number");
      out = v.get<double>();
    } else if constexpr (std::is_unsigned_v<T>) {
      if (!v.is_number_unsigned()) return fail(where, "a non-negative integer");
      out = v.get<T>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) return fail(where, "an integer");
      out = v.get<T>();
    } else {
      if (!v.is_array()) return fail(where, "an array");
      T items;
      for (std::size_t k = 0; k < v.size(); ++k) {
        typename T::value_type item{};
        const std::size_t before = errors.size();
        read(v[k], fmt::format("{}[{}]", where, k), item);
        if (errors.size() != before) return;
        items.push_back(item);
      }
      out = std::move(items);
    }
  }

  void fail(const std::string& where, const char* what) { errors.push_back(fmt::format("{}: expected {}", where, what)); }
};

std::string placement_name(const PlacementPolicy& p) {
  if (std::holds_alternative<SetupA>(p)) return "A";
  if (std::holds_alternative<SetupB>(p)) return "B";
  return "explicit";
}

}  // namespace

std::vector<std::string> config_problems(const RunConfig& c) {
  std::vector<std::string> out;
  if (c.rows < 2 || c.cols < 2) out.push_back(fmt::format("grid {}x{} is smaller than 2x2", c.rows, c.cols));
  if (!(c.particle.radius_nm > 0.0)) out.push_back(fmt::format("radius {} nm must be > 0", c.particle.radius_nm));
  if (!(c.particle.spacing_nm > 0.0)) out.push_back(fmt::format("spacing {} nm must be > 0", c.particle.spacing_nm));
  if (!(c.permittivity.molecular >= 1.0)) out.push_back("molecular permittivity must be >= 1");
  if (!(c.permittivity.substrate >= 1.0)) out.push_back("substrate permittivity must be >= 1");
  if (c.series_terms < 1) out.push_back("series_terms must be >= 1");
  try {
    validate(c.simulation);
  } catch (const ConfigError& e) {
    std::string msg = e.what();
    std::size_t pos = msg.find('\n');
    while (pos != std::string::npos) {
      const std::size_t next = msg.find('\n', pos + 1);
      std::string line = msg.substr(pos + 1, next == std::string::npos ? std::string::npos : next - pos - 1);
      line.erase(0, line.find_first_not_of(' '));
      out.push_back(line);
      pos = next;
    }
  }
  if (!(c.voltages.input_high_mV > 0.0)) out.push_back("input_high_mV must be > 0");
  if (!(c.voltages.control_min_mV <= c.voltages.control_max_mV)) out.push_back("control_min_mV exceeds control_max_mV");
  if (!(c.voltage_scale > 0.0)) out.push_back("voltage scale must be > 0");
  if (c.n_samples == 0) out.push_back("n_samples must be >= 1");

  const auto& x = c.experiments;
  if (x.iv_grid_mV.empty()) out.push_back("iv_grid_mV is empty");
  for (std::size_t k = 1; k < x.iv_grid_mV.size(); ++k) {
    if (!(x.iv_grid_mV[k] > x.iv_grid_mV[k - 1])) {
      out.push_back("iv_grid_mV must be strictly increasing");
      break;
    }
  }
  if (!x.iv_grid_mV.empty() && (x.u_ref_mV < x.iv_grid_mV.front() || x.u_ref_mV > x.iv_grid_mV.back())) {
    out.push_back(fmt::format("u_ref_mV = {} lies outside iv_grid_mV", x.u_ref_mV));
  }
  if (!(x.scan_delta_mV > 0.0)) out.push_back("scan_delta_mV must be > 0");
  for (int n : x.series_counts) {
    if (n < 0 || n > kSeriesControlSlots) {
      out.push_back(fmt::format("series count {} outside [0, {}]", n, kSeriesControlSlots));
    }
  }
  for (const auto* sides : {&x.scaling_sides, &x.size_sides, &x.bench_sides}) {
    for (int s : *sides) {
      if (s < 3) out.push_back(fmt::format("grid side {} is below 3", s));
    }
  }

  // Structural checks need a valid grid.
  if (out.empty()) {
    try {
      build_device(c);
    } catch (const std::exception& e) {
      out.push_back(e.what());
    }
  }
  return out;
}

std::vector<std::string> config_warnings(const RunConfig& c) {
  std::vector<std::string> out;
  if (!config_problems(c).empty()) return out;
  const auto device = build_device(c);
  const double kt = constants::kBoltzmann * c.simulation.temperature_K;
  double ec = std::numeric_limits<double>::infinity();
  for (int i = 0; i < device->topology.size(); ++i) ec = std::min(ec, device->capacitance.charging_energy(i));
  if (ec / kt < 100.0) {
    out.push_back(fmt::format("smallest charging energy {:.3f} meV is only {:.1f} k_B T; blockade will be washed out",
                              ec / constants::kMeV, ec / kt));
  }
  return out;
}

RunConfig config_from_json(const json& j) {
  Reader r;
  RunConfig c;
  if (!j.is_object()) throw ConfigError("config: top level must be an object");
  r.keys(j, "", {"grid", "particle", "permittivity", "electrodes", "simulation", "voltages", "sampling",
                 "output_dir", "experiments"});

  const json* grid = r.section(j, "", "grid", true, {"rows", "cols"});
  r.get(grid, "grid", "rows", c.rows, true);
  r.get(grid, "grid", "cols", c.cols, true);

  const json* np = r.section(j, "", "particle", true, {"radius_nm", "spacing_nm"});
  r.get(np, "particle", "radius_nm", c.particle.radius_nm, true);
  r.get(np, "particle", "spacing_nm", c.particle.spacing_nm, true);

  const json* eps = r.section(j, "", "permittivity", true, {"molecular", "substrate", "series_terms"});
  r.get(eps, "permittivity", "molecular", c.permittivity.molecular, true);
  r.get(eps, "permittivity", "substrate", c.permittivity.substrate, true);
  r.get(eps, "permittivity", "series_terms", c.series_terms);

  if (const json* el = r.section(j, "", "electrodes", false, {"placement", "positions", "roles"})) {
    std::string placement = "A";
    r.get(el, "electrodes", "placement", placement);
    if (placement == "A") {
      c.placement = SetupA{};
    } else if (placement == "B") {
      c.placement = SetupB{};
    } else if (placement == "explicit") {
      Explicit ex;
      if (!el->contains("positions") || !el->at("positions").is_array()) {
        r.errors.push_back("electrodes.positions: required array of [row, col] for explicit placement");
      } else {
        for (const auto& p : el->at("positions")) {
          if (!p.is_array() || p.size() != 2 || !p[0].is_number_integer() || !p[1].is_number_integer()) {
            r.errors.push_back("electrodes.positions: each entry must be [row, col]");
            break;
          }
          ex.positions.push_back({p[0].get<int>(), p[1].get<int>()});
        }
      }
      c.placement = ex;
    } else {
      r.errors.push_back(fmt::format("electrodes.placement: '{}' is not A, B or explicit", placement));
    }
    if (placement != "explicit" && el->contains("positions")) {
      r.errors.push_back("electrodes.positions: only allowed with explicit placement");
    }
    std::vector<std::string> roles;
    r.get(el, "electrodes", "roles", roles);
    if (!roles.empty()) {
      c.roles.clear();
      for (const auto& name : roles) {
        try {
          c.roles.push_back(role_from_string(name));
        } catch (const ConfigError& e) {
          r.errors.push_back(fmt::format("electrodes.roles: {}", e.what()));
        }
      }
    }
  }

  const json* sim = r.section(j, "", "simulation", true,
                              {"temperature_K", "resistance_ohm", "equilibration_events", "u_threshold", "max_events",
                               "block_events", "min_blocks"});
  auto& s = c.simulation;
  r.get(sim, "simulation", "temperature_K", s.temperature_K, true);
  r.get(sim, "simulation", "resistance_ohm", s.resistance_ohm, true);
  r.get(sim, "simulation", "equilibration_events", s.equilibration_events);
  r.get(sim, "simulation", "u_threshold", s.u_threshold);
  r.get(sim, "simulation", "max_events", s.max_events);
  r.get(sim, "simulation", "block_events", s.block_events);
  r.get(sim, "simulation", "min_blocks", s.min_blocks);

  const json* v = r.section(j, "", "voltages", false, {"input_high_mV", "control_min_mV", "control_max_mV", "scale"});
  r.get(v, "voltages", "input_high_mV", c.voltages.input_high_mV);
  r.get(v, "voltages", "control_min_mV", c.voltages.control_min_mV);
  r.get(v, "voltages", "control_max_mV", c.voltages.control_max_mV);
  r.get(v, "voltages", "scale", c.voltage_scale);

  const json* smp = r.section(j, "", "sampling", false, {"n_samples", "master_seed"});
  r.get(smp, "sampling", "n_samples", c.n_samples);
  r.get(smp, "sampling", "master_seed", c.master_seed);

  if (j.contains("output_dir")) {
    if (j["output_dir"].is_string()) {
      c.output_dir = j["output_dir"].get<std::string>();
    } else {
      r.errors.push_back("output_dir: expected a string");
    }
  }

  const json* x = r.section(j, "", "experiments", false,
                            {"iv_grid_mV", "iv_electrodes", "u_ref_mV", "scaling_sides", "series_counts",
                             "scan_delta_mV", "size_sides", "bench_sides"});
  auto& e = c.experiments;
  r.get(x, "experiments", "iv_grid_mV", e.iv_grid_mV);
  r.get(x, "experiments", "iv_electrodes", e.iv_electrodes);
  r.get(x, "experiments", "u_ref_mV", e.u_ref_mV);
  r.get(x, "experiments", "scaling_sides", e.scaling_sides);
  r.get(x, "experiments", "series_counts", e.series_counts);
  r.get(x, "experiments", "scan_delta_mV", e.scan_delta_mV);
  r.get(x, "experiments", "size_sides", e.size_sides);
  r.get(x, "experiments", "bench_sides", e.bench_sides);

  if (r.errors.empty()) {
    for (auto& p : config_problems(c)) r.errors.push_back(std::move(p));
  }
  if (!r.errors.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& m : r.errors) msg += "\n  " + m;
    throw ConfigError(msg);
  }
  return c;
}

json config_to_json(const RunConfig& c) {
  json j;
  j["grid"] = {{"rows", c.rows}, {"cols", c.cols}};
  j["particle"] = {{"radius_nm", c.particle.radius_nm}, {"spacing_nm", c.particle.spacing_nm}};
  j["permittivity"] = {{"molecular", c.permittivity.molecular},
                       {"substrate", c.permittivity.substrate},
                       {"series_terms", c.series_terms}};
  json el;
  el["placement"] = placement_name(c.placement);
  if (const auto* ex = std::get_if<Explicit>(&c.placement)) {
    el["positions"] = json::array();
    for (const auto& p : ex->positions) el["positions"].push_back({p.row, p.col});
  }
  el["roles"] = json::array();
  for (Role role : c.roles) el["roles"].push_back(to_string(role));
  j["electrodes"] = el;
  const auto& s = c.simulation;
  j["simulation"] = {{"temperature_K", s.temperature_K},
                     {"resistance_ohm", s.resistance_ohm},
                     {"equilibration_events", s.equilibration_events},
                     {"u_threshold", s.u_threshold},
                     {"max_events", s.max_events},
                     {"block_events", s.block_events},
                     {"min_blocks", s.min_blocks}};
  j["voltages"] = {{"input_high_mV", c.voltages.input_high_mV},
                   {"control_min_mV", c.voltages.control_min_mV},
                   {"control_max_mV", c.voltages.control_max_mV},
                   {"scale", c.voltage_scale}};
  j["sampling"] = {{"n_samples", c.n_samples}, {"master_seed", c.master_seed}};
  j["output_dir"] = c.output_dir;
  const auto& e = c.experiments;
  j["experiments"] = {{"iv_grid_mV", e.iv_grid_mV},       {"iv_electrodes", e.iv_electrodes},
                      {"u_ref_mV", e.u_ref_mV},           {"scaling_sides", e.scaling_sides},
                      {"series_counts", e.series_counts}, {"scan_delta_mV", e.scan_delta_mV},
                      {"size_sides", e.size_sides},       {"bench_sides", e.bench_sides}};
  return j;
}

RunConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open config file {}", path.string()));
  json j;
  try {
    j = json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError(fmt::format("{}: {}", path.string(), e.what()));
  }
  return config_from_json(j);
}

std::shared_ptr<const Device> build_device(const RunConfig& c) {
  auto topo = build_grid(c.rows, c.cols, c.particle);
  auto electrodes = place_electrodes(topo, c.placement, c.roles);
  return make_device(std::move(topo), std::move(electrodes), c.permittivity, c.series_terms);
}

RunConfig default_config() { return RunConfig{}; }

}  // namespace nanonet
