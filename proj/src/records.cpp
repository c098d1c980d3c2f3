#include "nanonet/records.hpp"

#include <fmt/format.h>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace nanonet {

using nlohmann::json;

std::uint64_t fnv1a(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string config_hash(const RunConfig& config) {
  return fmt::format("{:016x}", fnv1a(config_to_json(config).dump()));
}

namespace {

Termination termination_from_code(char c) {
  switch (c) {
    case 'U': return Termination::UncertaintyReached;
    case 'M': return Termination::MaxEvents;
    case 'Z': return Termination::ZeroCurrent;
    case 'F': return Termination::FrozenState;
  }
  throw ConfigError(fmt::format("unknown termination code '{}'", c));
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double to_double(const std::string& s) {
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw ConfigError(fmt::format("malformed number '{}'", s));
  return v;
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

void write_gate_samples_csv(std::ostream& out, std::span<const GateSample> samples, int n_controls) {
  out << "sample_id,seed";
  for (int k = 1; k <= n_controls; ++k) out << ",c_" << k;
  out << ",I00,u00,I10,u10,I01,u01,I11,u11,flags\n";
  for (const auto& s : samples) {
    if (static_cast<int>(s.controls_mV.size()) != n_controls) {
      throw ConfigError(fmt::format("sample {} has {} controls, expected {}", s.sample_id, s.controls_mV.size(),
                                    n_controls));
    }
    std::string line = fmt::format("{},{}", s.sample_id, s.seed);
    for (double c : s.controls_mV) line += fmt::format(",{:.6f}", c);
    for (int k = 0; k < 4; ++k) line += fmt::format(",{:.16e},{:.6e}", s.currents[k], s.uncertainties[k]);
    line += "," + flags(s) + "\n";
    out << line;
  }
}

std::vector<GateSample> read_gate_samples_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("sample file is empty");
  const auto header = split(line);
  if (header.size() < 11 || header[0] != "sample_id" || header[1] != "seed" || header.back() != "flags") {
    throw ConfigError("sample file header does not match the gate-sample schema");
  }
  const std::size_t n_controls = header.size() - 11;
  std::vector<GateSample> out;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != header.size()) {
      throw ConfigError(fmt::format("row {}: {} cells, expected {}", row, cells.size(), header.size()));
    }
    try {
      GateSample s;
      s.sample_id = std::stoull(cells[0]);
      s.seed = std::stoull(cells[1]);
      for (std::size_t k = 0; k < n_controls; ++k) s.controls_mV.push_back(to_double(cells[2 + k]));
      for (int k = 0; k < 4; ++k) {
        s.currents[k] = to_double(cells[2 + n_controls + 2 * k]);
        s.uncertainties[k] = to_double(cells[3 + n_controls + 2 * k]);
      }
      const std::string& f = cells.back();
      if (f.size() != 4) throw ConfigError(fmt::format("flags '{}' must have four codes", f));
      for (int k = 0; k < 4; ++k) s.termination[k] = termination_from_code(f[k]);
      out.push_back(std::move(s));
    } catch (const std::logic_error& e) {
      throw ConfigError(fmt::format("row {}: {}", row, e.what()));
    }
  }
  return out;
}

void write_fitness_csv(std::ostream& out, std::span<const GateSample> samples) {
  out << "sample_id,gate,F,m,MSE,c,M_l,M_r,X\n";
  for (const auto& s : samples) {
    const auto d = decompose(s.currents);
    for (GateKind g : kAllGates) {
      const auto f = fitness(s.currents, g);
      out << fmt::format("{},{},{:.9e},{:.9e},{:.9e},{:.9e},{:.9e},{:.9e},{:.9e}\n", s.sample_id, to_string(g), f.F,
                         f.m, f.mse, f.c, d.m_l, d.m_r, d.x);
    }
  }
}

void write_iv_csv(std::ostream& out, const IVCurve& curve) {
  out << "U_mV,I,u,flag\n";
  for (const auto& p : curve.points) {
    out << fmt::format("{:.6f},{:.16e},{:.6e},{}\n", p.u_mV, p.current, p.uncertainty, code(p.termination));
  }
}

json to_json(const MomentStats& s) {
  return {{"n", s.n},
          {"mean_M", s.mean_m},
          {"mean_M2", s.mean_m2},
          {"var_M", s.var_m},
          {"mean_X", s.mean_x},
          {"mean_X2", s.mean_x2},
          {"var_X", s.var_x},
          {"corr_Ml_Mr", optional_json(s.corr_lr)},
          {"corr_Ml_X", optional_json(s.corr_lx)},
          {"corr_Mr_X", optional_json(s.corr_rx)}};
}

json to_json(const MetricsSummary& m) {
  json j;
  j["samples"] = m.samples;
  j["moments"] = to_json(m.stats);
  j["Q_NDR"] = m.q_ndr;
  j["Q_NDR_simplified"] = m.q_ndr_simplified;
  j["Q_NLS"] = optional_json(m.q_nls);
  j["predicted"] = {{"and_or_mean", optional_json(m.predicted.and_or_mean)},
                    {"and_or_second", optional_json(m.predicted.and_or_second)},
                    {"and_or_var", optional_json(m.predicted.and_or_var)},
                    {"xor_mean", m.predicted.xor_mean},
                    {"xor_second", optional_json(m.predicted.xor_second)}};
  j["gates"] = json::array();
  for (const auto& g : m.gates) {
    j["gates"].push_back({{"gate", to_string(g.gate)},
                          {"finite", g.finite},
                          {"infinite", g.infinite},
                          {"mean", g.mean},
                          {"variance", g.variance},
                          {"sd", std::sqrt(g.variance)},
                          {"q1", g.q1},
                          {"median", g.median},
                          {"q3", g.q3}});
  }
  j["threshold"] = m.threshold;
  j["exceedance"] = json::array();
  for (std::size_t k = 0; k < m.exceedance.size(); ++k) {
    const auto& e = m.exceedance[k];
    j["exceedance"].push_back({{"gate", to_string(kAllGates[k])},
                               {"delta", e.deltas},
                               {"probability", e.probability},
                               {"normalized", e.normalized}});
  }
  return j;
}

json to_json(const ScalingTable& t) {
  json j;
  j["u_ref_mV"] = t.u_ref_mV;
  j["i_ref"] = t.i_ref;
  j["entries"] = json::array();
  for (const auto& e : t.entries) {
    json pts = json::array();
    for (const auto& p : e.curve.points) {
      pts.push_back({{"U_mV", p.u_mV}, {"I", p.current}, {"u", p.uncertainty}, {"flag", std::string(1, code(p.termination))}});
    }
    j["entries"].push_back({{"side", e.side}, {"factor", e.factor}, {"clamped", e.clamped}, {"curve", pts}});
  }
  return j;
}

ScalingTable scaling_from_json(const json& j) {
  try {
    ScalingTable t;
    t.u_ref_mV = j.at("u_ref_mV").get<double>();
    t.i_ref = j.at("i_ref").get<double>();
    for (const auto& e : j.at("entries")) {
      ScalingEntry entry;
      entry.side = e.at("side").get<int>();
      entry.factor = e.at("factor").get<double>();
      entry.clamped = e.at("clamped").get<bool>();
      if (e.contains("curve")) {
        for (const auto& p : e["curve"]) {
          entry.curve.points.push_back({p.at("U_mV").get<double>(), p.at("I").get<double>(),
                                        p.at("u").is_number() ? p["u"].get<double>() : 0.0,
                                        termination_from_code(p.at("flag").get<std::string>().at(0))});
        }
      }
      t.entries.push_back(std::move(entry));
    }
    return t;
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("malformed scaling table: {}", e.what()));
  }
}

json termination_stats(std::span<const GateSample> samples) {
  std::size_t counts[4] = {0, 0, 0, 0};
  std::int64_t events = 0;
  for (const auto& s : samples) {
    for (int k = 0; k < 4; ++k) {
      ++counts[static_cast<int>(s.termination[k])];
      events += s.events[k];
    }
  }
  return {{"uncertainty_reached", counts[0]},
          {"max_events", counts[1]},
          {"zero_current", counts[2]},
          {"frozen", counts[3]},
          {"events", events}};
}

json RunRecord::to_json(const RunConfig& config) const {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["tool_version"] = kToolVersion;
  j["command"] = command;
  j["config_hash"] = config_hash;
  j["master_seed"] = master_seed;
  j["n_samples"] = n_samples;
  j["files"] = files;
  j["wall_clock_s"] = wall_clock_s;
  j["units"] = {{"voltage", "mV"}, {"current", "A"}, {"time", "s"}, {"energy", "meV"}};
  j["config"] = config_to_json(config);
  j["metadata"] = metadata;
  return j;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError(fmt::format("cannot write {}", path.string()));
  out << text;
  if (!out) throw ConfigError(fmt::format("write to {} failed", path.string()));
}

void write_json(const std::filesystem::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

}  // namespace nanonet
