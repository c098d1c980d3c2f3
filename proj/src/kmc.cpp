#include "nanonet/kmc.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <limits>
#include <numeric>
#include <ostream>

#include "nanonet/constants.hpp"
#include "rate_kernel.hpp"

namespace nanonet {

using constants::kBoltzmann;
using constants::kElementaryCharge;

void validate(const SimulationParams& p) {
  std::vector<std::string> problems;
  if (!(p.temperature_K > 0.0)) problems.push_back(fmt::format("temperature {} K must be > 0", p.temperature_K));
  const double r_min = 10.0 * constants::quantum_resistance();
  if (!(p.resistance_ohm > r_min)) {
    problems.push_back(fmt::format("junction resistance {} Ohm violates R > 10 h/e^2 = {:.0f} Ohm (co-tunnelling)",
                                   p.resistance_ohm, r_min));
  }
  if (!(p.u_threshold > 0.0 && p.u_threshold < 1.0)) {
    problems.push_back(fmt::format("u_threshold {} must lie in (0, 1)", p.u_threshold));
  }
  if (p.equilibration_events < 0) problems.push_back("equilibration_events must be >= 0");
  if (p.max_events <= 0) problems.push_back("max_events must be > 0");
  if (p.block_events <= 0) problems.push_back("block_events must be > 0");
  if (p.min_blocks < 2) problems.push_back("min_blocks must be >= 2");
  if (!problems.empty()) {
    std::string msg = "invalid simulation parameters:";
    for (const auto& s : problems) msg += "\n  " + s;
    throw ConfigError(msg);
  }
}

std::shared_ptr<const Device> make_device(NetworkTopology topology, ElectrodeConfig electrodes,
                                          const Permittivities& perms, int n_terms) {
  auto cap = assemble_capacitance_matrix(topology, electrodes, perms, n_terms);
  return std::make_shared<const Device>(Device{std::move(topology), std::move(electrodes), std::move(cap)});
}

double free_energy_np_np(const Device& device, const Eigen::VectorXd& phi, int i, int j) {
  if (!device.topology.adjacent(i, j)) {
    throw DomainError(fmt::format("particles {} and {} are not adjacent", i, j));
  }
  const auto& inv = device.capacitance.inverse();
  const double e = kElementaryCharge;
  return e * (phi[j] - phi[i]) + 0.5 * e * e * (inv(i, i) + inv(j, j) - 2.0 * inv(i, j));
}

double free_energy_np_electrode(const Device& device, const Eigen::VectorXd& phi, std::size_t electrode,
                                double u_electrode, Direction direction) {
  if (electrode >= device.electrodes.size()) {
    throw DomainError(fmt::format("no electrode with index {}", electrode));
  }
  const int i = device.electrodes[electrode].np;
  const double e = kElementaryCharge;
  const double charging = 0.5 * e * e * device.capacitance.inverse()(i, i);
  const double drive = direction == Direction::ToElectrode ? u_electrode - phi[i] : phi[i] - u_electrode;
  return e * drive + charging;
}

double tunnel_rate(double delta_f, double resistance_ohm, double temperature_K) {
  const double kt = kBoltzmann * temperature_K;
  const double scale = kt / (kElementaryCharge * kElementaryCharge * resistance_ohm);
  const double x = delta_f / kt;
  double g = 0.0;
  detail::rate_shapes(&x, &g, 1);
  return scale * g;
}

EventTable::EventTable(const Device& device, const SimulationParams& params)
    : n_particles_(device.topology.size()) {
  const auto& inv = device.capacitance.inverse();
  const double half_e2 = 0.5 * kElementaryCharge * kElementaryCharge;
  for (auto [i, j] : device.topology.adjacency()) {
    const double c = half_e2 * (inv(i, i) + inv(j, j) - 2.0 * inv(i, j));
    source_.push_back(i);
    target_.push_back(j);
    charging_.push_back(c);
    source_.push_back(j);
    target_.push_back(i);
    charging_.push_back(c);
  }
  n_particle_events_ = source_.size();
  for (std::size_t k = 0; k < device.electrodes.size(); ++k) {
    const int i = device.electrodes[k].np;
    const int node = n_particles_ + static_cast<int>(k);
    const double c = half_e2 * inv(i, i);
    source_.push_back(i);
    target_.push_back(node);
    charging_.push_back(c);
    source_.push_back(node);
    target_.push_back(i);
    charging_.push_back(c);
  }
  rates_.assign(source_.size(), 0.0);
  cdf_.assign(source_.size(), 0.0);
  scaled_.assign(source_.size(), 0.0);
  const double kt = kBoltzmann * params.temperature_K;
  inv_kt_ = 1.0 / kt;
  for (double& c : charging_) c *= inv_kt_;
  rate_scale_ = kt / (kElementaryCharge * kElementaryCharge * params.resistance_ohm);
}

double EventTable::delta_f(std::size_t n, std::span<const double> phi, std::span<const double> voltages) const {
  return kElementaryCharge * (potential(target_[n], phi, voltages) - potential(source_[n], phi, voltages)) +
         charging_[n] / inv_kt_;
}

void EventTable::rebuild(std::span<const double> phi, std::span<const double> voltages) {
  const double e_over_kt = kElementaryCharge * inv_kt_;
  const std::size_t n_events = source_.size();
  const int* src = source_.data();
  const int* dst = target_.data();
  const double* chg = charging_.data();
  double* x = scaled_.data();
  for (std::size_t n = 0; n < n_particle_events_; ++n) {
    x[n] = e_over_kt * (phi[dst[n]] - phi[src[n]]) + chg[n];
  }
  for (std::size_t n = n_particle_events_; n < n_events; ++n) {
    x[n] = e_over_kt * (potential(dst[n], phi, voltages) - potential(src[n], phi, voltages)) + chg[n];
  }
  detail::rate_shapes(x, rates_.data(), n_events);
  double acc = 0.0;
  for (std::size_t n = 0; n < n_events; ++n) {
    rates_[n] *= rate_scale_;
    acc += rates_[n];
    cdf_[n] = acc;
  }
}

std::size_t select_event(std::span<const double> cdf, double r1) {
  if (cdf.empty() || !(cdf.back() > 0.0)) throw FrozenStateError("total rate is zero; no event possible");
  const double target = r1 * cdf.back();
  const auto it = std::lower_bound(cdf.begin(), cdf.end(), target);
  // r1 <= 1 keeps target <= cdf.back(); guard against r1 slightly above 1.
  return it == cdf.end() ? cdf.size() - 1 : static_cast<std::size_t>(it - cdf.begin());
}

double advance_time(double t, double total_rate, double r2) {
  if (!(total_rate > 0.0)) throw FrozenStateError("cannot advance time with zero total rate");
  return t - std::log(r2) / total_rate;
}

std::string to_string(Termination t) {
  switch (t) {
    case Termination::UncertaintyReached: return "UncertaintyReached";
    case Termination::MaxEvents: return "MaxEvents";
    case Termination::ZeroCurrent: return "ZeroCurrent";
    case Termination::FrozenState: return "FrozenState";
  }
  return "?";
}

char code(Termination t) {
  switch (t) {
    case Termination::UncertaintyReached: return 'U';
    case Termination::MaxEvents: return 'M';
    case Termination::ZeroCurrent: return 'Z';
    case Termination::FrozenState: return 'F';
  }
  return '?';
}

Simulation::Simulation(std::shared_ptr<const Device> device, SimulationParams params, std::vector<double> voltages_V,
                       std::uint64_t seed)
    : device_(std::move(device)),
      params_(params),
      rng_(seed),
      table_(*device_, params_),
      voltages_(std::move(voltages_V)) {
  validate(params_);
  if (voltages_.size() != device_->electrodes.size()) {
    throw ConfigError(fmt::format("{} voltages given for {} electrodes", voltages_.size(), device_->electrodes.size()));
  }
  const int n = device_->topology.size();
  state_.charges.assign(static_cast<std::size_t>(n), 0);
  state_.potentials = Eigen::VectorXd::Zero(n);
  state_.injected.assign(voltages_.size(), 0);
  output_node_ = n + static_cast<int>(device_->electrodes.output_index());
}

void Simulation::refresh_rates() {
  table_.rebuild({state_.potentials.data(), static_cast<std::size_t>(state_.potentials.size())}, voltages_);
}

bool Simulation::step() {
  refresh_rates();
  const double k_tot = table_.total_rate();
  if (!(k_tot > 0.0)) return false;
  const double r1 = rng_.open_closed();
  const double r2 = rng_.open_closed();
  const std::size_t n = select_event(table_.cdf(), r1);
  state_.time = advance_time(state_.time, k_tot, r2);
  const Event ev = table_.event(n);
  if (trace_) {
    const std::span<const double> phi{state_.potentials.data(), static_cast<std::size_t>(state_.potentials.size())};
    *trace_ << fmt::format("{},{:.9e},{},{},{:.9e},{:.9e}\n", state_.event_count, state_.time, ev.source, ev.target,
                           table_.delta_f(n, phi, voltages_), table_.rates()[n]);
  }
  apply(ev);
  return true;
}

void Simulation::apply(const Event& event) {
  const int n = device_->topology.size();
  const auto& inv = device_->capacitance.inverse();
  const double e = kElementaryCharge;
  if (event.source < n) {
    state_.charges[event.source] -= 1;
    state_.potentials.noalias() -= e * inv.col(event.source);
  } else {
    state_.injected[event.source - n] += 1;
    if (event.source == output_node_) ++state_.output_to_net;
  }
  if (event.target < n) {
    state_.charges[event.target] += 1;
    state_.potentials.noalias() += e * inv.col(event.target);
  } else {
    state_.injected[event.target - n] -= 1;
    if (event.target == output_node_) ++state_.net_to_output;
  }
  ++state_.event_count;
}

void Simulation::reset_counters() {
  state_.time = 0.0;
  state_.net_to_output = 0;
  state_.output_to_net = 0;
  state_.event_count = 0;
  std::fill(state_.injected.begin(), state_.injected.end(), 0);
}

bool Simulation::equilibrate(std::int64_t n_events) {
  bool alive = true;
  for (std::int64_t k = 0; k < n_events; ++k) {
    if (!step()) {
      alive = false;
      break;
    }
  }
  reset_counters();
  return alive;
}

CurrentEstimate Simulation::measure_current() {
  const double e = kElementaryCharge;
  CurrentEstimate est;
  std::int64_t events = 0;
  bool frozen = false;
  double mean = 0.0;
  double sem = std::numeric_limits<double>::infinity();

  auto net = [this] { return state_.net_to_output - state_.output_to_net; };
  auto update_stats = [&] {
    const auto nb = static_cast<double>(est.blocks.size());
    if (est.blocks.size() < 2) return;
    mean = std::accumulate(est.blocks.begin(), est.blocks.end(), 0.0) / nb;
    double ss = 0.0;
    for (double b : est.blocks) ss += (b - mean) * (b - mean);
    sem = std::sqrt(ss / (nb - 1.0) / nb);
  };

  while (true) {
    const double t0 = state_.time;
    const std::int64_t n0 = net();
    std::int64_t in_block = 0;
    while (in_block < params_.block_events && events < params_.max_events) {
      if (!step()) {
        frozen = true;
        break;
      }
      ++in_block;
      ++events;
    }
    const double dt = state_.time - t0;
    const bool full = in_block == params_.block_events;
    if (in_block > 0 && dt > 0.0 && (full || est.blocks.empty())) {
      est.blocks.push_back(e * static_cast<double>(net() - n0) / dt);
    }
    update_stats();
    if (frozen) {
      est.termination = Termination::FrozenState;
      break;
    }
    if (static_cast<int>(est.blocks.size()) >= params_.min_blocks && mean != 0.0 &&
        sem / std::abs(mean) <= params_.u_threshold) {
      est.termination = Termination::UncertaintyReached;
      break;
    }
    if (events >= params_.max_events) {
      // A current within two standard errors of zero is reported as zero drive.
      est.termination = (mean == 0.0 || std::abs(mean) <= 2.0 * sem) ? Termination::ZeroCurrent
                                                                     : Termination::MaxEvents;
      break;
    }
  }
  est.events = events;
  est.time = state_.time;
  est.uncertainty = mean != 0.0 ? sem / std::abs(mean) : std::numeric_limits<double>::infinity();
  if (est.termination == Termination::FrozenState) {
    est.current = 0.0;
  } else {
    est.current = state_.time > 0.0 ? e * static_cast<double>(net()) / state_.time : 0.0;
  }
  return est;
}

Eigen::VectorXd Simulation::potentials_from_scratch() const { return device_->capacitance.potentials(state_.charges); }

CurrentEstimate run_current(std::shared_ptr<const Device> device, const SimulationParams& params,
                            std::vector<double> voltages_V, std::uint64_t seed) {
  Simulation sim(std::move(device), params, std::move(voltages_V), seed);
  if (!sim.equilibrate(params.equilibration_events)) {
    CurrentEstimate est;
    est.termination = Termination::FrozenState;
    est.uncertainty = std::numeric_limits<double>::infinity();
    return est;
  }
  return sim.measure_current();
}

}  // namespace nanonet
