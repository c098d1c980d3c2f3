#include "nanonet/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <exception>
#include <fmt/format.h>
#include <mutex>
#include <thread>

#include "nanonet/constants.hpp"
#include "nanonet/rng.hpp"

namespace nanonet {

std::vector<double> electrode_voltages(const ElectrodeConfig& electrodes, std::span<const double> controls_mV,
                                       double input1_mV, double input2_mV) {
  const auto ctrl = electrodes.control_indices();
  if (ctrl.size() != controls_mV.size()) {
    throw ConfigError(fmt::format("{} control voltages for {} control electrodes", controls_mV.size(), ctrl.size()));
  }
  std::vector<double> v(electrodes.size(), 0.0);
  v[electrodes.input_index(1)] = input1_mV * constants::kMilli;
  v[electrodes.input_index(2)] = input2_mV * constants::kMilli;
  for (std::size_t k = 0; k < ctrl.size(); ++k) v[ctrl[k]] = controls_mV[k] * constants::kMilli;
  return v;
}

std::string flags(const GateSample& sample) {
  std::string s;
  for (auto t : sample.termination) s += code(t);
  return s;
}

std::vector<Quad> currents_of(std::span<const GateSample> samples) {
  std::vector<Quad> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(s.currents);
  return out;
}

int worker_count() {
  if (const char* env = std::getenv("NANONET_WORKERS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn, const Progress& progress) {
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> done{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex mu;
  auto work = [&] {
    while (!failed) {
      const std::size_t k = next++;
      if (k >= n) break;
      try {
        fn(k);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!error) error = std::current_exception();
        failed = true;
        break;
      }
      const std::size_t d = ++done;
      if (progress) {
        std::lock_guard lock(mu);
        progress(d, n);
      }
    }
  };
  const auto n_workers = static_cast<std::size_t>(worker_count());
  if (n_workers <= 1 || n <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < std::min(n_workers, n); ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);
}

GateSample run_gate_sample(const SamplingSetup& setup, std::uint64_t sample_id, std::uint64_t master_seed) {
  const auto& electrodes = setup.device->electrodes;
  GateSample s;
  s.sample_id = sample_id;
  s.seed = derive_seed(master_seed, sample_id);
  RandomStream draw(derive_seed(s.seed, 0));
  const int n_controls = electrodes.n_controls();
  for (int k = 0; k < n_controls; ++k) {
    s.controls_mV.push_back(setup.scale * draw.uniform(setup.ranges.control_min_mV, setup.ranges.control_max_mV));
  }
  const double high = setup.scale * setup.ranges.input_high_mV;
  for (int c = 0; c < 4; ++c) {
    const double in1 = (c & 1) ? high : 0.0;
    const double in2 = (c & 2) ? high : 0.0;
    const auto est = run_current(setup.device, setup.params, electrode_voltages(electrodes, s.controls_mV, in1, in2),
                                 derive_seed(s.seed, static_cast<std::uint64_t>(c) + 1));
    s.currents[c] = est.current;
    s.uncertainties[c] = est.uncertainty;
    s.termination[c] = est.termination;
    s.events[c] = est.events;
  }
  return s;
}

std::vector<GateSample> sample_gate_phase_space(const SamplingSetup& setup, std::size_t n_samples,
                                                std::uint64_t master_seed, const Progress& progress) {
  validate(setup.params);
  setup.device->electrodes.input_index(1);  // both inputs must exist
  setup.device->electrodes.input_index(2);
  if (!(setup.scale > 0.0)) throw ConfigError(fmt::format("voltage scale {} must be positive", setup.scale));
  std::vector<GateSample> out(n_samples);
  parallel_for(
      n_samples, [&](std::size_t k) { out[k] = run_gate_sample(setup, k, master_seed); }, progress);
  return out;
}

IVCurve run_iv_sweep(std::shared_ptr<const Device> device, const SimulationParams& params,
                     std::span<const std::size_t> driven, std::span<const double> u_grid_mV, std::uint64_t seed,
                     const Progress& progress) {
  validate(params);
  for (std::size_t k = 1; k < u_grid_mV.size(); ++k) {
    if (!(u_grid_mV[k] > u_grid_mV[k - 1])) throw ConfigError("I-V voltage grid must be strictly increasing");
  }
  IVCurve curve;
  curve.temperature_K = params.temperature_K;
  for (std::size_t e : driven) {
    if (e >= device->electrodes.size()) throw ConfigError(fmt::format("no electrode with index {}", e));
    if (e == device->electrodes.output_index()) throw ConfigError("the output electrode cannot be driven");
    curve.driven.push_back(device->electrodes[e].label);
  }
  curve.points.resize(u_grid_mV.size());
  parallel_for(
      u_grid_mV.size(),
      [&](std::size_t k) {
        std::vector<double> v(device->electrodes.size(), 0.0);
        for (std::size_t e : driven) v[e] = u_grid_mV[k] * constants::kMilli;
        const auto est = run_current(device, params, std::move(v), derive_seed(seed, k));
        curve.points[k] = {u_grid_mV[k], est.current, est.uncertainty, est.termination};
      },
      progress);
  return curve;
}

namespace {

// Points indistinguishable from zero drive count as exactly zero, so blockade
// noise does not cut the monotone part short.
double effective_current(const IVPoint& p) {
  const bool zero = p.termination == Termination::ZeroCurrent || p.termination == Termination::FrozenState;
  return zero ? 0.0 : p.current;
}

std::size_t monotone_prefix(const IVCurve& curve) {
  std::size_t end = curve.points.empty() ? 0 : 1;
  while (end < curve.points.size() &&
         effective_current(curve.points[end]) >= effective_current(curve.points[end - 1])) {
    ++end;
  }
  return end;
}

}  // namespace

Inversion invert_monotone(const IVCurve& curve, double target) {
  const std::size_t end = monotone_prefix(curve);
  if (end == 0) throw ConfigError("cannot invert an empty I-V curve");
  const auto& p = curve.points;
  if (target <= effective_current(p[0])) return {p[0].u_mV, target < effective_current(p[0])};
  for (std::size_t k = 1; k < end; ++k) {
    const double lo = effective_current(p[k - 1]);
    const double hi = effective_current(p[k]);
    if (target <= hi) {
      const double f = (target - lo) / (hi - lo);
      return {p[k - 1].u_mV + f * (p[k].u_mV - p[k - 1].u_mV), false};
    }
  }
  return {p[end - 1].u_mV, true};
}

double interpolate_current(const IVCurve& curve, double u) {
  const auto& p = curve.points;
  if (p.empty()) throw ConfigError("cannot interpolate an empty I-V curve");
  if (u <= p.front().u_mV) return p.front().current;
  for (std::size_t k = 1; k < p.size(); ++k) {
    if (u <= p[k].u_mV) {
      const double f = (u - p[k - 1].u_mV) / (p[k].u_mV - p[k - 1].u_mV);
      return p[k - 1].current + f * (p[k].current - p[k - 1].current);
    }
  }
  return p.back().current;
}

double ScalingTable::factor(int side) const {
  for (const auto& e : entries) {
    if (e.side == side) return e.factor;
  }
  throw ConfigError(fmt::format("scaling table has no entry for a {0}x{0} network", side));
}

namespace {

std::shared_ptr<const Device> standard_device(int side, const PlacementPolicy& policy) {
  auto topo = build_grid(side, side);
  auto electrodes = place_electrodes(topo, policy, standard_roles());
  return make_device(std::move(topo), std::move(electrodes));
}

}  // namespace

ScalingTable derive_voltage_scaling(std::span<const int> sides, const PlacementPolicy& policy,
                                    const SimulationParams& params, std::span<const double> u_grid_mV, double u_ref_mV,
                                    std::uint64_t seed, const Progress& progress) {
  if (u_grid_mV.empty() || u_ref_mV < u_grid_mV.front() || u_ref_mV > u_grid_mV.back()) {
    throw ConfigError(fmt::format("U_ref = {} mV lies outside the I-V grid", u_ref_mV));
  }
  std::vector<int> all{kReferenceSide};
  for (int s : sides) {
    if (std::find(all.begin(), all.end(), s) == all.end()) all.push_back(s);
  }
  ScalingTable table;
  table.u_ref_mV = u_ref_mV;
  const std::size_t total = all.size() * u_grid_mV.size();
  std::size_t finished = 0;
  for (int side : all) {
    auto device = standard_device(side, policy);
    const std::array<std::size_t, 2> inputs{device->electrodes.input_index(1), device->electrodes.input_index(2)};
    Progress inner;
    if (progress) inner = [&](std::size_t d, std::size_t) { progress(finished + d, total); };
    ScalingEntry entry;
    entry.side = side;
    entry.curve = run_iv_sweep(device, params, inputs, u_grid_mV, derive_seed(seed, static_cast<std::uint64_t>(side)),
                               inner);
    finished += u_grid_mV.size();
    if (side == kReferenceSide) {
      table.i_ref = interpolate_current(entry.curve, u_ref_mV);
      entry.factor = 1.0;
    } else {
      const auto inv = invert_monotone(entry.curve, table.i_ref);
      entry.factor = inv.u_mV / u_ref_mV;
      entry.clamped = inv.clamped;
      if (!(entry.factor > 0.0)) {
        entry.factor = u_grid_mV.front() > 0.0 ? u_grid_mV.front() / u_ref_mV : 1.0;
        entry.clamped = true;
      }
    }
    table.entries.push_back(std::move(entry));
  }
  std::sort(table.entries.begin(), table.entries.end(), [](const auto& a, const auto& b) { return a.side < b.side; });
  return table;
}

std::vector<SampleSet> control_count_series(const NetworkTopology& topology, const ElectrodeConfig& base,
                                            ControlSeries series, std::span<const int> counts,
                                            const SimulationParams& params, const VoltageRanges& ranges,
                                            std::size_t n_samples, std::uint64_t master_seed,
                                            const Progress& progress) {
  std::vector<SampleSet> out;
  const std::size_t total = counts.size() * n_samples;
  for (std::size_t k = 0; k < counts.size(); ++k) {
    SampleSet set;
    set.name = fmt::format("{}{}", series == ControlSeries::A ? 'A' : 'B', counts[k]);
    set.electrodes = control_series_config(topology, base, series, counts[k]);
    SamplingSetup setup{make_device(topology, set.electrodes), params, ranges, 1.0};
    Progress inner;
    if (progress) inner = [&, k](std::size_t d, std::size_t) { progress(k * n_samples + d, total); };
    set.samples = sample_gate_phase_space(setup, n_samples, master_seed, inner);
    out.push_back(std::move(set));
  }
  return out;
}

PositionScan input_position_scan(const NetworkTopology& topology, const PlacementPolicy& policy,
                                 const SimulationParams& params, const VoltageRanges& ranges, double delta_mV,
                                 std::size_t n_samples, std::uint64_t master_seed, const Progress& progress) {
  if (!(delta_mV > 0.0)) throw ConfigError(fmt::format("input step {} mV must be positive", delta_mV));
  const auto sites = placement_sites(topology, policy);
  const auto roles = standard_roles();
  if (sites.size() < roles.size()) throw ConfigError("placement offers too few sites for a position scan");
  std::size_t output_site = 0;
  for (std::size_t k = 0; k < roles.size(); ++k) {
    if (roles[k] == Role::Output) output_site = k;
  }
  const std::size_t n_sites = roles.size();

  PositionScan scan;
  for (std::size_t k = 0; k < n_sites; ++k) scan.labels.push_back(fmt::format("E_{}", k));
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t a = 0; a < n_sites; ++a) {
    for (std::size_t b = a + 1; b < n_sites; ++b) {
      if (a != output_site && b != output_site) pairs.emplace_back(a, b);
    }
  }
  const std::size_t total = (pairs.size() + 1) * n_samples;
  VoltageRanges pair_ranges = ranges;
  pair_ranges.input_high_mV = delta_mV;

  for (std::size_t p = 0; p < pairs.size(); ++p) {
    std::vector<Electrode> el;
    for (std::size_t k = 0; k < n_sites; ++k) {
      Role role = Role::Control;
      if (k == output_site) role = Role::Output;
      if (k == pairs[p].first) role = Role::Input1;
      if (k == pairs[p].second) role = Role::Input2;
      el.push_back({topology.index(sites[k]), role, scan.labels[k]});
    }
    PairScan ps;
    ps.first = pairs[p].first;
    ps.second = pairs[p].second;
    ps.set.name = fmt::format("{}-{}", scan.labels[ps.first], scan.labels[ps.second]);
    ps.set.electrodes = ElectrodeConfig(topology, std::move(el));
    SamplingSetup setup{make_device(topology, ps.set.electrodes), params, pair_ranges, 1.0};
    Progress inner;
    if (progress) inner = [&, p](std::size_t d, std::size_t) { progress(p * n_samples + d, total); };
    // Pairs draw independent control vectors.
    ps.set.samples = sample_gate_phase_space(setup, n_samples, derive_seed(master_seed, p + 1), inner);
    std::vector<Decomposition> dec;
    for (const auto& q : currents_of(ps.set.samples)) dec.push_back(decompose(q));
    ps.stats = moment_stats(dec);
    ps.q_ndr = q_ndr(ps.stats);
    ps.q_nls = q_nls(ps.stats);
    scan.pairs.push_back(std::move(ps));
  }

  // Voltage-current correlation with every non-output electrode randomised.
  auto device = make_device(topology, place_electrodes(topology, policy, roles));
  std::vector<std::vector<double>> volts(n_sites, std::vector<double>(n_samples, 0.0));
  std::vector<double> current(n_samples, 0.0);
  const std::uint64_t corr_seed = derive_seed(master_seed, 0);
  parallel_for(
      n_samples,
      [&](std::size_t s) {
        const std::uint64_t seed = derive_seed(corr_seed, s);
        RandomStream draw(derive_seed(seed, 0));
        std::vector<double> v(n_sites, 0.0);
        for (std::size_t k = 0; k < n_sites; ++k) {
          if (k == output_site) continue;
          volts[k][s] = draw.uniform(ranges.control_min_mV, ranges.control_max_mV);
          v[k] = volts[k][s] * constants::kMilli;
        }
        current[s] = run_current(device, params, std::move(v), derive_seed(seed, 1)).current;
      },
      progress ? Progress([&](std::size_t d, std::size_t) { progress(pairs.size() * n_samples + d, total); })
               : Progress{});
  for (std::size_t k = 0; k < n_sites; ++k) {
    scan.voltage_correlation.push_back(k == output_site ? std::nullopt : pearson(volts[k], current));
  }
  return scan;
}

std::vector<SampleSet> size_series(std::span<const int> sides, const PlacementPolicy& policy,
                                   const ScalingTable& scaling, const SimulationParams& params,
                                   const VoltageRanges& ranges, std::size_t n_samples, std::uint64_t master_seed,
                                   const Progress& progress) {
  std::vector<SampleSet> out;
  const std::size_t total = sides.size() * n_samples;
  for (std::size_t k = 0; k < sides.size(); ++k) {
    SampleSet set;
    set.name = fmt::format("{0}x{0}", sides[k]);
    set.scale = scaling.factor(sides[k]);
    auto device = standard_device(sides[k], policy);
    set.electrodes = device->electrodes;
    SamplingSetup setup{device, params, ranges, set.scale};
    Progress inner;
    if (progress) inner = [&, k](std::size_t d, std::size_t) { progress(k * n_samples + d, total); };
    set.samples = sample_gate_phase_space(setup, n_samples, master_seed, inner);
    out.push_back(std::move(set));
  }
  return out;
}

}  // namespace nanonet

namespace nanonet {

namespace {

template <class Fn>
double median_batch_ns(std::size_t batch, Fn&& fn) {
  std::vector<double> per_op;
  for (int rep = 0; rep < 7; ++rep) {
    const auto t0 = std::chrono::steady_clock::now();
    for (std::size_t k = 0; k < batch; ++k) fn(k);
    const auto t1 = std::chrono::steady_clock::now();
    per_op.push_back(std::chrono::duration<double, std::nano>(t1 - t0).count() / batch);
  }
  return quantile(per_op, 0.5);
}

}  // namespace

BenchPoint benchmark_step_costs(int side, std::size_t batch, std::uint64_t seed) {
  auto device = standard_device(side, SetupA{});
  const auto& electrodes = device->electrodes;
  RandomStream draw(derive_seed(seed, 0));
  std::vector<double> controls;
  for (int k = 0; k < electrodes.n_controls(); ++k) controls.push_back(draw.uniform(-50.0, 50.0));
  Simulation sim(device, SimulationParams{}, electrode_voltages(electrodes, controls, 10.0, 10.0), seed);
  sim.equilibrate(2000);
  sim.refresh_rates();

  BenchPoint b;
  b.side = side;
  b.n_np = device->topology.size();
  b.n_events = sim.table().size();
  b.rebuild_ns = median_batch_ns(batch, [&](std::size_t) { sim.refresh_rates(); });

  std::vector<double> r(4096);
  for (auto& x : r) x = draw.open_closed();
  const auto cdf = sim.table().cdf();
  volatile std::size_t sink = 0;
  b.select_ns = median_batch_ns(batch * 20, [&](std::size_t k) { sink = sink + select_event(cdf, r[k & 4095]); });

  // Alternate an event and its reverse so the state stays put.
  const auto& pair = device->topology.adjacency().front();
  b.update_ns = median_batch_ns(batch, [&](std::size_t k) {
    if (k & 1) {
      sim.apply({pair.second, pair.first});
    } else {
      sim.apply({pair.first, pair.second});
    }
  });
  return b;
}

}  // namespace nanonet
