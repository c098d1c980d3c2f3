// Command-line front end: one subcommand per experiment, CSV + JSON output.

#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <fmt/format.h>
#include <fstream>
#include <iostream>
#include <sstream>

#include "nanonet/analysis.hpp"
#include "nanonet/config.hpp"
#include "nanonet/constants.hpp"
#include "nanonet/experiments.hpp"
#include "nanonet/records.hpp"

namespace fs = std::filesystem;
using namespace nanonet;
using nlohmann::json;

namespace {

struct Common {
  std::string config_path;
  std::uint64_t seed = 0;
  std::size_t samples = 0;
  std::string out;
  bool progress = false;
};

struct Context {
  RunConfig config;
  fs::path out;
  bool progress = false;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

  Progress reporter(const std::string& label) const {
    if (!progress) return {};
    return [label](std::size_t done, std::size_t total) {
      std::fprintf(stderr, "\r[%s] %zu/%zu", label.c_str(), done, total);
      if (done == total) std::fprintf(stderr, "\n");
    };
  }

  double elapsed() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }

  void finish(RunRecord record, const std::string& sidecar) const {
    record.config_hash = config_hash(config);
    record.master_seed = config.master_seed;
    record.wall_clock_s = elapsed();
    write_json(out / sidecar, record.to_json(config));
    std::cout << (out / sidecar).string() << "\n";
  }
};

Context make_context(const Common& c, CLI::App& sub) {
  Context ctx;
  ctx.config = c.config_path.empty() ? default_config() : parse_config(c.config_path);
  if (sub.count("--seed")) ctx.config.master_seed = c.seed;
  if (sub.count("--samples")) ctx.config.n_samples = c.samples;
  if (!c.out.empty()) ctx.config.output_dir = c.out;
  const auto problems = config_problems(ctx.config);
  if (!problems.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw ConfigError(msg);
  }
  for (const auto& w : config_warnings(ctx.config)) std::cerr << "warning: " << w << "\n";
  ctx.out = ctx.config.output_dir;
  ctx.progress = c.progress;
  fs::create_directories(ctx.out);
  return ctx;
}

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("-c,--config", c.config_path, "Run configuration (JSON)")->check(CLI::ExistingFile);
  sub->add_option("--seed", c.seed, "Override the master seed");
  sub->add_option("--samples", c.samples, "Override the sample count")->check(CLI::PositiveNumber);
  sub->add_option("-o,--out", c.out, "Output directory");
  sub->add_flag("--progress", c.progress, "Report progress on stderr");
}

std::string csv_string(const std::vector<GateSample>& samples, int n_controls) {
  std::ostringstream s;
  write_gate_samples_csv(s, samples, n_controls);
  return s.str();
}

json ranges_json(const VoltageRanges& r, double scale) {
  return {{"input_high_mV", r.input_high_mV},
          {"control_min_mV", r.control_min_mV},
          {"control_max_mV", r.control_max_mV},
          {"scale", scale}};
}

json set_metadata(const SampleSet& set) {
  const auto summary = summarize(currents_of(set.samples));
  return {{"name", set.name},
          {"n_controls", set.electrodes.n_controls()},
          {"scale", set.scale},
          {"samples", set.samples.size()},
          {"terminations", termination_stats(set.samples)},
          {"metrics", to_json(summary)}};
}

PlacementPolicy setup_policy(const std::string& setup, const RunConfig& config) {
  if (setup == "A") return SetupA{};
  if (setup == "B") return SetupB{};
  if (setup.empty()) {
    if (std::holds_alternative<Explicit>(config.placement)) {
      throw ConfigError("this experiment needs placement A or B (use --setup)");
    }
    return config.placement;
  }
  throw ConfigError(fmt::format("--setup must be A or B, got '{}'", setup));
}

std::size_t electrode_by_label(const Device& device, const std::string& label) {
  for (std::size_t k = 0; k < device.electrodes.size(); ++k) {
    if (device.electrodes[k].label == label) return k;
  }
  throw ConfigError(fmt::format("no electrode labelled '{}'", label));
}

// ---------------------------------------------------------------------------

void cmd_simulate(const Context& ctx, std::vector<double> voltages_mV, const std::string& trace_path) {
  auto device = build_device(ctx.config);
  const auto& el = device->electrodes;
  if (voltages_mV.empty()) {
    std::vector<double> controls(el.n_controls(), 0.0);
    const double high = ctx.config.voltage_scale * ctx.config.voltages.input_high_mV;
    const auto v = electrode_voltages(el, controls, high, high);
    for (double x : v) voltages_mV.push_back(x / constants::kMilli);
  }
  if (voltages_mV.size() != el.size()) {
    throw ConfigError(fmt::format("--voltages needs {} values, got {}", el.size(), voltages_mV.size()));
  }
  if (voltages_mV[el.output_index()] != 0.0) throw ConfigError("the output electrode is grounded");
  std::vector<double> volts;
  for (double v : voltages_mV) volts.push_back(v * constants::kMilli);

  Simulation sim(device, ctx.config.simulation, volts, derive_seed(ctx.config.master_seed, 0));
  std::ofstream trace;
  if (!trace_path.empty()) {
    trace.open(trace_path);
    if (!trace) throw ConfigError(fmt::format("cannot write {}", trace_path));
    trace << "event_index,time,source,destination,dF,rate\n";
  }
  CurrentEstimate est;
  if (!sim.equilibrate(ctx.config.simulation.equilibration_events)) {
    est.termination = Termination::FrozenState;
  } else {
    if (trace.is_open()) sim.set_trace(&trace);
    est = sim.measure_current();
  }
  RunRecord rec;
  rec.command = "simulate";
  if (!trace_path.empty()) rec.files.push_back(trace_path);
  rec.metadata = {{"voltages_mV", voltages_mV},
                  {"current_A", est.current},
                  {"uncertainty", std::isfinite(est.uncertainty) ? json(est.uncertainty) : json(nullptr)},
                  {"termination", to_string(est.termination)},
                  {"events", est.events},
                  {"time_s", est.time},
                  {"blocks", est.blocks.size()}};
  ctx.finish(rec, "simulate.json");
}

void cmd_iv_sweep(Context ctx, std::vector<std::string> labels, double temperature) {
  if (temperature > 0.0) ctx.config.simulation.temperature_K = temperature;
  auto device = build_device(ctx.config);
  if (labels.empty()) labels = ctx.config.experiments.iv_electrodes;
  std::vector<std::size_t> driven;
  for (const auto& l : labels) driven.push_back(electrode_by_label(*device, l));
  const auto curve = run_iv_sweep(device, ctx.config.simulation, driven, ctx.config.experiments.iv_grid_mV,
                                  ctx.config.master_seed, ctx.reporter("iv-sweep"));
  std::ostringstream s;
  write_iv_csv(s, curve);
  write_text(ctx.out / "iv.csv", s.str());
  RunRecord rec;
  rec.command = "iv-sweep";
  rec.files = {"iv.csv"};
  rec.metadata = {{"driven", curve.driven}, {"temperature_K", curve.temperature_K}};
  ctx.finish(rec, "iv.json");
}

ScalingTable derive_scaling(const Context& ctx, const PlacementPolicy& policy, std::vector<int> sides) {
  return derive_voltage_scaling(sides, policy, ctx.config.simulation, ctx.config.experiments.iv_grid_mV,
                                ctx.config.experiments.u_ref_mV, ctx.config.master_seed, ctx.reporter("scaling"));
}

void cmd_scaling(const Context& ctx, const std::string& setup) {
  const auto table = derive_scaling(ctx, setup_policy(setup, ctx.config), ctx.config.experiments.scaling_sides);
  write_json(ctx.out / "scaling_table.json", to_json(table));
  RunRecord rec;
  rec.command = "scaling";
  rec.files = {"scaling_table.json"};
  json factors = json::object();
  for (const auto& e : table.entries) factors[std::to_string(e.side)] = {{"factor", e.factor}, {"clamped", e.clamped}};
  rec.metadata = {{"u_ref_mV", table.u_ref_mV}, {"i_ref_A", table.i_ref}, {"factors", factors}};
  ctx.finish(rec, "scaling.json");
}

void cmd_sample_gates(const Context& ctx) {
  const auto& c = ctx.config;
  SamplingSetup setup{build_device(c), c.simulation, c.voltages, c.voltage_scale};
  const auto samples = sample_gate_phase_space(setup, c.n_samples, c.master_seed, ctx.reporter("sample-gates"));
  write_text(ctx.out / "samples.csv", csv_string(samples, setup.device->electrodes.n_controls()));
  RunRecord rec;
  rec.command = "sample-gates";
  rec.n_samples = samples.size();
  rec.files = {"samples.csv"};
  rec.metadata = {{"voltages", ranges_json(c.voltages, c.voltage_scale)},
                  {"terminations", termination_stats(samples)}};
  ctx.finish(rec, "run.json");
}

void cmd_control_series(const Context& ctx, const std::string& series_name) {
  const auto& c = ctx.config;
  ControlSeries series;
  if (series_name == "A") {
    series = ControlSeries::A;
  } else if (series_name == "B") {
    series = ControlSeries::B;
  } else {
    throw ConfigError(fmt::format("--series must be A or B, got '{}'", series_name));
  }
  auto device = build_device(c);
  const auto sets = control_count_series(device->topology, device->electrodes, series, c.experiments.series_counts,
                                         c.simulation, c.voltages, c.n_samples, c.master_seed,
                                         ctx.reporter("control-series"));
  RunRecord rec;
  rec.command = "control-series";
  rec.n_samples = c.n_samples;
  json configs = json::array();
  for (const auto& set : sets) {
    const std::string file = fmt::format("samples_{}.csv", set.name);
    write_text(ctx.out / file, csv_string(set.samples, set.electrodes.n_controls()));
    rec.files.push_back(file);
    configs.push_back(set_metadata(set));
  }
  rec.metadata = {{"series", series_name}, {"voltages", ranges_json(c.voltages, 1.0)}, {"configs", configs}};
  ctx.finish(rec, fmt::format("control_series_{}.json", series_name));
}

void cmd_position_scan(const Context& ctx) {
  const auto& c = ctx.config;
  auto device = build_device(c);
  const auto policy = setup_policy("", c);
  const auto scan = input_position_scan(device->topology, policy, c.simulation, c.voltages, c.experiments.scan_delta_mV,
                                        c.n_samples, c.master_seed, ctx.reporter("position-scan"));
  RunRecord rec;
  rec.command = "position-scan";
  rec.n_samples = c.n_samples;
  std::string table = "first,second,Q_NDR,Q_NLS,corr_Ml_Mr\n";
  for (const auto& p : scan.pairs) {
    const std::string file = fmt::format("samples_{}.csv", p.set.name);
    write_text(ctx.out / file, csv_string(p.set.samples, p.set.electrodes.n_controls()));
    rec.files.push_back(file);
    table += fmt::format("{},{},{:.9e},{},{}\n", scan.labels[p.first], scan.labels[p.second], p.q_ndr,
                         p.q_nls ? fmt::format("{:.9e}", *p.q_nls) : "nan",
                         p.stats.corr_lr ? fmt::format("{:.9e}", *p.stats.corr_lr) : "nan");
  }
  write_text(ctx.out / "pairs.csv", table);
  std::string corr = "electrode,pearson\n";
  for (std::size_t k = 0; k < scan.labels.size(); ++k) {
    const auto& v = scan.voltage_correlation[k];
    corr += fmt::format("{},{}\n", scan.labels[k], v ? fmt::format("{:.9e}", *v) : "nan");
  }
  write_text(ctx.out / "correlation.csv", corr);
  rec.files.push_back("pairs.csv");
  rec.files.push_back("correlation.csv");
  rec.metadata = {{"delta_mV", c.experiments.scan_delta_mV}, {"voltages", ranges_json(c.voltages, 1.0)}};
  ctx.finish(rec, "position_scan.json");
}

void cmd_size_series(const Context& ctx, const std::string& setup, const std::string& scaling_path) {
  const auto& c = ctx.config;
  const auto policy = setup_policy(setup, c);
  ScalingTable table;
  if (!scaling_path.empty()) {
    std::ifstream in(scaling_path);
    if (!in) throw ConfigError(fmt::format("cannot open {}", scaling_path));
    table = scaling_from_json(json::parse(in));
  } else {
    table = derive_scaling(ctx, policy, c.experiments.size_sides);
    write_json(ctx.out / "scaling_table.json", to_json(table));
  }
  const auto sets = size_series(c.experiments.size_sides, policy, table, c.simulation, c.voltages, c.n_samples,
                                c.master_seed, ctx.reporter("size-series"));
  const std::string tag = std::holds_alternative<SetupB>(policy) ? "B" : "A";
  RunRecord rec;
  rec.command = "size-series";
  rec.n_samples = c.n_samples;
  if (scaling_path.empty()) rec.files.push_back("scaling_table.json");
  json sizes = json::array();
  for (const auto& set : sets) {
    const std::string file = fmt::format("samples_{}_{}.csv", tag, set.name);
    write_text(ctx.out / file, csv_string(set.samples, set.electrodes.n_controls()));
    rec.files.push_back(file);
    sizes.push_back(set_metadata(set));
  }
  rec.metadata = {{"setup", tag}, {"u_ref_mV", table.u_ref_mV}, {"voltages", ranges_json(c.voltages, 1.0)},
                  {"sizes", sizes}};
  ctx.finish(rec, fmt::format("size_series_{}.json", tag));
}

void cmd_analyze(const Context& ctx, const std::vector<std::string>& inputs, double threshold) {
  RunRecord rec;
  rec.command = "analyze";
  json results = json::array();
  for (const auto& path : inputs) {
    std::ifstream in(path);
    if (!in) throw ConfigError(fmt::format("cannot open {}", path));
    const auto samples = read_gate_samples_csv(in);
    SummaryOptions opt;
    opt.threshold = threshold;
    const auto summary = summarize(currents_of(samples), opt);
    const std::string stem = fs::path(path).stem().string();
    std::ostringstream f;
    write_fitness_csv(f, samples);
    write_text(ctx.out / (stem + "_fitness.csv"), f.str());
    write_json(ctx.out / (stem + "_metrics.json"), to_json(summary));
    rec.files.push_back(stem + "_fitness.csv");
    rec.files.push_back(stem + "_metrics.json");
    rec.n_samples += samples.size();
    results.push_back({{"input", path}, {"Q_NDR", summary.q_ndr},
                       {"Q_NLS", summary.q_nls ? json(*summary.q_nls) : json(nullptr)}});
  }
  rec.metadata = {{"inputs", results}};
  ctx.finish(rec, "analyze.json");
}

void cmd_bench(const Context& ctx, std::size_t batch) {
  std::string csv = "side,n_np,n_events,rebuild_ns,select_ns,update_ns\n";
  for (int side : ctx.config.experiments.bench_sides) {
    const auto b = benchmark_step_costs(side, batch, ctx.config.master_seed);
    csv += fmt::format("{},{},{},{:.1f},{:.2f},{:.2f}\n", b.side, b.n_np, b.n_events, b.rebuild_ns, b.select_ns,
                       b.update_ns);
  }
  write_text(ctx.out / "bench.csv", csv);
  std::cout << csv;
  RunRecord rec;
  rec.command = "bench";
  rec.files = {"bench.csv"};
  rec.metadata = {{"batch", batch}};
  ctx.finish(rec, "bench.json");
}

int report_error(const char* kind, const std::string& message, int code) {
  json err = {{"error", kind}, {"message", message}};
  std::cerr << err.dump() << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Single-electron tunnelling simulator for nanoparticle networks"};
  app.require_subcommand(1);
  Common common;

  auto* simulate = app.add_subcommand("simulate", "One equilibrate+measure run");
  add_common(simulate, common);
  std::vector<double> voltages;
  std::string trace;
  simulate->add_option("--voltages", voltages, "Electrode voltages in mV, in config order");
  simulate->add_option("--trace", trace, "Write the event trace CSV here");

  auto* iv = app.add_subcommand("iv-sweep", "Output current versus input voltage");
  add_common(iv, common);
  std::vector<std::string> iv_labels;
  double iv_temperature = 0.0;
  iv->add_option("--electrode", iv_labels, "Driven electrode label(s), e.g. E_0");
  iv->add_option("--temperature", iv_temperature, "Override the temperature (K)");

  std::string setup;
  auto* scaling = app.add_subcommand("scaling", "Size-dependent voltage scale factors");
  add_common(scaling, common);
  scaling->add_option("--setup", setup, "Electrode placement A or B");

  auto* gates = app.add_subcommand("sample-gates", "Random control sampling of the four gate currents");
  add_common(gates, common);

  auto* series = app.add_subcommand("control-series", "Gate sampling for a series of control counts");
  add_common(series, common);
  std::string series_name = "A";
  series->add_option("--series", series_name, "A or B");

  auto* scan = app.add_subcommand("position-scan", "Input position scan over all electrode pairs");
  add_common(scan, common);

  auto* sizes = app.add_subcommand("size-series", "Gate sampling over network sizes");
  add_common(sizes, common);
  std::string scaling_file;
  sizes->add_option("--setup", setup, "Electrode placement A or B");
  sizes->add_option("--scaling", scaling_file, "Scaling table from the scaling subcommand")->check(CLI::ExistingFile);

  auto* analyze = app.add_subcommand("analyze", "Fitness and nonlinearity metrics of sample files");
  add_common(analyze, common);
  std::vector<std::string> inputs;
  double threshold = 4.0;
  analyze->add_option("files", inputs, "Gate-sample CSV files")->required()->check(CLI::ExistingFile);
  analyze->add_option("--threshold", threshold, "Fitness threshold for exceedance probabilities");

  auto* bench = app.add_subcommand("bench", "Per-event cost versus network size");
  add_common(bench, common);
  std::size_t batch = 2000;
  bench->add_option("--batch", batch, "Operations per timing batch")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    const Context ctx = make_context(common, *sub);
    if (sub == simulate) cmd_simulate(ctx, voltages, trace);
    if (sub == iv) cmd_iv_sweep(ctx, iv_labels, iv_temperature);
    if (sub == scaling) cmd_scaling(ctx, setup);
    if (sub == gates) cmd_sample_gates(ctx);
    if (sub == series) cmd_control_series(ctx, series_name);
    if (sub == scan) cmd_position_scan(ctx);
    if (sub == sizes) cmd_size_series(ctx, setup, scaling_file);
    if (sub == analyze) cmd_analyze(ctx, inputs, threshold);
    if (sub == bench) cmd_bench(ctx, batch);
  } catch (const ConfigError& e) {
    return report_error("config", e.what(), 2);
  } catch (const DomainError& e) {
    return report_error("domain", e.what(), 3);
  } catch (const std::exception& e) {
    return report_error("runtime", e.what(), 1);
  }
  return 0;
}
