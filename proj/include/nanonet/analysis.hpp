#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace nanonet {

/// Output currents for the input combinations (in1, in2) = 00, 10, 01, 11.
using Quad = std::array<double, 4>;

enum class GateKind { AND, OR, NAND, NOR, XOR, XNOR };

inline constexpr std::array<GateKind, 6> kAllGates = {GateKind::AND, GateKind::OR,  GateKind::NAND,
                                                      GateKind::NOR, GateKind::XOR, GateKind::XNOR};

std::string to_string(GateKind gate);
GateKind gate_from_string(const std::string& name);

/// on[k] is true when entry k of a Quad belongs to the gate's ON set.
std::array<bool, 4> on_set(GateKind gate);

/// Effective input mobilities and input-input coupling.
struct Decomposition {
  double m_l = 0.0;
  double m_r = 0.0;
  double x = 0.0;
};

Decomposition decompose(const Quad& i);

struct FitnessRecord {
  GateKind gate = GateKind::AND;
  double m = 0.0;    // I_on - I_off
  double mse = 0.0;
  double c = 0.0;    // I_off
  double delta = 0.0;
  double F = 0.0;    // +-inf when infinite
  bool infinite = false;
};

/// F = m / (sqrt(MSE) + delta |c|). A zero denominator gives an infinite
/// record signed like m, except m = 0 which is F = 0.
FitnessRecord fitness(const Quad& currents, GateKind gate, double delta = 0.0);

struct FitnessValue {
  double F = 0.0;
  bool infinite = false;
};

/// Fitness at delta = 0 written in terms of (M_l, M_r, X).
FitnessValue closed_form_fitness(const Decomposition& d, GateKind gate);

/// Sample Pearson coefficient; empty when either input has zero variance or
/// fewer than two points are given.
std::optional<double> pearson(std::span<const double> a, std::span<const double> b);

/// Sample moments of a set of decompositions. M statistics pool the M_l and
/// M_r values.
struct MomentStats {
  std::size_t n = 0;
  double mean_m = 0.0;
  double mean_m2 = 0.0;
  double var_m = 0.0;
  double mean_x = 0.0;
  double mean_x2 = 0.0;
  double var_x = 0.0;
  std::optional<double> corr_lr;
  std::optional<double> corr_lx;
  std::optional<double> corr_rx;
};

MomentStats moment_stats(std::span<const Decomposition> samples);

/// 1/2 [1 - tanh(<M> / sqrt(<X^2>/2 + Var(M) (1 + corr(M_l,M_r)/2)))].
/// A zero denominator takes the limit: 0 for <M> > 0, 1/2 for <M> = 0 and 1
/// for <M> < 0. An undefined correlation counts as 0.
double q_ndr(const MomentStats& s);

/// 1/2 [1 - tanh(<M> / sigma(M))], same limit convention.
double q_ndr_simplified(const MomentStats& s);

/// <X^2> / <M^2>; empty when <M^2> = 0.
std::optional<double> q_nls(const MomentStats& s);

/// First-order moment predictions, each up to an unknown positive constant.
struct PredictedMoments {
  std::optional<double> and_or_mean;  // NAND/NOR: negated
  std::optional<double> and_or_second;
  std::optional<double> and_or_var;
  double xor_mean = 0.0;
  std::optional<double> xor_second;
};

PredictedMoments predicted_moments(const MomentStats& s);

struct ExceedanceCurve {
  std::vector<double> deltas;
  std::vector<double> probability;
  std::vector<double> normalized;  // min-max scaled over the delta grid
};

/// Fraction of samples with F > threshold for each delta. Infinite records
/// count on the side of their sign.
ExceedanceCurve exceedance_probability(std::span<const Quad> samples, GateKind gate, std::span<const double> deltas,
                                       double threshold);

/// Two-sample Kolmogorov-Smirnov test with the asymptotic p-value.
struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

/// Linear-interpolation quantile (q in [0, 1]) of an unsorted sample.
double quantile(std::vector<double> values, double q);

struct GateSummary {
  GateKind gate = GateKind::AND;
  std::size_t finite = 0;
  std::size_t infinite = 0;
  double mean = 0.0;
  double variance = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
};

struct SummaryOptions {
  double threshold = 4.0;
  std::vector<double> deltas = {0.0, 0.001, 0.005, 0.01, 0.02, 0.05, 0.1};
};

struct MetricsSummary {
  std::size_t samples = 0;
  MomentStats stats;
  double q_ndr = 0.0;
  double q_ndr_simplified = 0.0;
  std::optional<double> q_nls;
  PredictedMoments predicted;
  std::vector<GateSummary> gates;  // delta = 0, infinite records excluded
  double threshold = 0.0;
  std::vector<ExceedanceCurve> exceedance;  // one per gate, kAllGates order
};

MetricsSummary summarize(std::span<const Quad> samples, const SummaryOptions& options = {});

}  // namespace nanonet
