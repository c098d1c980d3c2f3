#include "nanonet/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "nanonet/topology.hpp"

namespace nanonet {

std::string to_string(GateKind gate) {
  switch (gate) {
    case GateKind::AND: return "AND";
    case GateKind::OR: return "OR";
    case GateKind::NAND: return "NAND";
    case GateKind::NOR: return "NOR";
    case GateKind::XOR: return "XOR";
    case GateKind::XNOR: return "XNOR";
  }
  return "?";
}

GateKind gate_from_string(const std::string& name) {
  for (GateKind g : kAllGates) {
    if (to_string(g) == name) return g;
  }
  throw ConfigError("unknown gate '" + name + "'");
}

std::array<bool, 4> on_set(GateKind gate) {
  switch (gate) {
    case GateKind::AND: return {false, false, false, true};
    case GateKind::OR: return {false, true, true, true};
    case GateKind::NAND: return {true, true, true, false};
    case GateKind::NOR: return {true, false, false, false};
    case GateKind::XOR: return {false, true, true, false};
    case GateKind::XNOR: return {true, false, false, true};
  }
  return {};
}

Decomposition decompose(const Quad& i) {
  return {0.25 * (i[3] - i[2] + i[1] - i[0]), 0.25 * (i[3] + i[2] - i[1] - i[0]),
          0.25 * (i[3] - i[2] - i[1] + i[0])};
}

namespace {

const double kInf = std::numeric_limits<double>::infinity();

FitnessValue ratio(double num, double den) {
  if (den > 0.0) return {num / den, false};
  if (num == 0.0) return {0.0, false};
  return {std::copysign(kInf, num), true};
}

}  // namespace

FitnessRecord fitness(const Quad& currents, GateKind gate, double delta) {
  if (!(delta >= 0.0)) throw std::invalid_argument("fitness offset weight must be non-negative");
  const auto on = on_set(gate);
  // Sums run in index order for every gate so mirrored gates agree bit for bit.
  double sum_on = 0.0, sum_off = 0.0;
  int n_on = 0;
  for (int k = 0; k < 4; ++k) {
    if (on[k]) {
      sum_on += currents[k];
      ++n_on;
    } else {
      sum_off += currents[k];
    }
  }
  const double i_on = sum_on / n_on;
  const double i_off = sum_off / (4 - n_on);
  double sq = 0.0;
  for (int k = 0; k < 4; ++k) {
    const double dev = currents[k] - (on[k] ? i_on : i_off);
    sq += dev * dev;
  }
  FitnessRecord r;
  r.gate = gate;
  r.m = i_on - i_off;
  r.mse = 0.25 * sq;
  r.c = i_off;
  r.delta = delta;
  const auto v = ratio(r.m, std::sqrt(r.mse) + delta * std::fabs(r.c));
  r.F = v.F;
  r.infinite = v.infinite;
  return r;
}

FitnessValue closed_form_fitness(const Decomposition& d, GateKind gate) {
  const double l = d.m_l, r = d.m_r, x = d.x;
  const double k = std::sqrt(8.0 / 3.0);
  const double sq = l * l + r * r + x * x;
  FitnessValue v;
  switch (gate) {
    case GateKind::AND:
    case GateKind::NAND:
      v = ratio(k * (l + r + x), std::sqrt(std::max(0.0, sq - l * r - l * x - r * x)));
      break;
    case GateKind::OR:
    case GateKind::NOR:
      v = ratio(k * (l + r - x), std::sqrt(std::max(0.0, sq - l * r + l * x + r * x)));
      break;
    case GateKind::XOR:
    case GateKind::XNOR:
      v = ratio(-2.0 * x, std::sqrt(l * l + r * r));
      break;
  }
  if (gate == GateKind::NAND || gate == GateKind::NOR || gate == GateKind::XNOR) v.F = -v.F;
  return v;
}

std::optional<double> pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("pearson: length mismatch");
  const std::size_t n = a.size();
  if (n < 2) return std::nullopt;
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double saa = 0.0, sbb = 0.0, sab = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double da = a[i] - ma, db = b[i] - mb;
    saa += da * da;
    sbb += db * db;
    sab += da * db;
  }
  if (!(saa > 0.0) || !(sbb > 0.0)) return std::nullopt;
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

MomentStats moment_stats(std::span<const Decomposition> samples) {
  MomentStats s;
  s.n = samples.size();
  if (s.n == 0) return s;
  std::vector<double> l, r, x;
  for (const auto& d : samples) {
    l.push_back(d.m_l);
    r.push_back(d.m_r);
    x.push_back(d.x);
  }
  double sum_m = 0.0, sum_m2 = 0.0, sum_x = 0.0, sum_x2 = 0.0;
  for (std::size_t i = 0; i < s.n; ++i) {
    sum_m += l[i] + r[i];
    sum_m2 += l[i] * l[i] + r[i] * r[i];
    sum_x += x[i];
    sum_x2 += x[i] * x[i];
  }
  const double pooled = 2.0 * s.n;
  s.mean_m = sum_m / pooled;
  s.mean_m2 = sum_m2 / pooled;
  s.mean_x = sum_x / s.n;
  s.mean_x2 = sum_x2 / s.n;
  double dev_m = 0.0, dev_x = 0.0;
  for (std::size_t i = 0; i < s.n; ++i) {
    dev_m += (l[i] - s.mean_m) * (l[i] - s.mean_m) + (r[i] - s.mean_m) * (r[i] - s.mean_m);
    dev_x += (x[i] - s.mean_x) * (x[i] - s.mean_x);
  }
  s.var_m = dev_m / (pooled - 1.0);
  s.var_x = s.n > 1 ? dev_x / (s.n - 1.0) : 0.0;
  s.corr_lr = pearson(l, r);
  s.corr_lx = pearson(l, x);
  s.corr_rx = pearson(r, x);
  return s;
}

namespace {

double half_tanh_complement(double mean, double scale) {
  if (!(scale > 0.0)) {
    if (mean > 0.0) return 0.0;
    if (mean < 0.0) return 1.0;
    return 0.5;
  }
  return 0.5 * (1.0 - std::tanh(mean / scale));
}

}  // namespace

double q_ndr(const MomentStats& s) {
  const double corr = s.corr_lr.value_or(0.0);
  const double inner = s.mean_x2 / 2.0 + s.var_m * (1.0 + corr / 2.0);
  return half_tanh_complement(s.mean_m, std::sqrt(std::max(0.0, inner)));
}

double q_ndr_simplified(const MomentStats& s) {
  return half_tanh_complement(s.mean_m, std::sqrt(std::max(0.0, s.var_m)));
}

std::optional<double> q_nls(const MomentStats& s) {
  if (!(s.mean_m2 > 0.0)) return std::nullopt;
  return s.mean_x2 / s.mean_m2;
}

PredictedMoments predicted_moments(const MomentStats& s) {
  PredictedMoments p;
  const double corr = s.corr_lr.value_or(0.0);
  const double den = s.mean_x2 + s.mean_m2 + s.var_m * (1.0 - corr);
  if (den > 0.0) {
    p.and_or_mean = s.mean_m / std::sqrt(den);
    p.and_or_second = (s.mean_x2 + s.mean_m2 + s.var_m * (1.0 + corr)) / den;
    p.and_or_var = (s.mean_x2 + s.var_m * (2.0 + corr)) / den;
  }
  if (s.mean_m2 > 0.0) p.xor_second = s.mean_x2 / s.mean_m2;
  return p;
}

ExceedanceCurve exceedance_probability(std::span<const Quad> samples, GateKind gate, std::span<const double> deltas,
                                       double threshold) {
  if (!(threshold > 0.0)) throw std::invalid_argument("exceedance threshold must be positive");
  if (samples.empty()) throw std::invalid_argument("exceedance of an empty sample set is undefined");
  ExceedanceCurve curve;
  curve.deltas.assign(deltas.begin(), deltas.end());
  for (double delta : deltas) {
    std::size_t hits = 0;
    for (const auto& q : samples) {
      if (fitness(q, gate, delta).F > threshold) ++hits;
    }
    curve.probability.push_back(static_cast<double>(hits) / samples.size());
  }
  const auto [lo, hi] = std::minmax_element(curve.probability.begin(), curve.probability.end());
  const double span = curve.probability.empty() ? 0.0 : *hi - *lo;
  for (double p : curve.probability) curve.normalized.push_back(span > 0.0 ? (p - *lo) / span : 0.0);
  return curve;
}

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("ks_two_sample needs two non-empty samples");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = a.size(), nb = b.size();
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == v) ++i;
    while (j < b.size() && b[j] == v) ++j;
    d = std::max(d, std::fabs(i / na - j / nb));
  }
  KsResult res;
  res.statistic = d;
  const double en = std::sqrt(na * nb / (na + nb));
  const double lambda = (en + 0.12 + 0.11 / en) * d;
  // Kolmogorov tail 2 sum (-1)^(k-1) exp(-2 k^2 lambda^2).
  double sum = 0.0, sign = 1.0, prev = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = sign * 2.0 * std::exp(-2.0 * k * k * lambda * lambda);
    sum += term;
    if (std::fabs(term) <= 1e-3 * std::fabs(prev) || std::fabs(term) <= 1e-10 * sum) {
      res.p_value = std::clamp(sum, 0.0, 1.0);
      return res;
    }
    sign = -sign;
    prev = term;
  }
  res.p_value = 1.0;  // series fails to converge only as lambda -> 0
  return res;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double pos = std::clamp(q, 0.0, 1.0) * (values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - lo) * (values[hi] - values[lo]);
}

MetricsSummary summarize(std::span<const Quad> samples, const SummaryOptions& options) {
  MetricsSummary out;
  out.samples = samples.size();
  out.threshold = options.threshold;
  std::vector<Decomposition> dec;
  dec.reserve(samples.size());
  for (const auto& q : samples) dec.push_back(decompose(q));
  out.stats = moment_stats(dec);
  out.q_ndr = q_ndr(out.stats);
  out.q_ndr_simplified = q_ndr_simplified(out.stats);
  out.q_nls = q_nls(out.stats);
  out.predicted = predicted_moments(out.stats);

  for (GateKind gate : kAllGates) {
    GateSummary g;
    g.gate = gate;
    std::vector<double> f;
    for (const auto& q : samples) {
      const auto rec = fitness(q, gate);
      if (rec.infinite) {
        ++g.infinite;
      } else {
        f.push_back(rec.F);
      }
    }
    g.finite = f.size();
    if (!f.empty()) {
      g.mean = std::accumulate(f.begin(), f.end(), 0.0) / f.size();
      double ss = 0.0;
      for (double v : f) ss += (v - g.mean) * (v - g.mean);
      g.variance = f.size() > 1 ? ss / (f.size() - 1.0) : 0.0;
      g.q1 = quantile(f, 0.25);
      g.median = quantile(f, 0.5);
      g.q3 = quantile(f, 0.75);
    }
    out.gates.push_back(g);
    if (!samples.empty()) {
      out.exceedance.push_back(exceedance_probability(samples, gate, options.deltas, options.threshold));
    }
  }
  return out;
}

}  // namespace nanonet
