#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "nanonet/analysis.hpp"

using namespace nanonet;

namespace {

void expect_decomposition(const Decomposition& d, double l, double r, double x) {
  EXPECT_NEAR(d.m_l, l, 1e-15);
  EXPECT_NEAR(d.m_r, r, 1e-15);
  EXPECT_NEAR(d.x, x, 1e-15);
}

MomentStats stats_with(double mean_m, double var_m, double mean_x2, std::optional<double> corr_lr) {
  MomentStats s;
  s.n = 100;
  s.mean_m = mean_m;
  s.var_m = var_m;
  s.mean_m2 = var_m + mean_m * mean_m;
  s.mean_x2 = mean_x2;
  s.corr_lr = corr_lr;
  return s;
}

std::vector<Quad> random_quads(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  std::vector<Quad> out(n);
  for (auto& q : out)
    for (auto& v : q) v = nd(rng);
  return out;
}

}  // namespace

TEST(Decompose, Examples) {
  expect_decomposition(decompose({0, 0, 0, 0}), 0, 0, 0);
  expect_decomposition(decompose({0, 0, 0, 4}), 1, 1, 1);
  expect_decomposition(decompose({1, 2, 3, 4}), 0.5, 1.0, 0.0);
  expect_decomposition(decompose({0, 1, 1, 0.2}), 0.05, 0.05, -0.45);
}

TEST(Decompose, Linear) {
  const auto qs = random_quads(200, 3);
  for (std::size_t k = 0; k + 1 < qs.size(); k += 2) {
    const double a = 1.7;
    const double b = -0.3;
    Quad mix;
    for (int i = 0; i < 4; ++i) mix[i] = a * qs[k][i] + b * qs[k + 1][i];
    const auto d = decompose(mix);
    const auto d1 = decompose(qs[k]);
    const auto d2 = decompose(qs[k + 1]);
    EXPECT_NEAR(d.m_l, a * d1.m_l + b * d2.m_l, 1e-13);
    EXPECT_NEAR(d.m_r, a * d1.m_r + b * d2.m_r, 1e-13);
    EXPECT_NEAR(d.x, a * d1.x + b * d2.x, 1e-13);
  }
}

TEST(Fitness, AndExample) {
  const auto f = fitness({0.1, 0.2, 0.1, 1.0}, GateKind::AND);
  EXPECT_NEAR(f.m, 0.8666667, 1e-6);
  EXPECT_NEAR(f.mse, 0.0016667, 1e-7);
  EXPECT_NEAR(f.F, 21.23, 0.005);
  EXPECT_DOUBLE_EQ(f.c, (0.1 + 0.2 + 0.1) / 3.0);
  EXPECT_FALSE(f.infinite);
}

TEST(Fitness, XorExample) {
  EXPECT_NEAR(fitness({0, 1, 1, 0.2}, GateKind::XOR).F, 12.73, 0.005);
  const auto cf = closed_form_fitness(decompose({0, 1, 1, 0.2}), GateKind::XOR);
  EXPECT_NEAR(cf.F, 0.9 / std::sqrt(0.005), 1e-12);
}

TEST(Fitness, ConstantResponseIsNeutral) {
  for (auto gate : kAllGates) {
    const auto f = fitness({2.5e-12, 2.5e-12, 2.5e-12, 2.5e-12}, gate, 0.0);
    EXPECT_EQ(f.F, 0.0);
    EXPECT_FALSE(f.infinite);
  }
}

TEST(Fitness, PerfectGateIsInfinite) {
  const auto f = fitness({0, 0, 0, 1}, GateKind::AND);
  EXPECT_TRUE(f.infinite);
  EXPECT_EQ(f.F, std::numeric_limits<double>::infinity());
  const auto g = fitness({0, 0, 0, 1}, GateKind::NAND);
  EXPECT_TRUE(g.infinite);
  EXPECT_EQ(g.F, -std::numeric_limits<double>::infinity());
  // Offset penalty makes it finite again.
  const auto h = fitness({1, 1, 1, 2}, GateKind::AND, 0.01);
  EXPECT_FALSE(h.infinite);
  EXPECT_NEAR(h.F, 100.0, 1e-12);
}

TEST(Fitness, ClosedFormEquivalence) {
  const auto qs = random_quads(1000, 17);
  for (const auto& q : qs) {
    const auto d = decompose(q);
    for (auto gate : kAllGates) {
      const double direct = fitness(q, gate).F;
      const double closed = closed_form_fitness(d, gate).F;
      // Relative to max(|F|, 1): near-zero F carries absolute round-off only.
      EXPECT_LE(std::abs(direct - closed), 1e-12 * std::max(std::abs(direct), 1.0)) << to_string(gate);
    }
  }
}

TEST(Fitness, MirrorIdentitiesExact) {
  const auto qs = random_quads(1000, 23);
  for (const auto& q : qs) {
    EXPECT_EQ(fitness(q, GateKind::NAND).F, -fitness(q, GateKind::AND).F);
    EXPECT_EQ(fitness(q, GateKind::NOR).F, -fitness(q, GateKind::OR).F);
    EXPECT_EQ(fitness(q, GateKind::XNOR).F, -fitness(q, GateKind::XOR).F);
  }
}

TEST(Fitness, ScaleInvariance) {
  const auto qs = random_quads(100, 5);
  for (const auto& q : qs) {
    for (auto gate : kAllGates) {
      const double f = fitness(q, gate).F;
      for (double lambda : {1e-12, 3.0, -2.0}) {
        Quad s;
        for (int i = 0; i < 4; ++i) s[i] = lambda * q[i];
        const double expected = lambda > 0 ? f : -f;
        EXPECT_NEAR(fitness(s, gate).F, expected, 1e-10 * std::abs(f));
      }
    }
  }
}

TEST(Fitness, SymmetricClosedForm) {
  for (double m : {0.3, -2.0}) {
    const auto f = closed_form_fitness({m, m, 0.0}, GateKind::AND);
    EXPECT_NEAR(f.F, 2.0 * std::sqrt(8.0 / 3.0) * (m > 0 ? 1.0 : -1.0), 1e-12);
  }
  EXPECT_TRUE(closed_form_fitness({0.0, 0.0, 0.3}, GateKind::XOR).infinite);
  EXPECT_EQ(closed_form_fitness({0.0, 0.0, 0.0}, GateKind::XOR).F, 0.0);
}

TEST(Fitness, GateNames) {
  for (auto gate : kAllGates) EXPECT_EQ(gate_from_string(to_string(gate)), gate);
  EXPECT_THROW(gate_from_string("NOT"), std::runtime_error);
}

TEST(QMetrics, NdrExamples) {
  EXPECT_DOUBLE_EQ(q_ndr(stats_with(0.0, 1.0, 1.0, 0.2)), 0.5);
  EXPECT_NEAR(q_ndr(stats_with(1e6, 1.0, 1.0, 0.0)), 0.0, 1e-12);
  // <M> equal to the sigma term: Var = 1, corr = 0, <X^2> = 0 gives sqrt(1) = 1.
  EXPECT_NEAR(q_ndr(stats_with(1.0, 1.0, 0.0, 0.0)), 0.5 * (1.0 - std::tanh(1.0)), 1e-15);
  EXPECT_NEAR(q_ndr(stats_with(1.0, 1.0, 0.0, 0.0)), 0.1192, 1e-4);
  // <X^2>/2 + Var (1 + corr/2) = 1 + 2 * 1.5 = 4
  EXPECT_NEAR(q_ndr(stats_with(2.0, 2.0, 2.0, 1.0)), 0.5 * (1.0 - std::tanh(1.0)), 1e-15);
  EXPECT_NEAR(q_ndr_simplified(stats_with(2.0, 4.0, 9.0, 1.0)), 0.5 * (1.0 - std::tanh(1.0)), 1e-15);
}

TEST(QMetrics, NdrDegenerateLimits) {
  EXPECT_EQ(q_ndr(stats_with(1.0, 0.0, 0.0, std::nullopt)), 0.0);
  EXPECT_EQ(q_ndr(stats_with(0.0, 0.0, 0.0, std::nullopt)), 0.5);
  EXPECT_EQ(q_ndr(stats_with(-1.0, 0.0, 0.0, std::nullopt)), 1.0);
  EXPECT_EQ(q_ndr_simplified(stats_with(1.0, 0.0, 0.0, std::nullopt)), 0.0);
}

TEST(QMetrics, NlsExamples) {
  const std::vector<Decomposition> zero_x = {{1, 2, 0}, {0.5, -1, 0}, {3, 1, 0}};
  EXPECT_EQ(*q_nls(moment_stats(zero_x)), 0.0);
  const std::vector<Decomposition> equal = {{1, 1, 1}, {-2, -2, -2}, {0.5, 0.5, 0.5}};
  EXPECT_NEAR(*q_nls(moment_stats(equal)), 1.0, 1e-15);
  const std::vector<Decomposition> pooled = {{1, 1, 1}, {1, 1, -1}};
  const auto s = moment_stats(pooled);
  EXPECT_DOUBLE_EQ(s.mean_x2, 1.0);
  EXPECT_DOUBLE_EQ(s.mean_m2, 1.0);
  EXPECT_DOUBLE_EQ(*q_nls(s), 1.0);
  const std::vector<Decomposition> flat = {{0, 0, 1}, {0, 0, 2}};
  EXPECT_FALSE(q_nls(moment_stats(flat)).has_value());
}

TEST(QMetrics, PooledMoments) {
  const std::vector<Decomposition> d = {{1, 3, 0.5}, {2, 4, -0.5}};
  const auto s = moment_stats(d);
  EXPECT_EQ(s.n, 2u);
  EXPECT_DOUBLE_EQ(s.mean_m, 2.5);
  EXPECT_DOUBLE_EQ(s.mean_m2, (1 + 9 + 4 + 16) / 4.0);
  EXPECT_DOUBLE_EQ(s.mean_x, 0.0);
  ASSERT_TRUE(s.corr_lr.has_value());
  EXPECT_NEAR(*s.corr_lr, 1.0, 1e-15);
  EXPECT_NEAR(*s.corr_lx, -1.0, 1e-15);
}

TEST(QMetrics, PredictedXorVanishesWithoutCoupling) {
  const std::vector<Decomposition> d = {{1, 2, 0}, {2, 1, 0}, {1.5, 0.5, 0}};
  const auto p = predicted_moments(moment_stats(d));
  ASSERT_TRUE(p.xor_second.has_value());
  EXPECT_EQ(*p.xor_second, 0.0);
  EXPECT_EQ(p.xor_mean, 0.0);
  ASSERT_TRUE(p.and_or_mean.has_value());
  EXPECT_GT(*p.and_or_mean, 0.0);
}

TEST(Pearson, Basics) {
  const std::vector<double> a = {1, 2, 3, 4, 5};
  const std::vector<double> neg = {-1, -2, -3, -4, -5};
  EXPECT_NEAR(*pearson(a, a), 1.0, 1e-15);
  EXPECT_NEAR(*pearson(a, neg), -1.0, 1e-15);
  const std::vector<double> flat = {2, 2, 2, 2, 2};
  EXPECT_FALSE(pearson(a, flat).has_value());
  EXPECT_FALSE(pearson(std::vector<double>{1.0}, std::vector<double>{2.0}).has_value());
}

TEST(Pearson, IndependentSamples) {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> a(10000);
  std::vector<double> b(10000);
  for (auto& v : a) v = u(rng);
  for (auto& v : b) v = u(rng);
  EXPECT_LT(std::abs(*pearson(a, b)), 0.05);
}

TEST(Exceedance, MonotoneInDelta) {
  const auto qs = random_quads(2000, 41);
  const std::vector<double> deltas = {0.0, 0.001, 0.01, 0.1, 1.0, 10.0};
  for (auto gate : kAllGates) {
    const auto curve = exceedance_probability(qs, gate, deltas, 1.0);
    for (std::size_t k = 1; k < deltas.size(); ++k) EXPECT_LE(curve.probability[k], curve.probability[k - 1]);
    for (double v : curve.normalized) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
}

TEST(Exceedance, Extremes) {
  std::vector<Quad> good = {{0.1, 0.12, 0.11, 1.0}, {0.2, 0.21, 0.19, 2.0}};
  const std::vector<double> deltas = {0.0, 1e6};
  const auto curve = exceedance_probability(good, GateKind::AND, deltas, 4.0);
  EXPECT_EQ(curve.probability[0], 1.0);
  EXPECT_EQ(curve.probability[1], 0.0);
  EXPECT_EQ(curve.normalized[0], 1.0);
  EXPECT_EQ(curve.normalized[1], 0.0);
}

TEST(KolmogorovSmirnov, SameDistributionRarelyRejected) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> nd;
  int rejected = 0;
  const int trials = 200;
  for (int t = 0; t < trials; ++t) {
    std::vector<double> a(300);
    std::vector<double> b(300);
    for (auto& v : a) v = nd(rng);
    for (auto& v : b) v = nd(rng);
    if (ks_two_sample(a, b).p_value < 0.05) ++rejected;
  }
  // Nominal 5%; binomial 3 sigma is about 4.6%.
  EXPECT_LT(rejected, trials * 0.05 + 3.0 * std::sqrt(trials * 0.05 * 0.95));
}

TEST(KolmogorovSmirnov, DetectsShift) {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> nd;
  std::vector<double> a(500);
  std::vector<double> b(500);
  for (auto& v : a) v = nd(rng);
  for (auto& v : b) v = nd(rng) + 0.5;
  const auto r = ks_two_sample(a, b);
  EXPECT_LT(r.p_value, 1e-6);
  EXPECT_GT(r.statistic, 0.1);
}

TEST(Quantile, LinearInterpolation) {
  EXPECT_DOUBLE_EQ(quantile({4, 1, 3, 2}, 0.5), 2.5);
  EXPECT_DOUBLE_EQ(quantile({4, 1, 3, 2}, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(quantile({4, 1, 3, 2}, 1.0), 4.0);
  EXPECT_DOUBLE_EQ(quantile({0, 10}, 0.75), 7.5);
}

TEST(Summary, CountsAndRanges) {
  auto qs = random_quads(500, 8);
  qs.push_back({0, 0, 0, 1});
  const auto s = summarize(qs);
  EXPECT_EQ(s.samples, qs.size());
  EXPECT_EQ(s.gates.size(), kAllGates.size());
  EXPECT_EQ(s.exceedance.size(), kAllGates.size());
  EXPECT_GE(s.q_ndr, 0.0);
  EXPECT_LE(s.q_ndr, 1.0);
  for (const auto& g : s.gates) {
    EXPECT_LE(g.q1, g.median);
    EXPECT_LE(g.median, g.q3);
  }
  EXPECT_EQ(s.gates[0].infinite, 1u);
  EXPECT_EQ(s.gates[0].finite, 500u);
}
