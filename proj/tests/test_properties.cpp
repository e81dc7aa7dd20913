#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "gfl/verify.hpp"
#include "support/oracles.hpp"

namespace {

using gfl::Matrix;
using gfl::TaskKind;
using gfl::TaskSpec;

// Hand-rolled generator: a random connected graph with n in [4, 14], one of
// three families, and random resistances.
struct Case {
  gfl::Graph graph;
  std::uint64_t seed;
};

Case random_case(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const int n = std::uniform_int_distribution<int>(4, 14)(rng);
  switch (seed % 3) {
    case 0: return {gfl::generate_fc(n, seed), seed};
    case 1: return {gfl::generate_csl_random_skip(std::max(n, 10), seed), seed};
    default: return {oracle::random_connected(n, 0.35, seed), seed};
  }
}

constexpr int kCases = 40;

TaskSpec task_for(TaskKind kind, const gfl::Graph& g, double lmax, int k) {
  TaskSpec t;
  t.kind = kind;
  t.k = k;
  t.lambda_max_hint = lmax;
  switch (kind) {
    case TaskKind::electric_gd:
      t.step = 1.0 / lmax;
      t.layers = 25;
      break;
    case TaskKind::sqrt_series: t.layers = 25; break;
    case TaskKind::heat_series:
      t.temperature = 0.3;
      t.layers = static_cast<int>(std::ceil(8 * 0.3 * lmax)) + 6;
      break;
    case TaskKind::electric_fast:
      t.step = 1.0 / lmax;
      t.layers = 5;
      t.k = g.num_vertices();
      break;
    case TaskKind::heat_fast:
      t.temperature = 0.3;
      t.layers = 4;
      t.k = g.num_vertices();
      break;
    default: break;
  }
  return t;
}

void expect_bounds_hold(TaskKind kind) {
  int checked = 0;
  for (std::uint64_t seed = 0; seed < kCases; ++seed) {
    const auto c = random_case(seed);
    const auto [lmin, lmax] = oracle::extreme_nonzero(oracle::laplacian(c.graph));
    const int n = c.graph.num_vertices();
    const int k = 1 + static_cast<int>(seed % 3);
    const auto t = task_for(kind, c.graph, lmax, k);
    const auto demands = t.k == n ? gfl::identity_demands(n) : gfl::sample_demands(n, k, seed % 2 == 0, seed + 50);
    const auto r = gfl::run_task(c.graph, t, demands);
    for (const auto& row : r.layers) {
      if (!row.bound) continue;
      ++checked;
      EXPECT_LE(row.error, *row.bound * gfl::kBoundSlack)
          << gfl::to_string(kind) << " seed " << seed << " layer " << row.layer << " lambda_min " << lmin;
    }
  }
  EXPECT_GT(checked, 0);
}

TEST(Property, SqrtSeriesBoundHolds) { expect_bounds_hold(TaskKind::sqrt_series); }
TEST(Property, HeatSeriesBoundHolds) { expect_bounds_hold(TaskKind::heat_series); }
TEST(Property, ElectricFastBoundHolds) { expect_bounds_hold(TaskKind::electric_fast); }
TEST(Property, HeatFastBoundHolds) { expect_bounds_hold(TaskKind::heat_fast); }

TEST(Property, ElectricGdBoundHoldsWhenLambdaMinAtLeastOne) {
  // The 1/sqrt(lambda_min) constant only dominates the initial error when
  // lambda_min >= 1; smaller spectra are covered by the contraction test below.
  int checked = 0;
  for (std::uint64_t seed = 0; seed < kCases; ++seed) {
    const auto c = random_case(seed);
    const auto [lmin, lmax] = oracle::extreme_nonzero(oracle::laplacian(c.graph));
    if (lmin < 1.0) continue;
    const int k = 1 + static_cast<int>(seed % 3);
    const auto r = gfl::run_task(c.graph, task_for(TaskKind::electric_gd, c.graph, lmax, k),
                                 gfl::sample_demands(c.graph.num_vertices(), k, true, seed + 50));
    for (const auto& row : r.layers) {
      ++checked;
      EXPECT_EQ(row.satisfied(), true) << "seed " << seed << " layer " << row.layer;
    }
  }
  EXPECT_GT(checked, 0);
}

TEST(Property, ElectricGdErrorContractsAtRateOneMinusStepLambdaMin) {
  for (std::uint64_t seed = 0; seed < kCases; ++seed) {
    const auto c = random_case(seed);
    const auto [lmin, lmax] = oracle::extreme_nonzero(oracle::laplacian(c.graph));
    const auto r = gfl::run_task(c.graph, task_for(TaskKind::electric_gd, c.graph, lmax, 2),
                                 gfl::sample_demands(c.graph.num_vertices(), 2, true, seed + 50));
    const double rate = 1.0 - lmin / lmax;
    for (std::size_t l = 1; l < r.layers.size(); ++l) {
      EXPECT_LE(r.layers[l].error, rate * r.layers[l - 1].error * (1 + 1e-9) + 1e-14) << "seed " << seed;
    }
  }
}

TEST(Property, EnginesAgreeOnRandomGraphs) {
  for (std::uint64_t seed = 0; seed < 15; ++seed) {
    const auto c = random_case(seed);
    const auto [lmin, lmax] = oracle::extreme_nonzero(oracle::laplacian(c.graph));
    const int n = c.graph.num_vertices();
    for (auto kind : {TaskKind::electric_gd, TaskKind::sqrt_series, TaskKind::heat_series}) {
      auto t = task_for(kind, c.graph, lmax, 2);
      t.layers = 8;
      const auto demands = gfl::sample_demands(n, 2, true, seed);
      const auto full = gfl::run_task(c.graph, t, demands, gfl::Engine::full);
      const auto eff = gfl::run_task(c.graph, t, demands, gfl::Engine::efficient);
      for (std::size_t l = 0; l < full.layers.size(); ++l) {
        EXPECT_NEAR(full.layers[l].error, eff.layers[l].error, 1e-9) << gfl::to_string(kind) << " seed " << seed;
      }
    }
  }
}

TEST(Property, LossUScaleInvariance) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(seed);
    const int n = std::uniform_int_distribution<int>(2, 12)(rng);
    const int k = std::uniform_int_distribution<int>(1, 4)(rng);
    const double c1 = std::exp(std::uniform_real_distribution<double>(-5, 5)(rng));
    const double c2 = std::exp(std::uniform_real_distribution<double>(-5, 5)(rng));
    const Matrix p = oracle::random_matrix(n, k, seed);
    const Matrix t = oracle::random_matrix(n, k, seed + 1000);
    EXPECT_NEAR(gfl::loss_u(c1 * p, c2 * t), gfl::loss_u(p, t), 1e-13);
  }
}

TEST(Property, EquivarianceUnderRandomWeights) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto c = random_case(seed);
    std::mt19937_64 rng(seed);
    const int k = std::uniform_int_distribution<int>(1, 3)(rng);
    std::normal_distribution<double> gauss(0.0, 0.2);
    std::vector<gfl::EfficientLayerWeights> cfg(3);
    for (std::size_t l = 0; l < cfg.size(); ++l) {
      auto& w = cfg[l];
      w.alpha_value = gauss(rng);
      w.alpha_query = gauss(rng);
      w.alpha_key = gauss(rng);
      w.alpha_residual = gauss(rng);
      w.value_phi = oracle::random_matrix(2 * k, 2 * k, seed * 17 + l, 0.2);
      w.query_phi = oracle::random_matrix(2 * k, 2 * k, seed * 19 + l, 0.2);
      w.key_phi = oracle::random_matrix(2 * k, 2 * k, seed * 23 + l, 0.2);
      w.residual_phi = oracle::random_matrix(2 * k, 2 * k, seed * 29 + l, 0.2);
    }
    const auto perm = oracle::random_permutation(c.graph.num_edges(), seed);
    const auto v = gfl::check_equivariance(c.graph, cfg, perm, oracle::random_matrix(2 * k, c.graph.num_vertices(), seed));
    EXPECT_TRUE(v.pass) << "seed " << seed << " deviation " << v.max_deviation;
  }
}

TEST(Property, SubspaceUnitMatchesReferenceIteration) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto c = random_case(seed);
    const int n = c.graph.num_vertices();
    const int k = 1 + static_cast<int>(seed % std::min(4, n - 1));
    for (auto kind : {TaskKind::subspace_top_k, TaskKind::subspace_bottom_k}) {
      TaskSpec t;
      t.kind = kind;
      t.k = k;
      t.layers = 3 * (k + 1);
      t.shift = oracle::extreme_nonzero(oracle::laplacian(c.graph)).second;
      const auto r = gfl::run_task(c.graph, t, gfl::sample_demands(n, k, false, seed));
      for (const auto& row : r.layers) EXPECT_LE(row.error, gfl::kSubspaceTolerance) << "seed " << seed;
    }
  }
}

}  // namespace
