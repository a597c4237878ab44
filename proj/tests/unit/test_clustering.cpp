#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <set>

#include "fixtures.hpp"
#include "stba/camera_graph.hpp"
#include "stba/clustering.hpp"

namespace stba {
namespace {

using testing::toy_problem;

CameraGraph counting_example() { return CameraGraph(3, {{0, 1, 4.0}, {1, 2, 2.0}}); }

// Two 6-cliques joined by one weak edge.
CameraGraph two_cliques() {
  std::vector<CameraEdge> edges;
  for (int base : {0, 6}) {
    for (int i = 0; i < 6; ++i) {
      for (int j = i + 1; j < 6; ++j) edges.push_back({base + i, base + j, 10.0});
    }
  }
  edges.push_back({5, 6, 1.0});
  return CameraGraph(12, std::move(edges));
}

CameraGraph random_graph(int nodes, double p, Rng& rng) {
  std::vector<CameraEdge> edges;
  for (int i = 0; i < nodes; ++i) {
    for (int j = i + 1; j < nodes; ++j) {
      if (uniform01(rng) < p) edges.push_back({i, j, static_cast<double>(1 + rng() % 9)});
    }
  }
  return CameraGraph(nodes, std::move(edges));
}

TEST(CameraGraph, DegreesAndTotalWeight) {
  const CameraGraph g = counting_example();
  EXPECT_EQ(g.degree(0), 4.0);
  EXPECT_EQ(g.degree(1), 6.0);
  EXPECT_EQ(g.degree(2), 2.0);
  EXPECT_EQ(g.total_weight(), 6.0);
}

TEST(CameraGraph, BuiltFromProblemMatchesCountingOracle) {
  const BundleProblem problem = toy_problem(7, 40, 81, 0.05, 0.5);
  std::map<std::pair<int, int>, int> counts;
  for (int j = 0; j < problem.num_points(); ++j) {
    const auto [b, e] = problem.point_observation_range(j);
    for (int p = b; p < e; ++p) {
      for (int q = p + 1; q < e; ++q) {
        ++counts[{problem.observations()[p].camera, problem.observations()[q].camera}];
      }
    }
  }
  const CameraGraph g = build_camera_graph(problem);
  ASSERT_EQ(g.edges().size(), counts.size());
  for (const CameraEdge& e : g.edges()) {
    EXPECT_LT(e.i, e.j);
    EXPECT_EQ(e.weight, counts.at({e.i, e.j}));
    EXPECT_GE(e.weight, 1.0);
  }
}

TEST(ClusterAssignment, DenseRelabeling) {
  const ClusterAssignment a({7, 3, 7, 9});
  EXPECT_EQ(a.count(), 3);
  EXPECT_EQ(a.labels(), (std::vector<int>{0, 1, 0, 2}));
  EXPECT_EQ(a.members(0), (std::vector<int>{0, 2}));
  EXPECT_EQ(a.max_size(), 2);
}

TEST(Modularity, SingletonsAreZero) {
  EXPECT_EQ(modularity(counting_example(), ClusterAssignment::singletons(3)), 0.0);
}

TEST(Modularity, CountingExample) {
  EXPECT_NEAR(modularity(counting_example(), ClusterAssignment({0, 0, 1})), 1.0 / 6.0, 1e-15);
}

TEST(Modularity, MergeIncrementFromSingletons) {
  const CameraGraph g = counting_example();
  EXPECT_NEAR(delta_modularity(g, ClusterAssignment::singletons(3), 0, 1), 1.0 / 6.0, 1e-15);
}

TEST(Modularity, DisconnectedMergeIsNonPositive) {
  const CameraGraph g = counting_example();
  EXPECT_LE(delta_modularity(g, ClusterAssignment::singletons(3), 0, 2), 0.0);
}

TEST(Modularity, BoundedOnRandomGraphs) {
  Rng rng(82);
  for (int k = 0; k < 1000; ++k) {
    const int n = 2 + static_cast<int>(rng() % 20);
    const CameraGraph g = random_graph(n, 0.4, rng);
    if (g.total_weight() == 0.0) continue;
    std::vector<int> labels(n);
    for (int& l : labels) l = static_cast<int>(rng() % 4);
    const double q = modularity(g, ClusterAssignment(labels));
    EXPECT_GE(q, -1.0);
    EXPECT_LE(q, 1.0);
  }
}

TEST(Modularity, IncrementMatchesFullRecompute) {
  Rng rng(83);
  for (int k = 0; k < 300; ++k) {
    const int n = 4 + static_cast<int>(rng() % 20);
    const CameraGraph g = random_graph(n, 0.3, rng);
    if (g.total_weight() == 0.0) continue;
    std::vector<int> labels(n);
    for (int& l : labels) l = static_cast<int>(rng() % 5);
    const ClusterAssignment a(labels);
    if (a.count() < 2) continue;
    std::vector<int> merged = a.labels();
    for (int& l : merged) {
      if (l == 1) l = 0;
    }
    const double full = modularity(g, ClusterAssignment(merged)) - modularity(g, a);
    EXPECT_NEAR(delta_modularity(g, a, 0, 1), full, 1e-12);
  }
}

TEST(SampleMerge, TwoCandidateSoftmax) {
  const std::vector<MergeCandidate> c{{0, 1, 0.1}, {0, 2, 0.2}};
  Rng rng(84);
  int second = 0;
  for (int d = 0; d < 100000; ++d) second += sample_merge(c, 10.0, rng) == 1;
  EXPECT_NEAR(second / 1e5, 0.7311, 0.01);
}

TEST(SampleMerge, SingleCandidateAlwaysChosen) {
  const std::vector<MergeCandidate> c{{2, 3, 0.05}};
  Rng rng(85);
  for (int d = 0; d < 100; ++d) EXPECT_EQ(sample_merge(c, 10.0, rng), 0u);
}

TEST(SampleMerge, LargeBetaPicksArgmax) {
  const std::vector<MergeCandidate> c{{0, 1, 0.1}, {0, 2, 0.3}, {1, 2, 0.2}};
  Rng rng(86);
  for (int d = 0; d < 100000; ++d) ASSERT_EQ(sample_merge(c, 1e6, rng), 1u);
}

TEST(SampleMerge, CalibratedAcrossSeeds) {
  // Chi-square with 2 degrees of freedom has mean 2; average over seeds.
  const std::vector<MergeCandidate> c{{0, 1, 0.05}, {1, 2, 0.12}, {0, 3, 0.2}};
  double p[3], total = 0.0;
  for (int k = 0; k < 3; ++k) total += p[k] = std::exp(10.0 * c[k].delta_q);
  double mean_chi2 = 0.0;
  constexpr int kSeeds = 50;
  constexpr int kDraws = 20000;
  for (int s = 0; s < kSeeds; ++s) {
    Rng rng(1000 + s);
    int n[3] = {0, 0, 0};
    for (int d = 0; d < kDraws; ++d) ++n[sample_merge(c, 10.0, rng)];
    for (int k = 0; k < 3; ++k) {
      const double e = kDraws * p[k] / total;
      mean_chi2 += (n[k] - e) * (n[k] - e) / e / kSeeds;
    }
  }
  // Standard error of the mean is 2 / sqrt(50) ~ 0.28.
  EXPECT_NEAR(mean_chi2, 2.0, 1.2);
}

TEST(ClusterStochastic, GammaOneGivesSingletons) {
  Rng rng(87);
  const ClusterAssignment a = cluster_stochastic(two_cliques(), 1, 10.0, rng);
  EXPECT_EQ(a, ClusterAssignment::singletons(12));
}

TEST(ClusterStochastic, LargeBetaFindsCliques) {
  Rng rng(88);
  const ClusterAssignment a = cluster_stochastic(two_cliques(), kUnbounded, 1e6, rng);
  EXPECT_EQ(a, ClusterAssignment({0, 0, 0, 0, 0, 0, 1, 1, 1, 1, 1, 1}));
  EXPECT_EQ(a, cluster_deterministic(two_cliques(), kUnbounded));
}

TEST(ClusterStochastic, RespectsCapForEverySeed) {
  Rng graph_rng(89);
  const CameraGraph g = random_graph(40, 0.2, graph_rng);
  for (std::size_t gamma : {2u, 5u, 11u}) {
    for (int s = 0; s < 50; ++s) {
      Rng rng(s);
      EXPECT_LE(cluster_stochastic(g, gamma, 10.0, rng).max_size(), static_cast<int>(gamma));
    }
  }
}

TEST(ClusterStochastic, EveryMergeImprovesModularity) {
  Rng graph_rng(90);
  const CameraGraph g = random_graph(30, 0.25, graph_rng);
  Rng rng(91);
  std::vector<MergeCandidate> log;
  cluster_stochastic(g, 8, 10.0, rng, &log);
  ASSERT_FALSE(log.empty());
  for (const auto& m : log) EXPECT_GT(m.delta_q, 0.0);
}

TEST(ClusterStochastic, ProducesDistinctPartitions) {
  Rng graph_rng(92);
  const CameraGraph g = random_graph(20, 0.3, graph_rng);
  std::set<std::vector<int>> seen;
  for (int s = 0; s < 200; ++s) {
    Rng rng(s);
    seen.insert(cluster_stochastic(g, 6, 10.0, rng).labels());
  }
  EXPECT_GE(seen.size(), 2u);
}

TEST(ClusterStochastic, SameStreamSameResult) {
  Rng graph_rng(93);
  const CameraGraph g = random_graph(25, 0.3, graph_rng);
  Rng a = iteration_stream(5, 3);
  Rng b = iteration_stream(5, 3);
  EXPECT_EQ(cluster_stochastic(g, 6, 10.0, a), cluster_stochastic(g, 6, 10.0, b));
  Rng c = iteration_stream(5, 4);
  Rng d = iteration_stream(5, 3);
  EXPECT_NE(c(), d());
}

TEST(ClusterDeterministic, RepeatableAndNonNegativeQ) {
  Rng graph_rng(94);
  for (int k = 0; k < 20; ++k) {
    const CameraGraph g = random_graph(30, 0.2, graph_rng);
    std::vector<MergeCandidate> log;
    const ClusterAssignment a = cluster_deterministic(g, 10, &log);
    EXPECT_EQ(a, cluster_deterministic(g, 10));
    EXPECT_GE(modularity(g, a), 0.0);
    for (const auto& m : log) EXPECT_GT(m.delta_q, 0.0);
  }
}

TEST(IntraClusterFrequency, EdgesCoveredWhenGraphFits) {
  const BundleProblem problem = toy_problem(12, 80, 95, 0.05, 0.4);
  const CameraGraph g = build_camera_graph(problem);
  std::vector<ClusterAssignment> draws;
  for (int s = 0; s < 100; ++s) {
    Rng rng = iteration_stream(96, s);
    draws.push_back(cluster_stochastic(g, 12, 10.0, rng));
  }
  const std::vector<double> freq = intra_cluster_frequency(g, draws);
  ASSERT_EQ(freq.size(), g.edges().size());
  for (double f : freq) {
    EXPECT_GE(f, 0.0);
    EXPECT_LE(f, 1.0);
  }
  const ClusterAssignment all = ClusterAssignment::single(12);
  for (double f : intra_cluster_frequency(g, std::vector<ClusterAssignment>{all})) {
    EXPECT_EQ(f, 1.0);
  }
}

}  // namespace
}  // namespace stba
