#include <map>
#include <numeric>
#include <vector>

#include <benchmark/benchmark.h>

#include "stba/bench.hpp"
#include "stba/camera_graph.hpp"
#include "stba/clustering.hpp"
#include "stba/normal_equations.hpp"
#include "stba/robust_jacobians.hpp"
#include "stba/split.hpp"

namespace {

using namespace stba;

const BundleProblem& ring(int cameras) {
  static std::map<int, BundleProblem> cache;
  auto it = cache.find(cameras);
  if (it == cache.end()) {
    SyntheticSpec spec;
    spec.cameras = cameras;
    spec.points = 30 * cameras;
    spec.density = 0.3;
    spec.view_window_deg = 30.0;
    spec.pixel_noise = 0.5;
    spec.seed = 1;
    it = cache.emplace(cameras, perturb(generate_synthetic(spec), {0.5, 0.5, 1})).first;
  }
  return it->second;
}

void BM_Jacobians(benchmark::State& state) {
  const BundleProblem& p = ring(static_cast<int>(state.range(0)));
  const VecX x = p.parameters();
  for (auto _ : state) {
    benchmark::DoNotOptimize(weighted_blocks(p, x, RobustKernel{0.5}));
  }
  state.counters["observations"] = p.num_observations();
}
BENCHMARK(BM_Jacobians)->Arg(100)->Arg(300)->Unit(benchmark::kMillisecond);

void BM_Clustering(benchmark::State& state) {
  const CameraGraph graph = build_camera_graph(ring(static_cast<int>(state.range(0))));
  Rng rng(3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(cluster_stochastic(graph, 50, 10.0, rng));
  }
}
BENCHMARK(BM_Clustering)->Arg(100)->Arg(300)->Unit(benchmark::kMillisecond);

void BM_DenseReducedSolve(benchmark::State& state) {
  const BundleProblem& p = ring(static_cast<int>(state.range(0)));
  const JacobianBlocks blocks = weighted_blocks(p, p.parameters(), RobustKernel{0.5});
  const ReducedCameraSystem rcs = schur_reduce(p, assemble_normal_blocks(p, blocks, 1e-4));
  std::vector<int> cameras(p.num_cameras());
  std::iota(cameras.begin(), cameras.end(), 0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_dense(rcs, cameras));
  }
}
BENCHMARK(BM_DenseReducedSolve)->Arg(100)->Arg(300)->Unit(benchmark::kMillisecond);

void BM_ClusteredReducedSolve(benchmark::State& state) {
  const BundleProblem& p = ring(static_cast<int>(state.range(0)));
  const JacobianBlocks blocks = weighted_blocks(p, p.parameters(), RobustKernel{0.5});
  Rng rng(5);
  const ClusterAssignment assignment = cluster_stochastic(build_camera_graph(p), 50, 10.0, rng);
  SplitIndex split = split_points(p, assignment);
  assemble_split_blocks(split, blocks, 1e-4);
  const NormalBlocks normal = assemble_normal_blocks(p, blocks, 1e-4);
  const SplitSystem system = cluster_schur(p, normal, split, assignment);
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_clusters(system));
  }
  state.counters["clusters"] = assignment.count();
}
BENCHMARK(BM_ClusteredReducedSolve)->Arg(100)->Arg(300)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
