#include <random>

#include <benchmark/benchmark.h>

#include "pgov/config.hpp"
#include "pgov/embedding.hpp"
#include "pgov/entity_oracle.hpp"
#include "pgov/geometry.hpp"
#include "pgov/pseudo_label.hpp"
#include "pgov/scene_synth.hpp"

namespace {

using namespace pgov;

struct Room {
  GlobalScene scene;
  CameraTrajectory traj;
  CameraIntrinsics camera;
};

const Room& room() {
  static const Room r = [] {
    Room out;
    out.scene = generate_scene(make_room_spec(7));
    out.traj = generate_trajectory(out.scene, 4, 8);
    out.camera = PipelineConfig{}.camera.intrinsics;
    return out;
  }();
  return r;
}

RowMatrix random_inputs(Eigen::Index n) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  RowMatrix m(n, 6);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
  return m;
}

void BM_EncoderForward(benchmark::State& state) {
  const auto params = EncoderParams::initialize({6, 64, 64, 32}, 1);
  const RowMatrix x = random_inputs(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(encode_points(params, x));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_EncoderForward)->Arg(1024)->Arg(16384);

void BM_EncoderBackward(benchmark::State& state) {
  const auto params = EncoderParams::initialize({6, 64, 64, 32}, 1);
  const RowMatrix x = random_inputs(state.range(0));
  EncoderCache cache;
  const RowMatrix f = encode_points(params, x, &cache);
  const RowMatrix g = RowMatrix::Ones(f.rows(), f.cols());
  for (auto _ : state) benchmark::DoNotOptimize(encoder_backward(params, cache, g));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_EncoderBackward)->Arg(1024)->Arg(16384);

void BM_RenderFrame(benchmark::State& state) {
  const Room& r = room();
  for (auto _ : state) benchmark::DoNotOptimize(render_frame(r.scene, r.camera, r.traj.poses[0]));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(r.scene.points.size()));
}
BENCHMARK(BM_RenderFrame);

void BM_MatchPoints(benchmark::State& state) {
  const Room& r = room();
  const Frame fa = render_frame(r.scene, r.camera, r.traj.poses[0], 1, 0);
  const Frame fb = render_frame(r.scene, r.camera, r.traj.poses[1], 1, 1);
  const PartialCloud a = frame_to_partial_cloud(fa, oracle_pixel_entities(fa, r.scene, NoiseConfig{}));
  const PartialCloud b = frame_to_partial_cloud(fb, oracle_pixel_entities(fb, r.scene, NoiseConfig{}));
  const auto mode = state.range(0) == 0 ? MatchMode::kById : MatchMode::kByRadius;
  for (auto _ : state) benchmark::DoNotOptimize(match_points(a, b, mode, 0.02));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(a.size()));
}
BENCHMARK(BM_MatchPoints)->Arg(0)->Arg(1);

void BM_VoxelSubsample(benchmark::State& state) {
  std::vector<Vec3> positions;
  for (const auto& p : room().scene.points) positions.push_back(p.position);
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(voxel_subsample(positions, 0.05, seed++));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(positions.size()));
}
BENCHMARK(BM_VoxelSubsample);

}  // namespace

BENCHMARK_MAIN();
