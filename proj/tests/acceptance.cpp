// One PASS/FAIL line per acceptance criterion. Pass criterion numbers as
// arguments to run a subset.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Geometry>
#include <fcntl.h>
#include <unistd.h>

#include "grad_check.hpp"
#include "pgov/io.hpp"
#include "pgov/pipeline.hpp"
#include "pgov_cli/cli.hpp"
#include "smoothing_oracle.hpp"

namespace fs = std::filesystem;
using namespace pgov;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("pgov_acceptance_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

Outcome gradient_correctness() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  int instances = 0;
  for (std::uint64_t seed = 1000; seed < 1020; ++seed) {
    const testing::GradInstance in = testing::make_grad_instance(seed);
    std::size_t pairs = 0, points = 0;
    for (const auto& m : in.matches) pairs += m.size();
    for (const auto& c : in.clouds) points = std::max(points, c.size());
    if (pairs == 0 || points > 30 || in.params.output_dim() > 8) return {false, "instance outside the required shape"};
    worst = std::max(worst, testing::chain_gradient_error(in));
    ++instances;
  }
  const double s = seconds_since(t0);
  return {worst <= 1e-4 && s < 10.0, fmt("max rel err %.2e over %d instances (%.2f s)", worst, instances, s)};
}

Outcome geometry_round_trip() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::normal_distribution<double> g(0.0, 1.0);
  auto random_pose = [&] {
    Eigen::Quaterniond q(g(rng), g(rng), g(rng), g(rng));
    q.normalize();
    CameraPose p;
    p.rotation = q.toRotationMatrix();
    p.translation = Vec3(g(rng), g(rng), g(rng)) * 5.0;
    return p;
  };
  double worst_trip = 0.0;
  for (int i = 0; i < 10000; ++i) {
    CameraIntrinsics k;
    k.width = 64 + static_cast<int>(U(rng) * 1200);
    k.height = 48 + static_cast<int>(U(rng) * 900);
    k.fx = 10 + 1000 * U(rng);
    k.fy = 10 + 1000 * U(rng);
    k.cx = (k.width - 1) * U(rng);
    k.cy = (k.height - 1) * U(rng);
    const CameraPose pose = random_pose();
    const int u = static_cast<int>(U(rng) * k.width), v = static_cast<int>(U(rng) * k.height);
    const double d = 0.05 + 20 * U(rng);
    const auto p = project_point(backproject_pixel(u, v, d, k, pose), k, pose);
    if (!p) return {false, "round trip landed behind the camera"};
    worst_trip = std::max({worst_trip, std::abs(p->u - u), std::abs(p->v - v), std::abs(p->depth - d)});
  }
  // A point seen at integer pixels of two frames, backprojected from each.
  const CameraIntrinsics k{48.0, 48.0, 31.5, 23.5, 64, 48};
  double worst_pair = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const CameraPose a = random_pose();
    const int ua = static_cast<int>(U(rng) * 64), va = static_cast<int>(U(rng) * 48);
    const Vec3 x = backproject_pixel(ua, va, 0.3 + 6 * U(rng), k, a);
    CameraPose b = random_pose();
    const int ub = static_cast<int>(U(rng) * 64), vb = static_cast<int>(U(rng) * 48);
    const double db = 0.3 + 6 * U(rng);
    b.translation = x - b.rotation * Vec3((ub - k.cx) / k.fx * db, (vb - k.cy) / k.fy * db, db);
    const auto pa = project_point(x, k, a);
    const auto pb = project_point(x, k, b);
    if (!pa || !pb) return {false, "shared point behind a camera"};
    const Vec3 xa = backproject_pixel(std::round(pa->u), std::round(pa->v), pa->depth, k, a);
    const Vec3 xb = backproject_pixel(std::round(pb->u), std::round(pb->v), pb->depth, k, b);
    worst_pair = std::max(worst_pair, (xa - xb).norm());
  }
  const double s = seconds_since(t0);
  return {worst_trip <= 1e-9 && worst_pair <= 1e-9 && s < 5.0,
          fmt("round trip max err %.2e, two-frame max err %.2e, 10000 tuples each (%.2f s)", worst_trip, worst_pair, s)};
}

Outcome hiou_arithmetic() {
  const double a = compute_hiou(75.8, 57.3), b = compute_hiou(70.3, 66.0);
  return {std::abs(a - 65.3) <= 0.05 && std::abs(b - 68.1) <= 0.05,
          fmt("hIoU(75.8, 57.3) = %.3f, hIoU(70.3, 66.0) = %.3f", a, b)};
}

Outcome metric_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(77);
  int mismatches = 0;
  for (int t = 0; t < 100; ++t) {
    const int k = 1 + static_cast<int>(rng() % 10);
    const std::size_t n = 1 + rng() % 1000;
    std::vector<std::int32_t> gt(n), pred(n);
    for (std::size_t i = 0; i < n; ++i) {
      gt[i] = static_cast<std::int32_t>(rng() % (k + 1)) - 1;
      pred[i] = static_cast<std::int32_t>(rng() % k);
    }
    gt[0] = 0;
    const EvalReport r = compute_metrics(build_confusion(pred, gt, k, -1));
    double iou_sum = 0, acc_sum = 0;
    int iou_n = 0, acc_n = 0;
    for (int c = 0; c < k; ++c) {
      std::set<std::size_t> G, P, I, U;
      for (std::size_t i = 0; i < n; ++i) {
        if (gt[i] < 0) continue;
        if (gt[i] == c) G.insert(i);
        if (pred[i] == c) P.insert(i);
      }
      for (auto i : G) (P.count(i) ? I : U).insert(i);
      U.insert(P.begin(), P.end());
      U.insert(I.begin(), I.end());
      if (!U.empty()) {
        iou_sum += static_cast<double>(I.size()) / static_cast<double>(U.size());
        ++iou_n;
      }
      if (!G.empty()) {
        acc_sum += static_cast<double>(I.size()) / static_cast<double>(G.size());
        ++acc_n;
      }
    }
    if (r.miou != iou_sum / iou_n || r.macc != acc_sum / acc_n) ++mismatches;
  }
  const double s = seconds_since(t0);
  return {mismatches == 0 && s < 5.0, fmt("%d/100 labelings differ from brute force (%.2f s)", mismatches, s)};
}

std::vector<AblationRow> ablation_rows;
double ablation_seconds = 0.0;

const std::vector<AblationRow>& ablation() {
  if (ablation_rows.empty()) {
    const auto t0 = std::chrono::steady_clock::now();
    ablation_rows = run_ablation_suite(PipelineConfig{}, scratch("ablation"), {7, 8, 9});
    ablation_seconds = seconds_since(t0);
  }
  return ablation_rows;
}

double mean_of(const std::string& preset, double AblationRow::*field) {
  double sum = 0;
  int n = 0;
  for (const auto& r : ablation()) {
    if (r.preset == preset) {
      sum += r.*field;
      ++n;
    }
  }
  return n ? sum / n : 0.0;
}

Outcome curriculum_direction() {
  const double full = mean_of("full_curriculum", &AblationRow::miou);
  const double s1 = mean_of("stage1_only", &AblationRow::miou);
  return {full > s1 && ablation_seconds < 600.0,
          fmt("mean mIoU full_curriculum %.4f vs stage1_only %.4f over seeds 7,8,9 (suite %.0f s)", full, s1,
              ablation_seconds)};
}

Outcome consistency_direction() {
  const double with = mean_of("full_curriculum", &AblationRow::matched_cosine_stage1);
  const double without = mean_of("no_consistency", &AblationRow::matched_cosine_stage1);
  return {with > without && ablation_seconds < 600.0,
          fmt("held-out matched-pair cosine lambda=0.2 %.4f vs lambda=0 %.4f over seeds 7,8,9", with, without)};
}

Outcome smoothing_convergence() {
  const auto t0 = std::chrono::steady_clock::now();
  const testing::SmoothingInstance s = testing::make_smoothing_instance();
  PseudoLabelConfig c;
  c.voxel_size = s.voxel;
  c.repetitions = 500;
  c.seed = 500;
  const PseudoLabelSet l = generate_pseudo_labels(s.positions, 3, testing::smoothing_predictor(s), c);
  const double err = (l.probabilities - testing::exact_expectation(s)).cwiseAbs().maxCoeff();
  const double secs = seconds_since(t0);
  return {err <= 0.02 && secs < 10.0, fmt("L-inf distance to exact expectation %.4f (%.2f s)", err, secs)};
}

Outcome determinism() {
  const fs::path root = scratch("determinism");
  for (const char* run : {"a", "b"}) {
    std::fflush(stdout);
    const int saved = dup(STDOUT_FILENO);
    const int null = open("/dev/null", O_WRONLY);
    dup2(null, STDOUT_FILENO);
    close(null);
    const int code = cli::run_subcommand(std::vector<std::string>{
        "pgov", "experiment", "--preset", "full_curriculum", "--seed", "7", "--out", (root / run).string()});
    std::fflush(stdout);
    dup2(saved, STDOUT_FILENO);
    close(saved);
    if (code != cli::kExitOk) return {false, fmt("experiment exited with %d", code)};
  }
  std::vector<std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root / "a")) {
    const std::string rel = fs::relative(e.path(), root / "a").string();
    if (e.path().extension() == ".ckpt" || e.path().filename() == "pseudo_labels.bin" ||
        e.path().extension() == ".csv") {
      files.push_back(rel);
    }
  }
  int differ = 0;
  for (const auto& f : files) {
    if (!fs::exists(root / "b" / f) || read_file(root / "a" / f) != read_file(root / "b" / f)) ++differ;
  }
  const bool enough = files.size() >= 2 + 8 + 4;
  return {differ == 0 && enough, fmt("%zu checkpoint/pseudo-label/CSV files compared, %d differ", files.size(), differ)};
}

Outcome zero_noise_fidelity() {
  PipelineConfig c;
  c.oracle.noise = NoiseConfig{};
  const TextEmbeddingTable table = embed_entities(c.eval.categories, c.encoder.embedding_dim, c.encoder.text_seed);
  ExperimentOptions opt;
  opt.feature_override = [&](const GlobalScene& scene) {
    RowMatrix f(static_cast<Eigen::Index>(scene.points.size()), c.encoder.embedding_dim);
    for (std::size_t i = 0; i < scene.points.size(); ++i) {
      f.row(static_cast<Eigen::Index>(i)) = table.at(scene.categories[scene.points[i].label]).transpose();
    }
    return f;
  };
  const EvalOutcome out = run_experiment(c, scratch("zero_noise"), opt);
  return {out.report.miou == 1.0,
          fmt("mIoU %.17g, mAcc %.17g on %llu held-out points", out.report.miou, out.report.macc,
              static_cast<unsigned long long>(out.report.evaluated_points))};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"gradient correctness", gradient_correctness},
      {"geometry round trip", geometry_round_trip},
      {"hIoU arithmetic", hiou_arithmetic},
      {"metric oracle equivalence", metric_oracle},
      {"curriculum direction", curriculum_direction},
      {"consistency ablation direction", consistency_direction},
      {"pseudo-label smoothing convergence", smoothing_convergence},
      {"determinism", determinism},
      {"zero-noise fidelity", zero_noise_fidelity},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    std::printf("%s %d %s: %s\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}
