#include "pgov/pipeline.hpp"

#include <chrono>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <map>

#include "json.hpp"
#include "pgov/io.hpp"
#include "pgov/svg.hpp"

namespace pgov {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr Stage kStages[] = {Stage::kSynth,       Stage::kRender,   Stage::kOracle, Stage::kPretrain,
                             Stage::kPseudolabel, Stage::kFinetune, Stage::kEval,   Stage::kReport};

std::string scene_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "scene_%03d", index);
  return buf;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

json read_json(const fs::path& path) {
  const std::string text = read_file(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(path.string(), e.byte > 0 ? e.byte - 1 : 0, e.what());
  }
}

void require_file(const fs::path& path, const std::string& producer) {
  if (!fs::exists(path)) {
    throw Error(Errc::kMissingArtifacts, path.string() + " is missing; run the '" + producer + "' stage first");
  }
}

bool has_suffix(const fs::path& p, std::initializer_list<const char*> suffixes) {
  const std::string name = p.filename().string();
  for (const char* s : suffixes) {
    if (name.ends_with(s)) return true;
  }
  return false;
}

// Copies files under source/sub whose names end with one of `suffixes`
// (all files when empty) into target/sub.
void copy_tree(const fs::path& source, const fs::path& target, const std::string& sub,
               std::initializer_list<const char*> suffixes) {
  const fs::path from = source / sub;
  if (!fs::exists(from)) return;
  if (fs::is_regular_file(from)) {
    fs::create_directories((target / sub).parent_path());
    fs::copy_file(from, target / sub, fs::copy_options::overwrite_existing);
    return;
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(from)) {
    if (!entry.is_regular_file()) continue;
    if (suffixes.size() != 0 && !has_suffix(entry.path(), suffixes)) continue;
    files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    const fs::path dst = target / sub / fs::relative(f, from);
    fs::create_directories(dst.parent_path());
    fs::copy_file(f, dst, fs::copy_options::overwrite_existing);
  }
}

RowMatrix select_rows(const RowMatrix& m, std::span<const std::size_t> rows) {
  RowMatrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t s = 0; s < rows.size(); ++s) out.row(static_cast<Eigen::Index>(s)) = m.row(static_cast<Eigen::Index>(rows[s]));
  return out;
}

class StageTimer {
 public:
  explicit StageTimer(Stage stage) : stage_(stage), start_(std::chrono::steady_clock::now()) {}
  ~StageTimer() {
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    if (std::getenv("PGOV_QUIET") == nullptr) {
      std::fprintf(stderr, "[pgov] %-11s %.2fs\n", stage_name(stage_), s);
    }
  }

 private:
  Stage stage_;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace

const char* stage_name(Stage stage) {
  switch (stage) {
    case Stage::kSynth: return "synth";
    case Stage::kRender: return "render";
    case Stage::kOracle: return "oracle";
    case Stage::kPretrain: return "pretrain";
    case Stage::kPseudolabel: return "pseudolabel";
    case Stage::kFinetune: return "finetune";
    case Stage::kEval: return "eval";
    case Stage::kReport: return "report";
  }
  return "?";
}

std::optional<Stage> parse_stage(const std::string& name) {
  for (Stage s : kStages) {
    if (name == stage_name(s)) return s;
  }
  return std::nullopt;
}

const std::vector<Stage>& all_stages() {
  static const std::vector<Stage> stages(std::begin(kStages), std::end(kStages));
  return stages;
}

Pipeline::Pipeline(PipelineConfig config, fs::path out_dir) : config_(std::move(config)), out_(std::move(out_dir)) {
  validate_config(config_);
}

fs::path Pipeline::scene_path(const std::string& name) const { return out_ / "scenes" / (name + ".pts"); }
fs::path Pipeline::frame_dir(const std::string& name) const { return out_ / "frames" / name; }
fs::path Pipeline::pseudo_dir(const std::string& name) const { return out_ / "pseudo" / name; }

std::string Pipeline::stage_key(Stage stage) const {
  const json full = json::parse(serialize_config(config_));
  json subset;
  subset["seed"] = full["seed"];
  subset["scene"] = full["scene"];
  const auto at_least = [stage](Stage s) { return static_cast<int>(stage) >= static_cast<int>(s); };
  if (at_least(Stage::kRender)) subset["camera"] = full["camera"];
  if (at_least(Stage::kOracle)) subset["oracle"] = full["oracle"];
  if (at_least(Stage::kPretrain)) {
    subset["encoder"] = full["encoder"];
    for (const char* k : {"lambda_consistency", "learning_rate", "weight_decay", "adam_beta1", "adam_beta2", "adam_eps",
                          "batch_size_stage1", "epochs_stage1", "match_mode", "match_radius"}) {
      subset["train"][k] = full["train"][k];
    }
  }
  if (at_least(Stage::kPseudolabel)) {
    subset["pseudo"] = full["pseudo"];
    subset["train"]["finetune_enabled"] = full["train"]["finetune_enabled"];
  }
  if (at_least(Stage::kFinetune)) subset["train"] = full["train"];
  if (at_least(Stage::kEval)) subset["eval"] = full["eval"];
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, stable_hash(subset.dump()));
  return buf;
}

void Pipeline::mark(Stage stage, const std::string& status) {
  const fs::path path = out_ / "manifest.json";
  const std::string hash = config_hash(config_);
  ordered_json manifest;
  ordered_json stages = ordered_json::object();
  if (fs::exists(path)) {
    try {
      const auto old = ordered_json::parse(read_file(path));
      if (old.value("config_hash", "") == hash && old.contains("stages")) stages = old["stages"];
    } catch (const std::exception&) {
    }
  }
  stages[stage_name(stage)] = {{"status", status}, {"key", stage_key(stage)}};
  manifest["config_hash"] = hash;
  manifest["seed"] = config_.seed;
  manifest["preset"] = config_.preset;
  manifest["stages"] = stages;
  write_file_atomic(path, manifest.dump(2) + "\n");
}

TextEmbeddingTable Pipeline::embedding_table() const {
  TextEmbeddingTable table(config_.encoder.embedding_dim, config_.encoder.text_seed);
  for (const auto& c : config_.eval.categories) table.add(c);
  for (const auto& c : config_.query_vocabulary()) table.add(c);
  for (const auto& c : room_categories()) table.add(c);
  return table;
}

std::vector<std::string> Pipeline::train_scene_names() const {
  const fs::path index = out_ / "scenes" / "index.json";
  require_file(index, "synth");
  try {
    return read_json(index).at("train").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw FormatError(index.string(), 0, e.what());
  }
}

std::vector<std::string> Pipeline::eval_scene_names() const {
  const fs::path index = out_ / "scenes" / "index.json";
  require_file(index, "synth");
  try {
    return read_json(index).at("eval").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw FormatError(index.string(), 0, e.what());
  }
}

GlobalScene Pipeline::load_scene(const std::string& name) const {
  require_file(scene_path(name), "synth");
  return read_points(scene_path(name));
}

TrainingSequence Pipeline::load_sequence(const std::string& name) const {
  const GlobalScene scene = load_scene(name);
  const fs::path dir = frame_dir(name);
  const std::vector<int> frames = list_frames(dir);
  if (frames.empty()) throw Error(Errc::kMissingArtifacts, "no frames under " + dir.string() + "; run 'render' first");
  TrainingSequence seq;
  seq.bounds = scene.bounds();
  seq.clouds.resize(frames.size());
  parallel_for(frames.size(), [&](std::size_t f) {
    const Frame frame = read_frame(dir, frames[f]);
    require_file(dir / (frame_stem(frames[f]) + ".entmask"), "oracle");
    const PixelEntityMap map = read_entity_map(dir, frames[f], frame.intrinsics.width, frame.intrinsics.height);
    seq.clouds[f] = frame_to_partial_cloud(frame, map);
  });
  return seq;
}

fs::path Pipeline::final_checkpoint() const {
  return out_ / "checkpoints" / (config_.train.finetune_enabled ? "stage2.ckpt" : "stage1.ckpt");
}

void Pipeline::synth() {
  StageTimer timer(Stage::kSynth);
  const int total = config_.scene.train_scenes + config_.scene.eval_scenes;
  std::vector<GlobalScene> scenes(static_cast<std::size_t>(total));
  const std::uint64_t base = mix_seed(config_.seed, "scene");
  parallel_for(scenes.size(), [&](std::size_t i) {
    scenes[i] = generate_scene(make_room_spec(mix_seed(base, i), config_.scene.layout));
  });
  ordered_json index;
  index["train"] = json::array();
  index["eval"] = json::array();
  for (int i = 0; i < total; ++i) {
    const std::string name = scene_name(i);
    write_points(scene_path(name), scenes[static_cast<std::size_t>(i)]);
    index[i < config_.scene.train_scenes ? "train" : "eval"].push_back(name);
  }
  write_file_atomic(out_ / "scenes" / "index.json", index.dump(2) + "\n");
  mark(Stage::kSynth, "done");
}

void Pipeline::render() {
  StageTimer timer(Stage::kRender);
  auto names = train_scene_names();
  const auto eval_names = eval_scene_names();
  names.insert(names.end(), eval_names.begin(), eval_names.end());
  const std::uint64_t traj_base = mix_seed(config_.seed, "trajectory");
  const std::uint64_t noise_base = mix_seed(config_.seed, "color-noise");
  for (std::size_t s = 0; s < names.size(); ++s) {
    const GlobalScene scene = load_scene(names[s]);
    const CameraTrajectory traj =
        generate_trajectory(scene, config_.camera.frames_per_scene, mix_seed(traj_base, s), config_.camera.trajectory);
    const fs::path dir = frame_dir(names[s]);
    if (fs::exists(dir)) fs::remove_all(dir);
    fs::create_directories(dir);
    parallel_for(traj.poses.size(), [&](std::size_t f) {
      Frame frame = render_frame(scene, config_.camera.intrinsics, traj.poses[f], config_.camera.point_radius_px,
                                 static_cast<int>(f));
      if (config_.camera.color_noise.enabled()) {
        perturb_frame_colors(frame, config_.camera.color_noise, mix_seed(noise_base, s));
      }
      write_frame(dir, frame);
    });
  }
  mark(Stage::kRender, "done");
}

void Pipeline::oracle() {
  StageTimer timer(Stage::kOracle);
  auto names = train_scene_names();
  const auto eval_names = eval_scene_names();
  names.insert(names.end(), eval_names.begin(), eval_names.end());
  const std::uint64_t base = mix_seed(config_.seed, "oracle");
  for (std::size_t s = 0; s < names.size(); ++s) {
    const GlobalScene scene = load_scene(names[s]);
    const SceneLabelIndex index(scene);
    NoiseConfig noise = config_.oracle.noise;
    noise.seed = mix_seed(base, s);
    const fs::path dir = frame_dir(names[s]);
    const std::vector<int> frames = list_frames(dir);
    if (frames.empty()) throw Error(Errc::kMissingArtifacts, "no frames under " + dir.string() + "; run 'render' first");
    parallel_for(frames.size(), [&](std::size_t f) {
      const Frame frame = read_frame(dir, frames[f]);
      write_entity_map(dir, frames[f], oracle_pixel_entities(frame, scene, index, noise));
    });
  }
  mark(Stage::kOracle, "done");
}

void Pipeline::pretrain() {
  StageTimer timer(Stage::kPretrain);
  const auto names = train_scene_names();
  std::vector<TrainingSequence> sequences;
  for (const auto& n : names) sequences.push_back(load_sequence(n));
  TextEmbeddingTable table = embedding_table();
  for (const auto& seq : sequences) {
    for (const auto& cloud : seq.clouds) {
      for (const auto& e : cloud.vocabulary) table.add(e);
    }
  }
  TrainConfig train = config_.train.config;
  train.seed = config_.seed;
  const EncoderParams init = EncoderParams::initialize(config_.layer_sizes(), config_.seed);
  const StageResult result = pretrain_stage(sequences, table, init, train, config_.train.matching);
  write_checkpoint(out_ / "checkpoints" / "stage1.ckpt", result.params);
  write_file_atomic(out_ / "losses_stage1.csv", format_loss_csv(result.log));
  mark(Stage::kPretrain, "done");
}

void Pipeline::pseudolabel() {
  StageTimer timer(Stage::kPseudolabel);
  if (!config_.train.finetune_enabled && !feature_override_) {
    mark(Stage::kPseudolabel, "skipped");
    return;
  }
  const fs::path ckpt = out_ / "checkpoints" / "stage1.ckpt";
  std::optional<EncoderParams> params;
  if (!feature_override_) {
    require_file(ckpt, "pretrain");
    params = read_checkpoint(ckpt);
  }
  const auto names = train_scene_names();
  const std::uint64_t base = mix_seed(config_.seed, "pseudo");
  for (std::size_t s = 0; s < names.size(); ++s) {
    const GlobalScene scene = load_scene(names[s]);
    const fs::path dir = frame_dir(names[s]);
    std::vector<FrameVocabulary> frame_vocabs;
    for (int f : list_frames(dir)) {
      require_file(dir / (frame_stem(f) + ".vocab.json"), "oracle");
      frame_vocabs.push_back({f, read_string_array(dir / (frame_stem(f) + ".vocab.json"))});
    }
    const SceneVocabulary vocab = aggregate_vocabulary(frame_vocabs);
    TextEmbeddingTable table(config_.encoder.embedding_dim, config_.encoder.text_seed);
    for (const auto& e : vocab.entities) table.add(e);
    PseudoLabelConfig cfg = config_.pseudo;
    cfg.seed = mix_seed(base, s);
    std::vector<Vec3> positions;
    positions.reserve(scene.points.size());
    for (const auto& p : scene.points) positions.push_back(p.position);
    PseudoLabelSet labels;
    if (feature_override_) {
      const RowMatrix probs =
          predict_distribution(feature_override_(scene), table.matrix(vocab.entities), cfg.temperature);
      labels = generate_pseudo_labels(
          positions, vocab.entities.size(),
          [&probs](std::span<const std::size_t> subset) { return select_rows(probs, subset); }, cfg);
    } else {
      labels = generate_pseudo_labels(positions, make_encoder_inputs(scene), *params, vocab.entities, table, cfg);
    }
    write_pseudo_labels(pseudo_dir(names[s]) / "pseudo_labels.bin", labels);
    write_string_array(pseudo_dir(names[s]) / "scene_vocab.json", vocab.entities);
  }
  mark(Stage::kPseudolabel, "done");
}

void Pipeline::finetune() {
  StageTimer timer(Stage::kFinetune);
  if (!config_.train.finetune_enabled) {
    mark(Stage::kFinetune, "skipped");
    return;
  }
  const fs::path ckpt = out_ / "checkpoints" / "stage1.ckpt";
  require_file(ckpt, "pretrain");
  const EncoderParams stage1 = read_checkpoint(ckpt);
  const auto names = train_scene_names();
  std::vector<FinetuneScene> scenes;
  for (const auto& name : names) {
    const fs::path dir = pseudo_dir(name);
    require_file(dir / "pseudo_labels.bin", "pseudolabel");
    const GlobalScene scene = load_scene(name);
    const auto vocab = read_string_array(dir / "scene_vocab.json");
    const PseudoLabelSet labels = read_pseudo_labels(dir / "pseudo_labels.bin");
    TextEmbeddingTable table(config_.encoder.embedding_dim, config_.encoder.text_seed);
    for (const auto& e : vocab) table.add(e);
    scenes.push_back(make_finetune_scene(scene, labels, vocab, table));
  }
  TrainConfig train = config_.train.config;
  train.seed = config_.seed;
  const StageResult result = finetune_stage(scenes, stage1, train);
  write_checkpoint(out_ / "checkpoints" / "stage2.ckpt", result.params);
  write_file_atomic(out_ / "losses_stage2.csv", format_loss_csv(result.log));
  mark(Stage::kFinetune, "done");
}

EvalOutcome Pipeline::eval() {
  StageTimer timer(Stage::kEval);
  EvalOutcome outcome;
  outcome.categories = config_.eval.categories;
  const int k = static_cast<int>(outcome.categories.size());
  const auto& query = config_.query_vocabulary();
  const TextEmbeddingTable table = embedding_table();
  const RowMatrix query_embeddings = table.matrix(query);
  const std::vector<std::int32_t> query_to_category = remap_vocab(query, outcome.categories, config_.eval.synonyms);

  std::optional<EncoderParams> params;
  if (!feature_override_) {
    require_file(final_checkpoint(), config_.train.finetune_enabled ? "finetune" : "pretrain");
    params = read_checkpoint(final_checkpoint());
  }
  const auto names = eval_scene_names();
  ConfusionMatrix confusion(k);
  for (const auto& name : names) {
    const GlobalScene scene = load_scene(name);
    const std::vector<std::int32_t> label_to_category =
        remap_vocab(scene.categories, outcome.categories, config_.eval.synonyms);
    std::vector<std::int32_t> gt(scene.points.size());
    for (std::size_t i = 0; i < gt.size(); ++i) {
      const std::int32_t l = scene.points[i].label;
      gt[i] = l < 0 ? kUnlabeled : label_to_category[static_cast<std::size_t>(l)];
      if (gt[i] == kUnmatched) {
        throw Error(Errc::kOutOfRangeLabel, "scene category '" + scene.categories[static_cast<std::size_t>(l)] +
                                                "' has no evaluation category");
      }
    }
    const RowMatrix features =
        feature_override_ ? feature_override_(scene) : encode_points(*params, make_encoder_inputs(scene));
    const std::vector<std::int32_t> query_pred = segment_scene(features, query_embeddings);
    std::vector<std::int32_t> pred(query_pred.size());
    for (std::size_t i = 0; i < pred.size(); ++i) pred[i] = query_to_category[static_cast<std::size_t>(query_pred[i])];
    confusion.merge(build_confusion(pred, gt, k, kUnlabeled));
  }
  outcome.report = compute_metrics(confusion);
  if (!config_.eval.split.empty()) {
    const CategorySplit split = split_base_novel(outcome.categories, config_.eval.split);
    attach_split(outcome.report, split.base, split.novel);
  } else if (!config_.eval.base.empty() || !config_.eval.novel.empty()) {
    const CategorySplit split = split_base_novel(outcome.categories, config_.eval.base, config_.eval.novel);
    attach_split(outcome.report, split.base, split.novel);
  }

  std::vector<std::pair<std::string, double>> extra;
  if (!feature_override_) {
    std::vector<TrainingSequence> sequences;
    for (const auto& n : names) sequences.push_back(load_sequence(n));
    const fs::path stage1 = out_ / "checkpoints" / "stage1.ckpt";
    require_file(stage1, "pretrain");
    outcome.matched_stage1 = mean_matched_cosine(read_checkpoint(stage1), sequences, config_.train.matching);
    outcome.matched_final = mean_matched_cosine(*params, sequences, config_.train.matching);
    extra.emplace_back("matched_pair_cosine_stage1", outcome.matched_stage1->mean);
    extra.emplace_back("matched_pair_cosine", outcome.matched_final->mean);
    extra.emplace_back("matched_pairs", static_cast<double>(outcome.matched_final->pairs));
  }
  write_file_atomic(out_ / "eval_report.csv", format_eval_report(outcome.report, outcome.categories, extra));
  write_file_atomic(out_ / "confusion.csv", format_confusion(confusion, outcome.categories));
  mark(Stage::kEval, "done");
  return outcome;
}

void Pipeline::report() {
  StageTimer timer(Stage::kReport);
  emit_report(out_);
  mark(Stage::kReport, "done");
}

void Pipeline::run(Stage stage) {
  switch (stage) {
    case Stage::kSynth: synth(); break;
    case Stage::kRender: render(); break;
    case Stage::kOracle: oracle(); break;
    case Stage::kPretrain: pretrain(); break;
    case Stage::kPseudolabel: pseudolabel(); break;
    case Stage::kFinetune: finetune(); break;
    case Stage::kEval: eval(); break;
    case Stage::kReport: report(); break;
  }
}

void Pipeline::run_all() {
  for (Stage s : kStages) run(s);
}

std::vector<Stage> Pipeline::reuse_from(const fs::path& source) {
  std::vector<Stage> reused;
  const fs::path manifest_path = source / "manifest.json";
  if (!fs::exists(manifest_path)) return reused;
  const json manifest = read_json(manifest_path);
  if (!manifest.contains("stages")) return reused;
  const json& stages = manifest["stages"];
  for (Stage s : {Stage::kSynth, Stage::kRender, Stage::kOracle, Stage::kPretrain, Stage::kPseudolabel,
                  Stage::kFinetune}) {
    const char* name = stage_name(s);
    if (!stages.contains(name)) break;
    const json& entry = stages[name];
    if (entry.value("key", "") != stage_key(s)) break;
    const std::string status = entry.value("status", "");
    if (status != "done" && status != "skipped") break;
    switch (s) {
      case Stage::kSynth: copy_tree(source, out_, "scenes", {}); break;
      case Stage::kRender: copy_tree(source, out_, "frames", {".depth", ".color", ".srcid", ".meta.json"}); break;
      case Stage::kOracle: copy_tree(source, out_, "frames", {".entmask", ".vocab.json"}); break;
      case Stage::kPretrain:
        copy_tree(source, out_, "checkpoints/stage1.ckpt", {});
        copy_tree(source, out_, "losses_stage1.csv", {});
        break;
      case Stage::kPseudolabel: copy_tree(source, out_, "pseudo", {}); break;
      case Stage::kFinetune:
        copy_tree(source, out_, "checkpoints/stage2.ckpt", {});
        copy_tree(source, out_, "losses_stage2.csv", {});
        break;
      default: break;
    }
    mark(s, status);
    reused.push_back(s);
  }
  return reused;
}

void emit_report(const fs::path& out_dir) {
  const fs::path report_path = out_dir / "eval_report.csv";
  if (!fs::exists(report_path)) {
    throw Error(Errc::kMissingArtifacts, report_path.string() + " is missing; run the 'eval' stage first");
  }
  const auto rows = parse_csv(read_file(report_path));
  if (rows.empty() || rows[0].cells != std::vector<std::string>{"metric", "class", "value"}) {
    throw FormatError(report_path.string(), 0, "bad eval report header");
  }
  std::map<std::string, double> scalars;
  std::vector<std::pair<std::string, double>> class_iou;
  std::map<std::string, double> class_acc;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& c = rows[i].cells;
    if (c.size() != 3) throw FormatError(report_path.string(), 0, "malformed row " + std::to_string(i));
    double v = 0.0;
    try {
      v = std::stod(c[2]);
    } catch (const std::exception&) {
      throw FormatError(report_path.string(), 0, "malformed value in row " + std::to_string(i));
    }
    if (c[1].empty()) {
      scalars[c[0]] = v;
    } else if (c[0] == "iou") {
      class_iou.emplace_back(c[1], v);
    } else if (c[0] == "acc") {
      class_acc[c[1]] = v;
    }
  }

  std::string summary;
  char line[256];
  summary += "PGOV3D evaluation summary\n";
  if (fs::exists(out_dir / "manifest.json")) {
    const json m = read_json(out_dir / "manifest.json");
    summary += "preset: " + m.value("preset", std::string("?")) + "\n";
    summary += "seed: " + std::to_string(m.value("seed", std::uint64_t{0})) + "\n";
    summary += "config hash: " + m.value("config_hash", std::string("?")) + "\n";
  }
  summary += "\n";
  for (const char* key : {"miou", "macc"}) {
    std::snprintf(line, sizeof(line), "%-5s %7.4f  (%6.2f%%)\n", key[1] == 'i' ? "mIoU" : "mAcc", scalars[key],
                  100.0 * scalars[key]);
    summary += line;
  }
  if (scalars.count("hiou")) {
    std::snprintf(line, sizeof(line), "base mIoU %.4f  novel mIoU %.4f  hIoU %.4f\n", scalars["miou_base"],
                  scalars["miou_novel"], scalars["hiou"]);
    summary += line;
  }
  std::snprintf(line, sizeof(line), "evaluated points %.0f, unmatched %.0f\n", scalars["evaluated_points"],
                scalars["unmatched_points"]);
  summary += line;
  if (scalars.count("matched_pair_cosine")) {
    std::snprintf(line, sizeof(line), "matched-pair cosine: stage 1 %.4f, final %.4f\n",
                  scalars["matched_pair_cosine_stage1"], scalars["matched_pair_cosine"]);
    summary += line;
  }
  summary += "\nclass                IoU      Acc\n";
  for (const auto& [name, iou] : class_iou) {
    std::snprintf(line, sizeof(line), "%-16s %7.4f  %7.4f\n", name.c_str(), iou, class_acc[name]);
    summary += line;
  }
  write_file_atomic(out_dir / "summary.txt", summary);

  std::vector<PlotSeries> series;
  int epoch_offset = 0;
  for (int stage = 1; stage <= 2; ++stage) {
    const fs::path path = out_dir / ("losses_stage" + std::to_string(stage) + ".csv");
    if (!fs::exists(path)) continue;
    const auto log = parse_loss_csv(read_file(path), path.string());
    std::map<int, std::array<double, 4>> per_epoch;  // alignment, consistency, total, count
    for (const auto& r : log) {
      auto& acc = per_epoch[r.epoch];
      acc[0] += r.alignment;
      acc[1] += r.consistency;
      acc[2] += r.total;
      acc[3] += 1.0;
    }
    const std::string prefix = "stage " + std::to_string(stage) + " ";
    PlotSeries total{prefix + "total", {}, {}};
    PlotSeries align{prefix + "alignment", {}, {}};
    PlotSeries cons{prefix + "consistency", {}, {}};
    int last = epoch_offset;
    for (const auto& [epoch, acc] : per_epoch) {
      const double x = epoch_offset + epoch + 1;
      total.x.push_back(x);
      total.y.push_back(acc[2] / acc[3]);
      align.x.push_back(x);
      align.y.push_back(acc[0] / acc[3]);
      cons.x.push_back(x);
      cons.y.push_back(acc[1] / acc[3]);
      last = static_cast<int>(x);
    }
    series.push_back(std::move(total));
    if (stage == 1) {
      series.push_back(std::move(align));
      series.push_back(std::move(cons));
    }
    epoch_offset = last;
  }
  write_file_atomic(out_dir / "loss_curves.svg", line_chart_svg("Training loss per epoch", "epoch", "mean loss", series));
}

EvalOutcome run_experiment(const PipelineConfig& config, const fs::path& out_dir, const ExperimentOptions& options) {
  Pipeline pipeline(apply_preset(config, config.preset), out_dir);
  if (options.feature_override) pipeline.set_feature_override(options.feature_override);
  std::vector<Stage> reused;
  if (options.reuse_from) reused = pipeline.reuse_from(*options.reuse_from);
  EvalOutcome outcome;
  for (Stage s : all_stages()) {
    if (std::find(reused.begin(), reused.end(), s) != reused.end()) continue;
    if (s == Stage::kEval) {
      outcome = pipeline.eval();
    } else {
      pipeline.run(s);
    }
  }
  return outcome;
}

std::string format_ablation_csv(const std::vector<AblationRow>& rows) {
  std::string out = "preset,seed,miou,macc\n";
  for (const auto& r : rows) out += r.preset + "," + std::to_string(r.seed) + "," + fmt(r.miou) + "," + fmt(r.macc) + "\n";
  return out;
}

std::vector<AblationRow> run_ablation_suite(const PipelineConfig& config, const fs::path& out_root,
                                            const std::vector<std::uint64_t>& seeds) {
  if (seeds.empty()) throw Error(Errc::kInvalidArgument, "ablation needs at least one seed");
  validate_config(config);
  std::vector<AblationRow> rows;
  for (std::uint64_t seed : seeds) {
    PipelineConfig seeded = config;
    seeded.seed = seed;
    const fs::path seed_dir = out_root / ("seed_" + std::to_string(seed));
    const fs::path reference = seed_dir / "full_curriculum";
    for (const auto& preset : preset_names()) {
      PipelineConfig cfg = seeded;
      cfg.preset = preset;
      ExperimentOptions options;
      if (preset != "full_curriculum") options.reuse_from = reference;
      const EvalOutcome outcome = run_experiment(cfg, seed_dir / preset, options);
      AblationRow row;
      row.preset = preset;
      row.seed = seed;
      row.miou = outcome.report.miou;
      row.macc = outcome.report.macc;
      if (outcome.matched_stage1) row.matched_cosine_stage1 = outcome.matched_stage1->mean;
      if (outcome.matched_final) row.matched_cosine_final = outcome.matched_final->mean;
      rows.push_back(row);
    }
  }
  write_file_atomic(out_root / "ablation.csv", format_ablation_csv(rows));
  std::string cons = "preset,seed,matched_pair_cosine_stage1,matched_pair_cosine_final\n";
  for (const auto& r : rows) {
    cons += r.preset + "," + std::to_string(r.seed) + "," + fmt(r.matched_cosine_stage1) + "," +
            fmt(r.matched_cosine_final) + "\n";
  }
  write_file_atomic(out_root / "ablation_consistency.csv", cons);

  const auto& presets = preset_names();
  std::vector<std::vector<double>> means(presets.size(), std::vector<double>(2, 0.0));
  std::vector<std::vector<double>> stds(presets.size(), std::vector<double>(2, 0.0));
  for (std::size_t p = 0; p < presets.size(); ++p) {
    std::vector<const AblationRow*> mine;
    for (const auto& r : rows) {
      if (r.preset == presets[p]) mine.push_back(&r);
    }
    for (int m = 0; m < 2; ++m) {
      double sum = 0.0, sq = 0.0;
      for (const auto* r : mine) {
        const double v = m == 0 ? r->miou : r->macc;
        sum += v;
        sq += v * v;
      }
      const double n = static_cast<double>(mine.size());
      means[p][static_cast<std::size_t>(m)] = sum / n;
      stds[p][static_cast<std::size_t>(m)] = std::sqrt(std::max(0.0, sq / n - (sum / n) * (sum / n)));
    }
  }
  write_file_atomic(out_root / "ablation.svg",
                    bar_chart_svg("Ablation over " + std::to_string(seeds.size()) + " seeds", presets,
                                  {"mIoU", "mAcc"}, means, stds));
  return rows;
}

}  // namespace pgov
