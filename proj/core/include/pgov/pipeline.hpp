#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pgov/config.hpp"
#include "pgov/metrics.hpp"
#include "pgov/trainer.hpp"

namespace pgov {

enum class Stage { kSynth, kRender, kOracle, kPretrain, kPseudolabel, kFinetune, kEval, kReport };

const char* stage_name(Stage stage);
std::optional<Stage> parse_stage(const std::string& name);
const std::vector<Stage>& all_stages();

// Replaces the trained encoder when scoring global scenes: returns one
// feature row per scene point.
using SceneFeatureFn = std::function<RowMatrix(const GlobalScene& scene)>;

struct EvalOutcome {
  EvalReport report;
  std::vector<std::string> categories;
  // Mean matched-pair cosine on adjacent held-out frames; absent when the
  // features come from an override.
  std::optional<MatchedCosine> matched_stage1;
  std::optional<MatchedCosine> matched_final;
};

// One experiment directory:
//   scenes/scene_XXX.pts, scenes/index.json
//   frames/scene_XXX/frame_NNNNNN.{depth,color,srcid,meta.json,entmask,vocab.json}
//   checkpoints/stage{1,2}.ckpt, losses_stage{1,2}.csv
//   pseudo/scene_XXX/{pseudo_labels.bin,scene_vocab.json}
//   eval_report.csv, confusion.csv, summary.txt, loss_curves.svg, manifest.json
class Pipeline {
 public:
  // `config` must already carry its preset overrides (see apply_preset).
  Pipeline(PipelineConfig config, std::filesystem::path out_dir);

  const PipelineConfig& config() const { return config_; }
  const std::filesystem::path& out_dir() const { return out_; }

  void set_feature_override(SceneFeatureFn fn) { feature_override_ = std::move(fn); }

  void run(Stage stage);
  void run_all();

  // Copies the outputs of every leading stage whose inputs are unchanged
  // between `source` and this pipeline. Returns the stages reused.
  std::vector<Stage> reuse_from(const std::filesystem::path& source);

  void synth();
  void render();
  void oracle();
  void pretrain();
  void pseudolabel();
  void finetune();
  EvalOutcome eval();
  void report();

  std::vector<std::string> train_scene_names() const;
  std::vector<std::string> eval_scene_names() const;
  GlobalScene load_scene(const std::string& name) const;
  TrainingSequence load_sequence(const std::string& name) const;
  // The checkpoint eval scores with.
  std::filesystem::path final_checkpoint() const;

  // Hash of the config fields that can influence the stage's outputs.
  std::string stage_key(Stage stage) const;

 private:
  void mark(Stage stage, const std::string& status);
  std::filesystem::path scene_path(const std::string& name) const;
  std::filesystem::path frame_dir(const std::string& name) const;
  std::filesystem::path pseudo_dir(const std::string& name) const;
  TextEmbeddingTable embedding_table() const;

  PipelineConfig config_;
  std::filesystem::path out_;
  SceneFeatureFn feature_override_;
};

// Writes summary.txt and loss_curves.svg from eval_report.csv and the loss
// logs. Throws MissingArtifacts when eval_report.csv is absent.
void emit_report(const std::filesystem::path& out_dir);

struct ExperimentOptions {
  std::optional<std::filesystem::path> reuse_from;
  SceneFeatureFn feature_override;
};

// Applies config.preset and runs every stage into `out_dir`.
EvalOutcome run_experiment(const PipelineConfig& config, const std::filesystem::path& out_dir,
                           const ExperimentOptions& options = {});

struct AblationRow {
  std::string preset;
  std::uint64_t seed = 0;
  double miou = 0.0;
  double macc = 0.0;
  double matched_cosine_stage1 = 0.0;
  double matched_cosine_final = 0.0;
};

// Every preset for every seed under out_root/seed_S/<preset>, then
// ablation.csv, ablation_consistency.csv and ablation.svg in out_root.
std::vector<AblationRow> run_ablation_suite(const PipelineConfig& config, const std::filesystem::path& out_root,
                                            const std::vector<std::uint64_t>& seeds);

std::string format_ablation_csv(const std::vector<AblationRow>& rows);

}  // namespace pgov
