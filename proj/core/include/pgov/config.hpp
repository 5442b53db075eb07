#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "pgov/entity_oracle.hpp"
#include "pgov/geometry.hpp"
#include "pgov/metrics.hpp"
#include "pgov/pseudo_label.hpp"
#include "pgov/scene_synth.hpp"
#include "pgov/trainer.hpp"

namespace pgov {

struct SceneSection {
  int train_scenes = 8;
  int eval_scenes = 2;
  RoomLayoutOptions layout;
};

struct CameraSection {
  CameraIntrinsics intrinsics{48.0, 48.0, 31.5, 23.5, 64, 48};
  int frames_per_scene = 30;
  int point_radius_px = 1;
  TrajectoryOptions trajectory;
  ColorNoise color_noise{0.15, 0.05, 0.03, 0.02};
};

struct OracleSection {
  NoiseConfig noise{0.1, 0.05, 1, 0};
};

struct EncoderSection {
  std::vector<int> hidden{32, 32};
  int embedding_dim = 16;
  std::uint64_t text_seed = 20240521;
};

struct TrainSection {
  TrainConfig config;
  bool finetune_enabled = true;
  PretrainOptions matching;
};

struct EvalSection {
  std::vector<std::string> categories = room_categories();
  // Strings scored against the point features; empty means `categories`.
  std::vector<std::string> query_vocabulary;
  SynonymTable synonyms;
  // Named split ("B15/N4", ...) or explicit index lists; all empty = none.
  std::string split;
  std::vector<int> base;
  std::vector<int> novel;
};

struct PipelineConfig {
  SceneSection scene;
  CameraSection camera;
  OracleSection oracle;
  EncoderSection encoder;
  TrainSection train;
  PseudoLabelConfig pseudo;
  EvalSection eval;
  std::uint64_t seed = 7;
  std::string output_dir = "out";
  std::string preset = "full_curriculum";

  std::vector<int> layer_sizes() const;
  const std::vector<std::string>& query_vocabulary() const;
};

// Parses JSON text. Unknown keys and wrongly typed values throw ConfigError
// naming the dotted key path. Missing keys keep their defaults.
PipelineConfig parse_config(const std::string& json_text);
PipelineConfig load_config(const std::string& path);
std::string serialize_config(const PipelineConfig& config);

// Throws ConfigError naming the first offending key.
void validate_config(const PipelineConfig& config);

const std::vector<std::string>& preset_names();
// Dotted key -> JSON literal, relative to full_curriculum.
std::vector<std::pair<std::string, std::string>> preset_overrides(const std::string& preset);
// Returns `config` with `preset` recorded and its overrides applied.
PipelineConfig apply_preset(const PipelineConfig& config, const std::string& preset);

// Hex FNV-1a of the serialized config.
std::string config_hash(const PipelineConfig& config);

}  // namespace pgov
