#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "pgov/embedding.hpp"
#include "pgov/entity_oracle.hpp"
#include "pgov/geometry.hpp"
#include "pgov/metrics.hpp"
#include "pgov/pseudo_label.hpp"
#include "pgov/scene_synth.hpp"
#include "pgov/trainer.hpp"

namespace pgov {

namespace fs = std::filesystem;

// Writes to `path`.tmp and renames over `path`.
void write_file_atomic(const fs::path& path, std::string_view bytes);
std::string read_file(const fs::path& path);

// `pgov-points v1` text format.
std::string format_points(const GlobalScene& scene);
GlobalScene parse_points(std::string_view text, const std::string& source_name = "<memory>");
void write_points(const fs::path& path, const GlobalScene& scene);
GlobalScene read_points(const fs::path& path);

// frame_%06d.{depth,color,srcid,meta.json} inside `dir`.
std::string frame_stem(int frame_index);
void write_frame(const fs::path& dir, const Frame& frame);
Frame read_frame(const fs::path& dir, int frame_index);
// Frame indices with a meta file in `dir`, ascending.
std::vector<int> list_frames(const fs::path& dir);

// frame_%06d.{entmask,vocab.json}.
void write_entity_map(const fs::path& dir, int frame_index, const PixelEntityMap& map);
PixelEntityMap read_entity_map(const fs::path& dir, int frame_index, int width, int height);

std::vector<std::int32_t> read_i16_raster(const fs::path& path, int width, int height);
std::vector<std::string> read_string_array(const fs::path& path);
void write_string_array(const fs::path& path, const std::vector<std::string>& values);

// JSON header line followed by the f64 little-endian parameter blob.
std::string format_checkpoint(const EncoderParams& params);
EncoderParams parse_checkpoint(std::string_view bytes, const std::string& source_name = "<memory>");
void write_checkpoint(const fs::path& path, const EncoderParams& params);
EncoderParams read_checkpoint(const fs::path& path);

// Header (u64 count, u32 |C|, f64 voxel, u32 R, f64 tau, f64 c, u64 seed)
// then per point i32 argmax, f32 confidence, u8 accepted.
std::string format_pseudo_labels(const PseudoLabelSet& labels);
PseudoLabelSet parse_pseudo_labels(std::string_view bytes, const std::string& source_name = "<memory>");
void write_pseudo_labels(const fs::path& path, const PseudoLabelSet& labels);
PseudoLabelSet read_pseudo_labels(const fs::path& path);

std::string format_loss_csv(const std::vector<LossRecord>& log);
std::vector<LossRecord> parse_loss_csv(std::string_view text, const std::string& source_name = "<memory>");

std::string format_eval_report(const EvalReport& report, const std::vector<std::string>& categories,
                               const std::vector<std::pair<std::string, double>>& extra_metrics = {});
std::string format_confusion(const ConfusionMatrix& matrix, const std::vector<std::string>& categories);

struct CsvRow {
  std::vector<std::string> cells;
};
std::vector<CsvRow> parse_csv(std::string_view text);

}  // namespace pgov
