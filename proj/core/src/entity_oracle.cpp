#include "pgov/entity_oracle.hpp"

#include <algorithm>
#include <random>
#include <unordered_set>

#include "pgov/io.hpp"

namespace pgov {

void NoiseConfig::validate() const {
  auto check_prob = [](double p, const char* name) {
    if (!(p >= 0.0 && p <= 1.0)) throw Error(Errc::kInvalidArgument, std::string(name) + " must lie in [0, 1]");
  };
  check_prob(category_dropout_prob, "category_dropout_prob");
  check_prob(pixel_mislabel_prob, "pixel_mislabel_prob");
  if (boundary_erosion_px < 0) throw Error(Errc::kInvalidArgument, "boundary_erosion_px must be >= 0");
}

PixelEntityMap PixelEntityMap::unlabeled(int width, int height) {
  PixelEntityMap map;
  map.width = width;
  map.height = height;
  map.ids.assign(std::size_t(width) * std::size_t(height), kUnlabeled);
  return map;
}

std::size_t PixelEntityMap::labeled_count() const {
  return static_cast<std::size_t>(std::count_if(ids.begin(), ids.end(), [](std::int32_t e) { return e != kUnlabeled; }));
}

void PixelEntityMap::validate() const {
  if (width < 0 || height < 0 || ids.size() != std::size_t(width) * std::size_t(height)) {
    throw Error(Errc::kDimMismatch, "entity raster size does not match its dimensions");
  }
  std::unordered_set<std::string> seen;
  for (const auto& e : vocabulary) {
    if (!seen.insert(e).second) throw Error(Errc::kInvalidArgument, "duplicate vocabulary entry '" + e + "'");
  }
  const auto k = static_cast<std::int32_t>(vocabulary.size());
  for (std::int32_t id : ids) {
    if (id == kUnlabeled) continue;
    if (id < 0) throw Error(Errc::kInvalidArgument, "negative entity id " + std::to_string(id));
    if (id >= k) {
      throw Error(Errc::kVocabMismatch,
                  "entity id " + std::to_string(id) + " with vocabulary of size " + std::to_string(k));
    }
  }
}

SceneLabelIndex::SceneLabelIndex(const GlobalScene& scene) {
  dense_ = true;
  for (std::size_t i = 0; i < scene.points.size(); ++i) {
    if (scene.points[i].id != static_cast<std::int64_t>(i)) {
      dense_ = false;
      break;
    }
  }
  if (dense_) {
    dense_labels_.reserve(scene.points.size());
    for (const auto& p : scene.points) dense_labels_.push_back(p.label);
  } else {
    sparse_labels_.reserve(scene.points.size());
    for (const auto& p : scene.points) sparse_labels_.emplace(p.id, p.label);
  }
}

std::int32_t SceneLabelIndex::label_of(std::int64_t point_id) const {
  if (dense_) {
    if (point_id < 0 || point_id >= static_cast<std::int64_t>(dense_labels_.size())) return -1;
    return dense_labels_[static_cast<std::size_t>(point_id)];
  }
  auto it = sparse_labels_.find(point_id);
  return it == sparse_labels_.end() ? -1 : it->second;
}

void erode_label_boundaries(PixelEntityMap& map, const std::vector<std::int32_t>& reference,
                            const std::vector<bool>& valid, int radius_px) {
  if (radius_px <= 0) return;
  const int w = map.width;
  const int h = map.height;
  std::vector<bool> erode(map.ids.size(), false);
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      const std::size_t i = std::size_t(v) * w + u;
      if (!valid[i]) continue;
      const std::int32_t own = reference[i];
      bool boundary = false;
      for (int dv = -radius_px; dv <= radius_px && !boundary; ++dv) {
        const int vv = v + dv;
        if (vv < 0 || vv >= h) continue;
        for (int du = -radius_px; du <= radius_px; ++du) {
          const int uu = u + du;
          if (uu < 0 || uu >= w) continue;
          const std::size_t j = std::size_t(vv) * w + uu;
          if (valid[j] && reference[j] != own) {
            boundary = true;
            break;
          }
        }
      }
      erode[i] = boundary;
    }
  }
  for (std::size_t i = 0; i < erode.size(); ++i) {
    if (erode[i]) map.ids[i] = kUnlabeled;
  }
}

PixelEntityMap oracle_pixel_entities(const Frame& frame, const GlobalScene& scene, const NoiseConfig& noise) {
  return oracle_pixel_entities(frame, scene, SceneLabelIndex(scene), noise);
}

PixelEntityMap oracle_pixel_entities(const Frame& frame, const GlobalScene& scene,
                                     const SceneLabelIndex& index, const NoiseConfig& noise) {
  noise.validate();
  if (!frame.has_provenance()) {
    throw Error(Errc::kMissingProvenance, "frame " + std::to_string(frame.frame_index) + " has no source ids");
  }
  const int w = frame.depth.width;
  const int h = frame.depth.height;
  PixelEntityMap map = PixelEntityMap::unlabeled(w, h);
  std::vector<bool> valid(map.ids.size(), false);

  // Ground truth restricted to visible pixels, vocabulary in raster order.
  std::vector<std::int32_t> category_to_entity(scene.categories.size(), kUnlabeled);
  for (std::size_t i = 0; i < map.ids.size(); ++i) {
    if (!(frame.depth.data[i] > 0.0f)) continue;
    valid[i] = true;
    const std::int32_t label = index.label_of(frame.source_id.data[i]);
    if (label < 0) continue;
    auto& entity = category_to_entity[static_cast<std::size_t>(label)];
    if (entity == kUnlabeled) {
      entity = static_cast<std::int32_t>(map.vocabulary.size());
      map.vocabulary.push_back(scene.categories[static_cast<std::size_t>(label)]);
    }
    map.ids[i] = entity;
  }

  std::mt19937_64 rng(mix_seed(noise.seed, static_cast<std::uint64_t>(frame.frame_index)));
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  // Grounding failure removes whole categories.
  std::vector<std::int32_t> remap(map.vocabulary.size(), kUnlabeled);
  std::vector<std::string> kept;
  for (std::size_t e = 0; e < map.vocabulary.size(); ++e) {
    if (unit(rng) < noise.category_dropout_prob) continue;
    remap[e] = static_cast<std::int32_t>(kept.size());
    kept.push_back(map.vocabulary[e]);
  }
  map.vocabulary = std::move(kept);
  for (auto& id : map.ids) {
    if (id != kUnlabeled) id = remap[static_cast<std::size_t>(id)];
  }
  const std::vector<std::int32_t> reference = map.ids;

  const auto k = static_cast<std::int32_t>(map.vocabulary.size());
  for (std::size_t i = 0; i < map.ids.size(); ++i) {
    if (!valid[i]) continue;
    const double draw = unit(rng);
    if (map.ids[i] == kUnlabeled || k < 2 || !(draw < noise.pixel_mislabel_prob)) continue;
    std::int32_t other = static_cast<std::int32_t>(std::uniform_int_distribution<int>(0, k - 2)(rng));
    if (other >= map.ids[i]) ++other;
    map.ids[i] = other;
  }

  erode_label_boundaries(map, reference, valid, noise.boundary_erosion_px);
  return map;
}

PixelEntityMap ingest_external_masks(const std::filesystem::path& mask_path,
                                     const std::filesystem::path& vocab_path, int width, int height) {
  PixelEntityMap map;
  map.width = width;
  map.height = height;
  map.ids = read_i16_raster(mask_path, width, height);
  map.vocabulary = read_string_array(vocab_path);
  for (std::size_t i = 0; i < map.ids.size(); ++i) {
    if (map.ids[i] < kUnlabeled) {
      throw FormatError(mask_path.string(), i * 2, "entity id " + std::to_string(map.ids[i]) + " below -1");
    }
  }
  map.validate();
  return map;
}

}  // namespace pgov
