#include "pgov/config.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace pgov {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

// Reads known keys from one JSON object and rejects the rest.
class ObjectReader {
 public:
  ObjectReader(const json& object, std::string path) : object_(object), path_(std::move(path)) {
    if (!object_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected a JSON object");
  }

  std::string key_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const json* find(const std::string& key) {
    seen_.insert(key);
    auto it = object_.find(key);
    return it == object_.end() ? nullptr : &*it;
  }

  void read(const std::string& key, double& out) {
    if (const json* v = find(key)) {
      if (!v->is_number()) throw ConfigError(key_path(key), "expected a number");
      out = v->get<double>();
    }
  }
  void read(const std::string& key, int& out) {
    if (const json* v = find(key)) {
      if (!v->is_number_integer()) throw ConfigError(key_path(key), "expected an integer");
      const auto x = v->get<std::int64_t>();
      if (x < INT32_MIN || x > INT32_MAX) throw ConfigError(key_path(key), "integer out of range");
      out = static_cast<int>(x);
    }
  }
  void read(const std::string& key, std::uint64_t& out) {
    if (const json* v = find(key)) {
      if (!v->is_number_unsigned()) throw ConfigError(key_path(key), "expected a non-negative integer");
      out = v->get<std::uint64_t>();
    }
  }
  void read(const std::string& key, bool& out) {
    if (const json* v = find(key)) {
      if (!v->is_boolean()) throw ConfigError(key_path(key), "expected true or false");
      out = v->get<bool>();
    }
  }
  void read(const std::string& key, std::string& out) {
    if (const json* v = find(key)) {
      if (!v->is_string()) throw ConfigError(key_path(key), "expected a string");
      out = v->get<std::string>();
    }
  }
  void read(const std::string& key, std::vector<int>& out) {
    if (const json* v = find(key)) {
      if (!v->is_array()) throw ConfigError(key_path(key), "expected an array of integers");
      out.clear();
      for (const auto& e : *v) {
        if (!e.is_number_integer()) throw ConfigError(key_path(key), "expected an array of integers");
        out.push_back(e.get<int>());
      }
    }
  }
  void read(const std::string& key, std::vector<std::string>& out) {
    if (const json* v = find(key)) {
      if (!v->is_array()) throw ConfigError(key_path(key), "expected an array of strings");
      out.clear();
      for (const auto& e : *v) {
        if (!e.is_string()) throw ConfigError(key_path(key), "expected an array of strings");
        out.push_back(e.get<std::string>());
      }
    }
  }
  void read(const std::string& key, SynonymTable& out) {
    if (const json* v = find(key)) {
      if (!v->is_object()) throw ConfigError(key_path(key), "expected an object of alias -> category");
      out.clear();
      for (auto it = v->begin(); it != v->end(); ++it) {
        if (!it.value().is_string()) throw ConfigError(key_path(key) + "." + it.key(), "expected a string");
        out[it.key()] = it.value().get<std::string>();
      }
    }
  }

  template <class Fn>
  void section(const std::string& key, Fn&& fn) {
    if (const json* v = find(key)) {
      ObjectReader child(*v, key_path(key));
      fn(child);
      child.finish();
    }
  }

  void finish() const {
    for (auto it = object_.begin(); it != object_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError(key_path(it.key()), "unknown key");
    }
  }

 private:
  const json& object_;
  std::string path_;
  std::set<std::string> seen_;
};

void check(bool ok, const std::string& key, const std::string& what) {
  if (!ok) throw ConfigError(key, what);
}

bool is_probability(double p) { return p >= 0.0 && p <= 1.0; }

std::string match_mode_name(MatchMode m) { return m == MatchMode::kById ? "by_id" : "by_radius"; }

}  // namespace

std::vector<int> PipelineConfig::layer_sizes() const {
  std::vector<int> sizes{6};
  sizes.insert(sizes.end(), encoder.hidden.begin(), encoder.hidden.end());
  sizes.push_back(encoder.embedding_dim);
  return sizes;
}

const std::vector<std::string>& PipelineConfig::query_vocabulary() const {
  return eval.query_vocabulary.empty() ? eval.categories : eval.query_vocabulary;
}

PipelineConfig parse_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError("<root>", std::string("invalid JSON: ") + e.what());
  }
  PipelineConfig c;
  ObjectReader r(root, "");
  r.read("seed", c.seed);
  r.read("output_dir", c.output_dir);
  r.read("preset", c.preset);
  r.section("scene", [&](ObjectReader& s) {
    s.read("train_scenes", c.scene.train_scenes);
    s.read("eval_scenes", c.scene.eval_scenes);
    s.read("surface_density", c.scene.layout.surface_density);
    s.read("color_jitter", c.scene.layout.color_jitter);
    s.read("object_color_spread", c.scene.layout.object_color_spread);
  });
  r.section("camera", [&](ObjectReader& s) {
    auto& k = c.camera.intrinsics;
    s.read("width", k.width);
    s.read("height", k.height);
    s.read("fx", k.fx);
    s.read("fy", k.fy);
    s.read("cx", k.cx);
    s.read("cy", k.cy);
    s.read("frames_per_scene", c.camera.frames_per_scene);
    s.read("point_radius_px", c.camera.point_radius_px);
    s.section("trajectory", [&](ObjectReader& t) {
      auto& o = c.camera.trajectory;
      t.read("eye_height_min", o.eye_height_min);
      t.read("eye_height_max", o.eye_height_max);
      t.read("radius_fraction", o.radius_fraction);
      t.read("target_height", o.target_height);
      t.read("angle_jitter", o.angle_jitter);
      t.read("radius_jitter", o.radius_jitter);
    });
    s.section("color_noise", [&](ObjectReader& t) {
      auto& n = c.camera.color_noise;
      t.read("gain", n.gain);
      t.read("offset", n.offset);
      t.read("falloff", n.falloff);
      t.read("pixel_sigma", n.pixel_sigma);
    });
  });
  r.section("oracle", [&](ObjectReader& s) {
    s.read("category_dropout_prob", c.oracle.noise.category_dropout_prob);
    s.read("pixel_mislabel_prob", c.oracle.noise.pixel_mislabel_prob);
    s.read("boundary_erosion_px", c.oracle.noise.boundary_erosion_px);
  });
  r.section("encoder", [&](ObjectReader& s) {
    s.read("hidden", c.encoder.hidden);
    s.read("embedding_dim", c.encoder.embedding_dim);
    s.read("text_seed", c.encoder.text_seed);
  });
  r.section("train", [&](ObjectReader& s) {
    auto& t = c.train.config;
    s.read("lambda_consistency", t.lambda_consistency);
    s.read("learning_rate", t.learning_rate);
    s.read("weight_decay", t.weight_decay);
    s.read("adam_beta1", t.adam_beta1);
    s.read("adam_beta2", t.adam_beta2);
    s.read("adam_eps", t.adam_eps);
    s.read("batch_size_stage1", t.batch_size_stage1);
    s.read("batch_size_stage2", t.batch_size_stage2);
    s.read("epochs_stage1", t.epochs_stage1);
    s.read("epochs_stage2", t.epochs_stage2);
    s.read("load_pretrained", t.load_pretrained);
    s.read("finetune_enabled", c.train.finetune_enabled);
    std::string mode = match_mode_name(c.train.matching.match_mode);
    s.read("match_mode", mode);
    if (mode == "by_id") {
      c.train.matching.match_mode = MatchMode::kById;
    } else if (mode == "by_radius") {
      c.train.matching.match_mode = MatchMode::kByRadius;
    } else {
      throw ConfigError("train.match_mode", "expected \"by_id\" or \"by_radius\"");
    }
    s.read("match_radius", c.train.matching.match_radius);
  });
  r.section("pseudo", [&](ObjectReader& s) {
    s.read("voxel_size", c.pseudo.voxel_size);
    s.read("repetitions", c.pseudo.repetitions);
    s.read("temperature", c.pseudo.temperature);
    s.read("confidence_threshold", c.pseudo.confidence_threshold);
  });
  r.section("eval", [&](ObjectReader& s) {
    s.read("categories", c.eval.categories);
    s.read("query_vocabulary", c.eval.query_vocabulary);
    s.read("synonyms", c.eval.synonyms);
    s.read("split", c.eval.split);
    s.read("base", c.eval.base);
    s.read("novel", c.eval.novel);
  });
  r.finish();
  return c;
}

PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("--config", "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const PipelineConfig& c) {
  ordered_json j;
  j["seed"] = c.seed;
  j["output_dir"] = c.output_dir;
  j["preset"] = c.preset;
  j["scene"] = {{"train_scenes", c.scene.train_scenes},
                {"eval_scenes", c.scene.eval_scenes},
                {"surface_density", c.scene.layout.surface_density},
                {"color_jitter", c.scene.layout.color_jitter},
                {"object_color_spread", c.scene.layout.object_color_spread}};
  const auto& k = c.camera.intrinsics;
  const auto& t = c.camera.trajectory;
  const auto& n = c.camera.color_noise;
  j["camera"] = {{"width", k.width},
                 {"height", k.height},
                 {"fx", k.fx},
                 {"fy", k.fy},
                 {"cx", k.cx},
                 {"cy", k.cy},
                 {"frames_per_scene", c.camera.frames_per_scene},
                 {"point_radius_px", c.camera.point_radius_px},
                 {"trajectory",
                  {{"eye_height_min", t.eye_height_min},
                   {"eye_height_max", t.eye_height_max},
                   {"radius_fraction", t.radius_fraction},
                   {"target_height", t.target_height},
                   {"angle_jitter", t.angle_jitter},
                   {"radius_jitter", t.radius_jitter}}},
                 {"color_noise",
                  {{"gain", n.gain}, {"offset", n.offset}, {"falloff", n.falloff}, {"pixel_sigma", n.pixel_sigma}}}};
  j["oracle"] = {{"category_dropout_prob", c.oracle.noise.category_dropout_prob},
                 {"pixel_mislabel_prob", c.oracle.noise.pixel_mislabel_prob},
                 {"boundary_erosion_px", c.oracle.noise.boundary_erosion_px}};
  j["encoder"] = {{"hidden", c.encoder.hidden},
                  {"embedding_dim", c.encoder.embedding_dim},
                  {"text_seed", c.encoder.text_seed}};
  const auto& tr = c.train.config;
  j["train"] = {{"lambda_consistency", tr.lambda_consistency},
                {"learning_rate", tr.learning_rate},
                {"weight_decay", tr.weight_decay},
                {"adam_beta1", tr.adam_beta1},
                {"adam_beta2", tr.adam_beta2},
                {"adam_eps", tr.adam_eps},
                {"batch_size_stage1", tr.batch_size_stage1},
                {"batch_size_stage2", tr.batch_size_stage2},
                {"epochs_stage1", tr.epochs_stage1},
                {"epochs_stage2", tr.epochs_stage2},
                {"load_pretrained", tr.load_pretrained},
                {"finetune_enabled", c.train.finetune_enabled},
                {"match_mode", match_mode_name(c.train.matching.match_mode)},
                {"match_radius", c.train.matching.match_radius}};
  j["pseudo"] = {{"voxel_size", c.pseudo.voxel_size},
                 {"repetitions", c.pseudo.repetitions},
                 {"temperature", c.pseudo.temperature},
                 {"confidence_threshold", c.pseudo.confidence_threshold}};
  ordered_json synonyms = ordered_json::object();
  for (const auto& [alias, target] : c.eval.synonyms) synonyms[alias] = target;
  j["eval"] = {{"categories", c.eval.categories},
               {"query_vocabulary", c.eval.query_vocabulary},
               {"synonyms", synonyms},
               {"split", c.eval.split},
               {"base", c.eval.base},
               {"novel", c.eval.novel}};
  return j.dump(2) + "\n";
}

void validate_config(const PipelineConfig& c) {
  check(!c.output_dir.empty(), "output_dir", "must not be empty");
  {
    const auto& names = preset_names();
    check(std::find(names.begin(), names.end(), c.preset) != names.end(), "preset",
          "unknown preset '" + c.preset + "'");
  }
  check(c.scene.train_scenes >= 1, "scene.train_scenes", "must be >= 1");
  check(c.scene.eval_scenes >= 1, "scene.eval_scenes", "must be >= 1");
  check(c.scene.train_scenes + c.scene.eval_scenes <= 1000, "scene.eval_scenes", "at most 1000 scenes in total");
  check(c.scene.layout.surface_density > 0.0, "scene.surface_density", "must be > 0");
  check(c.scene.layout.color_jitter >= 0.0, "scene.color_jitter", "must be >= 0");
  check(c.scene.layout.object_color_spread >= 0.0, "scene.object_color_spread", "must be >= 0");

  const auto& k = c.camera.intrinsics;
  check(k.width >= 1, "camera.width", "must be >= 1");
  check(k.height >= 1, "camera.height", "must be >= 1");
  check(k.fx > 0.0 && std::isfinite(k.fx), "camera.fx", "must be > 0");
  check(k.fy > 0.0 && std::isfinite(k.fy), "camera.fy", "must be > 0");
  check(k.cx >= 0.0 && k.cx < k.width, "camera.cx", "must lie in [0, width)");
  check(k.cy >= 0.0 && k.cy < k.height, "camera.cy", "must lie in [0, height)");
  check(c.camera.frames_per_scene >= 2, "camera.frames_per_scene", "must be >= 2");
  check(c.camera.point_radius_px >= 1, "camera.point_radius_px", "must be >= 1");
  const auto& t = c.camera.trajectory;
  check(t.eye_height_min > 0.0, "camera.trajectory.eye_height_min", "must be > 0");
  check(t.eye_height_max >= t.eye_height_min, "camera.trajectory.eye_height_max", "must be >= eye_height_min");
  check(t.radius_fraction > 0.0 && t.radius_fraction < 0.5, "camera.trajectory.radius_fraction",
        "must lie in (0, 0.5)");
  check(t.angle_jitter >= 0.0, "camera.trajectory.angle_jitter", "must be >= 0");
  check(t.radius_jitter >= 0.0, "camera.trajectory.radius_jitter", "must be >= 0");
  const auto& n = c.camera.color_noise;
  check(n.gain >= 0.0 && n.gain < 1.0, "camera.color_noise.gain", "must lie in [0, 1)");
  check(n.offset >= 0.0, "camera.color_noise.offset", "must be >= 0");
  check(n.falloff >= 0.0, "camera.color_noise.falloff", "must be >= 0");
  check(n.pixel_sigma >= 0.0, "camera.color_noise.pixel_sigma", "must be >= 0");

  check(is_probability(c.oracle.noise.category_dropout_prob), "oracle.category_dropout_prob", "must lie in [0, 1]");
  check(is_probability(c.oracle.noise.pixel_mislabel_prob), "oracle.pixel_mislabel_prob", "must lie in [0, 1]");
  check(c.oracle.noise.boundary_erosion_px >= 0, "oracle.boundary_erosion_px", "must be >= 0");

  for (int h : c.encoder.hidden) check(h >= 1, "encoder.hidden", "layer widths must be >= 1");
  check(c.encoder.embedding_dim >= 2, "encoder.embedding_dim", "must be >= 2");

  const auto& tr = c.train.config;
  check(tr.lambda_consistency >= 0.0, "train.lambda_consistency", "must be >= 0");
  check(tr.learning_rate > 0.0, "train.learning_rate", "must be > 0");
  check(tr.weight_decay >= 0.0, "train.weight_decay", "must be >= 0");
  check(tr.adam_beta1 >= 0.0 && tr.adam_beta1 < 1.0, "train.adam_beta1", "must lie in [0, 1)");
  check(tr.adam_beta2 >= 0.0 && tr.adam_beta2 < 1.0, "train.adam_beta2", "must lie in [0, 1)");
  check(tr.adam_eps > 0.0, "train.adam_eps", "must be > 0");
  check(tr.batch_size_stage1 >= 1, "train.batch_size_stage1", "must be >= 1");
  check(tr.batch_size_stage2 >= 1, "train.batch_size_stage2", "must be >= 1");
  check(tr.epochs_stage1 >= 0, "train.epochs_stage1", "must be >= 0");
  check(tr.epochs_stage2 >= 0, "train.epochs_stage2", "must be >= 0");
  check(c.train.matching.match_radius > 0.0, "train.match_radius", "must be > 0");

  check(c.pseudo.voxel_size > 0.0, "pseudo.voxel_size", "must be > 0");
  check(c.pseudo.repetitions >= 1, "pseudo.repetitions", "must be >= 1");
  check(c.pseudo.temperature > 0.0, "pseudo.temperature", "must be > 0");
  check(is_probability(c.pseudo.confidence_threshold), "pseudo.confidence_threshold", "must lie in [0, 1]");

  check(!c.eval.categories.empty(), "eval.categories", "must not be empty");
  {
    std::set<std::string> unique(c.eval.categories.begin(), c.eval.categories.end());
    check(unique.size() == c.eval.categories.size(), "eval.categories", "duplicate category");
    for (const auto& [alias, target] : c.eval.synonyms) {
      check(unique.count(target) != 0, "eval.synonyms." + alias, "maps to unknown category '" + target + "'");
    }
    for (const auto& room : room_categories()) {
      check(unique.count(room) != 0 || std::any_of(c.eval.synonyms.begin(), c.eval.synonyms.end(),
                                                  [&](const auto& kv) { return kv.first == room; }),
            "eval.categories", "synthetic category '" + room + "' is not covered");
    }
  }
  if (!c.eval.split.empty()) {
    check(c.eval.base.empty() && c.eval.novel.empty(), "eval.split", "give either a split name or base/novel lists");
    try {
      split_base_novel(c.eval.categories, c.eval.split);
    } catch (const Error& e) {
      throw ConfigError("eval.split", e.what());
    }
  } else if (!c.eval.base.empty() || !c.eval.novel.empty()) {
    try {
      split_base_novel(c.eval.categories, c.eval.base, c.eval.novel);
    } catch (const Error& e) {
      throw ConfigError("eval.base", e.what());
    }
  }
}

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{"full_curriculum", "stage1_only", "no_consistency",
                                              "no_pretrained_weights"};
  return names;
}

std::vector<std::pair<std::string, std::string>> preset_overrides(const std::string& preset) {
  if (preset == "full_curriculum") return {};
  if (preset == "stage1_only") return {{"train.finetune_enabled", "false"}};
  if (preset == "no_consistency") return {{"train.lambda_consistency", "0.0"}};
  if (preset == "no_pretrained_weights") return {{"train.load_pretrained", "false"}};
  throw ConfigError("preset", "unknown preset '" + preset + "'");
}

PipelineConfig apply_preset(const PipelineConfig& config, const std::string& preset) {
  json j = json::parse(serialize_config(config));
  j["preset"] = preset;
  for (const auto& [key, literal] : preset_overrides(preset)) {
    json::json_pointer ptr("/" + [&] {
      std::string p = key;
      std::replace(p.begin(), p.end(), '.', '/');
      return p;
    }());
    j[ptr] = json::parse(literal);
  }
  return parse_config(j.dump());
}

std::string config_hash(const PipelineConfig& config) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, stable_hash(serialize_config(config)));
  return buf;
}

}  // namespace pgov
