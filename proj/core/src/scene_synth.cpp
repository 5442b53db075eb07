#include "pgov/scene_synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>
#include <unordered_map>
#include <unordered_set>

namespace pgov {

void SceneSpec::validate() const {
  if (!(room_extent.array() > 0.0).all() || !room_extent.allFinite()) {
    throw Error(Errc::kInvalidArgument, "room_extent must be strictly positive");
  }
  if (!(surface_density > 0.0)) throw Error(Errc::kInvalidArgument, "surface_density must be positive");
  if (!(color_jitter >= 0.0)) throw Error(Errc::kInvalidArgument, "color_jitter must be non-negative");
  for (const auto& obj : objects) {
    if (!(obj.half_extents.array() > 0.0).all()) {
      throw Error(Errc::kInvalidArgument, "object half-extents must be positive");
    }
    if (obj.category.empty()) throw Error(Errc::kInvalidArgument, "object category is empty");
    if (!obj.center.allFinite()) throw Error(Errc::kInvalidArgument, "object center is not finite");
  }
}

SceneBounds GlobalScene::bounds() const {
  SceneBounds b;
  if (points.empty()) return b;
  b.lo = b.hi = points.front().position;
  for (const auto& p : points) {
    b.lo = b.lo.cwiseMin(p.position);
    b.hi = b.hi.cwiseMax(p.position);
  }
  return b;
}

Vec3 GlobalScene::centroid() const {
  const SceneBounds b = bounds();
  return 0.5 * (b.lo + b.hi);
}

void GlobalScene::validate() const {
  std::unordered_set<std::int64_t> ids;
  ids.reserve(points.size());
  for (const auto& p : points) {
    if (!ids.insert(p.id).second) {
      throw Error(Errc::kInvalidArgument, "duplicate point id " + std::to_string(p.id));
    }
    if (p.label < 0 || p.label >= static_cast<int>(categories.size())) {
      throw Error(Errc::kInvalidArgument, "point label outside category list");
    }
    if (!p.position.allFinite()) throw Error(Errc::kInvalidArgument, "non-finite point position");
  }
}

namespace {

struct Face {
  Vec3 center;
  int axis_u;
  int axis_v;
  double half_u;
  double half_v;
  double area() const { return 4.0 * half_u * half_v; }
};

std::vector<Face> primitive_faces(const ScenePrimitive& prim) {
  std::vector<Face> faces;
  const Vec3& h = prim.half_extents;
  if (prim.kind == PrimitiveKind::kPlane) {
    int normal = 0;
    h.minCoeff(&normal);
    const int a = (normal + 1) % 3;
    const int b = (normal + 2) % 3;
    faces.push_back({prim.center, std::min(a, b), std::max(a, b), h[std::min(a, b)], h[std::max(a, b)]});
    return faces;
  }
  for (int axis = 0; axis < 3; ++axis) {
    const int a = (axis + 1) % 3;
    const int b = (axis + 2) % 3;
    for (double sign : {-1.0, 1.0}) {
      Vec3 c = prim.center;
      c[axis] += sign * h[axis];
      faces.push_back({c, std::min(a, b), std::max(a, b), h[std::min(a, b)], h[std::max(a, b)]});
    }
  }
  return faces;
}

}  // namespace

GlobalScene generate_scene(const SceneSpec& spec) {
  if (spec.objects.empty()) throw Error(Errc::kEmptySpec, "scene spec has no objects");
  spec.validate();

  GlobalScene scene;
  std::unordered_map<std::string, int> category_index;
  for (const auto& obj : spec.objects) {
    if (category_index.emplace(obj.category, static_cast<int>(scene.categories.size())).second) {
      scene.categories.push_back(obj.category);
    }
  }

  std::mt19937_64 rng(mix_seed(spec.seed, "scene-points"));
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::normal_distribution<double> jitter(0.0, 1.0);
  std::int64_t next_id = 0;

  for (const auto& obj : spec.objects) {
    const auto faces = primitive_faces(obj);
    std::vector<long> counts;
    long total = 0;
    for (const auto& f : faces) {
      counts.push_back(std::lround(f.area() * spec.surface_density));
      total += counts.back();
    }
    if (total == 0) {
      const auto largest = std::max_element(faces.begin(), faces.end(), [](const Face& x, const Face& y) {
        return x.area() < y.area();
      });
      counts[static_cast<std::size_t>(largest - faces.begin())] = 1;
    }
    const int label = category_index.at(obj.category);
    for (std::size_t fi = 0; fi < faces.size(); ++fi) {
      const Face& f = faces[fi];
      for (long k = 0; k < counts[fi]; ++k) {
        ScenePoint p;
        p.id = next_id++;
        p.position = f.center;
        p.position[f.axis_u] += unit(rng) * f.half_u;
        p.position[f.axis_v] += unit(rng) * f.half_v;
        p.color = obj.color;
        if (spec.color_jitter > 0.0) {
          for (int c = 0; c < 3; ++c) p.color[c] += spec.color_jitter * jitter(rng);
        }
        p.color = p.color.cwiseMax(0.0).cwiseMin(1.0);
        p.label = label;
        scene.points.push_back(p);
      }
    }
  }
  return scene;
}

CameraTrajectory generate_trajectory(const GlobalScene& scene, int n_frames, std::uint64_t seed,
                                     const TrajectoryOptions& options) {
  if (n_frames < 1) throw Error(Errc::kInvalidArgument, "n_frames must be at least 1");
  const SceneBounds b = scene.bounds();
  const Vec3 center = 0.5 * (b.lo + b.hi);
  const double half_min = 0.5 * std::min(b.hi.x() - b.lo.x(), b.hi.y() - b.lo.y());
  const double radius = options.radius_fraction * 2.0 * half_min;

  std::mt19937_64 rng(mix_seed(seed, "trajectory"));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double phase = 2.0 * std::numbers::pi * unit(rng);

  CameraTrajectory traj;
  traj.poses.reserve(static_cast<std::size_t>(n_frames));
  for (int i = 0; i < n_frames; ++i) {
    const double angle = phase + 2.0 * std::numbers::pi * i / n_frames +
                         options.angle_jitter * (2.0 * unit(rng) - 1.0);
    const double r = std::max(0.1, radius + options.radius_jitter * (2.0 * unit(rng) - 1.0));
    const double height =
        options.eye_height_min + (options.eye_height_max - options.eye_height_min) * unit(rng);
    const Vec3 eye(center.x() + r * std::cos(angle), center.y() + r * std::sin(angle), b.lo.z() + height);
    const Vec3 target(center.x(), center.y(), b.lo.z() + options.target_height);
    traj.poses.push_back(CameraPose::look_at(eye, target, Vec3::UnitZ()));
  }
  return traj;
}

CategorySplit split_base_novel(const std::vector<std::string>& categories,
                               std::vector<int> base, std::vector<int> novel) {
  const int k = static_cast<int>(categories.size());
  std::set<int> seen;
  for (const auto* list : {&base, &novel}) {
    for (int idx : *list) {
      if (idx < 0 || idx >= k) throw Error(Errc::kBadSplit, "category index out of range");
      if (!seen.insert(idx).second) throw Error(Errc::kBadSplit, "base and novel lists overlap");
    }
  }
  return {std::move(base), std::move(novel)};
}

CategorySplit split_base_novel(const std::vector<std::string>& categories,
                               const std::string& split_name) {
  int base_n = 0;
  int novel_n = 0;
  if (split_name == "B15/N4") {
    base_n = 15, novel_n = 4;
  } else if (split_name == "B12/N7") {
    base_n = 12, novel_n = 7;
  } else if (split_name == "B10/N9") {
    base_n = 10, novel_n = 9;
  } else {
    throw Error(Errc::kBadSplit, "unknown split name '" + split_name + "'");
  }
  if (base_n + novel_n > static_cast<int>(categories.size())) {
    throw Error(Errc::kBadSplit, split_name + " needs " + std::to_string(base_n + novel_n) +
                                     " categories, have " + std::to_string(categories.size()));
  }
  CategorySplit split;
  for (int i = 0; i < base_n; ++i) split.base.push_back(i);
  for (int i = base_n; i < base_n + novel_n; ++i) split.novel.push_back(i);
  return split;
}

// ---------------------------------------------------------------------------
// Benchmark room layouts.

namespace {

struct CategoryStyle {
  const char* name;
  Vec3 color;
};

const std::vector<CategoryStyle>& styles() {
  static const std::vector<CategoryStyle> kStyles = {
      {"wall", Vec3(0.86, 0.84, 0.78)},     {"floor", Vec3(0.46, 0.33, 0.22)},
      {"cabinet", Vec3(0.22, 0.45, 0.62)},  {"bed", Vec3(0.88, 0.58, 0.72)},
      {"chair", Vec3(0.16, 0.16, 0.19)},    {"sofa", Vec3(0.70, 0.16, 0.15)},
      {"table", Vec3(0.86, 0.70, 0.34)},    {"door", Vec3(0.36, 0.60, 0.36)},
      {"window", Vec3(0.56, 0.80, 0.98)},   {"bookshelf", Vec3(0.50, 0.30, 0.62)},
  };
  return kStyles;
}

Vec3 style_color(const std::string& name) {
  for (const auto& s : styles()) {
    if (name == s.name) return s.color;
  }
  return Vec3::Constant(0.5);
}

}  // namespace

const std::vector<std::string>& room_categories() {
  static const std::vector<std::string> kNames = [] {
    std::vector<std::string> names;
    for (const auto& s : styles()) names.emplace_back(s.name);
    return names;
  }();
  return kNames;
}

SceneSpec make_room_spec(std::uint64_t seed, const RoomLayoutOptions& options) {
  std::mt19937_64 rng(mix_seed(seed, "room-layout"));
  auto uniform = [&rng](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };

  SceneSpec spec;
  spec.seed = mix_seed(seed, "room-points");
  spec.surface_density = options.surface_density;
  spec.color_jitter = options.color_jitter;
  const double ex = uniform(5.0, 7.0);
  const double ey = uniform(4.0, 6.0);
  const double ez = uniform(2.6, 3.0);
  spec.room_extent = Vec3(ex, ey, ez);
  const double thin = 0.01;

  auto tinted = [&](const std::string& category) {
    Vec3 c = style_color(category);
    for (int i = 0; i < 3; ++i) c[i] += uniform(-options.object_color_spread, options.object_color_spread);
    return Vec3(c.cwiseMax(0.0).cwiseMin(1.0));
  };
  auto add = [&](PrimitiveKind kind, Vec3 center, Vec3 half, const std::string& category) {
    spec.objects.push_back({kind, center, half, category, tinted(category)});
  };

  add(PrimitiveKind::kPlane, Vec3(ex / 2, ey / 2, 0.0), Vec3(ex / 2, ey / 2, thin), "floor");
  add(PrimitiveKind::kPlane, Vec3(ex / 2, 0.0, ez / 2), Vec3(ex / 2, thin, ez / 2), "wall");
  add(PrimitiveKind::kPlane, Vec3(ex / 2, ey, ez / 2), Vec3(ex / 2, thin, ez / 2), "wall");
  add(PrimitiveKind::kPlane, Vec3(0.0, ey / 2, ez / 2), Vec3(thin, ey / 2, ez / 2), "wall");
  add(PrimitiveKind::kPlane, Vec3(ex, ey / 2, ez / 2), Vec3(thin, ey / 2, ez / 2), "wall");

  // Wall-mounted planes sit slightly inside the room so they occlude the wall.
  auto on_wall = [&](double width, double height, double z_center, const std::string& category) {
    const int wall = static_cast<int>(uniform(0.0, 4.0)) % 4;
    const double inset = 0.02;
    if (wall < 2) {
      const double x = uniform(width / 2 + 0.3, ex - width / 2 - 0.3);
      const double y = wall == 0 ? inset : ey - inset;
      add(PrimitiveKind::kPlane, Vec3(x, y, z_center), Vec3(width / 2, thin, height / 2), category);
    } else {
      const double y = uniform(width / 2 + 0.3, ey - width / 2 - 0.3);
      const double x = wall == 2 ? inset : ex - inset;
      add(PrimitiveKind::kPlane, Vec3(x, y, z_center), Vec3(thin, width / 2, height / 2), category);
    }
  };
  // Not every room holds every category, so scene vocabularies differ.
  auto maybe = [&](double p) { return uniform(0.0, 1.0) < p; };
  on_wall(uniform(0.8, 1.0), uniform(1.9, 2.1), 1.0, "door");
  const int windows = static_cast<int>(uniform(0.0, 3.0));
  for (int i = 0; i < windows; ++i) on_wall(uniform(0.9, 1.4), uniform(0.8, 1.2), 1.5, "window");

  // Floor-standing boxes; against_wall pushes the box to a random wall.
  auto place_box = [&](Vec3 half, bool against_wall, const std::string& category) {
    if (uniform(0.0, 1.0) < 0.5) std::swap(half.x(), half.y());
    Vec3 c(uniform(half.x() + 0.1, ex - half.x() - 0.1), uniform(half.y() + 0.1, ey - half.y() - 0.1), half.z());
    if (against_wall) {
      switch (static_cast<int>(uniform(0.0, 4.0)) % 4) {
        case 0: c.x() = half.x() + 0.05; break;
        case 1: c.x() = ex - half.x() - 0.05; break;
        case 2: c.y() = half.y() + 0.05; break;
        default: c.y() = ey - half.y() - 0.05; break;
      }
    }
    add(PrimitiveKind::kBox, c, half, category);
  };
  if (maybe(0.5)) place_box(Vec3(uniform(0.9, 1.1), uniform(0.7, 0.9), uniform(0.22, 0.3)), true, "bed");
  if (maybe(0.6)) place_box(Vec3(uniform(0.8, 1.0), uniform(0.4, 0.5), uniform(0.35, 0.45)), true, "sofa");
  const int cabinets = static_cast<int>(uniform(0.0, 3.0));
  for (int i = 0; i < cabinets; ++i) {
    place_box(Vec3(uniform(0.3, 0.5), uniform(0.2, 0.3), uniform(0.4, 0.5)), true, "cabinet");
  }
  if (maybe(0.6)) place_box(Vec3(uniform(0.4, 0.6), uniform(0.15, 0.2), uniform(0.85, 1.0)), true, "bookshelf");
  const int tables = 1 + static_cast<int>(uniform(0.0, 2.0));
  for (int i = 0; i < tables; ++i) {
    place_box(Vec3(uniform(0.5, 0.7), uniform(0.35, 0.45), uniform(0.36, 0.39)), false, "table");
  }
  const int chairs = static_cast<int>(uniform(0.0, 5.0));
  for (int i = 0; i < chairs; ++i) {
    place_box(Vec3(uniform(0.22, 0.28), uniform(0.22, 0.28), uniform(0.4, 0.5)), false, "chair");
  }
  return spec;
}

}  // namespace pgov
