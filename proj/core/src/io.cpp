#include "pgov/io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cinttypes>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace pgov {

using nlohmann::json;

namespace {

template <class T>
void put_le(std::string& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.append(reinterpret_cast<const char*>(bytes), sizeof(T));
}

// Bounds-checked little-endian reader that reports byte offsets.
class ByteReader {
 public:
  ByteReader(std::string_view data, std::string source) : data_(data), source_(std::move(source)) {}

  template <class T>
  T get() {
    if (pos_ + sizeof(T) > data_.size()) {
      throw FormatError(source_, pos_, "truncated: need " + std::to_string(sizeof(T)) + " bytes, have " +
                                           std::to_string(data_.size() - pos_));
    }
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, data_.data() + pos_, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
    T value;
    std::memcpy(&value, bytes, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }

  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return data_.size() - pos_; }
  void expect_end() const {
    if (pos_ != data_.size()) throw FormatError(source_, pos_, "unexpected trailing bytes");
  }

 private:
  std::string_view data_;
  std::string source_;
  std::size_t pos_ = 0;
};

std::string fmt_double(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", digits, v);
  return buf;
}

void require_size(const std::string& bytes, std::size_t expected, const fs::path& path) {
  if (bytes.size() < expected) {
    throw FormatError(path.string(), bytes.size(),
                      "truncated: expected " + std::to_string(expected) + " bytes, file has " +
                          std::to_string(bytes.size()));
  }
  if (bytes.size() > expected) {
    throw FormatError(path.string(), expected, "file is longer than the expected " + std::to_string(expected) + " bytes");
  }
}

json parse_json_file(const fs::path& path) {
  const std::string text = read_file(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(path.string(), e.byte > 0 ? e.byte - 1 : 0, e.what());
  }
}

}  // namespace

void write_file_atomic(const fs::path& path, std::string_view bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::kInvalidArgument, "cannot open " + tmp.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(Errc::kInvalidArgument, "failed writing " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kMissingArtifacts, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------
// pgov-points v1

std::string format_points(const GlobalScene& scene) {
  std::string out;
  out.reserve(scene.points.size() * 96);
  out += "#pgov-points v1 count=" + std::to_string(scene.points.size()) +
         " categories=" + std::to_string(scene.categories.size()) + "\n";
  for (std::size_t c = 0; c < scene.categories.size(); ++c) {
    out += "#cat " + std::to_string(c) + " " + scene.categories[c] + "\n";
  }
  char buf[256];
  for (const auto& p : scene.points) {
    std::snprintf(buf, sizeof(buf), "%.9g %.9g %.9g %.9g %.9g %.9g %d %" PRId64 "\n", p.position.x(),
                  p.position.y(), p.position.z(), p.color.x(), p.color.y(), p.color.z(), p.label, p.id);
    out += buf;
  }
  return out;
}

namespace {

class LineCursor {
 public:
  explicit LineCursor(std::string_view text) : text_(text) {}
  bool next(std::string_view& line) {
    if (pos_ >= text_.size()) return false;
    line_start_ = pos_;
    const std::size_t end = text_.find('\n', pos_);
    if (end == std::string_view::npos) {
      line = text_.substr(pos_);
      pos_ = text_.size();
      unterminated_ = true;
    } else {
      line = text_.substr(pos_, end - pos_);
      pos_ = end + 1;
    }
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    return true;
  }
  std::size_t line_start() const { return line_start_; }
  bool unterminated() const { return unterminated_; }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_start_ = 0;
  bool unterminated_ = false;
};

template <class T>
bool parse_number(std::string_view token, T& value) {
  if constexpr (std::is_floating_point_v<T>) {
    // from_chars for doubles is available in libstdc++ 11.
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    return ec == std::errc() && ptr == token.data() + token.size();
  } else {
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    return ec == std::errc() && ptr == token.data() + token.size();
  }
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
    if (i > start) tokens.push_back(line.substr(start, i - start));
  }
  return tokens;
}

}  // namespace

GlobalScene parse_points(std::string_view text, const std::string& source_name) {
  LineCursor cursor(text);
  std::string_view line;
  if (!cursor.next(line)) throw FormatError(source_name, 0, "empty file");
  std::size_t count = 0;
  std::size_t categories = 0;
  {
    const auto tok = split_ws(line);
    if (tok.size() != 4 || tok[0] != "#pgov-points" || tok[1] != "v1" || !tok[2].starts_with("count=") ||
        !tok[3].starts_with("categories=") || !parse_number(tok[2].substr(6), count) ||
        !parse_number(tok[3].substr(11), categories)) {
      throw FormatError(source_name, 0, "bad header line");
    }
  }
  GlobalScene scene;
  for (std::size_t c = 0; c < categories; ++c) {
    if (!cursor.next(line)) throw FormatError(source_name, text.size(), "truncated category list");
    const auto tok = split_ws(line);
    std::size_t idx = 0;
    if (tok.size() < 3 || tok[0] != "#cat" || !parse_number(tok[1], idx) || idx != c) {
      throw FormatError(source_name, cursor.line_start(), "bad category line");
    }
    const std::size_t name_start = static_cast<std::size_t>(tok[2].data() - line.data());
    scene.categories.emplace_back(line.substr(name_start));
  }
  scene.points.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    if (!cursor.next(line)) throw FormatError(source_name, text.size(), "truncated: expected " + std::to_string(count) + " points");
    const auto tok = split_ws(line);
    ScenePoint p;
    bool ok = tok.size() == 8;
    for (int k = 0; ok && k < 3; ++k) ok = parse_number(tok[k], p.position[k]);
    for (int k = 0; ok && k < 3; ++k) ok = parse_number(tok[3 + k], p.color[k]);
    ok = ok && parse_number(tok[6], p.label) && parse_number(tok[7], p.id);
    if (!ok) throw FormatError(source_name, cursor.line_start(), "malformed point line");
    if (p.label < -1 || p.label >= static_cast<std::int32_t>(categories)) {
      throw FormatError(source_name, cursor.line_start(), "label out of range");
    }
    scene.points.push_back(p);
  }
  if (cursor.unterminated()) throw FormatError(source_name, text.size(), "last line is not newline-terminated");
  if (cursor.next(line)) throw FormatError(source_name, cursor.line_start(), "unexpected trailing content");
  return scene;
}

void write_points(const fs::path& path, const GlobalScene& scene) { write_file_atomic(path, format_points(scene)); }

GlobalScene read_points(const fs::path& path) { return parse_points(read_file(path), path.string()); }

// ---------------------------------------------------------------------------
// Frames

std::string frame_stem(int frame_index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "frame_%06d", frame_index);
  return buf;
}

void write_frame(const fs::path& dir, const Frame& frame) {
  const std::string stem = frame_stem(frame.frame_index);
  std::string depth, color, srcid;
  depth.reserve(frame.depth.size() * 4);
  for (float d : frame.depth.data) put_le(depth, d);
  color.reserve(frame.color.size() * 12);
  for (const Color& c : frame.color.data) {
    put_le(color, c.x());
    put_le(color, c.y());
    put_le(color, c.z());
  }
  srcid.reserve(frame.depth.size() * 8);
  for (std::size_t i = 0; i < frame.depth.size(); ++i) {
    put_le(srcid, frame.has_provenance() ? frame.source_id.data[i] : kNoSource);
  }
  json meta;
  meta["width"] = frame.intrinsics.width;
  meta["height"] = frame.intrinsics.height;
  meta["fx"] = frame.intrinsics.fx;
  meta["fy"] = frame.intrinsics.fy;
  meta["cx"] = frame.intrinsics.cx;
  meta["cy"] = frame.intrinsics.cy;
  const Eigen::Matrix4d m = frame.pose.matrix();
  std::vector<double> pose;
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) pose.push_back(m(r, c));
  }
  meta["pose"] = pose;
  meta["frame_index"] = frame.frame_index;
  write_file_atomic(dir / (stem + ".depth"), depth);
  write_file_atomic(dir / (stem + ".color"), color);
  write_file_atomic(dir / (stem + ".srcid"), srcid);
  write_file_atomic(dir / (stem + ".meta.json"), meta.dump(2) + "\n");
}

Frame read_frame(const fs::path& dir, int frame_index) {
  const std::string stem = frame_stem(frame_index);
  const fs::path meta_path = dir / (stem + ".meta.json");
  const json meta = parse_json_file(meta_path);
  Frame frame;
  try {
    frame.frame_index = meta.at("frame_index").get<int>();
    frame.intrinsics.width = meta.at("width").get<int>();
    frame.intrinsics.height = meta.at("height").get<int>();
    frame.intrinsics.fx = meta.at("fx").get<double>();
    frame.intrinsics.fy = meta.at("fy").get<double>();
    frame.intrinsics.cx = meta.at("cx").get<double>();
    frame.intrinsics.cy = meta.at("cy").get<double>();
    const auto pose = meta.at("pose").get<std::vector<double>>();
    if (pose.size() != 16) throw FormatError(meta_path.string(), 0, "pose must have 16 entries");
    Eigen::Matrix4d m;
    for (int r = 0; r < 4; ++r) {
      for (int c = 0; c < 4; ++c) m(r, c) = pose[static_cast<std::size_t>(r * 4 + c)];
    }
    frame.pose = CameraPose::from_matrix(m);
  } catch (const json::exception& e) {
    throw FormatError(meta_path.string(), 0, e.what());
  }
  try {
    frame.intrinsics.validate();
    frame.pose.validate();
  } catch (const Error& e) {
    throw FormatError(meta_path.string(), 0, e.what());
  }

  const int w = frame.intrinsics.width;
  const int h = frame.intrinsics.height;
  const std::size_t n = std::size_t(w) * std::size_t(h);

  const fs::path depth_path = dir / (stem + ".depth");
  const std::string depth = read_file(depth_path);
  require_size(depth, n * 4, depth_path);
  frame.depth = Raster<float>(w, h, 0.0f);
  ByteReader dr(depth, depth_path.string());
  for (std::size_t i = 0; i < n; ++i) {
    const float d = dr.get<float>();
    if (!(d >= 0.0f) || !std::isfinite(d)) throw FormatError(depth_path.string(), i * 4, "invalid depth value");
    frame.depth.data[i] = d;
  }

  const fs::path color_path = dir / (stem + ".color");
  const std::string color = read_file(color_path);
  require_size(color, n * 12, color_path);
  frame.color = Raster<Color>(w, h, Color::Zero());
  ByteReader cr(color, color_path.string());
  for (std::size_t i = 0; i < n; ++i) {
    Color c;
    c.x() = cr.get<float>();
    c.y() = cr.get<float>();
    c.z() = cr.get<float>();
    frame.color.data[i] = c;
  }

  const fs::path src_path = dir / (stem + ".srcid");
  if (fs::exists(src_path)) {
    const std::string src = read_file(src_path);
    require_size(src, n * 8, src_path);
    frame.source_id = Raster<std::int64_t>(w, h, kNoSource);
    ByteReader sr(src, src_path.string());
    for (std::size_t i = 0; i < n; ++i) frame.source_id.data[i] = sr.get<std::int64_t>();
  }
  return frame;
}

std::vector<int> list_frames(const fs::path& dir) {
  std::vector<int> out;
  if (!fs::exists(dir)) return out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (!name.starts_with("frame_") || !name.ends_with(".meta.json")) continue;
    int idx = 0;
    const std::string_view digits = std::string_view(name).substr(6, name.size() - 6 - 10);
    if (parse_number(digits, idx)) out.push_back(idx);
  }
  std::sort(out.begin(), out.end());
  return out;
}

void write_entity_map(const fs::path& dir, int frame_index, const PixelEntityMap& map) {
  map.validate();
  std::string mask;
  mask.reserve(map.ids.size() * 2);
  for (std::int32_t id : map.ids) {
    if (id > INT16_MAX) throw Error(Errc::kInvalidArgument, "entity id does not fit in 16 bits");
    put_le(mask, static_cast<std::int16_t>(id));
  }
  const std::string stem = frame_stem(frame_index);
  write_file_atomic(dir / (stem + ".entmask"), mask);
  write_string_array(dir / (stem + ".vocab.json"), map.vocabulary);
}

PixelEntityMap read_entity_map(const fs::path& dir, int frame_index, int width, int height) {
  const std::string stem = frame_stem(frame_index);
  return ingest_external_masks(dir / (stem + ".entmask"), dir / (stem + ".vocab.json"), width, height);
}

std::vector<std::int32_t> read_i16_raster(const fs::path& path, int width, int height) {
  const std::string bytes = read_file(path);
  const std::size_t n = std::size_t(width) * std::size_t(height);
  require_size(bytes, n * 2, path);
  ByteReader r(bytes, path.string());
  std::vector<std::int32_t> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = r.get<std::int16_t>();
  return out;
}

std::vector<std::string> read_string_array(const fs::path& path) {
  const json j = parse_json_file(path);
  if (!j.is_array()) throw FormatError(path.string(), 0, "expected a JSON array of strings");
  std::vector<std::string> out;
  for (const auto& v : j) {
    if (!v.is_string()) throw FormatError(path.string(), 0, "expected a JSON array of strings");
    out.push_back(v.get<std::string>());
  }
  return out;
}

void write_string_array(const fs::path& path, const std::vector<std::string>& values) {
  write_file_atomic(path, json(values).dump() + "\n");
}

// ---------------------------------------------------------------------------
// Checkpoints

std::string format_checkpoint(const EncoderParams& params) {
  params.validate();
  const std::vector<double> flat = params.flatten();
  json header;
  header["format"] = "pgov-encoder";
  header["version"] = 1;
  header["layer_sizes"] = params.layer_sizes;
  header["seed"] = params.seed;
  header["step"] = params.step;
  header["blob_bytes"] = flat.size() * sizeof(double);
  std::string out = header.dump() + "\n";
  out.reserve(out.size() + flat.size() * 8);
  for (double v : flat) put_le(out, v);
  return out;
}

EncoderParams parse_checkpoint(std::string_view bytes, const std::string& source_name) {
  const std::size_t eol = bytes.find('\n');
  if (eol == std::string_view::npos) throw FormatError(source_name, bytes.size(), "missing header line");
  json header;
  try {
    header = json::parse(bytes.substr(0, eol));
  } catch (const json::parse_error& e) {
    throw FormatError(source_name, e.byte > 0 ? e.byte - 1 : 0, e.what());
  }
  EncoderParams params;
  std::size_t blob_bytes = 0;
  try {
    if (header.at("format").get<std::string>() != "pgov-encoder" || header.at("version").get<int>() != 1) {
      throw FormatError(source_name, 0, "unsupported checkpoint format");
    }
    params.layer_sizes = header.at("layer_sizes").get<std::vector<int>>();
    params.seed = header.at("seed").get<std::uint64_t>();
    params.step = header.at("step").get<std::uint64_t>();
    blob_bytes = header.at("blob_bytes").get<std::size_t>();
  } catch (const json::exception& e) {
    throw FormatError(source_name, 0, e.what());
  }
  if (params.layer_sizes.size() < 2 ||
      std::any_of(params.layer_sizes.begin(), params.layer_sizes.end(), [](int s) { return s <= 0; })) {
    throw FormatError(source_name, 0, "invalid layer sizes");
  }
  for (std::size_t l = 0; l + 1 < params.layer_sizes.size(); ++l) {
    params.layers.push_back({RowMatrix::Zero(params.layer_sizes[l + 1], params.layer_sizes[l]),
                             Eigen::VectorXd::Zero(params.layer_sizes[l + 1])});
  }
  const std::size_t expected = params.parameter_count() * sizeof(double);
  if (blob_bytes != expected) throw FormatError(source_name, 0, "blob_bytes does not match layer sizes");
  const std::string_view blob = bytes.substr(eol + 1);
  if (blob.size() < expected) {
    throw FormatError(source_name, bytes.size(), "truncated parameter blob");
  }
  ByteReader r(blob, source_name);
  std::vector<double> flat(params.parameter_count());
  for (auto& v : flat) v = r.get<double>();
  if (r.remaining() != 0) throw FormatError(source_name, eol + 1 + r.pos(), "unexpected trailing bytes");
  params.assign(flat);
  try {
    params.validate();
  } catch (const Error& e) {
    throw FormatError(source_name, eol + 1, e.what());
  }
  return params;
}

void write_checkpoint(const fs::path& path, const EncoderParams& params) {
  write_file_atomic(path, format_checkpoint(params));
}

EncoderParams read_checkpoint(const fs::path& path) { return parse_checkpoint(read_file(path), path.string()); }

// ---------------------------------------------------------------------------
// Pseudo labels

std::string format_pseudo_labels(const PseudoLabelSet& labels) {
  std::string out;
  out.reserve(48 + labels.size() * 9);
  put_le(out, static_cast<std::uint64_t>(labels.size()));
  put_le(out, static_cast<std::uint32_t>(labels.probabilities.cols()));
  put_le(out, labels.config.voxel_size);
  put_le(out, static_cast<std::uint32_t>(labels.config.repetitions));
  put_le(out, labels.config.temperature);
  put_le(out, labels.config.confidence_threshold);
  put_le(out, labels.config.seed);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    put_le(out, labels.entity[i]);
    put_le(out, static_cast<float>(labels.confidence[i]));
    put_le(out, labels.accepted[i]);
  }
  return out;
}

PseudoLabelSet parse_pseudo_labels(std::string_view bytes, const std::string& source_name) {
  ByteReader r(bytes, source_name);
  PseudoLabelSet labels;
  const auto count = r.get<std::uint64_t>();
  const auto entities = r.get<std::uint32_t>();
  labels.config.voxel_size = r.get<double>();
  labels.config.repetitions = static_cast<int>(r.get<std::uint32_t>());
  labels.config.temperature = r.get<double>();
  labels.config.confidence_threshold = r.get<double>();
  labels.config.seed = r.get<std::uint64_t>();
  if (r.remaining() / 9 < count) {
    throw FormatError(source_name, bytes.size(), "truncated: expected " + std::to_string(count) + " records");
  }
  labels.probabilities = RowMatrix::Zero(0, entities);
  labels.entity.resize(count);
  labels.confidence.resize(count);
  labels.accepted.resize(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::size_t at = r.pos();
    labels.entity[i] = r.get<std::int32_t>();
    labels.confidence[i] = r.get<float>();
    labels.accepted[i] = r.get<std::uint8_t>();
    if (labels.entity[i] < 0 || static_cast<std::uint32_t>(labels.entity[i]) >= entities || labels.accepted[i] > 1) {
      throw FormatError(source_name, at, "invalid pseudo label record");
    }
  }
  r.expect_end();
  return labels;
}

void write_pseudo_labels(const fs::path& path, const PseudoLabelSet& labels) {
  write_file_atomic(path, format_pseudo_labels(labels));
}

PseudoLabelSet read_pseudo_labels(const fs::path& path) {
  return parse_pseudo_labels(read_file(path), path.string());
}

// ---------------------------------------------------------------------------
// CSV

std::string format_loss_csv(const std::vector<LossRecord>& log) {
  std::string out = "epoch,step,alignment,consistency,total\n";
  for (const auto& r : log) {
    out += std::to_string(r.epoch) + "," + std::to_string(r.step) + "," + fmt_double(r.alignment, 10) + "," +
           fmt_double(r.consistency, 10) + "," + fmt_double(r.total, 10) + "\n";
  }
  return out;
}

std::vector<CsvRow> parse_csv(std::string_view text) {
  std::vector<CsvRow> rows;
  LineCursor cursor(text);
  std::string_view line;
  while (cursor.next(line)) {
    if (line.empty()) continue;
    CsvRow row;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      row.cells.emplace_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<LossRecord> parse_loss_csv(std::string_view text, const std::string& source_name) {
  const auto rows = parse_csv(text);
  if (rows.empty() || rows[0].cells != std::vector<std::string>{"epoch", "step", "alignment", "consistency", "total"}) {
    throw FormatError(source_name, 0, "bad loss CSV header");
  }
  std::vector<LossRecord> log;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& c = rows[i].cells;
    LossRecord r;
    if (c.size() != 5 || !parse_number(std::string_view(c[0]), r.epoch) || !parse_number(std::string_view(c[1]), r.step) ||
        !parse_number(std::string_view(c[2]), r.alignment) || !parse_number(std::string_view(c[3]), r.consistency) ||
        !parse_number(std::string_view(c[4]), r.total)) {
      throw FormatError(source_name, 0, "malformed loss row " + std::to_string(i));
    }
    log.push_back(r);
  }
  return log;
}

std::string format_eval_report(const EvalReport& report, const std::vector<std::string>& categories,
                               const std::vector<std::pair<std::string, double>>& extra_metrics) {
  std::string out = "metric,class,value\n";
  auto row = [&out](const std::string& metric, const std::string& cls, double v) {
    out += metric + "," + cls + "," + fmt_double(v, 10) + "\n";
  };
  row("miou", "", report.miou);
  row("miou_pct", "", 100.0 * report.miou);
  row("macc", "", report.macc);
  row("macc_pct", "", 100.0 * report.macc);
  row("evaluated_points", "", static_cast<double>(report.evaluated_points));
  row("unmatched_points", "", static_cast<double>(report.unmatched_points));
  if (report.split) {
    row("miou_base", "", report.split->miou_base);
    row("miou_novel", "", report.split->miou_novel);
    row("hiou", "", report.split->hiou);
  }
  for (const auto& [name, v] : extra_metrics) row(name, "", v);
  for (std::size_t c = 0; c < report.iou.size(); ++c) {
    if (!report.included[c]) continue;
    row("iou", categories[c], report.iou[c]);
    row("iou_pct", categories[c], 100.0 * report.iou[c]);
    row("acc", categories[c], report.accuracy[c]);
  }
  return out;
}

std::string format_confusion(const ConfusionMatrix& matrix, const std::vector<std::string>& categories) {
  std::string out = "gt\\pred";
  for (const auto& c : categories) out += "," + c;
  out += "\n";
  for (int g = 0; g < matrix.k; ++g) {
    out += categories[static_cast<std::size_t>(g)];
    for (int p = 0; p < matrix.k; ++p) out += "," + std::to_string(matrix.at(g, p));
    out += "\n";
  }
  return out;
}

}  // namespace pgov
