#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace pgov {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Color = Eigen::Vector3f;
using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Entity id of a pixel or point that carries no label.
inline constexpr std::int32_t kUnlabeled = -1;
// Point id recorded for raster pixels that no scene point covers.
inline constexpr std::int64_t kNoSource = -1;

enum class Errc {
  kInvalidArgument,
  kEmptySpec,
  kBadSplit,
  kInvalidDepth,
  kDimMismatch,
  kMissingProvenance,
  kFormat,
  kVocabMismatch,
  kShapeMismatch,
  kStaleCache,
  kZeroVector,
  kEmptyBatch,
  kNoLabels,
  kNoAcceptedLabels,
  kEmptyVocabulary,
  kOutOfRangeLabel,
  kEmptyMatrix,
  kConfig,
  kMissingArtifacts,
};

const char* errc_name(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what);
  Errc code() const { return code_; }

 private:
  Errc code_;
};

// Malformed file contents. `offset` is the byte position where reading
// failed (for text formats, the start of the offending line).
class FormatError : public Error {
 public:
  FormatError(std::string path, std::uint64_t offset, const std::string& what);
  const std::string& path() const { return path_; }
  std::uint64_t offset() const { return offset_; }

 private:
  std::string path_;
  std::uint64_t offset_;
};

class ConfigError : public Error {
 public:
  ConfigError(std::string key, const std::string& what);
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

// Row-major raster, indexed as (u = column, v = row).
template <class T>
struct Raster {
  int width = 0;
  int height = 0;
  std::vector<T> data;

  Raster() = default;
  Raster(int w, int h, T fill) : width(w), height(h), data(std::size_t(w) * std::size_t(h), fill) {}

  bool contains(int u, int v) const { return u >= 0 && v >= 0 && u < width && v < height; }
  T& at(int u, int v) { return data[std::size_t(v) * std::size_t(width) + std::size_t(u)]; }
  const T& at(int u, int v) const {
    return data[std::size_t(v) * std::size_t(width) + std::size_t(u)];
  }
  std::size_t size() const { return data.size(); }
};

std::uint64_t splitmix64(std::uint64_t x);
// Derives an independent stream seed from a base seed and a tag.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag);
std::uint64_t mix_seed(std::uint64_t seed, std::string_view tag);
// FNV-1a, 64 bit. Stable across platforms and runs.
std::uint64_t stable_hash(std::string_view text);

// Worker cap from PGOV_THREADS, else hardware concurrency (at least 1).
std::size_t worker_count();

namespace detail {
void run_parallel(std::size_t n, void (*thunk)(void*, std::size_t), void* ctx);
}

// Calls fn(i) for i in [0, n). Each index runs exactly once; callers write
// into per-index slots and reduce afterwards in index order.
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  auto thunk = [](void* ctx, std::size_t i) { (*static_cast<Fn*>(ctx))(i); };
  detail::run_parallel(n, thunk, &fn);
}

}  // namespace pgov
