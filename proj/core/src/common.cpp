#include "pgov/common.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>

namespace pgov {

const char* errc_name(Errc code) {
  switch (code) {
    case Errc::kInvalidArgument: return "InvalidArgument";
    case Errc::kEmptySpec: return "EmptySpec";
    case Errc::kBadSplit: return "BadSplit";
    case Errc::kInvalidDepth: return "InvalidDepth";
    case Errc::kDimMismatch: return "DimMismatch";
    case Errc::kMissingProvenance: return "MissingProvenance";
    case Errc::kFormat: return "FormatError";
    case Errc::kVocabMismatch: return "VocabMismatch";
    case Errc::kShapeMismatch: return "ShapeMismatch";
    case Errc::kStaleCache: return "StaleCache";
    case Errc::kZeroVector: return "ZeroVector";
    case Errc::kEmptyBatch: return "EmptyBatch";
    case Errc::kNoLabels: return "NoLabels";
    case Errc::kNoAcceptedLabels: return "NoAcceptedLabels";
    case Errc::kEmptyVocabulary: return "EmptyVocabulary";
    case Errc::kOutOfRangeLabel: return "OutOfRangeLabel";
    case Errc::kEmptyMatrix: return "EmptyMatrix";
    case Errc::kConfig: return "ConfigError";
    case Errc::kMissingArtifacts: return "MissingArtifacts";
  }
  return "Unknown";
}

Error::Error(Errc code, const std::string& what)
    : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

FormatError::FormatError(std::string path, std::uint64_t offset, const std::string& what)
    : Error(Errc::kFormat, path + " at byte " + std::to_string(offset) + ": " + what),
      path_(std::move(path)),
      offset_(offset) {}

ConfigError::ConfigError(std::string key, const std::string& what)
    : Error(Errc::kConfig, "'" + key + "': " + what), key_(std::move(key)) {}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag) {
  return splitmix64(splitmix64(seed) ^ (tag + 0x632BE59BD9B4E019ULL));
}

std::uint64_t mix_seed(std::uint64_t seed, std::string_view tag) {
  return mix_seed(seed, stable_hash(tag));
}

std::uint64_t stable_hash(std::string_view text) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

std::size_t worker_count() {
  if (const char* env = std::getenv("PGOV_THREADS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end != env && v > 0) return static_cast<std::size_t>(v);
  }
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

namespace detail {

void run_parallel(std::size_t n, void (*thunk)(void*, std::size_t), void* ctx) {
  const std::size_t workers = std::min(worker_count(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) thunk(ctx, i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto body = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        thunk(ctx, i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(body);
    body();
  }
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace detail
}  // namespace pgov
