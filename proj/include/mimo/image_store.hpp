#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string_view>

#include "mimo/domain.hpp"
#include "mimo/hash.hpp"

namespace mimo {

/// 8x8 RGB PNG whose pixels are the SHA-256 of `seed`, repeated.
Bytes placeholder_png(std::string_view seed);

/// Content-addressed image storage. With a root directory, images land in
/// <root>/images/<sha256>.<ext>; without one they stay in memory.
/// Safe for concurrent use.
class ImageStore {
 public:
  ImageStore() = default;
  explicit ImageStore(std::filesystem::path root);

  ImageRef put(const Bytes& bytes, MediaType type);
  /// Copies an external file (PNG or JPEG, sniffed from its magic bytes) into the store.
  ImageRef import_file(const std::filesystem::path& path);

  bool contains(const ImageRef& ref) const;
  /// Throws AttachmentMissing when the reference does not resolve.
  Bytes read(const ImageRef& ref) const;
  void require_resolvable(const ImageRef& ref) const;

  const std::optional<std::filesystem::path>& root() const noexcept { return root_; }

 private:
  std::optional<std::filesystem::path> root_;
  mutable std::mutex mutex_;
  std::map<std::string, Bytes> memory_;
};

}  // namespace mimo
