#include "mimo/image_store.hpp"

#include <zlib.h>

#include <fstream>
#include <iterator>

#include "mimo/error.hpp"

namespace mimo {
namespace {

constexpr int kPlaceholderSide = 8;

void put_u32(Bytes& out, std::uint32_t value) {
  out.push_back(static_cast<std::uint8_t>(value >> 24));
  out.push_back(static_cast<std::uint8_t>(value >> 16));
  out.push_back(static_cast<std::uint8_t>(value >> 8));
  out.push_back(static_cast<std::uint8_t>(value));
}

void put_chunk(Bytes& out, const char (&type)[5], const Bytes& data) {
  put_u32(out, static_cast<std::uint32_t>(data.size()));
  Bytes body(type, type + 4);
  body.insert(body.end(), data.begin(), data.end());
  out.insert(out.end(), body.begin(), body.end());
  put_u32(out, static_cast<std::uint32_t>(crc32(0L, body.data(), static_cast<uInt>(body.size()))));
}

std::optional<MediaType> sniff(const Bytes& bytes) {
  static constexpr std::uint8_t kPng[] = {0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};
  if (bytes.size() >= 8 && std::equal(std::begin(kPng), std::end(kPng), bytes.begin())) {
    return MediaType::png;
  }
  if (bytes.size() >= 3 && bytes[0] == 0xff && bytes[1] == 0xd8 && bytes[2] == 0xff) {
    return MediaType::jpeg;
  }
  return std::nullopt;
}

std::string locator_for(const std::string& id, MediaType type) {
  return "images/" + id + "." + std::string(file_extension(type));
}

}  // namespace

Bytes placeholder_png(std::string_view seed) {
  const Bytes digest = sha256_raw(seed);

  Bytes raw;
  std::size_t cursor = 0;
  for (int y = 0; y < kPlaceholderSide; ++y) {
    raw.push_back(0);  // filter: none
    for (int x = 0; x < kPlaceholderSide * 3; ++x) {
      raw.push_back(digest[cursor++ % digest.size()]);
    }
  }

  uLongf packed_size = compressBound(static_cast<uLong>(raw.size()));
  Bytes packed(packed_size);
  if (compress2(packed.data(), &packed_size, raw.data(), static_cast<uLong>(raw.size()), 9) != Z_OK) {
    fail(ErrorCode::IoError, "zlib compression failed");
  }
  packed.resize(packed_size);

  Bytes header;
  put_u32(header, kPlaceholderSide);
  put_u32(header, kPlaceholderSide);
  header.insert(header.end(), {8, 2, 0, 0, 0});  // 8-bit RGB

  Bytes png{0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};
  put_chunk(png, "IHDR", header);
  put_chunk(png, "IDAT", packed);
  put_chunk(png, "IEND", {});
  return png;
}

ImageStore::ImageStore(std::filesystem::path root) : root_(std::move(root)) {
  std::error_code ec;
  std::filesystem::create_directories(*root_ / "images", ec);
  if (ec) fail(ErrorCode::IoError, "cannot create image directory under " + root_->string());
}

ImageRef ImageStore::put(const Bytes& bytes, MediaType type) {
  ImageRef ref{sha256_hex(bytes), type, ""};
  ref.locator = locator_for(ref.id, type);

  std::lock_guard lock(mutex_);
  if (!root_) {
    memory_.emplace(ref.locator, bytes);
    return ref;
  }
  const auto path = *root_ / ref.locator;
  if (std::filesystem::exists(path)) return ref;
  const auto partial = path.string() + ".part";
  {
    std::ofstream out(partial, std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) fail(ErrorCode::IoError, "cannot write image " + partial);
  }
  std::error_code ec;
  std::filesystem::rename(partial, path, ec);
  if (ec) fail(ErrorCode::IoError, "cannot move image into place: " + path.string());
  return ref;
}

ImageRef ImageStore::import_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::AttachmentMissing, "cannot read image file " + path.string());
  Bytes bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto type = sniff(bytes);
  if (!type) fail(ErrorCode::InvalidArgument, path.string() + " is neither PNG nor JPEG");
  return put(bytes, *type);
}

bool ImageStore::contains(const ImageRef& ref) const {
  if (ref.id.empty() || ref.locator != locator_for(ref.id, ref.media_type)) return false;
  std::lock_guard lock(mutex_);
  if (!root_) return memory_.contains(ref.locator);
  return std::filesystem::exists(*root_ / ref.locator);
}

void ImageStore::require_resolvable(const ImageRef& ref) const {
  if (!contains(ref)) fail(ErrorCode::AttachmentMissing, "image '" + ref.locator + "' is not in the store");
}

Bytes ImageStore::read(const ImageRef& ref) const {
  require_resolvable(ref);
  std::lock_guard lock(mutex_);
  if (!root_) return memory_.at(ref.locator);
  std::ifstream in(*root_ / ref.locator, std::ios::binary);
  return Bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

}  // namespace mimo
