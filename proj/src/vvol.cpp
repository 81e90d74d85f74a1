#include "vesselkit/vvol.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace vesselkit {

namespace {

static_assert(std::endian::native == std::endian::little, "VVOL I/O assumes a little-endian host");

template <typename T> void put(std::vector<std::uint8_t> &out, T value) {
  std::uint8_t buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.insert(out.end(), buf, buf + sizeof(T));
}

template <typename T> T take(std::span<const std::uint8_t> bytes, std::size_t offset) {
  T value;
  std::memcpy(&value, bytes.data() + offset, sizeof(T));
  return value;
}

} // namespace

const char *to_string(FormatError::Kind kind) {
  switch (kind) {
  case FormatError::Kind::BadMagic: return "BadMagic";
  case FormatError::Kind::Truncated: return "Truncated";
  case FormatError::Kind::UnsupportedVersion: return "UnsupportedVersion";
  case FormatError::Kind::UnsupportedDtype: return "UnsupportedDtype";
  case FormatError::Kind::BadHeader: return "BadHeader";
  case FormatError::Kind::Io: return "Io";
  }
  return "Unknown";
}

std::vector<std::uint8_t> encode_volume(const LabelVolume &vol) {
  std::vector<std::uint8_t> out;
  out.reserve(kVvolHeaderSize + vol.size());
  out.insert(out.end(), {'V', 'V', 'O', 'L'});
  put<std::uint32_t>(out, kVvolVersion);
  put<std::uint8_t>(out, 0);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(vol.dims().nx));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(vol.dims().ny));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(vol.dims().nz));
  put<double>(out, vol.spacing().x);
  put<double>(out, vol.spacing().y);
  put<double>(out, vol.spacing().z);
  const auto d = vol.data();
  out.insert(out.end(), d.begin(), d.end());
  return out;
}

LabelVolume decode_volume(std::span<const std::uint8_t> bytes) {
  using K = FormatError::Kind;
  if (bytes.size() < 4) throw FormatError(K::Truncated, "magic: file shorter than 4 bytes");
  if (std::memcmp(bytes.data(), "VVOL", 4) != 0) throw FormatError(K::BadMagic, "magic: expected \"VVOL\"");
  if (bytes.size() < kVvolHeaderSize)
    throw FormatError(K::Truncated, "header: expected 45 bytes, got " + std::to_string(bytes.size()));

  const auto version = take<std::uint32_t>(bytes, 4);
  if (version != kVvolVersion)
    throw FormatError(K::UnsupportedVersion, "version: unsupported value " + std::to_string(version));
  const auto dtype = take<std::uint8_t>(bytes, 8);
  if (dtype != 0) throw FormatError(K::UnsupportedDtype, "dtype: unsupported value " + std::to_string(dtype));

  const auto nx = take<std::uint32_t>(bytes, 9);
  const auto ny = take<std::uint32_t>(bytes, 13);
  const auto nz = take<std::uint32_t>(bytes, 17);
  constexpr std::uint32_t kMaxDim = 1u << 16;
  if (nx > kMaxDim || ny > kMaxDim || nz > kMaxDim)
    throw FormatError(K::BadHeader, "dims: value exceeds 65536");
  const Spacing spacing{take<double>(bytes, 21), take<double>(bytes, 29), take<double>(bytes, 37)};
  for (double s : {spacing.x, spacing.y, spacing.z})
    if (!(s > 0.0) || !std::isfinite(s)) throw FormatError(K::BadHeader, "spacing: must be positive and finite");

  const Dims dims{static_cast<int>(nx), static_cast<int>(ny), static_cast<int>(nz)};
  const std::size_t payload = dims.count();
  if (bytes.size() - kVvolHeaderSize < payload)
    throw FormatError(K::Truncated, "payload: expected " + std::to_string(payload) + " bytes, got " +
                                        std::to_string(bytes.size() - kVvolHeaderSize));
  if (bytes.size() - kVvolHeaderSize > payload)
    throw FormatError(K::BadHeader, "payload: trailing bytes after " + std::to_string(payload));

  std::vector<std::uint8_t> data(bytes.begin() + kVvolHeaderSize, bytes.end());
  return LabelVolume(dims, spacing, std::move(data));
}

LabelVolume read_volume(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(FormatError::Kind::Io, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return decode_volume(bytes);
  } catch (const FormatError &e) {
    throw FormatError(e.kind(), path.string() + ": " + e.what());
  }
}

void write_volume(const LabelVolume &vol, const std::filesystem::path &path) {
  const auto bytes = encode_volume(vol);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError(FormatError::Kind::Io, "cannot write " + path.string());
  out.write(reinterpret_cast<const char *>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError(FormatError::Kind::Io, "write failed: " + path.string());
}

} // namespace vesselkit
