#pragma once

#include <filesystem>

#include "vesselkit/volume.hpp"

namespace vesselkit {

// VVOL layout, little-endian:
//   0..3   "VVOL"
//   4..7   u32 version (1)
//   8      u8 dtype (0 = uint8)
//   9..20  3 x u32 dims (nx, ny, nz)
//   21..44 3 x f64 spacing in mm
//   45..   nx*ny*nz payload bytes, x-fastest
inline constexpr std::size_t kVvolHeaderSize = 45;
inline constexpr std::uint32_t kVvolVersion = 1;

class FormatError : public DataError {
public:
  enum class Kind { BadMagic, Truncated, UnsupportedVersion, UnsupportedDtype, BadHeader, Io };

  FormatError(Kind kind, const std::string &what) : DataError(what), kind_(kind) {}
  Kind kind() const { return kind_; }

private:
  Kind kind_;
};

const char *to_string(FormatError::Kind kind);

LabelVolume read_volume(const std::filesystem::path &path);
void write_volume(const LabelVolume &vol, const std::filesystem::path &path);

std::vector<std::uint8_t> encode_volume(const LabelVolume &vol);
LabelVolume decode_volume(std::span<const std::uint8_t> bytes);

} // namespace vesselkit
