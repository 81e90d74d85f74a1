#include "vesselkit/volume.hpp"

#include <algorithm>

namespace vesselkit {

std::size_t BinaryMask::count() const {
  const auto d = data();
  return static_cast<std::size_t>(std::count_if(d.begin(), d.end(), [](auto v) { return v != 0; }));
}

std::vector<std::size_t> BinaryMask::indices() const {
  std::vector<std::size_t> out;
  const auto d = data();
  for (std::size_t i = 0; i < d.size(); ++i)
    if (d[i]) out.push_back(i);
  return out;
}

namespace {

template <typename Fn> BinaryMask map_mask(const Grid<std::uint8_t> &src, Fn fn) {
  BinaryMask out(src.dims(), src.spacing());
  for (std::size_t i = 0; i < src.size(); ++i) out[i] = fn(i) ? 1 : 0;
  return out;
}

std::array<Voxel, 26> make26() {
  std::array<Voxel, 26> out{};
  std::size_t k = 0;
  for (int dz = -1; dz <= 1; ++dz)
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx)
        if (dx || dy || dz) out[k++] = {dx, dy, dz};
  return out;
}

std::array<Voxel, 18> make18() {
  std::array<Voxel, 18> out{};
  std::size_t k = 0;
  for (const auto &o : make26())
    if (std::abs(o.x) + std::abs(o.y) + std::abs(o.z) <= 2) out[k++] = o;
  return out;
}

} // namespace

BinaryMask mask_of(const LabelVolume &vol, std::uint8_t value) {
  return map_mask(vol, [&](std::size_t i) { return vol[i] == value; });
}

BinaryMask mask_nonzero(const LabelVolume &vol) {
  return map_mask(vol, [&](std::size_t i) { return vol[i] != 0; });
}

BinaryMask mask_and(const BinaryMask &a, const BinaryMask &b) {
  require_same_grid(a, b, "mask_and");
  return map_mask(a, [&](std::size_t i) { return a[i] && b[i]; });
}

BinaryMask mask_or(const BinaryMask &a, const BinaryMask &b) {
  require_same_grid(a, b, "mask_or");
  return map_mask(a, [&](std::size_t i) { return a[i] || b[i]; });
}

BinaryMask mask_not(const BinaryMask &a) {
  return map_mask(a, [&](std::size_t i) { return !a[i]; });
}

LabelVolume to_labels(const BinaryMask &m, std::uint8_t value) {
  LabelVolume out(m.dims(), m.spacing());
  for (std::size_t i = 0; i < m.size(); ++i) out[i] = m[i] ? value : 0;
  return out;
}

std::span<const Voxel> offsets6() {
  static const std::array<Voxel, 6> k = {
      Voxel{0, 0, -1}, Voxel{0, -1, 0}, Voxel{-1, 0, 0},
      Voxel{1, 0, 0},  Voxel{0, 1, 0},  Voxel{0, 0, 1}};
  return k;
}

std::span<const Voxel> offsets18() {
  static const auto k = make18();
  return k;
}

std::span<const Voxel> offsets26() {
  static const auto k = make26();
  return k;
}

std::span<const Voxel> offsets(int connectivity) {
  switch (connectivity) {
  case 6: return offsets6();
  case 18: return offsets18();
  case 26: return offsets26();
  default: throw DataError("connectivity must be 6, 18 or 26");
  }
}

} // namespace vesselkit
