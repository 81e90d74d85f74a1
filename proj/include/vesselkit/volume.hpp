#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vesselkit/error.hpp"

namespace vesselkit {

struct Dims {
  int nx = 0, ny = 0, nz = 0;

  std::size_t count() const {
    return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny) *
           static_cast<std::size_t>(nz);
  }
  bool operator==(const Dims &) const = default;
};

// Physical voxel size in mm.
struct Spacing {
  double x = 1.0, y = 1.0, z = 1.0;

  bool operator==(const Spacing &) const = default;
};

struct Voxel {
  int x = 0, y = 0, z = 0;

  bool operator==(const Voxel &) const = default;
  auto operator<=>(const Voxel &) const = default;
};

struct Vec3 {
  double x = 0, y = 0, z = 0;

  Vec3 operator+(const Vec3 &o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3 &o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  double dot(const Vec3 &o) const { return x * o.x + y * o.y + z * o.z; }
  Vec3 cross(const Vec3 &o) const {
    return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
  }
  double norm() const { return std::sqrt(dot(*this)); }
};

inline Vec3 to_mm(const Voxel &v, const Spacing &s) {
  return {v.x * s.x, v.y * s.y, v.z * s.z};
}

// mm distance between two voxel centers.
inline double voxel_distance(const Voxel &a, const Voxel &b, const Spacing &s) {
  const double dx = (a.x - b.x) * s.x;
  const double dy = (a.y - b.y) * s.y;
  const double dz = (a.z - b.z) * s.z;
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

inline bool adjacent26(const Voxel &a, const Voxel &b) {
  return a != b && std::abs(a.x - b.x) <= 1 && std::abs(a.y - b.y) <= 1 &&
         std::abs(a.z - b.z) <= 1;
}

// Angle in degrees between two vectors; NaN when either is zero.
inline double angle_deg(const Vec3 &a, const Vec3 &b) {
  const double na = a.norm(), nb = b.norm();
  if (na == 0.0 || nb == 0.0) return std::nan("");
  double c = a.dot(b) / (na * nb);
  if (c > 1.0) c = 1.0;
  if (c < -1.0) c = -1.0;
  return std::acos(c) * 180.0 / M_PI;
}

// Dense 3D grid, x-fastest: index = x + nx * (y + ny * z).
template <typename T> class Grid {
public:
  using value_type = T;

  Grid() = default;
  Grid(Dims dims, Spacing spacing, T fill = T{})
      : dims_(dims), spacing_(spacing), data_(dims.count(), fill) {
    validate();
  }
  Grid(Dims dims, Spacing spacing, std::vector<T> data)
      : dims_(dims), spacing_(spacing), data_(std::move(data)) {
    validate();
  }

  const Dims &dims() const { return dims_; }
  const Spacing &spacing() const { return spacing_; }
  std::size_t size() const { return data_.size(); }

  std::size_t index(int x, int y, int z) const {
    return static_cast<std::size_t>(x) +
           static_cast<std::size_t>(dims_.nx) *
               (static_cast<std::size_t>(y) +
                static_cast<std::size_t>(dims_.ny) * static_cast<std::size_t>(z));
  }
  std::size_t index(const Voxel &v) const { return index(v.x, v.y, v.z); }

  Voxel voxel(std::size_t i) const {
    const auto nx = static_cast<std::size_t>(dims_.nx);
    const auto ny = static_cast<std::size_t>(dims_.ny);
    return {static_cast<int>(i % nx), static_cast<int>((i / nx) % ny),
            static_cast<int>(i / (nx * ny))};
  }

  bool contains(int x, int y, int z) const {
    return x >= 0 && y >= 0 && z >= 0 && x < dims_.nx && y < dims_.ny && z < dims_.nz;
  }
  bool contains(const Voxel &v) const { return contains(v.x, v.y, v.z); }

  // Checked access; out-of-grid reads are errors.
  const T &at(const Voxel &v) const {
    if (!contains(v))
      throw OutOfRange("voxel (" + std::to_string(v.x) + "," + std::to_string(v.y) +
                       "," + std::to_string(v.z) + ") outside grid");
    return data_[index(v)];
  }
  T &at(const Voxel &v) {
    return const_cast<T &>(static_cast<const Grid &>(*this).at(v));
  }

  // Zero-padded read: outside the grid is T{}.
  T get(int x, int y, int z) const { return contains(x, y, z) ? data_[index(x, y, z)] : T{}; }

  const T &operator[](std::size_t i) const { return data_[i]; }
  T &operator[](std::size_t i) { return data_[i]; }
  const T &operator()(int x, int y, int z) const { return data_[index(x, y, z)]; }
  T &operator()(int x, int y, int z) { return data_[index(x, y, z)]; }

  std::span<const T> data() const { return data_; }
  std::span<T> data() { return data_; }
  std::vector<T> &storage() { return data_; }

  bool same_grid(const auto &other) const {
    return dims_ == other.dims() && spacing_ == other.spacing();
  }

  bool operator==(const Grid &) const = default;

private:
  void validate() const {
    if (dims_.nx < 0 || dims_.ny < 0 || dims_.nz < 0)
      throw DataError("grid dims must be nonnegative");
    for (double s : {spacing_.x, spacing_.y, spacing_.z})
      if (!(s > 0.0) || !std::isfinite(s)) throw DataError("grid spacing must be positive and finite");
    if (data_.size() != dims_.count()) throw DataError("grid data length does not match dims");
  }

  Dims dims_;
  Spacing spacing_;
  std::vector<T> data_;
};

// Labels: 0 background, 1 portal, 2 hepatic, 3 unresolved; Couinaud volumes use 1-8.
using LabelVolume = Grid<std::uint8_t>;
using DistanceField = Grid<double>;
using SoftVolume = Grid<double>;

namespace label {
inline constexpr std::uint8_t background = 0;
inline constexpr std::uint8_t portal = 1;
inline constexpr std::uint8_t hepatic = 2;
inline constexpr std::uint8_t unresolved = 3;
} // namespace label

// Boolean voxel set stored as 0/1 bytes.
class BinaryMask : public Grid<std::uint8_t> {
public:
  using Grid::Grid;
  BinaryMask() = default;
  explicit BinaryMask(Grid<std::uint8_t> g) : Grid(std::move(g)) {}

  std::size_t count() const;
  bool empty() const { return count() == 0; }
  std::vector<std::size_t> indices() const;
};

BinaryMask mask_of(const LabelVolume &vol, std::uint8_t value);
BinaryMask mask_nonzero(const LabelVolume &vol);
BinaryMask mask_and(const BinaryMask &a, const BinaryMask &b);
BinaryMask mask_or(const BinaryMask &a, const BinaryMask &b);
BinaryMask mask_not(const BinaryMask &a);
LabelVolume to_labels(const BinaryMask &m, std::uint8_t value = 1);

void require_same_grid(const auto &a, const auto &b, const char *what) {
  if (!a.same_grid(b)) throw GridMismatch(std::string(what) + ": inputs are on different grids");
}

// Neighborhood offsets. The 26-neighborhood is ordered lexicographically by (dz, dy, dx).
std::span<const Voxel> offsets6();
std::span<const Voxel> offsets18();
std::span<const Voxel> offsets26();
std::span<const Voxel> offsets(int connectivity);

} // namespace vesselkit
