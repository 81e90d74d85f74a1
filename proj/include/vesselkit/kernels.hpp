#pragma once

#include <cstdint>
#include <limits>

#include "vesselkit/volume.hpp"

namespace vesselkit {

inline constexpr double kInfDistance = std::numeric_limits<double>::infinity();

// Connected-component labelling. Ids start at 1 and follow the lowest linear
// voxel index of each component; background stays 0.
struct Components {
  Grid<std::int32_t> ids;
  std::vector<std::size_t> sizes; // sizes[id - 1]

  int count() const { return static_cast<int>(sizes.size()); }
  std::size_t size_of(int id) const { return sizes.at(static_cast<std::size_t>(id - 1)); }
};

// Exact Euclidean distance (mm, anisotropic) to the nearest foreground voxel
// center together with that voxel's linear index (-1 when the mask is empty).
struct FeatureTransform {
  DistanceField distance;
  Grid<std::int64_t> nearest;
};

Components connected_components(const BinaryMask &mask, int connectivity = 26);

// Foreground voxels map to 0; an all-background mask maps to +infinity everywhere.
DistanceField distance_transform(const BinaryMask &mask);
FeatureTransform feature_transform(const BinaryMask &mask);

// Iterated dilation with the 6- or 26-neighborhood structuring element.
BinaryMask dilate(const BinaryMask &mask, int radius_voxels, int connectivity = 26);

namespace kernels::serial {

// Single-threaded reference versions; outputs are identical to the parallel ones.
Components connected_components(const BinaryMask &mask, int connectivity = 26);
DistanceField distance_transform(const BinaryMask &mask);
FeatureTransform feature_transform(const BinaryMask &mask);
BinaryMask dilate(const BinaryMask &mask, int radius_voxels, int connectivity = 26);

} // namespace kernels::serial

} // namespace vesselkit
