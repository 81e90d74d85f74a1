#pragma once

#include <array>
#include <cstdint>

#include "vesselkit/volume.hpp"

namespace vesselkit {

enum class SkeletonMethod { Lee, Soft };

struct SkeletonVolume {
  BinaryMask mask;
  SkeletonMethod method = SkeletonMethod::Lee;
  int soft_iterations = 0; // only meaningful for Soft
};

inline constexpr int kDefaultSoftIterations = 10;
inline constexpr double kSoftThreshold = 0.5;

// Iterative directional border thinning (sub-iteration order U, D, N, S, E, W).
// Only simple points that are not curve endpoints are removed. A first phase
// additionally requires foreground in the 3x3 layer opposite the current
// direction so even-width tubes thin to their middle; a second plain phase
// then runs to fixpoint. The 26-connected component count is preserved and no
// cavities are created. Outside the grid is background.
SkeletonVolume skeletonize_lee(const BinaryMask &mask);

// ClDice-style soft skeleton: repeated soft opening with residual
// accumulation. Input values must lie in [0, 1].
SoftVolume skeletonize_soft(const SoftVolume &input, int iterations = kDefaultSoftIterations);
SoftVolume to_soft(const BinaryMask &mask);
BinaryMask threshold(const SoftVolume &v, double level = kSoftThreshold);

// Soft skeleton of a binary mask, thresholded at 0.5.
SkeletonVolume skeletonize_soft_mask(const BinaryMask &mask, int iterations = kDefaultSoftIterations);

// 3x3x3 neighborhood helpers shared with graph and metrics code. Bit k of a
// neighborhood word is cube position k = (dz+1)*9 + (dy+1)*3 + (dx+1); the
// center (bit 13) is ignored.
namespace topology {

inline constexpr int kCenter = 13;

// A voxel is simple for (26, 6) digital topology iff exactly one 26-connected
// foreground component and exactly one 6-connected background component
// (6-adjacent to the center, within the 18-neighborhood) remain around it.
bool is_simple(std::uint32_t neighborhood);
int foreground_components26(std::uint32_t neighborhood);
int background_components6(std::uint32_t neighborhood);
int count_neighbors(std::uint32_t neighborhood);

} // namespace topology

namespace kernels::serial {

SkeletonVolume skeletonize_lee(const BinaryMask &mask);
SoftVolume skeletonize_soft(const SoftVolume &input, int iterations = kDefaultSoftIterations);

} // namespace kernels::serial

} // namespace vesselkit
