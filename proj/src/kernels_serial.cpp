// Single-threaded reference kernels. These are kept deliberately plain
// (BFS labelling, scatter dilation) and serve as the comparison baseline for
// the OpenMP versions in kernels.cpp.

#include <deque>

#include "edt_line.hpp"
#include "vesselkit/kernels.hpp"

namespace vesselkit::kernels::serial {

Components connected_components(const BinaryMask &mask, int connectivity) {
  const auto nbrs = offsets(connectivity);
  Components out{Grid<std::int32_t>(mask.dims(), mask.spacing(), 0), {}};
  std::deque<std::size_t> queue;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i] || out.ids[i]) continue;
    const auto id = static_cast<std::int32_t>(out.sizes.size() + 1);
    std::size_t size = 0;
    out.ids[i] = id;
    queue.push_back(i);
    while (!queue.empty()) {
      const auto cur = queue.front();
      queue.pop_front();
      ++size;
      const Voxel v = mask.voxel(cur);
      for (const auto &o : nbrs) {
        const int x = v.x + o.x, y = v.y + o.y, z = v.z + o.z;
        if (!mask.contains(x, y, z)) continue;
        const auto j = mask.index(x, y, z);
        if (mask[j] && !out.ids[j]) {
          out.ids[j] = id;
          queue.push_back(j);
        }
      }
    }
    out.sizes.push_back(size);
  }
  return out;
}

FeatureTransform feature_transform(const BinaryMask &mask) {
  const auto [nx, ny, nz] = mask.dims();
  const auto sp = mask.spacing();
  FeatureTransform out{DistanceField(mask.dims(), mask.spacing(), kInfDistance),
                       Grid<std::int64_t>(mask.dims(), mask.spacing(), -1)};
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) {
      out.distance[i] = 0.0;
      out.nearest[i] = static_cast<std::int64_t>(i);
    }
  }
  double *d = out.distance.data().data();
  std::int64_t *f = out.nearest.data().data();
  detail::LineScratch scratch;
  const std::ptrdiff_t sx = 1, sy = nx, sz = static_cast<std::ptrdiff_t>(nx) * ny;
  for (int z = 0; z < nz; ++z)
    for (int y = 0; y < ny; ++y) {
      const auto base = static_cast<std::ptrdiff_t>(mask.index(0, y, z));
      detail::envelope_line(d + base, f + base, static_cast<std::size_t>(nx), sx, sp.x * sp.x, scratch);
    }
  for (int z = 0; z < nz; ++z)
    for (int x = 0; x < nx; ++x) {
      const auto base = static_cast<std::ptrdiff_t>(mask.index(x, 0, z));
      detail::envelope_line(d + base, f + base, static_cast<std::size_t>(ny), sy, sp.y * sp.y, scratch);
    }
  for (int y = 0; y < ny; ++y)
    for (int x = 0; x < nx; ++x) {
      const auto base = static_cast<std::ptrdiff_t>(mask.index(x, y, 0));
      detail::envelope_line(d + base, f + base, static_cast<std::size_t>(nz), sz, sp.z * sp.z, scratch);
    }
  for (auto &v : out.distance.data()) v = std::sqrt(v);
  return out;
}

DistanceField distance_transform(const BinaryMask &mask) { return serial::feature_transform(mask).distance; }

BinaryMask dilate(const BinaryMask &mask, int radius_voxels, int connectivity) {
  if (radius_voxels < 1) throw DataError("dilate: radius must be >= 1");
  const auto nbrs = offsets(connectivity);
  BinaryMask cur = mask;
  for (int r = 0; r < radius_voxels; ++r) {
    BinaryMask next = cur;
    for (std::size_t i = 0; i < cur.size(); ++i) {
      if (!cur[i]) continue;
      const Voxel v = cur.voxel(i);
      for (const auto &o : nbrs) {
        const int x = v.x + o.x, y = v.y + o.y, z = v.z + o.z;
        if (cur.contains(x, y, z)) next(x, y, z) = 1;
      }
    }
    cur = std::move(next);
  }
  return cur;
}

} // namespace vesselkit::kernels::serial
