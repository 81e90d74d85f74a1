#pragma once

// Brute-force reference computations used as independent oracles in tests.
// Nothing here calls into the library's kernels.

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>
#include <vector>

#include "vesselkit/volume.hpp"

namespace oracle {

using vesselkit::BinaryMask;
using vesselkit::Dims;
using vesselkit::Spacing;
using vesselkit::Voxel;

inline BinaryMask random_mask(Dims dims, Spacing sp, double density, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  BinaryMask m(dims, sp);
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = (rng() >> 11) * 0x1.0p-53 < density ? 1 : 0;
  return m;
}

inline std::vector<Voxel> voxels_of(const BinaryMask &m) {
  std::vector<Voxel> out;
  for (int z = 0; z < m.dims().nz; ++z)
    for (int y = 0; y < m.dims().ny; ++y)
      for (int x = 0; x < m.dims().nx; ++x)
        if (m(x, y, z)) out.push_back({x, y, z});
  return out;
}

inline bool neighbors(const Voxel &a, const Voxel &b, int connectivity) {
  const int dx = std::abs(a.x - b.x), dy = std::abs(a.y - b.y), dz = std::abs(a.z - b.z);
  if (std::max({dx, dy, dz}) != 1) return false;
  if (connectivity == 6) return dx + dy + dz == 1;
  if (connectivity == 18) return dx + dy + dz <= 2;
  return true;
}

// O(n^2) flood fill over the explicit voxel list.
inline int component_count(const BinaryMask &m, int connectivity) {
  const auto vox = voxels_of(m);
  std::vector<int> seen(vox.size(), 0);
  int count = 0;
  for (std::size_t s = 0; s < vox.size(); ++s) {
    if (seen[s]) continue;
    ++count;
    std::vector<std::size_t> stack{s};
    seen[s] = 1;
    while (!stack.empty()) {
      const auto c = stack.back();
      stack.pop_back();
      for (std::size_t j = 0; j < vox.size(); ++j)
        if (!seen[j] && neighbors(vox[c], vox[j], connectivity)) {
          seen[j] = 1;
          stack.push_back(j);
        }
    }
  }
  return count;
}

inline double mm(const Voxel &a, const Voxel &b, const Spacing &s) {
  const double dx = (a.x - b.x) * s.x, dy = (a.y - b.y) * s.y, dz = (a.z - b.z) * s.z;
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

inline double nearest(const Voxel &p, const std::vector<Voxel> &set, const Spacing &s) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto &q : set) best = std::min(best, mm(p, q, s));
  return best;
}

inline std::vector<Voxel> surface_voxels(const BinaryMask &m) {
  std::vector<Voxel> out;
  for (const auto &v : voxels_of(m)) {
    const int d[6][3] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
    bool border = false;
    for (const auto &o : d) {
      const int x = v.x + o[0], y = v.y + o[1], z = v.z + o[2];
      if (!m.contains(x, y, z) || !m(x, y, z)) border = true;
    }
    if (border) out.push_back(v);
  }
  return out;
}

inline std::set<std::size_t> index_set(const BinaryMask &m) {
  std::set<std::size_t> s;
  for (std::size_t i = 0; i < m.size(); ++i)
    if (m[i]) s.insert(i);
  return s;
}

inline std::size_t intersection_size(const std::set<std::size_t> &a, const std::set<std::size_t> &b) {
  std::vector<std::size_t> out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out.size();
}

inline double dice(const BinaryMask &a, const BinaryMask &b) {
  const auto sa = index_set(a), sb = index_set(b);
  if (sa.empty() && sb.empty()) return 1.0;
  return 2.0 * static_cast<double>(intersection_size(sa, sb)) / static_cast<double>(sa.size() + sb.size());
}

inline double cldice(const BinaryMask &a, const BinaryMask &b, const BinaryMask &skel_a, const BinaryMask &skel_b) {
  const auto sa = index_set(a), sb = index_set(b), ka = index_set(skel_a), kb = index_set(skel_b);
  if (sa.empty() && sb.empty()) return 1.0;
  if (ka.empty() || kb.empty()) return 0.0;
  const double tprec = static_cast<double>(intersection_size(ka, sb)) / static_cast<double>(ka.size());
  const double tsens = static_cast<double>(intersection_size(kb, sa)) / static_cast<double>(kb.size());
  if (tprec + tsens == 0.0) return 0.0;
  return 2.0 * tprec * tsens / (tprec + tsens);
}

inline double surface_dice(const BinaryMask &a, const BinaryMask &b, double tol) {
  const auto sa = surface_voxels(a), sb = surface_voxels(b);
  if (sa.empty() && sb.empty()) return 1.0;
  const auto sp = a.spacing();
  std::size_t hits = 0;
  for (const auto &p : sa)
    if (nearest(p, sb, sp) <= tol + 1e-9) ++hits;
  for (const auto &p : sb)
    if (nearest(p, sa, sp) <= tol + 1e-9) ++hits;
  return static_cast<double>(hits) / static_cast<double>(sa.size() + sb.size());
}

inline double hausdorff(const BinaryMask &a, const BinaryMask &b) {
  const auto sa = surface_voxels(a), sb = surface_voxels(b);
  const auto sp = a.spacing();
  double h = 0.0;
  for (const auto &p : sa) h = std::max(h, nearest(p, sb, sp));
  for (const auto &p : sb) h = std::max(h, nearest(p, sa, sp));
  return h;
}

// Incremental-error 3D Bresenham written from the textbook formulation using
// doubles (the library uses integer error terms).
inline std::vector<Voxel> bresenham(Voxel a, Voxel b) {
  const int dx = b.x - a.x, dy = b.y - a.y, dz = b.z - a.z;
  const int n = std::max({std::abs(dx), std::abs(dy), std::abs(dz)});
  std::vector<Voxel> out;
  for (int i = 0; i <= n; ++i) {
    const double t = n == 0 ? 0.0 : static_cast<double>(i) / n;
    out.push_back({a.x + static_cast<int>(std::lround(t * dx)), a.y + static_cast<int>(std::lround(t * dy)),
                   a.z + static_cast<int>(std::lround(t * dz))});
  }
  return out;
}

} // namespace oracle
