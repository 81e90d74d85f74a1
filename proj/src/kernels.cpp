#include "vesselkit/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <numeric>

#include "edt_line.hpp"

namespace vesselkit {

namespace {

// Union-find whose root is always the smallest member label.
struct MinUnionFind {
  std::vector<std::int32_t> parent;

  explicit MinUnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }

  std::int32_t find(std::int32_t a) {
    while (parent[a] != a) {
      parent[a] = parent[parent[a]];
      a = parent[a];
    }
    return a;
  }
  void unite(std::int32_t a, std::int32_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (a < b) parent[b] = a;
    else parent[a] = b;
  }
};

// Labels one z-slab [z0, z1) with slab-local ids in scan order.
std::int32_t label_slab(const BinaryMask &mask, std::span<const Voxel> nbrs, int z0, int z1,
                        Grid<std::int32_t> &ids) {
  std::int32_t next = 0;
  std::vector<std::size_t> stack;
  const auto [nx, ny, nz] = mask.dims();
  (void)nz;
  for (int z = z0; z < z1; ++z)
    for (int y = 0; y < ny; ++y)
      for (int x = 0; x < nx; ++x) {
        const auto i = mask.index(x, y, z);
        if (!mask[i] || ids[i]) continue;
        const auto id = ++next;
        ids[i] = id;
        stack.push_back(i);
        while (!stack.empty()) {
          const Voxel v = mask.voxel(stack.back());
          stack.pop_back();
          for (const auto &o : nbrs) {
            const int xx = v.x + o.x, yy = v.y + o.y, zz = v.z + o.z;
            if (zz < z0 || zz >= z1 || !mask.contains(xx, yy, zz)) continue;
            const auto j = mask.index(xx, yy, zz);
            if (mask[j] && !ids[j]) {
              ids[j] = id;
              stack.push_back(j);
            }
          }
        }
      }
  return next;
}

} // namespace

Components connected_components(const BinaryMask &mask, int connectivity) {
  const auto nbrs = offsets(connectivity);
  const auto [nx, ny, nz] = mask.dims();
  Components out{Grid<std::int32_t>(mask.dims(), mask.spacing(), 0), {}};
  if (mask.size() == 0) return out;

  const int slabs = std::max(1, std::min(nz, omp_get_max_threads()));
  std::vector<int> bounds(static_cast<std::size_t>(slabs) + 1);
  for (int s = 0; s <= slabs; ++s) bounds[s] = static_cast<int>(static_cast<long>(nz) * s / slabs);
  std::vector<std::int32_t> local_count(static_cast<std::size_t>(slabs), 0);

#pragma omp parallel for schedule(static, 1)
  for (int s = 0; s < slabs; ++s) local_count[s] = label_slab(mask, nbrs, bounds[s], bounds[s + 1], out.ids);

  // Slab-local ids become global provisional ids. Provisional order equals
  // linear scan order because slabs are z-major.
  std::vector<std::int32_t> offset(static_cast<std::size_t>(slabs), 0);
  for (int s = 1; s < slabs; ++s) offset[s] = offset[s - 1] + local_count[s - 1];
  const std::int32_t total = offset[slabs - 1] + local_count[slabs - 1];

#pragma omp parallel for schedule(static, 1)
  for (int s = 0; s < slabs; ++s) {
    if (offset[s] == 0) continue;
    const auto plane = static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny);
    for (std::size_t i = plane * bounds[s]; i < plane * bounds[s + 1]; ++i)
      if (out.ids[i]) out.ids[i] += offset[s];
  }

  MinUnionFind uf(static_cast<std::size_t>(total) + 1);
  for (int s = 1; s < slabs; ++s) {
    const int z = bounds[s];
    for (int y = 0; y < ny; ++y)
      for (int x = 0; x < nx; ++x) {
        const auto a = out.ids(x, y, z);
        if (!a) continue;
        for (const auto &o : nbrs) {
          if (o.z != -1) continue;
          const int xx = x + o.x, yy = y + o.y, zz = z - 1;
          if (!mask.contains(xx, yy, zz)) continue;
          const auto b = out.ids(xx, yy, zz);
          if (b) uf.unite(a, b);
        }
      }
  }

  std::vector<std::int32_t> final_id(static_cast<std::size_t>(total) + 1, 0);
  std::int32_t next = 0;
  for (std::int32_t p = 1; p <= total; ++p) {
    const auto r = uf.find(p);
    if (!final_id[r]) final_id[r] = ++next;
    final_id[p] = final_id[r];
  }

  const auto n = static_cast<std::ptrdiff_t>(mask.size());
  std::vector<std::size_t> sizes(static_cast<std::size_t>(next), 0);
#pragma omp parallel
  {
    std::vector<std::size_t> local(static_cast<std::size_t>(next), 0);
#pragma omp for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      auto &id = out.ids[static_cast<std::size_t>(i)];
      if (id) {
        id = final_id[id];
        ++local[id - 1];
      }
    }
#pragma omp critical
    for (std::size_t k = 0; k < local.size(); ++k) sizes[k] += local[k];
  }
  out.sizes = std::move(sizes);
  return out;
}

FeatureTransform feature_transform(const BinaryMask &mask) {
  const auto [nx, ny, nz] = mask.dims();
  const auto sp = mask.spacing();
  FeatureTransform out{DistanceField(mask.dims(), mask.spacing(), kInfDistance),
                       Grid<std::int64_t>(mask.dims(), mask.spacing(), -1)};
  double *d = out.distance.data().data();
  std::int64_t *f = out.nearest.data().data();
  const auto n = static_cast<std::ptrdiff_t>(mask.size());

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    if (mask[static_cast<std::size_t>(i)]) {
      d[i] = 0.0;
      f[i] = i;
    }
  }

  const std::ptrdiff_t plane = static_cast<std::ptrdiff_t>(nx) * ny;
#pragma omp parallel
  {
    detail::LineScratch scratch;
#pragma omp for collapse(2) schedule(static)
    for (int z = 0; z < nz; ++z)
      for (int y = 0; y < ny; ++y) {
        const auto base = static_cast<std::ptrdiff_t>(y) * nx + z * plane;
        detail::envelope_line(d + base, f + base, static_cast<std::size_t>(nx), 1, sp.x * sp.x, scratch);
      }
#pragma omp for collapse(2) schedule(static)
    for (int z = 0; z < nz; ++z)
      for (int x = 0; x < nx; ++x) {
        const auto base = x + z * plane;
        detail::envelope_line(d + base, f + base, static_cast<std::size_t>(ny), nx, sp.y * sp.y, scratch);
      }
#pragma omp for collapse(2) schedule(static)
    for (int y = 0; y < ny; ++y)
      for (int x = 0; x < nx; ++x) {
        const auto base = x + static_cast<std::ptrdiff_t>(y) * nx;
        detail::envelope_line(d + base, f + base, static_cast<std::size_t>(nz), plane, sp.z * sp.z, scratch);
      }
#pragma omp for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) d[i] = std::sqrt(d[i]);
  }
  return out;
}

DistanceField distance_transform(const BinaryMask &mask) { return feature_transform(mask).distance; }

BinaryMask dilate(const BinaryMask &mask, int radius_voxels, int connectivity) {
  if (radius_voxels < 1) throw DataError("dilate: radius must be >= 1");
  const auto nbrs = offsets(connectivity);
  const auto [nx, ny, nz] = mask.dims();
  BinaryMask cur = mask;
  if (connectivity == 26) {
    // r steps of the 3x3x3 cube give the (2r+1)^3 cube: one 1D pass per axis.
    const long long sx = 1, sy = nx, sz = static_cast<long long>(nx) * ny;
    const struct {
      int len, n1, n2;
      long long step, s1, s2;
    } axes[] = {{nx, ny, nz, sx, sy, sz}, {ny, nx, nz, sy, sx, sz}, {nz, nx, ny, sz, sx, sy}};
    const int r = radius_voxels;
    for (const auto &a : axes) {
      BinaryMask next(mask.dims(), mask.spacing());
#pragma omp parallel for collapse(2) schedule(static)
      for (int j = 0; j < a.n2; ++j)
        for (int i = 0; i < a.n1; ++i) {
          const long long base = i * a.s1 + j * a.s2;
          int last = -r - 1; // last foreground position seen going forward
          for (int t = 0; t < a.len; ++t) {
            if (cur[static_cast<std::size_t>(base + t * a.step)]) last = t;
            if (t - last <= r) next[static_cast<std::size_t>(base + t * a.step)] = 1;
          }
          last = a.len + r;
          for (int t = a.len - 1; t >= 0; --t) {
            if (cur[static_cast<std::size_t>(base + t * a.step)]) last = t;
            if (last - t <= r) next[static_cast<std::size_t>(base + t * a.step)] = 1;
          }
        }
      cur = std::move(next);
    }
    return cur;
  }
  BinaryMask next(mask.dims(), mask.spacing());
  for (int r = 0; r < radius_voxels; ++r) {
#pragma omp parallel for collapse(2) schedule(static)
    for (int z = 0; z < nz; ++z)
      for (int y = 0; y < ny; ++y)
        for (int x = 0; x < nx; ++x) {
          std::uint8_t v = cur(x, y, z);
          for (std::size_t k = 0; !v && k < nbrs.size(); ++k) v = cur.get(x + nbrs[k].x, y + nbrs[k].y, z + nbrs[k].z);
          next(x, y, z) = v ? 1 : 0;
        }
    std::swap(cur, next);
  }
  return cur;
}

} // namespace vesselkit
