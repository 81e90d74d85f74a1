#include "vesselkit/skeleton.hpp"

#include <omp.h>

#include <algorithm>
#include <bit>

namespace vesselkit {

namespace topology {

namespace {

struct CubeTables {
  std::array<std::uint32_t, 27> adj26{};
  std::array<std::uint32_t, 27> adj6{};
  std::uint32_t n18 = 0;
  std::uint32_t face6 = 0;

  CubeTables() {
    auto pos = [](int k) { return std::array<int, 3>{k % 3, (k / 3) % 3, k / 9}; };
    for (int a = 0; a < 27; ++a) {
      const auto pa = pos(a);
      const int manhattan = std::abs(pa[0] - 1) + std::abs(pa[1] - 1) + std::abs(pa[2] - 1);
      if (a != kCenter && manhattan <= 2) n18 |= 1u << a;
      if (manhattan == 1) face6 |= 1u << a;
      for (int b = 0; b < 27; ++b) {
        if (a == b || b == kCenter) continue;
        const auto pb = pos(b);
        const int dx = std::abs(pa[0] - pb[0]), dy = std::abs(pa[1] - pb[1]), dz = std::abs(pa[2] - pb[2]);
        if (std::max({dx, dy, dz}) == 1) adj26[a] |= 1u << b;
        if (dx + dy + dz == 1) adj6[a] |= 1u << b;
      }
    }
  }
};

const CubeTables &tables() {
  static const CubeTables t;
  return t;
}

// Floods `set` from its lowest bit using `adj`; returns the flooded component.
std::uint32_t flood(std::uint32_t set, const std::array<std::uint32_t, 27> &adj) {
  std::uint32_t comp = set & (~set + 1u);
  std::uint32_t frontier = comp;
  while (frontier) {
    std::uint32_t grow = 0;
    for (std::uint32_t f = frontier; f; f &= f - 1) grow |= adj[std::countr_zero(f)];
    grow &= set & ~comp;
    comp |= grow;
    frontier = grow;
  }
  return comp;
}

} // namespace

int count_neighbors(std::uint32_t nb) { return std::popcount(nb & ~(1u << kCenter) & ((1u << 27) - 1)); }

int foreground_components26(std::uint32_t nb) {
  std::uint32_t rest = nb & ~(1u << kCenter) & ((1u << 27) - 1);
  int n = 0;
  while (rest) {
    rest &= ~flood(rest, tables().adj26);
    ++n;
  }
  return n;
}

int background_components6(std::uint32_t nb) {
  const auto &t = tables();
  std::uint32_t rest = ~nb & t.n18;
  int n = 0;
  while (rest) {
    const auto comp = flood(rest, t.adj6);
    if (comp & t.face6) ++n;
    rest &= ~comp;
  }
  return n;
}

bool is_simple(std::uint32_t nb) {
  return foreground_components26(nb) == 1 && background_components6(nb) == 1;
}

} // namespace topology

namespace {

// Volume padded by one background voxel on every side so neighborhood reads
// need no bounds checks.
struct Padded {
  int px, py, pz;
  std::vector<std::uint8_t> v;
  std::array<std::ptrdiff_t, 27> cube{};

  explicit Padded(const BinaryMask &m)
      : px(m.dims().nx + 2), py(m.dims().ny + 2), pz(m.dims().nz + 2),
        v(static_cast<std::size_t>(px) * py * pz, 0) {
    for (int k = 0; k < 27; ++k)
      cube[k] = (k % 3 - 1) + static_cast<std::ptrdiff_t>(px) * ((k / 3) % 3 - 1) +
                static_cast<std::ptrdiff_t>(px) * py * (k / 9 - 1);
    const auto [nx, ny, nz] = m.dims();
    for (int z = 0; z < nz; ++z)
      for (int y = 0; y < ny; ++y)
        for (int x = 0; x < nx; ++x) v[at(x, y, z)] = m(x, y, z) ? 1 : 0;
  }

  std::size_t at(int x, int y, int z) const {
    return static_cast<std::size_t>(x + 1) +
           static_cast<std::size_t>(px) * (static_cast<std::size_t>(y + 1) + static_cast<std::size_t>(py) * (z + 1));
  }

  std::uint32_t neighborhood(std::size_t p) const {
    std::uint32_t nb = 0;
    for (int k = 0; k < 27; ++k)
      if (v[static_cast<std::size_t>(static_cast<std::ptrdiff_t>(p) + cube[k])]) nb |= 1u << k;
    return nb;
  }
};

// Cube positions of the six face neighbours in sub-iteration order U, D, N, S, E, W.
constexpr std::array<int, 6> kBorderOrder = {22, 4, 10, 16, 14, 12};

// Cube positions in the 3x3 layer on the face `k` side.
std::uint32_t layer_mask(int k) {
  std::uint32_t m = 0;
  const int ka[3] = {k % 3, (k / 3) % 3, k / 9};
  const int axis = ka[0] != 1 ? 0 : ka[1] != 1 ? 1 : 2;
  for (int c = 0; c < 27; ++c) {
    const int ca[3] = {c % 3, (c / 3) % 3, c / 9};
    if (ca[axis] == ka[axis]) m |= 1u << c;
  }
  return m;
}

template <bool Parallel> SkeletonVolume lee_impl(const BinaryMask &mask) {
  Padded img(mask);
  std::vector<std::size_t> active;
  for (int z = 0; z < mask.dims().nz; ++z)
    for (int y = 0; y < mask.dims().ny; ++y)
      for (int x = 0; x < mask.dims().nx; ++x)
        if (mask(x, y, z)) active.push_back(img.at(x, y, z));

  std::vector<std::uint8_t> flag;
  std::vector<std::size_t> candidates;
  // Phase 0 also requires foreground in the layer opposite the border, so a
  // voxel is only peeled from a side that has material behind it. This keeps
  // even-width tubes from being eaten away as a flat sheet. Phase 1 is plain
  // border thinning and only removes leftover corners.
  for (int phase = 0; phase < 2; ++phase) {
    bool changed = true;
    while (changed) {
      changed = false;
      for (const int border : kBorderOrder) {
        const std::uint32_t support = layer_mask(26 - border);
        // Mark phase reads only the pre-sub-iteration state.
        flag.assign(active.size(), 0);
        const auto n = static_cast<std::ptrdiff_t>(active.size());
#pragma omp parallel for schedule(static) if (Parallel)
        for (std::ptrdiff_t i = 0; i < n; ++i) {
          const auto p = active[static_cast<std::size_t>(i)];
          if (!img.v[p]) continue;
          const auto nb = img.neighborhood(p);
          if (nb & (1u << border)) continue;
          if (phase == 0 && !(nb & support)) continue;
          if (topology::count_neighbors(nb) == 1) continue;
          if (!topology::is_simple(nb)) continue;
          flag[static_cast<std::size_t>(i)] = 1;
        }
        candidates.clear();
        for (std::size_t i = 0; i < active.size(); ++i)
          if (flag[i]) candidates.push_back(active[i]);

        // Sweep phase is sequential in scan order; each deletion is re-validated.
        for (const auto p : candidates) {
          img.v[p] = 0;
          if (!topology::is_simple(img.neighborhood(p))) img.v[p] = 1;
          else changed = true;
        }
      }
      std::erase_if(active, [&](std::size_t p) { return img.v[p] == 0; });
    }
  }

  SkeletonVolume out{BinaryMask(mask.dims(), mask.spacing()), SkeletonMethod::Lee, 0};
  for (int z = 0; z < mask.dims().nz; ++z)
    for (int y = 0; y < mask.dims().ny; ++y)
      for (int x = 0; x < mask.dims().nx; ++x) out.mask(x, y, z) = img.v[img.at(x, y, z)];
  return out;
}

template <bool Parallel> SoftVolume soft_erode(const SoftVolume &in) {
  const auto [nx, ny, nz] = in.dims();
  SoftVolume out(in.dims(), in.spacing());
#pragma omp parallel for collapse(2) schedule(static) if (Parallel)
  for (int z = 0; z < nz; ++z)
    for (int y = 0; y < ny; ++y)
      for (int x = 0; x < nx; ++x) {
        double v = in(x, y, z);
        for (const auto &o : offsets6()) v = std::min(v, in.get(x + o.x, y + o.y, z + o.z));
        out(x, y, z) = v;
      }
  return out;
}

template <bool Parallel> SoftVolume soft_dilate(const SoftVolume &in) {
  const auto [nx, ny, nz] = in.dims();
  SoftVolume out(in.dims(), in.spacing());
#pragma omp parallel for collapse(2) schedule(static) if (Parallel)
  for (int z = 0; z < nz; ++z)
    for (int y = 0; y < ny; ++y)
      for (int x = 0; x < nx; ++x) {
        double v = in(x, y, z);
        for (const auto &o : offsets26()) v = std::max(v, in.get(x + o.x, y + o.y, z + o.z));
        out(x, y, z) = v;
      }
  return out;
}

template <bool Parallel> SoftVolume soft_impl(const SoftVolume &input, int iterations) {
  if (iterations < 1) throw DataError("skeletonize_soft: iterations must be >= 1");
  for (double v : input.data())
    if (!(v >= 0.0 && v <= 1.0)) throw DataError("skeletonize_soft: input values must lie in [0, 1]");

  auto open = [](const SoftVolume &v) { return soft_dilate<Parallel>(soft_erode<Parallel>(v)); };
  SoftVolume img = input;
  SoftVolume skel(input.dims(), input.spacing());
  {
    const auto opened = open(img);
    for (std::size_t i = 0; i < img.size(); ++i) skel[i] = std::max(0.0, img[i] - opened[i]);
  }
  for (int it = 0; it < iterations; ++it) {
    img = soft_erode<Parallel>(img);
    const auto opened = open(img);
    const auto n = static_cast<std::ptrdiff_t>(img.size());
#pragma omp parallel for schedule(static) if (Parallel)
    for (std::ptrdiff_t k = 0; k < n; ++k) {
      const auto i = static_cast<std::size_t>(k);
      const double delta = std::max(0.0, img[i] - opened[i]);
      skel[i] += std::max(0.0, delta - skel[i] * delta);
    }
  }
  return skel;
}

} // namespace

SkeletonVolume skeletonize_lee(const BinaryMask &mask) { return lee_impl<true>(mask); }

SoftVolume skeletonize_soft(const SoftVolume &input, int iterations) { return soft_impl<true>(input, iterations); }

SoftVolume to_soft(const BinaryMask &mask) {
  SoftVolume out(mask.dims(), mask.spacing());
  for (std::size_t i = 0; i < mask.size(); ++i) out[i] = mask[i] ? 1.0 : 0.0;
  return out;
}

BinaryMask threshold(const SoftVolume &v, double level) {
  BinaryMask out(v.dims(), v.spacing());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] >= level ? 1 : 0;
  return out;
}

SkeletonVolume skeletonize_soft_mask(const BinaryMask &mask, int iterations) {
  return {threshold(skeletonize_soft(to_soft(mask), iterations)), SkeletonMethod::Soft, iterations};
}

namespace kernels::serial {

SkeletonVolume skeletonize_lee(const BinaryMask &mask) { return lee_impl<false>(mask); }

SoftVolume skeletonize_soft(const SoftVolume &input, int iterations) { return soft_impl<false>(input, iterations); }

} // namespace kernels::serial

} // namespace vesselkit
