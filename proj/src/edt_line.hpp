#pragma once

// Lower envelope of parabolas along one grid line (Felzenszwalb & Huttenlocher),
// generalized with a per-axis weight w = spacing^2. Infinite inputs are not sites.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

namespace vesselkit::detail {

struct LineScratch {
  std::vector<double> f;
  std::vector<std::int64_t> feat;
  std::vector<int> v;
  std::vector<double> z;

  void resize(std::size_t n) {
    f.resize(n);
    feat.resize(n);
    v.resize(n);
    z.resize(n + 1);
  }
};

// In/out: f holds squared distances, feat the nearest-site feature for each
// entry. Writes results back through the strided pointers.
inline void envelope_line(double *dist, std::int64_t *feat, std::size_t n, std::ptrdiff_t stride,
                          double w, LineScratch &s) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  s.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    s.f[i] = dist[static_cast<std::ptrdiff_t>(i) * stride];
    s.feat[i] = feat[static_cast<std::ptrdiff_t>(i) * stride];
  }

  int k = -1;
  for (int q = 0; q < static_cast<int>(n); ++q) {
    if (s.f[q] == inf) continue;
    const double fq = s.f[q] + w * q * static_cast<double>(q);
    while (k >= 0) {
      const int vk = s.v[k];
      const double sx = (fq - (s.f[vk] + w * vk * static_cast<double>(vk))) / (2.0 * w * (q - vk));
      if (sx <= s.z[k]) {
        --k;
        continue;
      }
      ++k;
      s.v[k] = q;
      s.z[k] = sx;
      s.z[k + 1] = inf;
      break;
    }
    if (k < 0) {
      k = 0;
      s.v[0] = q;
      s.z[0] = -inf;
      s.z[1] = inf;
    }
  }

  if (k < 0) {
    for (std::size_t i = 0; i < n; ++i) {
      dist[static_cast<std::ptrdiff_t>(i) * stride] = inf;
      feat[static_cast<std::ptrdiff_t>(i) * stride] = -1;
    }
    return;
  }

  int j = 0;
  for (int p = 0; p < static_cast<int>(n); ++p) {
    while (s.z[j + 1] < p) ++j;
    const int vj = s.v[j];
    const double d = static_cast<double>(p - vj);
    dist[static_cast<std::ptrdiff_t>(p) * stride] = w * d * d + s.f[vj];
    feat[static_cast<std::ptrdiff_t>(p) * stride] = s.feat[vj];
  }
}

} // namespace vesselkit::detail
