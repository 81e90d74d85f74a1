#include <doctest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "vesselkit/kernels.hpp"
#include "vesselkit/synthgen.hpp"

using namespace vesselkit;

namespace {

SyntheticTreeSpec small_spec(std::uint64_t seed, int depth) {
  SyntheticTreeSpec s;
  s.seed = seed;
  s.depth = depth;
  s.dims = {96, 96, 96};
  s.trunk_length_mm = 24;
  s.trunk_radius_mm = 2.5;
  s.angle_jitter_deg = 8;
  return s;
}

// Independent point-to-segment distance.
double seg_dist(const Vec3 &p, const Vec3 &a, const Vec3 &b) {
  const double ux = b.x - a.x, uy = b.y - a.y, uz = b.z - a.z;
  const double len2 = ux * ux + uy * uy + uz * uz;
  double t = len2 > 0 ? ((p.x - a.x) * ux + (p.y - a.y) * uy + (p.z - a.z) * uz) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double dx = p.x - (a.x + t * ux), dy = p.y - (a.y + t * uy), dz = p.z - (a.z + t * uz);
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

std::size_t labelled(const LabelVolume &v) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < v.size(); ++i) n += v[i] ? 1 : 0;
  return n;
}

} // namespace

TEST_CASE("single trunk volume matches the analytic cylinder") {
  auto s = small_spec(3, 1);
  s.trunk_radius_mm = 4;
  s.trunk_length_mm = 40;
  s.spacing = {0.8, 0.8, 1.0};
  s.dims = {80, 80, 70};
  const auto gt = generate(s);
  REQUIRE(gt.segments.size() == 1);
  const double expected = std::numbers::pi * 16.0 * 40.0 / (0.8 * 0.8 * 1.0);
  const double got = static_cast<double>(gt.support().count());
  CHECK(std::abs(got - expected) / expected < 0.2);
}

TEST_CASE("rendered voxels are exactly the union of swept spheres") {
  auto s = small_spec(5, 3);
  s.dims = {64, 64, 64};
  s.trunk_length_mm = 16;
  s.trunk_radius_mm = 2;
  s.spacing = {1.0, 1.0, 1.25};
  const auto gt = generate(s);
  const auto &sp = gt.labels.spacing();
  for (int z = 0; z < s.dims.nz; ++z)
    for (int y = 0; y < s.dims.ny; ++y)
      for (int x = 0; x < s.dims.nx; ++x) {
        const Vec3 p{x * sp.x, y * sp.y, z * sp.z};
        int first = -1;
        for (const auto &seg : gt.segments)
          if (seg_dist(p, seg.start, seg.end) <= seg.radius_mm) {
            first = seg.id;
            break;
          }
        const auto i = gt.labels.index(x, y, z);
        REQUIRE(gt.owner[i] == first);
        REQUIRE(gt.labels[i] == (first < 0 ? 0 : gt.segments[static_cast<std::size_t>(first)].tree));
      }
}

TEST_CASE("same seed gives identical volumes") {
  auto s = small_spec(11, 4);
  s.dropout = 0.1;
  s.swap = 0.2;
  const auto a = generate(s);
  const auto b = generate(s);
  CHECK(a.labels == b.labels);
  CHECK(a.inference == b.inference);
  CHECK(a.couinaud == b.couinaud);
  CHECK(a.liver == b.liver);
  CHECK(truth_to_json(a).dump() == truth_to_json(b).dump());
  s.seed = 12;
  CHECK_FALSE(generate(s).labels == a.labels);
}

TEST_CASE("depth d gives 2^d - 1 segments with power-law radii") {
  for (int d = 1; d <= 5; ++d) {
    auto s = small_spec(2, d);
    s.dims = {128, 128, 128};
    s.trunk_radius_mm = 3;
    const auto gt = generate(s);
    CHECK(gt.segment_count(1) == (1 << d) - 1);
    CHECK(gt.bifurcation_count(1) == (1 << (d - 1)) - 1);
    for (const auto &seg : gt.segments) {
      if (seg.parent < 0) continue;
      const auto &p = gt.segments[static_cast<std::size_t>(seg.parent)];
      CHECK(std::pow(p.radius_mm, 3.0) == doctest::Approx(2.0 * std::pow(seg.radius_mm, 3.0)).epsilon(1e-9));
      CHECK((seg.start - p.end).norm() < 1e-9);
      CHECK(angle_deg(seg.direction(), p.direction()) == doctest::Approx(seg.planned_angle_deg).epsilon(1e-6));
    }
  }
}

TEST_CASE("three-way first split uses k = 3 in the power law") {
  auto s = small_spec(4, 2);
  s.first_split = 3;
  const auto gt = generate(s);
  REQUIRE(gt.segments.size() == 4);
  for (std::size_t i = 1; i < 4; ++i)
    CHECK(std::pow(gt.segments[0].radius_mm, 3.0) == doctest::Approx(3.0 * std::pow(gt.segments[i].radius_mm, 3.0)));
}

TEST_CASE("inference without corruption equals the truth labels") {
  const auto gt = generate(small_spec(7, 4));
  CHECK(gt.inference == gt.labels);
  CHECK(corrupt_inference(gt, 0.0, 0.0, 99) == gt.labels);
}

TEST_CASE("dropout removes the requested fraction in contiguous blobs") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto gt = generate(small_spec(seed, 4));
    const auto inf = corrupt_inference(gt, 0.2, 0.0, seed * 31);
    const double truth = static_cast<double>(labelled(gt.labels));
    const double kept = static_cast<double>(labelled(inf));
    CHECK(std::abs(kept / truth - 0.8) <= 0.02);
    BinaryMask removed(gt.labels.dims(), gt.labels.spacing());
    for (std::size_t i = 0; i < inf.size(); ++i) {
      CHECK((inf[i] == 0 || inf[i] == gt.labels[i]));
      removed[i] = gt.labels[i] && !inf[i] ? 1 : 0;
    }
    // Salt-and-pepper removal of 20% would leave mostly singleton holes.
    const auto holes = connected_components(removed, 26).count();
    CHECK(static_cast<double>(removed.count()) / holes >= 20.0);
  }
}

TEST_CASE("swap flips whole segments at the requested rate") {
  auto s = small_spec(8, 5);
  s.dims = {128, 128, 128};
  s.trunk_radius_mm = 3;
  const auto gt = generate(s);
  const auto inf = corrupt_inference(gt, 0.0, 0.1, 1234);
  std::vector<int> flipped(gt.segments.size(), 0), same(gt.segments.size(), 0);
  for (std::size_t i = 0; i < inf.size(); ++i) {
    if (!gt.labels[i]) continue;
    auto &bucket = inf[i] == gt.labels[i] ? same : flipped;
    ++bucket[static_cast<std::size_t>(gt.owner[i])];
  }
  int nflipped = 0;
  for (std::size_t k = 0; k < gt.segments.size(); ++k) {
    CHECK((flipped[k] == 0 || same[k] == 0));
    nflipped += flipped[k] > 0 ? 1 : 0;
  }
  const double rate = static_cast<double>(nflipped) / static_cast<double>(gt.segments.size());
  CHECK(std::abs(rate - 0.1) < 0.02);
}

TEST_CASE("bridges join the two trees and never appear in the inference") {
  int made = 0;
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    auto s = small_spec(seed, 4);
    s.dims = {112, 112, 112};
    s.second_tree = true;
    s.trunk_length_mm = 28;
    s.trunk_radius_mm = 3;
    s.bridges = 2;
    GroundTruth gt;
    try {
      gt = generate(s);
    } catch (const DataError &) {
      continue;
    }
    CHECK(gt.segment_count(1) == 15);
    CHECK(gt.segment_count(2) == 15);
    made += gt.bridges_made;
    for (std::size_t i = 0; i < gt.labels.size(); ++i) {
      if (!gt.labels[i]) continue;
      const bool bridge = gt.segments[static_cast<std::size_t>(gt.owner[i])].bridge;
      CHECK(gt.inference[i] == (bridge ? 0 : gt.labels[i]));
    }
    for (const auto &seg : gt.segments) {
      if (!seg.bridge) continue;
      const auto &p = gt.segments[static_cast<std::size_t>(seg.parent)];
      CHECK(seg.length_mm() <= s.bridge_max_length_mm + 1e-9);
      CHECK(angle_deg(seg.direction(), p.direction()) < s.bridge_max_angle_deg);
      const TruthSegment *target = nullptr;
      for (const auto &o : gt.segments)
        if (o.tree != seg.tree && !o.bridge && seg_dist(seg.end, o.start, o.end) < 1e-6) target = &o;
      REQUIRE(target != nullptr);
      const double entry = angle_deg(seg.direction(), target->direction());
      CHECK(std::min(entry, 180.0 - entry) >= s.bridge_min_entry_angle_deg);
    }
  }
  CHECK(made > 0);
}

TEST_CASE("couinaud boxes partition the liver into eight labels") {
  const auto gt = generate(small_spec(9, 4));
  std::array<std::size_t, 9> counts{};
  for (std::size_t i = 0; i < gt.couinaud.size(); ++i) {
    CHECK((gt.couinaud[i] != 0) == (gt.liver[i] != 0));
    ++counts[gt.couinaud[i]];
  }
  for (int k = 1; k <= 8; ++k) CHECK(counts[static_cast<std::size_t>(k)] > 0);
  // High-x half carries 5-8.
  const auto v = oracle::voxels_of(gt.liver);
  int xmin = 1 << 30, xmax = -1;
  for (const auto &w : v) xmin = std::min(xmin, w.x), xmax = std::max(xmax, w.x);
  for (const auto &w : v) {
    const auto c = gt.couinaud(w.x, w.y, w.z);
    if (w.x == xmax) CHECK(c >= 5);
    if (w.x == xmin) CHECK(c <= 4);
  }
}

TEST_CASE("trees that leave the grid are rejected with the segment named") {
  auto s = small_spec(1, 3);
  s.trunk_length_mm = 80;
  s.dims = {64, 64, 64};
  CHECK_THROWS_WITH_AS(generate(s), doctest::Contains("segment"), DataError);
  auto bad = small_spec(1, 2);
  bad.trunk_radius_mm = 0;
  CHECK_THROWS_AS(generate(bad), DataError);
  bad = small_spec(1, 2);
  bad.dropout = 1.0;
  CHECK_THROWS_AS(generate(bad), DataError);
}

TEST_CASE("spec json round trip") {
  auto s = small_spec(42, 3);
  s.second_tree = true;
  s.second_offset_mm = {4, 0, -2};
  s.bridges = 1;
  s.dropout = 0.15;
  s.spacing = {0.7, 0.8, 1.5};
  const auto back = spec_from_json(nlohmann::json::parse(spec_to_json(s).dump()));
  CHECK(spec_to_json(back).dump() == spec_to_json(s).dump());
  CHECK_THROWS_AS(spec_from_json(nlohmann::json::parse(R"({"depth": "x"})")), DataError);
}

TEST_CASE("uniform01 is in range and platform independent") {
  CHECK(uniform01(0) == 0.0);
  CHECK(uniform01(~0ULL) < 1.0);
  CHECK(uniform01(1ULL << 63) == 0.5);
}
