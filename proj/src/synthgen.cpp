#include "vesselkit/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <random>

namespace vesselkit {

namespace {

constexpr double kDeg = M_PI / 180.0;

Vec3 normalized(const Vec3 &v) { return v * (1.0 / v.norm()); }

struct Rng {
  std::mt19937_64 eng;
  explicit Rng(std::uint64_t seed) : eng(seed) {}
  double uniform() { return uniform01(eng()); }
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(eng() % n); }
};

double point_segment_distance(const Vec3 &p, const Vec3 &a, const Vec3 &b) {
  const Vec3 ab = b - a;
  const double len2 = ab.dot(ab);
  double t = len2 > 0 ? (p - a).dot(ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return (p - (a + ab * t)).norm();
}


// Closest distance between segments p1-q1 and p2-q2.
double segment_distance(const Vec3 &p1, const Vec3 &q1, const Vec3 &p2, const Vec3 &q2) {
  const Vec3 d1 = q1 - p1, d2 = q2 - p2, r = p1 - p2;
  const double a = d1.dot(d1), e = d2.dot(d2), f = d2.dot(r);
  double s = 0, t = 0;
  if (a <= 1e-18 && e <= 1e-18) return r.norm();
  if (a <= 1e-18) {
    t = std::clamp(f / e, 0.0, 1.0);
  } else {
    const double c = d1.dot(r);
    if (e <= 1e-18) {
      s = std::clamp(-c / a, 0.0, 1.0);
    } else {
      const double b = d1.dot(d2), denom = a * e - b * b;
      s = denom > 1e-18 ? std::clamp((b * f - c * e) / denom, 0.0, 1.0) : 0.0;
      t = (b * s + f) / e;
      if (t < 0.0) {
        t = 0.0;
        s = std::clamp(-c / a, 0.0, 1.0);
      } else if (t > 1.0) {
        t = 1.0;
        s = std::clamp((b - c) / a, 0.0, 1.0);
      }
    }
  }
  return ((p1 + d1 * s) - (p2 + d2 * t)).norm();
}

void grow(std::vector<TruthSegment> &segs, const SyntheticTreeSpec &spec, Rng &rng, int tree, int parent, Vec3 start,
          Vec3 d, Vec3 u, double length, double radius, int depth, double planned) {
  TruthSegment s;
  s.id = static_cast<int>(segs.size());
  s.tree = tree;
  s.parent = parent;
  s.depth = depth;
  s.start = start;
  s.end = start + d * length;
  s.radius_mm = radius;
  s.planned_angle_deg = planned;
  segs.push_back(s);
  const int id = s.id;
  if (parent >= 0) segs[parent].children.push_back(id);
  if (depth + 1 >= spec.depth) return;

  const int k = depth == 0 ? spec.first_split : 2;
  const double child_radius = radius * std::pow(static_cast<double>(k), -1.0 / spec.radius_exponent);
  const Vec3 w = d.cross(u);
  const Vec3 end = segs[id].end;
  for (int i = 0; i < k; ++i) {
    const double a = spec.branch_angle_deg + spec.angle_jitter_deg * (2.0 * rng.uniform() - 1.0);
    const double phi = 2.0 * M_PI * i / k;
    const Vec3 off = u * std::cos(phi) + w * std::sin(phi);
    const Vec3 dc = normalized(d * std::cos(a * kDeg) + off * std::sin(a * kDeg));
    const Vec3 uc = normalized(dc.cross(off));
    grow(segs, spec, rng, tree, id, end, dc, uc, length * spec.length_decay, child_radius, depth + 1, a);
  }
}

void check_inside(const TruthSegment &s, const Dims &dims, const Spacing &sp) {
  const double lo[3] = {std::min(s.start.x, s.end.x) - s.radius_mm, std::min(s.start.y, s.end.y) - s.radius_mm,
                        std::min(s.start.z, s.end.z) - s.radius_mm};
  const double hi[3] = {std::max(s.start.x, s.end.x) + s.radius_mm, std::max(s.start.y, s.end.y) + s.radius_mm,
                        std::max(s.start.z, s.end.z) + s.radius_mm};
  const double ext[3] = {(dims.nx - 2) * sp.x, (dims.ny - 2) * sp.y, (dims.nz - 2) * sp.z};
  const double margin[3] = {sp.x, sp.y, sp.z};
  for (int a = 0; a < 3; ++a)
    if (lo[a] < margin[a] || hi[a] > ext[a])
      throw DataError("synthgen: segment " + std::to_string(s.id) + " (tree " + std::to_string(s.tree) + ", depth " +
                      std::to_string(s.depth) + ") leaves the grid");
}

// Capsule rendering: a voxel is covered when its centre lies within radius of
// the segment axis, the limit of stamping spheres along the segment.
void render(const TruthSegment &s, LabelVolume &labels, Grid<std::int32_t> &owner) {
  const auto &sp = labels.spacing();
  const auto &dm = labels.dims();
  const double r = s.radius_mm;
  const int x0 = std::max(0, static_cast<int>(std::floor((std::min(s.start.x, s.end.x) - r) / sp.x)));
  const int x1 = std::min(dm.nx - 1, static_cast<int>(std::ceil((std::max(s.start.x, s.end.x) + r) / sp.x)));
  const int y0 = std::max(0, static_cast<int>(std::floor((std::min(s.start.y, s.end.y) - r) / sp.y)));
  const int y1 = std::min(dm.ny - 1, static_cast<int>(std::ceil((std::max(s.start.y, s.end.y) + r) / sp.y)));
  const int z0 = std::max(0, static_cast<int>(std::floor((std::min(s.start.z, s.end.z) - r) / sp.z)));
  const int z1 = std::min(dm.nz - 1, static_cast<int>(std::ceil((std::max(s.start.z, s.end.z) + r) / sp.z)));
  for (int z = z0; z <= z1; ++z)
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) {
        const auto i = labels.index(x, y, z);
        if (owner[i] >= 0) continue;
        const Vec3 p{x * sp.x, y * sp.y, z * sp.z};
        if (point_segment_distance(p, s.start, s.end) <= r) {
          owner[i] = s.id;
          labels[i] = static_cast<std::uint8_t>(s.tree);
        }
      }
}

bool adjacent_segments(const TruthSegment &a, const TruthSegment &b) {
  return a.parent == b.id || b.parent == a.id || (a.parent >= 0 && a.parent == b.parent);
}

} // namespace

Vec3 TruthSegment::direction() const { return normalized(end - start); }

double uniform01(std::uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

int GroundTruth::segment_count(int tree) const {
  return static_cast<int>(std::count_if(segments.begin(), segments.end(),
                                        [&](const TruthSegment &s) { return !s.bridge && s.tree == tree; }));
}

int GroundTruth::bifurcation_count(int tree) const {
  return static_cast<int>(std::count_if(segments.begin(), segments.end(), [&](const TruthSegment &s) {
    return !s.bridge && s.tree == tree && s.children.size() >= 2;
  }));
}

LabelVolume couinaud_boxes(const BinaryMask &liver) {
  LabelVolume out(liver.dims(), liver.spacing());
  const auto idx = liver.indices();
  if (idx.empty()) return out;
  Voxel lo = liver.voxel(idx.front()), hi = lo;
  for (const auto i : idx) {
    const auto v = liver.voxel(i);
    lo = {std::min(lo.x, v.x), std::min(lo.y, v.y), std::min(lo.z, v.z)};
    hi = {std::max(hi.x, v.x), std::max(hi.y, v.y), std::max(hi.z, v.z)};
  }
  auto half = [](int c, int l, int h) { return 2 * (c - l) >= h - l + 1 ? 1 : 0; };
  for (const auto i : idx) {
    const auto v = liver.voxel(i);
    out[i] = static_cast<std::uint8_t>(1 + 4 * half(v.x, lo.x, hi.x) + 2 * half(v.y, lo.y, hi.y) +
                                       half(v.z, lo.z, hi.z));
  }
  return out;
}

constexpr int kBridgeSamples = 32;
constexpr double kBridgeMinSideAngle = 25.0;
constexpr double kBridgeRadiusFactor = 0.6;
constexpr double kInf = std::numeric_limits<double>::infinity();

GroundTruth generate(const SyntheticTreeSpec &spec) {
  if (spec.depth < 1) throw DataError("synthgen: depth must be at least 1");
  if (spec.first_split < 2 || spec.first_split > 3) throw DataError("synthgen: first_split must be 2 or 3");
  for (double v : {spec.trunk_length_mm, spec.length_decay, spec.trunk_radius_mm, spec.radius_exponent,
                   spec.branch_angle_deg})
    if (!(v > 0.0) || !std::isfinite(v)) throw DataError("synthgen: geometric parameters must be positive");
  if (spec.angle_jitter_deg < 0.0) throw DataError("synthgen: jitter must be nonnegative");
  if (spec.dropout < 0.0 || spec.dropout >= 1.0 || spec.swap < 0.0 || spec.swap >= 1.0)
    throw DataError("synthgen: dropout and swap must lie in [0, 1)");

  GroundTruth gt;
  gt.spec = spec;
  Rng rng(spec.seed);
  const auto &sp = spec.spacing;
  const Dims &dm = spec.dims;
  const double cx = (dm.nx - 1) * sp.x / 2.0, cz = (dm.nz - 1) * sp.z / 2.0;
  const double margin = spec.trunk_radius_mm + 2.0 * std::max({sp.x, sp.y, sp.z});

  const Vec3 root1{cx, margin, cz};
  grow(gt.segments, spec, rng, 1, -1, root1, {0, 1, 0}, {1, 0, 0}, spec.trunk_length_mm, spec.trunk_radius_mm, 0, 0);
  Vec3 root2;
  if (spec.second_tree) {
    root2 = {cx + spec.second_offset_mm.x, (dm.ny - 1) * sp.y - margin, cz + spec.second_offset_mm.z};
    grow(gt.segments, spec, rng, 2, -1, root2, {0, -1, 0}, {0, 0, 1}, spec.trunk_length_mm, spec.trunk_radius_mm, 0,
         0);
  }
  const auto tree_segments = gt.segments.size();
  for (const auto &s : gt.segments) check_inside(s, dm, sp);

  // Clearance between segments that do not share an end point.
  gt.min_clearance_mm = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < tree_segments; ++i)
    for (std::size_t j = i + 1; j < tree_segments; ++j) {
      const auto &a = gt.segments[i], &b = gt.segments[j];
      if (a.tree == b.tree && adjacent_segments(a, b)) continue;
      const double gap = segment_distance(a.start, a.end, b.start, b.end) - a.radius_mm - b.radius_mm;
      gt.min_clearance_mm = std::min(gt.min_clearance_mm, gap);
    }
  gt.well_separated = gt.min_clearance_mm >= spec.clearance_voxels * std::min({sp.x, sp.y, sp.z});

  if (spec.second_tree) {
    // A bridge is a vessel of one tree that runs into the other: either a
    // continuation of a leaf or a side branch off the middle of a segment. It
    // must meet the other tree's axis at a steep angle.
    std::vector<char> used_from(tree_segments, 0), used_to(tree_segments, 0);
    const double min_sp = std::min({sp.x, sp.y, sp.z});
    for (int k = 0; k < spec.bridges; ++k) {
      int best_from = -1, best_target = -1;
      double best_angle = 0, best_dist = kInf;
      Vec3 best_start, best_point;
      for (int pass = 0; pass < 2 && best_from < 0; ++pass) {
        const int from_tree = ((k + pass) % 2) + 1;
        for (std::size_t l = 0; l < tree_segments; ++l) {
          const auto &src = gt.segments[l];
          if (src.tree != from_tree || used_from[l]) continue;
          std::vector<std::pair<Vec3, bool>> origins; // point, is leaf end
          if (src.children.empty()) origins.push_back({src.end, true});
          for (int f = 2; f <= 6; ++f) origins.push_back({src.start + (src.end - src.start) * (f / 8.0), false});
          for (const auto &[origin, leaf_end] : origins)
            for (std::size_t t = 0; t < tree_segments; ++t) {
              const auto &tgt = gt.segments[t];
              if (tgt.tree == from_tree || used_to[t]) continue;
              for (int k2 = 0; k2 <= kBridgeSamples; ++k2) {
                const Vec3 q = tgt.start + (tgt.end - tgt.start) * (static_cast<double>(k2) / kBridgeSamples);
                const Vec3 v = q - origin;
                const double dist = v.norm();
                if (dist > spec.bridge_max_length_mm || dist > best_dist) continue;
                if (dist - src.radius_mm - tgt.radius_mm < 2.0 * min_sp) continue;
                const double ang = angle_deg(src.direction(), v);
                if (!(ang < spec.bridge_max_angle_deg) || (!leaf_end && ang < kBridgeMinSideAngle)) continue;
                const double entry = angle_deg(tgt.direction(), v);
                if (std::min(entry, 180.0 - entry) < spec.bridge_min_entry_angle_deg) continue;
                if (dist < best_dist || ang < best_angle) {
                  best_angle = ang;
                  best_dist = dist;
                  best_from = static_cast<int>(l);
                  best_target = static_cast<int>(t);
                  best_start = origin;
                  best_point = q;
                }
              }
            }
        }
      }
      if (best_from < 0) break;
      used_from[static_cast<std::size_t>(best_from)] = 1;
      used_to[static_cast<std::size_t>(best_target)] = 1;
      const auto &src = gt.segments[static_cast<std::size_t>(best_from)];
      TruthSegment b;
      b.id = static_cast<int>(gt.segments.size());
      b.tree = src.tree;
      b.parent = src.id;
      b.depth = src.depth + 1;
      b.start = best_start;
      b.end = best_point;
      b.radius_mm =
          std::max(min_sp, kBridgeRadiusFactor *
                               std::min(src.radius_mm, gt.segments[static_cast<std::size_t>(best_target)].radius_mm));
      b.planned_angle_deg = best_angle;
      b.bridge = true;
      gt.segments.push_back(b);
      gt.segments[static_cast<std::size_t>(best_from)].children.push_back(b.id);
      gt.bridges_made++;
    }
  }

  gt.labels = LabelVolume(dm, sp);
  gt.owner = Grid<std::int32_t>(dm, sp, -1);
  for (const auto &s : gt.segments) render(s, gt.labels, gt.owner);

  // Liver box: spans the rendered trees in x/z, starts part-way along each trunk in y.
  double xlo = 1e300, xhi = -1e300, zlo = 1e300, zhi = -1e300, yhi = -1e300;
  for (std::size_t i = 0; i < tree_segments; ++i) {
    const auto &s = gt.segments[i];
    xlo = std::min({xlo, s.start.x - s.radius_mm, s.end.x - s.radius_mm});
    xhi = std::max({xhi, s.start.x + s.radius_mm, s.end.x + s.radius_mm});
    zlo = std::min({zlo, s.start.z - s.radius_mm, s.end.z - s.radius_mm});
    zhi = std::max({zhi, s.start.z + s.radius_mm, s.end.z + s.radius_mm});
    yhi = std::max({yhi, s.start.y + s.radius_mm, s.end.y + s.radius_mm});
  }
  // Branches curling back toward a root pull the liver edge with them.
  double ylo = root1.y + spec.trunk_length_mm * spec.liver_start_fraction;
  double ytop = spec.second_tree ? root2.y - spec.trunk_length_mm * spec.liver_start_fraction : yhi + 2 * sp.y;
  for (std::size_t i = 0; i < tree_segments; ++i) {
    const auto &s = gt.segments[i];
    if (s.parent < 0) continue;
    const double lo = std::min(s.start.y, s.end.y) - s.radius_mm - 2 * sp.y;
    const double hi = std::max(s.start.y, s.end.y) + s.radius_mm + 2 * sp.y;
    if (s.tree == 1) ylo = std::min(ylo, lo);
    else ytop = std::max(ytop, hi);
  }
  gt.well_formed = ylo > root1.y + spec.trunk_radius_mm + sp.y &&
                   (!spec.second_tree || ytop < root2.y - spec.trunk_radius_mm - sp.y);
  yhi = ytop;
  xlo -= 2 * sp.x;
  xhi += 2 * sp.x;
  zlo -= 2 * sp.z;
  zhi += 2 * sp.z;
  gt.liver = BinaryMask(dm, sp);
  for (int z = 0; z < dm.nz; ++z)
    for (int y = 0; y < dm.ny; ++y)
      for (int x = 0; x < dm.nx; ++x) {
        const double px = x * sp.x, py = y * sp.y, pz = z * sp.z;
        if (px >= xlo && px <= xhi && py >= ylo && py <= yhi && pz >= zlo && pz <= zhi) gt.liver(x, y, z) = 1;
      }
  gt.couinaud = couinaud_boxes(gt.liver);
  gt.inference = corrupt_inference(gt, spec.dropout, spec.swap, spec.seed ^ 0x9E3779B97F4A7C15ULL);
  return gt;
}

LabelVolume corrupt_inference(const GroundTruth &truth, double dropout, double swap, std::uint64_t seed) {
  if (dropout < 0.0 || dropout >= 1.0 || swap < 0.0 || swap >= 1.0)
    throw DataError("corrupt_inference: fractions must lie in [0, 1)");
  LabelVolume inf = truth.labels;
  std::size_t total = 0;
  for (std::size_t i = 0; i < inf.size(); ++i) {
    if (!inf[i]) continue;
    ++total;
    if (truth.segments[static_cast<std::size_t>(truth.owner[i])].bridge) inf[i] = 0;
  }
  const auto keep = total - static_cast<std::size_t>(std::llround(dropout * static_cast<double>(total)));
  std::size_t current = 0;
  std::vector<std::size_t> labelled;
  for (std::size_t i = 0; i < inf.size(); ++i)
    if (inf[i]) {
      ++current;
      labelled.push_back(i);
    }

  Rng rng(seed);
  const int blob = std::max(1, truth.spec.blob_voxels);
  int misses = 0;
  while (current > keep) {
    if (misses > 64) {
      labelled.clear();
      for (std::size_t i = 0; i < inf.size(); ++i)
        if (inf[i]) labelled.push_back(i);
      misses = 0;
    }
    const auto seed_index = labelled[rng.below(labelled.size())];
    if (!inf[seed_index]) {
      ++misses;
      continue;
    }
    // Breadth-first blob inside the labelled voxels.
    auto budget = std::min<std::size_t>(static_cast<std::size_t>(blob), current - keep);
    std::deque<std::size_t> q{seed_index};
    inf[seed_index] = 0;
    --current;
    --budget;
    while (!q.empty() && budget > 0) {
      const auto v = inf.voxel(q.front());
      q.pop_front();
      for (const auto &o : offsets26()) {
        if (budget == 0) break;
        const Voxel w{v.x + o.x, v.y + o.y, v.z + o.z};
        if (!inf.contains(w)) continue;
        const auto wi = inf.index(w);
        if (!inf[wi]) continue;
        inf[wi] = 0;
        --current;
        --budget;
        q.push_back(wi);
      }
    }
  }

  std::vector<int> eligible;
  for (const auto &s : truth.segments)
    if (!s.bridge) eligible.push_back(s.id);
  const auto nswap = static_cast<std::size_t>(std::llround(swap * static_cast<double>(eligible.size())));
  for (std::size_t i = eligible.size(); i > 1; --i) std::swap(eligible[i - 1], eligible[rng.below(i)]);
  std::vector<char> flip(truth.segments.size(), 0);
  for (std::size_t i = 0; i < nswap; ++i) flip[static_cast<std::size_t>(eligible[i])] = 1;
  if (nswap > 0)
    for (std::size_t i = 0; i < inf.size(); ++i)
      if (inf[i] && flip[static_cast<std::size_t>(truth.owner[i])]) inf[i] = static_cast<std::uint8_t>(3 - inf[i]);
  return inf;
}

nlohmann::ordered_json spec_to_json(const SyntheticTreeSpec &s) {
  nlohmann::ordered_json j;
  j["seed"] = s.seed;
  j["depth"] = s.depth;
  j["first_split"] = s.first_split;
  j["trunk_length_mm"] = s.trunk_length_mm;
  j["length_decay"] = s.length_decay;
  j["trunk_radius_mm"] = s.trunk_radius_mm;
  j["radius_exponent"] = s.radius_exponent;
  j["branch_angle_deg"] = s.branch_angle_deg;
  j["angle_jitter_deg"] = s.angle_jitter_deg;
  j["dims"] = {s.dims.nx, s.dims.ny, s.dims.nz};
  j["spacing"] = {s.spacing.x, s.spacing.y, s.spacing.z};
  j["second_tree"] = s.second_tree;
  j["second_offset_mm"] = {s.second_offset_mm.x, s.second_offset_mm.y, s.second_offset_mm.z};
  j["bridges"] = s.bridges;
  j["bridge_max_angle_deg"] = s.bridge_max_angle_deg;
  j["bridge_max_length_mm"] = s.bridge_max_length_mm;
  j["bridge_min_entry_angle_deg"] = s.bridge_min_entry_angle_deg;
  j["dropout"] = s.dropout;
  j["swap"] = s.swap;
  j["blob_voxels"] = s.blob_voxels;
  j["clearance_voxels"] = s.clearance_voxels;
  j["liver_start_fraction"] = s.liver_start_fraction;
  return j;
}

SyntheticTreeSpec spec_from_json(const nlohmann::json &j) {
  SyntheticTreeSpec s;
  try {
    s.seed = j.value("seed", s.seed);
    s.depth = j.value("depth", s.depth);
    s.first_split = j.value("first_split", s.first_split);
    s.trunk_length_mm = j.value("trunk_length_mm", s.trunk_length_mm);
    s.length_decay = j.value("length_decay", s.length_decay);
    s.trunk_radius_mm = j.value("trunk_radius_mm", s.trunk_radius_mm);
    s.radius_exponent = j.value("radius_exponent", s.radius_exponent);
    s.branch_angle_deg = j.value("branch_angle_deg", s.branch_angle_deg);
    s.angle_jitter_deg = j.value("angle_jitter_deg", s.angle_jitter_deg);
    if (j.contains("dims")) {
      const auto &d = j.at("dims");
      s.dims = {d.at(0).get<int>(), d.at(1).get<int>(), d.at(2).get<int>()};
    }
    if (j.contains("spacing")) {
      const auto &d = j.at("spacing");
      s.spacing = {d.at(0).get<double>(), d.at(1).get<double>(), d.at(2).get<double>()};
    }
    s.second_tree = j.value("second_tree", s.second_tree);
    if (j.contains("second_offset_mm")) {
      const auto &d = j.at("second_offset_mm");
      s.second_offset_mm = {d.at(0).get<double>(), d.at(1).get<double>(), d.at(2).get<double>()};
    }
    s.bridges = j.value("bridges", s.bridges);
    s.bridge_max_angle_deg = j.value("bridge_max_angle_deg", s.bridge_max_angle_deg);
    s.bridge_max_length_mm = j.value("bridge_max_length_mm", s.bridge_max_length_mm);
    s.bridge_min_entry_angle_deg = j.value("bridge_min_entry_angle_deg", s.bridge_min_entry_angle_deg);
    s.dropout = j.value("dropout", s.dropout);
    s.swap = j.value("swap", s.swap);
    s.blob_voxels = j.value("blob_voxels", s.blob_voxels);
    s.clearance_voxels = j.value("clearance_voxels", s.clearance_voxels);
    s.liver_start_fraction = j.value("liver_start_fraction", s.liver_start_fraction);
  } catch (const nlohmann::json::exception &e) {
    throw DataError(std::string("synth spec: ") + e.what());
  }
  return s;
}

nlohmann::ordered_json truth_to_json(const GroundTruth &gt) {
  nlohmann::ordered_json j;
  j["spacing"] = {gt.spec.spacing.x, gt.spec.spacing.y, gt.spec.spacing.z};
  auto segs = nlohmann::ordered_json::array();
  for (const auto &s : gt.segments) {
    nlohmann::ordered_json o;
    o["id"] = s.id;
    o["tree"] = s.tree;
    o["parent"] = s.parent;
    o["depth"] = s.depth;
    o["start_mm"] = {s.start.x, s.start.y, s.start.z};
    o["end_mm"] = {s.end.x, s.end.y, s.end.z};
    o["radius_mm"] = s.radius_mm;
    o["length_mm"] = s.length_mm();
    o["planned_angle_deg"] = s.planned_angle_deg;
    o["children"] = s.children;
    o["bridge"] = s.bridge;
    segs.push_back(o);
  }
  j["segments"] = segs;
  j["bridges_made"] = gt.bridges_made;
  j["min_clearance_mm"] = gt.min_clearance_mm;
  j["well_separated"] = gt.well_separated;
  j["well_formed"] = gt.well_formed;
  return j;
}

} // namespace vesselkit
