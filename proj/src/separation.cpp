#include "vesselkit/separation.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <queue>

#include "vesselkit/skeleton.hpp"

namespace vesselkit {

namespace {

struct Box {
  Voxel lo, hi; // inclusive
  Dims dims() const { return {hi.x - lo.x + 1, hi.y - lo.y + 1, hi.z - lo.z + 1}; }
  Voxel to_local(const Voxel &v) const { return {v.x - lo.x, v.y - lo.y, v.z - lo.z}; }
  Voxel to_global(const Voxel &v) const { return {v.x + lo.x, v.y + lo.y, v.z + lo.z}; }
};

// Bounding box of `voxels` grown by `margin` (may extend past the grid).
template <typename It> Box bounding_box(It first, It last, int margin) {
  Box b{{std::numeric_limits<int>::max(), std::numeric_limits<int>::max(), std::numeric_limits<int>::max()},
        {std::numeric_limits<int>::min(), std::numeric_limits<int>::min(), std::numeric_limits<int>::min()}};
  for (auto it = first; it != last; ++it) {
    const Voxel &v = *it;
    b.lo = {std::min(b.lo.x, v.x), std::min(b.lo.y, v.y), std::min(b.lo.z, v.z)};
    b.hi = {std::max(b.hi.x, v.x), std::max(b.hi.y, v.y), std::max(b.hi.z, v.z)};
  }
  b.lo = {b.lo.x - margin, b.lo.y - margin, b.lo.z - margin};
  b.hi = {b.hi.x + margin, b.hi.y + margin, b.hi.z + margin};
  return b;
}

void shift_graph(VesselGraph &g, const Box &box, const Dims &dims) {
  g.dims = dims;
  for (auto &n : g.nodes) {
    n.voxel = box.to_global(n.voxel);
    for (auto &v : n.voxels) v = box.to_global(v);
  }
  for (auto &b : g.branches)
    for (auto &v : b.path) v = box.to_global(v);
}

std::vector<std::vector<int>> incidence(const VesselGraph &g) {
  std::vector<std::vector<int>> inc(g.nodes.size());
  for (const auto &b : g.branches) {
    inc[static_cast<std::size_t>(b.node_a)].push_back(b.id);
    if (b.node_b != b.node_a) inc[static_cast<std::size_t>(b.node_b)].push_back(b.id);
  }
  return inc;
}

// Chord of `b` pointing away from `from_node`; zero for self-loops.
Vec3 chord_from(const Branch &b, int from_node, const Spacing &sp) {
  if (b.node_a == b.node_b) return {};
  const Vec3 c = to_mm(b.path.back(), sp) - to_mm(b.path.front(), sp);
  return b.node_a == from_node ? c : c * -1.0;
}

// Cuts every branch where its path moves between tree and component voxels,
// adding a node at each cut. Tree runs shorter than `min_run_mm` stay with
// the component: they are mostly the component's own path running into a
// tube. Returns the class of each resulting branch: 0 on the component,
// otherwise the tree label its voxels carry.
std::vector<std::uint8_t> split_by_class(VesselGraph &g, const LabelVolume &region, std::uint8_t component,
                                         double min_run_mm) {
  std::vector<Branch> pieces;
  std::vector<std::uint8_t> classes;
  for (const auto &b : g.branches) {
    const auto n = b.path.size();
    std::vector<std::uint8_t> cls(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto r = region.at(b.path[i]);
      cls[i] = r == component ? 0 : r;
    }
    if (std::find(cls.begin(), cls.end(), 0) != cls.end())
      for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && cls[j + 1] == cls[i]) ++j;
        const std::vector<Voxel> run(b.path.begin() + static_cast<std::ptrdiff_t>(i),
                                     b.path.begin() + static_cast<std::ptrdiff_t>(j) + 1);
        if (cls[i] && path_length_mm(run, g.spacing) < min_run_mm) std::fill(cls.begin() + i, cls.begin() + j + 1, 0);
        i = j + 1;
      }
    std::size_t start = 0;
    int from = b.node_a;
    for (std::size_t i = 1; i <= n; ++i) {
      const bool last = i == n;
      if (!last && (cls[i] == cls[i - 1] || i + 1 == n)) continue;
      Branch piece;
      piece.id = static_cast<int>(pieces.size());
      piece.node_a = from;
      if (last) {
        piece.node_b = b.node_b;
        piece.path.assign(b.path.begin() + static_cast<std::ptrdiff_t>(start), b.path.end());
      } else {
        Node cut;
        cut.id = static_cast<int>(g.nodes.size());
        cut.voxel = b.path[i];
        cut.voxels = {b.path[i]};
        cut.degree = 2;
        cut.kind = NodeKind::Junction;
        g.nodes.push_back(cut);
        piece.node_b = cut.id;
        piece.path.assign(b.path.begin() + static_cast<std::ptrdiff_t>(start),
                          b.path.begin() + static_cast<std::ptrdiff_t>(i) + 1);
        from = cut.id;
      }
      piece.length_mm = path_length_mm(piece.path, g.spacing);
      classes.push_back(cls[start]);
      pieces.push_back(std::move(piece));
      start = i;
    }
  }
  g.branches = std::move(pieces);
  return classes;
}

std::size_t face_count(const LabelVolume &v, const Voxel &p, std::uint8_t value) {
  std::size_t n = 0;
  for (const auto &o : offsets6()) n += v.get(p.x + o.x, p.y + o.y, p.z + o.z) == value ? 1 : 0;
  return n;
}

struct Entry {
  double distance;
  double angle; // NaN sorts as 0
  std::uint8_t tree;
  int branch;
  int entry_node;
  Vec3 upstream; // chord the angle was measured against

  double angle_key() const { return std::isnan(angle) ? 0.0 : angle; }
  // Priority: nearer first, then smaller angle, then portal, then lower branch id.
  bool operator>(const Entry &o) const {
    if (distance != o.distance) return distance > o.distance;
    if (angle_key() != o.angle_key()) return angle_key() > o.angle_key();
    if (tree != o.tree) return tree > o.tree;
    return branch > o.branch;
  }
};

} // namespace

SeparationState paste_inference(const BinaryMask &original, const LabelVolume &inferred, int dilate_radius) {
  require_same_grid(original, inferred, "paste_inference");
  if (dilate_radius < 0) throw DataError("paste_inference: dilation radius must be nonnegative");
  BinaryMask portal(inferred.dims(), inferred.spacing()), hepatic(inferred.dims(), inferred.spacing());
  for (std::size_t i = 0; i < inferred.size(); ++i) {
    if (inferred[i] > label::unresolved)
      throw DataError("paste_inference: inferred labels must lie in 0-3, found " + std::to_string(inferred[i]));
    portal[i] = inferred[i] == label::portal ? 1 : 0;
    hepatic[i] = inferred[i] == label::hepatic ? 1 : 0;
  }
  const auto dp = dilate_radius > 0 ? dilate(portal, dilate_radius, 26) : portal;
  const auto dh = dilate_radius > 0 ? dilate(hepatic, dilate_radius, 26) : hepatic;

  SeparationState st;
  st.original = original;
  st.labels = LabelVolume(original.dims(), original.spacing(), 0);
  std::vector<std::size_t> both;
  for (std::size_t i = 0; i < original.size(); ++i) {
    if (!original[i]) continue;
    if (dp[i] && dh[i]) both.push_back(i);
    else if (dp[i]) st.labels[i] = label::portal;
    else if (dh[i]) st.labels[i] = label::hepatic;
  }
  if (!both.empty()) {
    const auto distp = distance_transform(portal);
    const auto disth = distance_transform(hepatic);
    for (const auto i : both) {
      std::uint8_t l = label::portal;
      if (disth[i] < distp[i]) l = label::hepatic;
      else if (disth[i] == distp[i]) {
        const auto v = inferred.voxel(i);
        if (face_count(inferred, v, label::hepatic) > face_count(inferred, v, label::portal)) l = label::hepatic;
      }
      st.labels[i] = l;
    }
  }
  return st;
}

TriageCounts triage_components(SeparationState &st, const SeparationParams &params) {
  TriageCounts counts;
  st.conflict_components.clear();
  st.conflicted = 0;
  BinaryMask open(st.original.dims(), st.original.spacing());
  for (std::size_t i = 0; i < open.size(); ++i) open[i] = st.original[i] && st.labels[i] == 0 ? 1 : 0;
  const auto cc = connected_components(open, 26);
  if (cc.count() == 0) return counts;

  const auto distp = distance_transform(mask_of(st.labels, label::portal));
  const auto disth = distance_transform(mask_of(st.labels, label::hepatic));
  std::vector<ConflictComponent> comps(static_cast<std::size_t>(cc.count()));
  for (std::size_t i = 0; i < open.size(); ++i) {
    const auto id = cc.ids[i];
    if (id <= 0) continue;
    auto &c = comps[static_cast<std::size_t>(id - 1)];
    c.voxels.push_back(i);
    c.portal_distance_mm = std::min(c.portal_distance_mm, distp[i]);
    c.hepatic_distance_mm = std::min(c.hepatic_distance_mm, disth[i]);
    const auto v = open.voxel(i);
    bool tp = false, th = false;
    for (const auto &o : offsets26()) {
      const auto l = st.labels.get(v.x + o.x, v.y + o.y, v.z + o.z);
      tp = tp || l == label::portal;
      th = th || l == label::hepatic;
    }
    c.portal_contacts += tp ? 1 : 0;
    c.hepatic_contacts += th ? 1 : 0;
  }

  const auto min_cc = static_cast<std::size_t>(std::max(0, params.min_cc));
  for (std::size_t k = 0; k < comps.size(); ++k) {
    auto &c = comps[k];
    c.id = static_cast<int>(k) + 1;
    c.touches_portal = c.portal_contacts > 0;
    c.touches_hepatic = c.hepatic_contacts > 0;
    std::uint8_t assign = 0;
    if (!c.touches_portal && !c.touches_hepatic && c.size() < min_cc) {
      assign = label::unresolved;
      ++counts.dropped;
    } else if (c.portal_distance_mm > params.max_dist_mm && c.hepatic_distance_mm > params.max_dist_mm) {
      assign = label::unresolved;
      ++counts.dropped;
    } else if (c.touches_portal && c.touches_hepatic) {
      st.conflicted += c.size();
      ++counts.conflicts;
      st.conflict_components.push_back(std::move(c));
      continue;
    } else {
      if (c.touches_portal) assign = label::portal;
      else if (c.touches_hepatic) assign = label::hepatic;
      else assign = c.hepatic_distance_mm < c.portal_distance_mm ? label::hepatic : label::portal;
      ++counts.absorbed;
    }
    for (const auto i : c.voxels) st.labels[i] = assign;
  }
  return counts;
}

Arbitration arbitrate_conflict(const ConflictComponent &comp, const SeparationState &st, double angle_deg_max,
                               int context_margin) {
  const auto &labels = st.labels;
  const auto &sp = labels.spacing();
  Arbitration out;
  out.voxels = comp.voxels;
  out.labels.assign(comp.voxels.size(), 0);
  if (comp.voxels.empty()) return out;

  std::vector<Voxel> vox;
  vox.reserve(comp.voxels.size());
  for (const auto i : comp.voxels) vox.push_back(labels.voxel(i));
  const auto inner = bounding_box(vox.begin(), vox.end(), std::max(0, context_margin));
  const auto box = bounding_box(&inner.lo, &inner.hi + 1, 1);

  // Region: the component plus tree voxels inside the context box. `region`
  // holds 1/2 for tree voxels and 4 for component voxels.
  constexpr std::uint8_t kComponent = 4;
  LabelVolume region(box.dims(), sp);
  for (int z = std::max(0, inner.lo.z); z <= std::min(labels.dims().nz - 1, inner.hi.z); ++z)
    for (int y = std::max(0, inner.lo.y); y <= std::min(labels.dims().ny - 1, inner.hi.y); ++y)
      for (int x = std::max(0, inner.lo.x); x <= std::min(labels.dims().nx - 1, inner.hi.x); ++x) {
        const auto l = labels(x, y, z);
        if (l == label::portal || l == label::hepatic) region.at(box.to_local({x, y, z})) = l;
      }
  for (const auto &v : vox) region.at(box.to_local(v)) = kComponent;

  const auto skeleton = skeletonize_lee(mask_nonzero(region)).mask;
  bool touches_component = false;
  for (const auto &v : vox) touches_component = touches_component || skeleton.at(box.to_local(v));
  if (!touches_component) {
    out.lump = true;
    const auto l = comp.hepatic_contacts > comp.portal_contacts ? label::hepatic : label::portal;
    std::fill(out.labels.begin(), out.labels.end(), l);
    return out;
  }
  out.graph = skeleton_to_graph(skeleton);
  auto &g = out.graph;

  // Branch pieces lying on tree voxels are fixed to that tree.
  const auto classes = split_by_class(g, region, kComponent, kMinFixedRunMm);
  const std::uint8_t trees[2] = {label::portal, label::hepatic};
  std::vector<std::uint8_t> assigned(g.branches.size(), 0);
  out.decisions.resize(g.branches.size());
  for (const auto &b : g.branches) {
    auto &d = out.decisions[static_cast<std::size_t>(b.id)];
    d.branch = b.id;
    d.angle_deg = std::nan("");
    d.label = classes[static_cast<std::size_t>(b.id)];
    d.fixed = d.label != 0;
    assigned[static_cast<std::size_t>(b.id)] = d.label;
  }

  std::vector<double> branch_dist[2];
  for (int t = 0; t < 2; ++t) {
    const auto dist = distance_transform(mask_of(region, trees[t]));
    branch_dist[t].assign(g.branches.size(), kInfDistance);
    for (const auto &b : g.branches)
      for (const auto &v : b.path)
        branch_dist[t][static_cast<std::size_t>(b.id)] = std::min(branch_dist[t][static_cast<std::size_t>(b.id)], dist.at(v));
  }

  const auto inc = incidence(g);
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> queue;
  // Offers the unassigned branches at `node` to tree `t`, measured against
  // `upstream`, the chord of the branch arriving at `node`.
  auto offer = [&](std::uint8_t t, int node, int skip, const Vec3 &upstream) {
    for (const int bid : inc[static_cast<std::size_t>(node)]) {
      if (bid == skip || assigned[static_cast<std::size_t>(bid)]) continue;
      const double a = angle_deg(chord_from(g.branch(bid), node, sp), upstream);
      if (!std::isnan(a) && !(a < angle_deg_max)) continue;
      queue.push({branch_dist[t == label::portal ? 0 : 1][static_cast<std::size_t>(bid)], a, t, bid, node, upstream});
    }
  };
  for (const auto &b : g.branches) {
    if (!out.decisions[static_cast<std::size_t>(b.id)].fixed) continue;
    for (const int node : {b.node_a, b.node_b}) {
      const int other = node == b.node_a ? b.node_b : b.node_a;
      offer(assigned[static_cast<std::size_t>(b.id)], node, b.id, chord_from(b, other, sp));
    }
  }
  while (!queue.empty()) {
    const auto e = queue.top();
    queue.pop();
    auto &slot = assigned[static_cast<std::size_t>(e.branch)];
    if (slot) continue;
    slot = e.tree;
    out.visit_order.push_back(e.branch);
    auto &d = out.decisions[static_cast<std::size_t>(e.branch)];
    d.label = e.tree;
    d.distance_mm = e.distance;
    d.angle_deg = e.angle;
    const auto &b = g.branch(e.branch);
    const int exit = b.node_a == e.entry_node ? b.node_b : b.node_a;
    // Short pieces pass the upstream direction on; their own chord is noise.
    Vec3 chord = chord_from(b, e.entry_node, sp);
    if (chord.norm() < kMinFixedRunMm) chord = e.upstream;
    offer(e.tree, exit, e.branch, chord);
  }

  // Skeleton voxel labels: tree voxels keep their tree, component voxels take
  // the label of the labelled branch holding most component voxels among
  // those through them (ties: attachment order, then fixed pieces).
  Grid<std::int16_t> site(box.dims(), sp, -1);
  for (std::size_t i = 0; i < site.size(); ++i)
    if (skeleton[i] && region[i] != kComponent) site[i] = region[i];
  std::vector<int> order = out.visit_order;
  for (const auto &b : g.branches)
    if (out.decisions[static_cast<std::size_t>(b.id)].fixed) order.push_back(b.id);
  std::vector<std::size_t> inside(g.branches.size(), 0);
  for (const auto &b : g.branches)
    for (const auto &v : b.path) inside[static_cast<std::size_t>(b.id)] += region.at(v) == kComponent ? 1 : 0;
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return inside[static_cast<std::size_t>(a)] > inside[static_cast<std::size_t>(b)];
  });
  for (const int bid : order)
    for (const auto &v : g.branch(bid).path) {
      auto &s = site.at(v);
      if (s < 0) s = assigned[static_cast<std::size_t>(bid)];
    }
  for (const auto &n : g.nodes) {
    std::int16_t l = 0;
    for (const int bid : order)
      if (g.branch(bid).node_a == n.id || g.branch(bid).node_b == n.id) {
        l = assigned[static_cast<std::size_t>(bid)];
        break;
      }
    for (const auto &v : n.voxels) {
      auto &s = site.at(v);
      if (s < 0) s = l;
    }
  }
  BinaryMask sites(box.dims(), sp);
  for (std::size_t i = 0; i < site.size(); ++i) {
    if (skeleton[i] && site[i] < 0) site[i] = 0;
    sites[i] = skeleton[i];
  }
  const auto ft = feature_transform(sites);
  for (std::size_t k = 0; k < vox.size(); ++k) {
    const auto near = ft.nearest.at(box.to_local(vox[k]));
    out.labels[k] = static_cast<std::uint8_t>(site[static_cast<std::size_t>(near)]);
  }
  shift_graph(g, box, labels.dims());
  return out;
}

SeparationResult separate(const BinaryMask &original, const LabelVolume &inferred, const SeparationParams &params) {
  if (params.max_iters < 1) throw DataError("separate: max_iters must be at least 1");
  if (!(params.angle_deg > 0.0)) throw DataError("separate: angle must be positive");
  auto st = paste_inference(original, inferred, params.dilate_radius);
  SeparationReport rep;
  rep.params = params;
  rep.stop_reason = "max_iters";
  std::size_t previous = std::numeric_limits<std::size_t>::max();
  for (int iter = 1; iter <= params.max_iters; ++iter) {
    st.iteration = iter;
    const auto counts = triage_components(st, params);
    rep.iterations = iter;
    rep.absorbed += counts.absorbed;
    rep.dropped += counts.dropped;
    rep.conflicted_history.push_back(st.conflicted);
    if (st.conflicted == 0) {
      rep.stop_reason = "resolved";
      break;
    }
    if (st.conflicted >= previous) {
      rep.stop_reason = "no_progress";
      break;
    }
    previous = st.conflicted;

    const auto n = static_cast<std::ptrdiff_t>(st.conflict_components.size());
    std::vector<Arbitration> results(st.conflict_components.size());
    std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t k = 0; k < n; ++k) {
      try {
        results[static_cast<std::size_t>(k)] =
            arbitrate_conflict(st.conflict_components[static_cast<std::size_t>(k)], st, params.angle_deg);
      } catch (...) {
#pragma omp critical
        if (!failure) failure = std::current_exception();
      }
    }
    if (failure) std::rethrow_exception(failure);
    // Components are disjoint, so the merge order does not matter.
    for (const auto &r : results)
      for (std::size_t k = 0; k < r.voxels.size(); ++k) st.labels[r.voxels[k]] = r.labels[k];
    rep.arbitrated += static_cast<int>(results.size());
  }

  for (std::size_t i = 0; i < st.labels.size(); ++i)
    if (st.original[i] && st.labels[i] == 0) st.labels[i] = label::unresolved;
  for (std::size_t i = 0; i < st.labels.size(); ++i) {
    rep.portal += st.labels[i] == label::portal ? 1 : 0;
    rep.hepatic += st.labels[i] == label::hepatic ? 1 : 0;
    rep.unresolved += st.labels[i] == label::unresolved ? 1 : 0;
  }
  return {std::move(st.labels), std::move(rep)};
}

nlohmann::ordered_json report_to_json(const SeparationReport &r) {
  nlohmann::ordered_json j;
  j["iterations"] = r.iterations;
  j["voxels"] = {{"portal", r.portal}, {"hepatic", r.hepatic}, {"unresolved", r.unresolved}};
  j["components"] = {{"absorbed", r.absorbed}, {"arbitrated", r.arbitrated}, {"dropped", r.dropped}};
  const auto total = r.portal + r.hepatic + r.unresolved;
  j["unresolved_fraction"] = total ? static_cast<double>(r.unresolved) / static_cast<double>(total) : 0.0;
  j["conflicted_history"] = r.conflicted_history;
  j["stop_reason"] = r.stop_reason;
  j["params"] = {{"dilate_radius", r.params.dilate_radius},
                 {"min_cc", r.params.min_cc},
                 {"max_dist_mm", r.params.max_dist_mm},
                 {"angle_deg", r.params.angle_deg},
                 {"max_iters", r.params.max_iters}};
  return j;
}

} // namespace vesselkit
