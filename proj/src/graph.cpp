#include "vesselkit/graph.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <numeric>
#include <set>

#include "vesselkit/kernels.hpp"

namespace vesselkit {

namespace {

int skeleton_degree(const BinaryMask &skel, const Voxel &v) {
  int d = 0;
  for (const auto &o : offsets26()) d += skel.get(v.x + o.x, v.y + o.y, v.z + o.z) ? 1 : 0;
  return d;
}

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

void reverse_branch(Branch &b) {
  std::swap(b.node_a, b.node_b);
  std::reverse(b.path.begin(), b.path.end());
  std::reverse(b.radius_samples.begin(), b.radius_samples.end());
}

// Distance to the nearest background voxel, treating outside the grid as background.
DistanceField inner_distance(const BinaryMask &mask) {
  const auto [nx, ny, nz] = mask.dims();
  BinaryMask padded_bg({nx + 2, ny + 2, nz + 2}, mask.spacing(), 1);
  for (int z = 0; z < nz; ++z)
    for (int y = 0; y < ny; ++y)
      for (int x = 0; x < nx; ++x)
        if (mask(x, y, z)) padded_bg(x + 1, y + 1, z + 1) = 0;
  const auto d = distance_transform(padded_bg);
  DistanceField out(mask.dims(), mask.spacing());
  for (int z = 0; z < nz; ++z)
    for (int y = 0; y < ny; ++y)
      for (int x = 0; x < nx; ++x) out(x, y, z) = d(x + 1, y + 1, z + 1);
  return out;
}

struct SmallUnionFind {
  std::vector<int> parent;
  explicit SmallUnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  }
  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (a < b) parent[b] = a;
    else parent[a] = b;
    return true;
  }
};

} // namespace

double path_length_mm(const std::vector<Voxel> &path, const Spacing &spacing) {
  double len = 0.0;
  for (std::size_t i = 1; i < path.size(); ++i) len += voxel_distance(path[i - 1], path[i], spacing);
  return len;
}

std::optional<int> VesselGraph::root_branch() const {
  for (const auto &b : branches)
    if (b.parent < 0) return b.id;
  return std::nullopt;
}

std::vector<int> VesselGraph::preorder() const {
  std::vector<int> order;
  std::vector<int> stack;
  for (auto it = branches.rbegin(); it != branches.rend(); ++it)
    if (it->parent < 0) stack.push_back(it->id);
  while (!stack.empty()) {
    const int b = stack.back();
    stack.pop_back();
    order.push_back(b);
    const auto &ch = branch(b).children;
    for (auto it = ch.rbegin(); it != ch.rend(); ++it) stack.push_back(*it);
  }
  return order;
}

VesselGraph skeleton_to_graph(const BinaryMask &skel) {
  VesselGraph g;
  g.dims = skel.dims();
  g.spacing = skel.spacing();

  const auto fg = skel.indices();
  Grid<std::uint8_t> degree(skel.dims(), skel.spacing(), 0);
  BinaryMask junction(skel.dims(), skel.spacing());
  for (const auto i : fg) {
    const int d = skeleton_degree(skel, skel.voxel(i));
    degree[i] = static_cast<std::uint8_t>(d);
    if (d >= 3) junction[i] = 1;
  }
  const auto clusters = connected_components(junction, 26);

  Grid<std::int32_t> node_of(skel.dims(), skel.spacing(), -1);
  std::vector<int> cluster_node(static_cast<std::size_t>(clusters.count()) + 1, -1);
  for (const auto i : fg) {
    if (degree[i] == 2) continue;
    if (degree[i] >= 3) {
      const int c = clusters.ids[i];
      if (cluster_node[c] >= 0) {
        g.nodes[cluster_node[c]].voxels.push_back(skel.voxel(i));
        node_of[i] = cluster_node[c];
        continue;
      }
      cluster_node[c] = static_cast<int>(g.nodes.size());
    }
    Node n;
    n.id = static_cast<int>(g.nodes.size());
    n.voxel = skel.voxel(i);
    n.voxels = {n.voxel};
    n.kind = degree[i] >= 3 ? NodeKind::Junction : NodeKind::Endpoint;
    node_of[i] = n.id;
    g.nodes.push_back(std::move(n));
  }

  // Representative voxel of a lump: nearest to the centroid (mm), first in scan order on ties.
  for (auto &n : g.nodes) {
    if (n.voxels.size() < 2) continue;
    Vec3 c;
    for (const auto &v : n.voxels) c = c + to_mm(v, g.spacing);
    c = c * (1.0 / static_cast<double>(n.voxels.size()));
    double best = kInfDistance;
    for (const auto &v : n.voxels) {
      const double d = (to_mm(v, g.spacing) - c).norm();
      if (d < best) {
        best = d;
        n.voxel = v;
      }
    }
  }

  BinaryMask visited(skel.dims(), skel.spacing());
  std::set<std::pair<std::size_t, std::size_t>> direct;

  auto next_along = [&](const Voxel &cur, const Voxel &prev) -> std::optional<Voxel> {
    for (const auto &o : offsets26()) {
      const Voxel w{cur.x + o.x, cur.y + o.y, cur.z + o.z};
      if (w != prev && skel.contains(w) && skel(w.x, w.y, w.z)) return w;
    }
    return std::nullopt;
  };

  auto add_branch = [&](int a, int b, std::vector<Voxel> path) {
    Branch br;
    br.id = static_cast<int>(g.branches.size());
    br.node_a = a;
    br.node_b = b;
    br.path = std::move(path);
    br.length_mm = path_length_mm(br.path, g.spacing);
    g.nodes[a].degree++;
    g.nodes[b].degree++;
    g.branches.push_back(std::move(br));
  };

  const auto node_count = g.nodes.size();
  for (std::size_t nid = 0; nid < node_count; ++nid) {
    const auto voxels = g.nodes[nid].voxels;
    for (const auto &v : voxels) {
      for (const auto &o : offsets26()) {
        const Voxel w{v.x + o.x, v.y + o.y, v.z + o.z};
        if (!skel.contains(w) || !skel(w.x, w.y, w.z)) continue;
        const auto wi = skel.index(w);
        const int wn = node_of[wi];
        if (wn >= 0) {
          if (wn == static_cast<int>(nid)) continue;
          const auto vi = skel.index(v);
          const std::pair<std::size_t, std::size_t> key{std::min(vi, wi), std::max(vi, wi)};
          if (direct.insert(key).second) add_branch(static_cast<int>(nid), wn, {v, w});
          continue;
        }
        if (visited[wi]) continue;
        std::vector<Voxel> path{v, w};
        visited[wi] = 1;
        Voxel prev = v, cur = w;
        while (true) {
          const auto nxt = next_along(cur, prev);
          if (!nxt) throw InvariantError("skeleton_to_graph: chain voxel lost its second neighbour");
          const auto ni = skel.index(*nxt);
          path.push_back(*nxt);
          if (node_of[ni] >= 0) {
            add_branch(static_cast<int>(nid), node_of[ni], std::move(path));
            break;
          }
          if (visited[ni]) throw InvariantError("skeleton_to_graph: chain re-entered a visited voxel");
          visited[ni] = 1;
          prev = cur;
          cur = *nxt;
        }
      }
    }
  }

  // Remaining degree-2 voxels form node-free cycles.
  for (const auto i : fg) {
    if (degree[i] != 2 || visited[i]) continue;
    Node n;
    n.id = static_cast<int>(g.nodes.size());
    n.voxel = skel.voxel(i);
    n.voxels = {n.voxel};
    n.kind = NodeKind::Junction;
    node_of[i] = n.id;
    g.nodes.push_back(n);
    visited[i] = 1;
    std::vector<Voxel> path{n.voxel};
    Voxel prev = n.voxel;
    auto first = next_along(n.voxel, Voxel{-2, -2, -2});
    Voxel cur = *first;
    while (cur != n.voxel) {
      path.push_back(cur);
      visited[skel.index(cur)] = 1;
      const auto nxt = next_along(cur, prev);
      if (!nxt) throw InvariantError("skeleton_to_graph: broken cycle");
      prev = cur;
      cur = *nxt;
    }
    path.push_back(n.voxel);
    add_branch(n.id, n.id, std::move(path));
  }
  return g;
}

void refresh_geometry(Branch &b, const Spacing &spacing) {
  b.length_mm = path_length_mm(b.path, spacing);
  if (b.radius_samples.empty()) return;
  b.radius_mm = median_of(b.radius_samples);
  b.radius_mean_mm = std::accumulate(b.radius_samples.begin(), b.radius_samples.end(), 0.0) /
                     static_cast<double>(b.radius_samples.size());
  b.radius_max_mm = *std::max_element(b.radius_samples.begin(), b.radius_samples.end());
}

void attach_geometry(VesselGraph &g, const BinaryMask &mask) {
  if (mask.dims() != g.dims || !(mask.spacing() == g.spacing))
    throw GridMismatch("attach_geometry: mask grid differs from graph grid");
  const auto inner = inner_distance(mask);
  auto sample = [&](const Voxel &v, bool &outside) {
    if (!mask.at(v)) {
      outside = true;
      return 0.0;
    }
    return inner.at(v);
  };
  for (auto &n : g.nodes) {
    bool outside = false;
    n.radius_samples.clear();
    for (const auto &v : n.voxels) n.radius_samples.push_back(sample(v, outside));
  }
  for (auto &b : g.branches) {
    b.leaves_mask = false;
    b.radius_samples.clear();
    for (const auto &v : b.path) b.radius_samples.push_back(sample(v, b.leaves_mask));
    refresh_geometry(b, g.spacing);
  }
}

BranchGeometry branch_geometry(const Branch &b, const Spacing &spacing) {
  BranchGeometry out;
  Branch copy = b;
  refresh_geometry(copy, spacing);
  out.length_mm = copy.length_mm;
  out.radius_mm = copy.radius_mm;
  out.radius_mean_mm = copy.radius_mean_mm;
  out.radius_max_mm = copy.radius_max_mm;
  out.leaves_mask = b.leaves_mask;
  if (!b.path.empty()) {
    out.chord = to_mm(b.path.back(), spacing) - to_mm(b.path.front(), spacing);
    out.bresenham_voxels = bresenham3d(b.path.front(), b.path.back());
  }
  return out;
}

std::vector<Voxel> bresenham3d(const Voxel &a, const Voxel &b) {
  const int dx = std::abs(b.x - a.x), dy = std::abs(b.y - a.y), dz = std::abs(b.z - a.z);
  const int sx = b.x >= a.x ? 1 : -1, sy = b.y >= a.y ? 1 : -1, sz = b.z >= a.z ? 1 : -1;
  std::vector<Voxel> out;
  Voxel p = a;
  out.push_back(p);
  // Drive along the dominant axis; the other two carry integer error terms.
  auto drive = [&](int &major, int dmajor, int smajor, int &m1, int d1, int s1, int &m2, int d2, int s2) {
    int e1 = 2 * d1 - dmajor, e2 = 2 * d2 - dmajor;
    for (int i = 0; i < dmajor; ++i) {
      if (e1 > 0) {
        m1 += s1;
        e1 -= 2 * dmajor;
      }
      if (e2 > 0) {
        m2 += s2;
        e2 -= 2 * dmajor;
      }
      e1 += 2 * d1;
      e2 += 2 * d2;
      major += smajor;
      out.push_back(p);
    }
  };
  if (dx >= dy && dx >= dz) drive(p.x, dx, sx, p.y, dy, sy, p.z, dz, sz);
  else if (dy >= dx && dy >= dz) drive(p.y, dy, sy, p.x, dx, sx, p.z, dz, sz);
  else drive(p.z, dz, sz, p.x, dx, sx, p.y, dy, sy);
  return out;
}

std::vector<int> graph_components(const VesselGraph &g) {
  SmallUnionFind uf(g.nodes.size());
  for (const auto &b : g.branches) uf.unite(b.node_a, b.node_b);
  std::vector<int> comp(g.nodes.size(), -1);
  std::map<int, int> index;
  for (std::size_t n = 0; n < g.nodes.size(); ++n) {
    const int r = uf.find(static_cast<int>(n));
    auto it = index.find(r);
    if (it == index.end()) it = index.emplace(r, static_cast<int>(index.size())).first;
    comp[n] = it->second;
  }
  return comp;
}

namespace {

struct LiverFields {
  DistanceField to_liver; // outside voxels: distance to nearest liver voxel
  DistanceField inside;   // inside voxels: distance to nearest non-liver voxel
};

LiverFields liver_fields(const BinaryMask &liver) {
  return {distance_transform(liver), inner_distance(liver)};
}

RootChoice root_for(const VesselGraph &g, const BinaryMask &liver, const LiverFields &f,
                    const std::vector<int> &comp, int component) {
  RootChoice best;
  best.component = component;
  RootChoice fallback = best;
  fallback.fallback = true;
  bool any_endpoint = false;
  for (const auto &n : g.nodes) {
    if (comp[n.id] != component || n.degree > 1) continue;
    any_endpoint = true;
    if (!liver.at(n.voxel)) {
      const double d = f.to_liver.at(n.voxel);
      if (best.node < 0 || d > best.distance_mm) {
        best.node = n.id;
        best.distance_mm = d;
      }
    } else {
      const double d = f.inside.at(n.voxel);
      if (fallback.node < 0 || d > fallback.distance_mm) {
        fallback.node = n.id;
        fallback.distance_mm = d;
      }
    }
  }
  if (!any_endpoint)
    throw CyclicComponent("find_roots: component " + std::to_string(component) +
                          " has no endpoint; break its cycles first");
  return best.node >= 0 ? best : fallback;
}

} // namespace

RootChoice find_root(const VesselGraph &g, const BinaryMask &liver, int component) {
  if (liver.dims() != g.dims) throw GridMismatch("find_roots: liver grid differs from graph grid");
  return root_for(g, liver, liver_fields(liver), graph_components(g), component);
}

std::vector<RootChoice> find_roots(const VesselGraph &g, const BinaryMask &liver) {
  if (liver.dims() != g.dims) throw GridMismatch("find_roots: liver grid differs from graph grid");
  const auto comp = graph_components(g);
  const int ncomp = comp.empty() ? 0 : *std::max_element(comp.begin(), comp.end()) + 1;
  const auto fields = liver_fields(liver);
  std::vector<RootChoice> out;
  for (int c = 0; c < ncomp; ++c) out.push_back(root_for(g, liver, fields, comp, c));
  return out;
}

namespace {

// Shortest (mm) 26-path between two voxels of one node's voxel set; excludes `from`, includes `to`.
std::vector<std::size_t> lump_path(const Node &n, const Voxel &from, const Voxel &to, const Spacing &spacing) {
  const auto nv = n.voxels.size();
  auto slot_of = [&](const Voxel &v) {
    const auto it = std::find(n.voxels.begin(), n.voxels.end(), v);
    if (it == n.voxels.end()) throw InvariantError("branch ends do not lie in their shared node");
    return static_cast<std::size_t>(it - n.voxels.begin());
  };
  const auto s = slot_of(from), t = slot_of(to);
  std::vector<double> dist(nv, kInfDistance);
  std::vector<int> prev(nv, -1);
  std::vector<char> done(nv, 0);
  dist[s] = 0.0;
  for (std::size_t round = 0; round < nv; ++round) {
    std::size_t c = nv;
    for (std::size_t j = 0; j < nv; ++j)
      if (!done[j] && dist[j] < kInfDistance && (c == nv || dist[j] < dist[c])) c = j;
    if (c == nv || c == t) break;
    done[c] = 1;
    for (std::size_t j = 0; j < nv; ++j) {
      if (done[j] || !adjacent26(n.voxels[c], n.voxels[j])) continue;
      const double d = dist[c] + voxel_distance(n.voxels[c], n.voxels[j], spacing);
      if (d < dist[j]) {
        dist[j] = d;
        prev[j] = static_cast<int>(c);
      }
    }
  }
  std::vector<std::size_t> out;
  for (auto c = t; c != s; c = static_cast<std::size_t>(prev[c])) {
    if (prev[c] < 0) throw InvariantError("node voxels are not 26-connected");
    out.push_back(c);
  }
  std::reverse(out.begin(), out.end());
  return out;
}

// Appends y (which starts at `joint`) to x (which ends there).
void append_branch(Branch &x, const Branch &y, const Node &joint, const Spacing &spacing) {
  bool samples = !x.radius_samples.empty() && !y.radius_samples.empty();
  std::size_t skip = 0;
  if (x.path.back() == y.path.front()) {
    skip = 1;
  } else {
    samples = samples && joint.radius_samples.size() == joint.voxels.size();
    const auto link = lump_path(joint, x.path.back(), y.path.front(), spacing);
    for (std::size_t k = 0; k + 1 < link.size(); ++k) {
      x.path.push_back(joint.voxels[link[k]]);
      if (samples) x.radius_samples.push_back(joint.radius_samples[link[k]]);
    }
  }
  x.path.insert(x.path.end(), y.path.begin() + static_cast<std::ptrdiff_t>(skip), y.path.end());
  if (samples)
    x.radius_samples.insert(x.radius_samples.end(), y.radius_samples.begin() + static_cast<std::ptrdiff_t>(skip),
                            y.radius_samples.end());
  else x.radius_samples.clear();
  x.node_b = y.node_b;
  x.leaves_mask = x.leaves_mask || y.leaves_mask;
  refresh_geometry(x, spacing);
}

// Mutable working copy for orient_and_fuse.
struct FuseState {
  VesselGraph g;
  std::vector<char> node_alive, branch_alive;

  std::vector<int> incident(int node) const {
    std::vector<int> out;
    for (const auto &b : g.branches) {
      if (!branch_alive[b.id]) continue;
      if (b.node_a == node) out.push_back(b.id);
      if (b.node_b == node) out.push_back(b.id);
    }
    return out;
  }

  void merge_at(int node, int b1, int b2) {
    auto &x = g.branches[b1];
    auto y = g.branches[b2];
    if (x.node_b != node) reverse_branch(x);
    if (y.node_a != node) reverse_branch(y);
    append_branch(x, y, g.nodes[node], g.spacing);
    branch_alive[b2] = 0;
    node_alive[node] = 0;
  }
};

// Rebuilds an oriented graph from live branches whose `parent` fields are set:
// branches in pre-order (siblings by old id), root node 0, then each branch's
// far node, then fused nodes. Fills old->new branch ids into `branch_map`.
VesselGraph renumber(const VesselGraph &g, int root, const std::vector<char> &alive, std::vector<int> &branch_map) {
  std::map<int, std::vector<int>> kids;
  std::vector<int> tops;
  for (const auto &b : g.branches) {
    if (!alive[b.id]) continue;
    if (b.parent < 0) tops.push_back(b.id);
    else kids[b.parent].push_back(b.id);
  }
  std::vector<int> order;
  std::vector<int> stack(tops.rbegin(), tops.rend());
  while (!stack.empty()) {
    const int b = stack.back();
    stack.pop_back();
    order.push_back(b);
    const auto &k = kids[b];
    for (auto it = k.rbegin(); it != k.rend(); ++it) stack.push_back(*it);
  }

  VesselGraph out;
  out.dims = g.dims;
  out.spacing = g.spacing;
  out.oriented = true;
  out.root_node = 0;
  branch_map.assign(g.branches.size(), -1);
  std::vector<int> new_node(g.nodes.size(), -1);
  auto take_node = [&](int old) {
    if (new_node[old] >= 0) return;
    new_node[old] = static_cast<int>(out.nodes.size());
    out.nodes.push_back(g.nodes[old]);
  };
  take_node(root);
  for (const int b : order) {
    branch_map[b] = static_cast<int>(out.branches.size());
    out.branches.push_back(g.branches[b]);
    take_node(g.branches[b].node_b);
  }
  for (const int b : order) take_node(g.branches[b].node_a);
  for (auto &n : out.nodes) n.id = new_node[n.id];
  for (auto &b : out.branches) {
    const int old = b.id;
    b.id = branch_map[old];
    b.node_a = new_node[b.node_a];
    b.node_b = new_node[b.node_b];
    b.parent = b.parent < 0 ? -1 : branch_map[b.parent];
    b.children.clear();
    for (const int c : kids[old]) b.children.push_back(branch_map[c]);
  }
  for (auto &n : out.nodes) n.degree = 0;
  for (const auto &b : out.branches) {
    out.nodes[b.node_a].degree++;
    out.nodes[b.node_b].degree++;
  }
  for (auto &n : out.nodes)
    if (n.fused) n.degree += 2;
  return out;
}

} // namespace

OrientResult orient_and_fuse(const VesselGraph &graph, int root, double min_branch_mm) {
  if (root < 0 || root >= static_cast<int>(graph.nodes.size()))
    throw DataError("orient_and_fuse: root node " + std::to_string(root) + " does not exist");
  OrientResult result;
  FuseState st{graph, std::vector<char>(graph.nodes.size(), 1), std::vector<char>(graph.branches.size(), 1)};
  auto &g = st.g;

  const auto comp = graph_components(graph);
  for (const auto &n : graph.nodes)
    if (comp[n.id] != comp[root]) {
      st.node_alive[n.id] = 0;
      result.unreachable_nodes.push_back(n.id);
    }
  for (const auto &b : graph.branches)
    if (!st.node_alive[b.node_a]) st.branch_alive[b.id] = 0;

  // Cycle breaking: keep a maximum spanning forest under (radius, length, id).
  {
    std::vector<int> order;
    for (const auto &b : g.branches)
      if (st.branch_alive[b.id]) order.push_back(b.id);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      const auto &x = g.branches[a], &y = g.branches[b];
      if (x.radius_mm != y.radius_mm) return x.radius_mm > y.radius_mm;
      if (x.length_mm != y.length_mm) return x.length_mm > y.length_mm;
      return a > b;
    });
    SmallUnionFind uf(g.nodes.size());
    for (const int id : order) {
      const auto &b = g.branches[id];
      if (!uf.unite(b.node_a, b.node_b)) {
        st.branch_alive[id] = 0;
        result.broken_cycles++;
      }
    }
  }

  auto merge_pass = [&] {
    bool any = true;
    while (any) {
      any = false;
      for (const auto &n : g.nodes) {
        if (!st.node_alive[n.id] || n.id == root) continue;
        const auto inc = st.incident(n.id);
        if (inc.size() != 2 || inc[0] == inc[1]) continue;
        st.merge_at(n.id, std::min(inc[0], inc[1]), std::max(inc[0], inc[1]));
        result.merged_nodes++;
        any = true;
      }
    }
  };

  merge_pass();
  while (true) {
    int spur = -1;
    int spur_leaf = -1;
    for (const auto &b : g.branches) {
      if (!st.branch_alive[b.id] || b.length_mm >= min_branch_mm) continue;
      for (const auto &[leaf, base] : {std::pair{b.node_a, b.node_b}, std::pair{b.node_b, b.node_a}}) {
        if (leaf == root || base == root) continue;
        if (st.incident(leaf).size() != 1 || st.incident(base).size() < 3) continue;
        const bool better = spur < 0 || b.length_mm < g.branches[spur].length_mm;
        if (better) {
          spur = b.id;
          spur_leaf = leaf;
        }
        break;
      }
    }
    if (spur < 0) break;
    st.branch_alive[spur] = 0;
    st.node_alive[spur_leaf] = 0;
    result.removed_spurs++;
    merge_pass();
  }

  // Breadth-first orientation from the root.
  std::vector<int> parent_branch(g.nodes.size(), -1);
  std::vector<char> seen_node(g.nodes.size(), 0), seen_branch(g.branches.size(), 0);
  std::deque<int> queue{root};
  seen_node[root] = 1;
  while (!queue.empty()) {
    const int n = queue.front();
    queue.pop_front();
    auto inc = st.incident(n);
    std::sort(inc.begin(), inc.end());
    for (const int bid : inc) {
      if (seen_branch[bid]) continue;
      seen_branch[bid] = 1;
      auto &b = g.branches[bid];
      if (b.node_a != n) reverse_branch(b);
      b.parent = parent_branch[n];
      if (seen_node[b.node_b]) throw InvariantError("orient_and_fuse: cycle survived cycle breaking");
      seen_node[b.node_b] = 1;
      parent_branch[b.node_b] = bid;
      queue.push_back(b.node_b);
    }
  }

  std::vector<int> branch_map;
  result.tree = renumber(g, root, st.branch_alive, branch_map);
  return result;
}

FuseResult fuse_chains(const VesselGraph &tree, const std::vector<std::vector<int>> &chains) {
  if (!tree.oriented || !tree.root_node) throw DataError("fuse_chains: graph is not oriented");
  VesselGraph g = tree;
  std::vector<char> alive(g.branches.size(), 1);
  std::vector<int> head_of(g.branches.size(), -1);
  for (const auto &chain : chains) {
    if (chain.empty()) continue;
    const int head = chain.front();
    head_of[head] = head;
    for (std::size_t k = 1; k < chain.size(); ++k) {
      const int prev = chain[k - 1], c = chain[k];
      if (tree.branch(c).parent != prev)
        throw DataError("fuse_chains: branch " + std::to_string(c) + " is not a child of " + std::to_string(prev));
      auto &h = g.branches[head];
      const int joint = h.node_b;
      append_branch(h, g.branches[c], g.nodes[joint], g.spacing);
      g.nodes[joint].fused = true;
      alive[c] = 0;
      head_of[c] = head;
    }
  }
  for (auto &b : g.branches)
    if (alive[b.id] && b.parent >= 0 && head_of[b.parent] >= 0) b.parent = head_of[b.parent];

  FuseResult out;
  std::vector<int> branch_map;
  out.tree = renumber(g, *tree.root_node, alive, branch_map);
  out.new_id.resize(tree.branches.size());
  for (std::size_t b = 0; b < tree.branches.size(); ++b)
    out.new_id[b] = branch_map[head_of[b] >= 0 ? static_cast<std::size_t>(head_of[b]) : b];
  return out;
}

OrientResult build_tree(const BinaryMask &skeleton, const BinaryMask &mask, const BinaryMask &liver,
                        double min_branch_mm) {
  require_same_grid(skeleton, mask, "build_tree");
  require_same_grid(skeleton, liver, "build_tree");
  auto g = skeleton_to_graph(skeleton);
  if (g.nodes.empty()) throw DataError("build_tree: empty skeleton");
  attach_geometry(g, mask);
  const auto comp = graph_components(g);
  const int ncomp = comp.empty() ? 0 : *std::max_element(comp.begin(), comp.end()) + 1;
  std::vector<std::size_t> size(static_cast<std::size_t>(ncomp), 0);
  for (const auto &n : g.nodes) size[static_cast<std::size_t>(comp[static_cast<std::size_t>(n.id)])] += n.voxels.size();
  for (const auto &b : g.branches)
    size[static_cast<std::size_t>(comp[static_cast<std::size_t>(b.node_a)])] += b.path.size() > 2 ? b.path.size() - 2 : 0;
  const auto biggest = static_cast<int>(std::max_element(size.begin(), size.end()) - size.begin());
  const auto root = find_root(g, liver, biggest);
  return orient_and_fuse(g, root.node, min_branch_mm);
}

std::vector<std::string> validate_tree(const VesselGraph &g) {
  std::vector<std::string> problems;
  if (!g.oriented) problems.push_back("graph is not oriented");
  std::size_t fused = 0;
  for (const auto &n : g.nodes) fused += n.fused ? 1 : 0;
  if (!g.nodes.empty() && g.branches.size() + 1 + fused != g.nodes.size())
    problems.push_back("branch count is not node count - 1");
  std::vector<int> parents(g.nodes.size(), 0);
  for (const auto &b : g.branches) {
    if (b.node_b < 0 || b.node_b >= static_cast<int>(g.nodes.size()) || b.node_a < 0 ||
        b.node_a >= static_cast<int>(g.nodes.size())) {
      problems.push_back("branch " + std::to_string(b.id) + " has an invalid node");
      continue;
    }
    parents[b.node_b]++;
    if (b.parent >= 0) {
      const auto &p = g.branch(b.parent);
      const bool at_end = p.node_b == b.node_a;
      bool on_path = false;
      if (g.node(b.node_a).fused)
        for (const auto &v : g.node(b.node_a).voxels)
          on_path = on_path || std::find(p.path.begin(), p.path.end(), v) != p.path.end();
      if (!at_end && !on_path)
        problems.push_back("branch " + std::to_string(b.id) + " does not start on its parent");
    }
    for (std::size_t i = 1; i < b.path.size(); ++i)
      if (!adjacent26(b.path[i - 1], b.path[i]))
        problems.push_back("branch " + std::to_string(b.id) + " path is not 26-connected");
    std::set<Voxel> uniq(b.path.begin(), b.path.end());
    if (uniq.size() != b.path.size()) problems.push_back("branch " + std::to_string(b.id) + " repeats a voxel");
    for (const int c : b.children)
      if (g.branch(c).parent != b.id) problems.push_back("child/parent mismatch at " + std::to_string(b.id));
  }
  for (const auto &n : g.nodes) {
    if (n.fused) continue;
    const bool is_root = g.root_node && *g.root_node == n.id;
    if (is_root && parents[n.id] != 0) problems.push_back("root has a parent");
    if (!is_root && parents[n.id] != 1) problems.push_back("node " + std::to_string(n.id) + " parent count != 1");
  }
  return problems;
}

} // namespace vesselkit
