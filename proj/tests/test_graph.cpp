#include <doctest.h>

#include <map>
#include <set>

#include "oracles.hpp"
#include "vesselkit/graph.hpp"
#include "vesselkit/graph_io.hpp"
#include "vesselkit/skeleton.hpp"

using namespace vesselkit;

namespace {

BinaryMask from_voxels(Dims dims, Spacing sp, const std::vector<Voxel> &vs) {
  BinaryMask m(dims, sp);
  for (const auto &v : vs) m.at(v) = 1;
  return m;
}

int count_kind(const VesselGraph &g, NodeKind k) {
  int n = 0;
  for (const auto &node : g.nodes) n += node.kind == k ? 1 : 0;
  return n;
}

int node_at(const VesselGraph &g, const Voxel &v) {
  for (const auto &n : g.nodes)
    for (const auto &w : n.voxels)
      if (w == v) return n.id;
  return -1;
}

// Lee skeleton of a sparse random mask.
BinaryMask random_skeleton(std::uint64_t seed) {
  auto m = oracle::random_mask({14, 14, 14}, {1, 1, 1}, 0.08, seed);
  return skeletonize_lee(m).mask;
}

std::string problems(const VesselGraph &g) {
  std::string out;
  for (const auto &p : validate_tree(g)) out += p + "; ";
  return out;
}

} // namespace

TEST_CASE("straight line gives two endpoints and one branch") {
  std::vector<Voxel> line;
  for (int x = 2; x < 12; ++x) line.push_back({x, 3, 3});
  const auto g = skeleton_to_graph(from_voxels({15, 7, 7}, {1, 1, 1}, line));
  REQUIRE(g.nodes.size() == 2);
  CHECK(count_kind(g, NodeKind::Endpoint) == 2);
  REQUIRE(g.branches.size() == 1);
  CHECK(g.branches[0].path.size() == 10);
  CHECK(g.branches[0].length_mm == doctest::Approx(9.0));
  CHECK(g.nodes[0].degree == 1);
}

TEST_CASE("Y shape gives one junction, three endpoints, three branches") {
  std::vector<Voxel> vs{{8, 8, 8}};
  for (int k = 1; k <= 6; ++k) {
    vs.push_back({8 + k, 8, 8});
    vs.push_back({8 - k, 8, 8});
    vs.push_back({8, 8, 8 + k});
  }
  const auto skel = from_voxels({17, 17, 17}, {1, 1, 1}, vs);
  const auto g = skeleton_to_graph(skel);
  CHECK(count_kind(g, NodeKind::Junction) == 1);
  CHECK(count_kind(g, NodeKind::Endpoint) == 3);
  CHECK(g.branches.size() == 3);
  const int j = node_at(g, {8, 8, 8});
  REQUIRE(j >= 0);
  CHECK(g.node(j).voxel == Voxel{8, 8, 8});
  CHECK(g.node(j).degree == 3);
}

TEST_CASE("empty skeleton, isolated voxel and pure cycle") {
  CHECK(skeleton_to_graph(BinaryMask({4, 4, 4}, {1, 1, 1})).nodes.empty());

  const auto single = skeleton_to_graph(from_voxels({4, 4, 4}, {1, 1, 1}, {{1, 2, 3}}));
  CHECK(single.nodes.size() == 1);
  CHECK(single.branches.empty());

  // Diamond ring of 8 voxels in a plane.
  std::vector<Voxel> ring{{2, 0, 1}, {3, 1, 1}, {4, 2, 1}, {3, 3, 1}, {2, 4, 1}, {1, 3, 1}, {0, 2, 1}, {1, 1, 1}};
  const auto g = skeleton_to_graph(from_voxels({5, 5, 3}, {1, 1, 1}, ring));
  REQUIRE(g.nodes.size() == 1);
  REQUIRE(g.branches.size() == 1);
  CHECK(g.branches[0].node_a == g.branches[0].node_b);
  CHECK(g.branches[0].path.size() == 9);
  CHECK(g.branches[0].path.front() == g.branches[0].path.back());
  CHECK(g.branches[0].length_mm == doctest::Approx(8.0 * std::sqrt(2.0)));
}

TEST_CASE("lengths follow voxel spacing") {
  std::vector<Voxel> zline;
  for (int z = 0; z < 11; ++z) zline.push_back({1, 1, z});
  const auto g = skeleton_to_graph(from_voxels({3, 3, 11}, {1, 1, 2}, zline));
  REQUIRE(g.branches.size() == 1);
  CHECK(g.branches[0].length_mm == doctest::Approx(20.0));

  const auto d = skeleton_to_graph(from_voxels({3, 3, 3}, {1, 1, 1}, {{0, 0, 0}, {1, 1, 1}}));
  REQUIRE(d.branches.size() == 1);
  CHECK(d.branches[0].length_mm == doctest::Approx(std::sqrt(3.0)));
}

TEST_CASE("voxel conservation and path invariants on random skeletons") {
  for (std::uint64_t seed = 1; seed <= 25; ++seed) {
    const auto skel = random_skeleton(seed);
    const auto g = skeleton_to_graph(skel);
    std::map<Voxel, int> owner;
    for (const auto &n : g.nodes)
      for (const auto &v : n.voxels) owner[v]++;
    for (const auto &b : g.branches) {
      REQUIRE(b.path.size() >= 2);
      CHECK(node_at(g, b.path.front()) == b.node_a);
      CHECK(node_at(g, b.path.back()) == b.node_b);
      for (std::size_t i = 1; i < b.path.size(); ++i) CHECK(oracle::neighbors(b.path[i - 1], b.path[i], 26));
      for (std::size_t i = 1; i + 1 < b.path.size(); ++i) owner[b.path[i]]++;
      std::set<Voxel> uniq(b.path.begin(), b.path.end());
      CHECK(uniq.size() == b.path.size() - (b.path.front() == b.path.back() ? 1 : 0));
    }
    const auto fg = oracle::voxels_of(skel);
    CHECK(owner.size() == fg.size());
    for (const auto &v : fg) CHECK(owner[v] == 1);
    int degree_sum = 0;
    for (const auto &n : g.nodes) degree_sum += n.degree;
    CHECK(degree_sum == 2 * static_cast<int>(g.branches.size()));
  }
}

TEST_CASE("graph extraction is translation invariant") {
  const auto skel = random_skeleton(77);
  BinaryMask shifted({20, 19, 18}, {1, 1, 1});
  const Voxel t{3, 2, 4};
  for (const auto &v : oracle::voxels_of(skel)) shifted(v.x + t.x, v.y + t.y, v.z + t.z) = 1;
  const auto a = skeleton_to_graph(skel), b = skeleton_to_graph(shifted);
  REQUIRE(a.nodes.size() == b.nodes.size());
  REQUIRE(a.branches.size() == b.branches.size());
  for (std::size_t i = 0; i < a.nodes.size(); ++i)
    CHECK(b.nodes[i].voxel == Voxel{a.nodes[i].voxel.x + t.x, a.nodes[i].voxel.y + t.y, a.nodes[i].voxel.z + t.z});
  for (std::size_t i = 0; i < a.branches.size(); ++i) {
    CHECK(a.branches[i].node_a == b.branches[i].node_a);
    CHECK(a.branches[i].node_b == b.branches[i].node_b);
    CHECK(a.branches[i].length_mm == doctest::Approx(b.branches[i].length_mm));
  }
}

TEST_CASE("bresenham lines") {
  CHECK(bresenham3d({0, 0, 0}, {3, 0, 0}) == std::vector<Voxel>{{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {3, 0, 0}});
  CHECK(bresenham3d({0, 0, 0}, {0, 0, 0}) == std::vector<Voxel>{{0, 0, 0}});

  const auto l = bresenham3d({0, 0, 0}, {5, 3, 2});
  REQUIRE(l.size() == 6);
  for (std::size_t i = 1; i < l.size(); ++i) CHECK(l[i].x - l[i - 1].x == 1);
  CHECK(l == oracle::bresenham({0, 0, 0}, {5, 3, 2}));

  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 500; ++trial) {
    auto r = [&] { return static_cast<int>(rng() % 21) - 10; };
    const Voxel a{r(), r(), r()}, b{r(), r(), r()};
    const auto line = bresenham3d(a, b);
    const int n = std::max({std::abs(b.x - a.x), std::abs(b.y - a.y), std::abs(b.z - a.z)});
    REQUIRE(line.size() == static_cast<std::size_t>(n + 1));
    CHECK(line.front() == a);
    CHECK(line.back() == b);
    for (std::size_t i = 1; i < line.size(); ++i) CHECK(oracle::neighbors(line[i - 1], line[i], 26));
    // Each voxel lies within half a voxel of the ideal line on the minor axes.
    const auto ideal = oracle::bresenham(a, b);
    for (std::size_t i = 0; i < line.size(); ++i) {
      CHECK(std::abs(line[i].x - ideal[i].x) <= 1);
      CHECK(std::abs(line[i].y - ideal[i].y) <= 1);
      CHECK(std::abs(line[i].z - ideal[i].z) <= 1);
    }
  }
}

TEST_CASE("radius of a straight tube from the distance field") {
  const int r = 3;
  BinaryMask mask({40, 15, 15}, {1, 1, 1});
  for (int z = 0; z < 15; ++z)
    for (int y = 0; y < 15; ++y)
      for (int x = 4; x < 36; ++x)
        if ((y - 7) * (y - 7) + (z - 7) * (z - 7) <= r * r) mask(x, y, z) = 1;
  auto g = skeleton_to_graph(skeletonize_lee(mask).mask);
  attach_geometry(g, mask);
  REQUIRE(g.branches.size() == 1);
  CHECK(g.branches[0].radius_mm == doctest::Approx(r).epsilon(0.5 / r));
  CHECK_FALSE(g.branches[0].leaves_mask);
  CHECK(g.branches[0].radius_max_mm >= g.branches[0].radius_mm);
  const auto geo = branch_geometry(g.branches[0], g.spacing);
  CHECK(geo.length_mm >= geo.chord.norm() - 1e-12);
  CHECK(geo.bresenham_voxels.front() == g.branches[0].path.front());
  CHECK(geo.bresenham_voxels.back() == g.branches[0].path.back());
}

TEST_CASE("path leaving the mask is flagged with zero radius samples") {
  std::vector<Voxel> line;
  for (int x = 1; x < 9; ++x) line.push_back({x, 2, 2});
  auto g = skeleton_to_graph(from_voxels({10, 5, 5}, {1, 1, 1}, line));
  const auto mask = from_voxels({10, 5, 5}, {1, 1, 1}, {{1, 2, 2}, {2, 2, 2}, {3, 2, 2}});
  attach_geometry(g, mask);
  CHECK(g.branches[0].leaves_mask);
  CHECK(g.branches[0].radius_samples.back() == 0.0);
}

TEST_CASE("root detection") {
  // T shape: trunk along x from x=0, liver box covers x >= 10.
  std::vector<Voxel> vs;
  for (int x = 0; x < 25; ++x) vs.push_back({x, 10, 5});
  for (int y = 11; y < 20; ++y) vs.push_back({18, y, 5});
  const auto g = skeleton_to_graph(from_voxels({30, 22, 11}, {1, 1, 1}, vs));
  BinaryMask liver({30, 22, 11}, {1, 1, 1});
  for (int z = 0; z < 11; ++z)
    for (int y = 0; y < 22; ++y)
      for (int x = 10; x < 30; ++x) liver(x, y, z) = 1;

  const auto roots = find_roots(g, liver);
  REQUIRE(roots.size() == 1);
  CHECK(roots[0].node == node_at(g, {0, 10, 5}));
  CHECK(roots[0].distance_mm == doctest::Approx(10.0));
  CHECK_FALSE(roots[0].fallback);

  BinaryMask everywhere({30, 22, 11}, {1, 1, 1}, 1);
  const auto fb = find_roots(g, everywhere);
  CHECK(fb[0].fallback);

  // Two components, two roots.
  auto two = vs;
  for (int x = 0; x < 8; ++x) two.push_back({x, 2, 2});
  const auto g2 = skeleton_to_graph(from_voxels({30, 22, 11}, {1, 1, 1}, two));
  const auto r2 = find_roots(g2, liver);
  REQUIRE(r2.size() == 2);
  CHECK(r2[0].component != r2[1].component);

  std::vector<Voxel> ring{{2, 0, 1}, {3, 1, 1}, {4, 2, 1}, {3, 3, 1}, {2, 4, 1}, {1, 3, 1}, {0, 2, 1}, {1, 1, 1}};
  const auto cyc = skeleton_to_graph(from_voxels({5, 5, 3}, {1, 1, 1}, ring));
  CHECK_THROWS_AS(find_roots(cyc, BinaryMask({5, 5, 3}, {1, 1, 1})), CyclicComponent);
}

TEST_CASE("short spur is removed and the trunk re-merged") {
  std::vector<Voxel> vs;
  for (int x = 0; x < 20; ++x) vs.push_back({x, 5, 5});
  vs.push_back({10, 6, 5});
  vs.push_back({10, 7, 5});
  const auto g = skeleton_to_graph(from_voxels({22, 10, 10}, {1, 1, 1}, vs));
  const int root = node_at(g, {0, 5, 5});
  const auto res = orient_and_fuse(g, root, 2.0);
  CHECK(res.removed_spurs == 1);
  CHECK(res.merged_nodes == 1);
  REQUIRE(res.tree.branches.size() == 1);
  const auto &path = res.tree.branches[0].path;
  REQUIRE(path.size() == 20);
  for (int x = 0; x < 20; ++x) CHECK(path[static_cast<std::size_t>(x)] == Voxel{x, 5, 5});
  CHECK(problems(res.tree) == "");

  // The same spur survives a threshold below its length.
  const auto keep = orient_and_fuse(g, root, 0.5);
  CHECK(keep.removed_spurs == 0);
  CHECK(keep.tree.branches.size() == 3);
}

TEST_CASE("cycle of two parallel branches drops the thinner one") {
  VesselGraph g;
  g.dims = {12, 10, 3};
  auto node = [&](int id, Voxel v) {
    Node n;
    n.id = id;
    n.voxel = v;
    n.voxels = {v};
    g.nodes.push_back(n);
  };
  node(0, {0, 5, 1});
  node(1, {3, 5, 1});
  node(2, {7, 5, 1});
  node(3, {10, 5, 1});
  auto branch = [&](int a, int b, std::vector<Voxel> path, double radius) {
    Branch br;
    br.id = static_cast<int>(g.branches.size());
    br.node_a = a;
    br.node_b = b;
    br.path = std::move(path);
    br.radius_samples.assign(br.path.size(), radius);
    refresh_geometry(br, g.spacing);
    g.nodes[a].degree++;
    g.nodes[b].degree++;
    g.branches.push_back(br);
  };
  branch(0, 1, {{0, 5, 1}, {1, 5, 1}, {2, 5, 1}, {3, 5, 1}}, 4);
  branch(1, 2, {{3, 5, 1}, {4, 6, 1}, {5, 6, 1}, {6, 6, 1}, {7, 5, 1}}, 1);
  branch(1, 2, {{3, 5, 1}, {4, 4, 1}, {5, 4, 1}, {6, 4, 1}, {7, 5, 1}}, 3);
  branch(2, 3, {{7, 5, 1}, {8, 5, 1}, {9, 5, 1}, {10, 5, 1}}, 2);

  const auto res = orient_and_fuse(g, 0, 0.0);
  CHECK(res.broken_cycles == 1);
  CHECK(problems(res.tree) == "");
  std::set<Voxel> kept;
  for (const auto &b : res.tree.branches) kept.insert(b.path.begin(), b.path.end());
  CHECK(kept.count({5, 4, 1}) == 1);
  CHECK(kept.count({5, 6, 1}) == 0);
}

TEST_CASE("unreachable parts are reported, oriented trees validate") {
  for (std::uint64_t seed = 30; seed < 45; ++seed) {
    const auto g = skeleton_to_graph(random_skeleton(seed));
    if (g.nodes.empty()) continue;
    const auto comp = graph_components(g);
    int root = -1;
    for (const auto &n : g.nodes)
      if (n.degree == 1) {
        root = n.id;
        break;
      }
    if (root < 0) continue;
    const auto res = orient_and_fuse(g, root);
    std::size_t outside = 0;
    for (const auto &n : g.nodes) outside += comp[n.id] != comp[root] ? 1 : 0;
    CHECK(res.unreachable_nodes.size() == outside);
    CHECK(problems(res.tree) == "");
    CHECK(res.tree.root_node == 0);
    const auto order = res.tree.preorder();
    for (std::size_t i = 0; i < order.size(); ++i) CHECK(order[i] == static_cast<int>(i));
  }
}

namespace {

// T-shaped skeleton: trunk along x, side branch along y from (15,5,5), second
// side branch from (25,5,5) along -y.
VesselGraph comb_tree() {
  std::vector<Voxel> vs;
  for (int x = 0; x < 35; ++x) vs.push_back({x, 10, 5});
  for (int y = 11; y < 19; ++y) vs.push_back({15, y, 5});
  for (int y = 2; y < 10; ++y) vs.push_back({25, y, 5});
  const auto mask = from_voxels({36, 20, 11}, {1, 1, 1}, vs);
  auto g = skeleton_to_graph(mask);
  return orient_and_fuse(g, node_at(g, {0, 10, 5})).tree;
}

} // namespace

TEST_CASE("graph json round trip") {
  auto t = comb_tree();
  REQUIRE(t.branches.size() == 5);
  const auto back = graph_from_json(nlohmann::json::parse(graph_to_json(t).dump()));
  CHECK(graph_to_json(back).dump() == graph_to_json(t).dump());
  CHECK(back.root_node == t.root_node);
  CHECK(back.branches[3].path == t.branches[3].path);

  auto bad = graph_to_json(t);
  bad["branches"][0]["node_a"] = 99;
  CHECK_THROWS_AS(graph_from_json(nlohmann::json::parse(bad.dump())), DataError);
}

TEST_CASE("fusing a chain keeps side branches attached") {
  const auto t = comb_tree();
  // Trunk is branch 0; its children continue the trunk and leave sideways.
  std::vector<int> chain{0};
  int cur = 0;
  while (!t.branch(cur).children.empty()) {
    int next = -1;
    for (const int c : t.branch(cur).children)
      if (t.branch(c).path.back().y == 10) next = c;
    if (next < 0) break;
    chain.push_back(next);
    cur = next;
  }
  REQUIRE(chain.size() == 3);
  const auto fused = fuse_chains(t, {chain});
  CHECK(fused.tree.branches.size() == 3);
  CHECK(problems(fused.tree) == "");
  const auto &trunk = fused.tree.branch(fused.new_id[0]);
  CHECK(fused.new_id[chain[1]] == fused.new_id[0]);
  CHECK(trunk.path.size() == 35);
  CHECK(trunk.length_mm == doctest::Approx(34.0));
  CHECK(trunk.children.size() == 2);
}
