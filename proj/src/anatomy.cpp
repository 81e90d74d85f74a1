#include "vesselkit/anatomy.hpp"

#include <algorithm>
#include <array>
#include <numeric>
#include <set>

#include "vesselkit/graph_io.hpp"

namespace vesselkit {

namespace {

using Counts = std::array<std::size_t, kCouinaudSegments + 1>;

constexpr std::array<int, 4> kRightLiver{5, 6, 7, 8};
constexpr std::array<int, 3> kLeftLiver{2, 3, 4};

struct HepaticTerritory {
  const char *name;
  std::array<int, 3> segments;
};
constexpr std::array<HepaticTerritory, 3> kHepatic{{
    {"right_branch", {5, 6, 7}},
    {"middle_branch", {4, 5, 8}},
    {"left_branch", {2, 3, 4}},
}};

constexpr double kMinConfidence = 0.5;

Counts count(const std::vector<Voxel> &voxels, const LabelVolume &couinaud) {
  Counts n{};
  for (const auto &v : voxels) ++n[couinaud.get(v.x, v.y, v.z)];
  return n;
}

std::size_t inside(const Counts &n) { return std::accumulate(n.begin() + 1, n.end(), std::size_t{0}); }

template <std::size_t N> std::size_t in_set(const Counts &n, const std::array<int, N> &set) {
  std::size_t s = 0;
  for (const int k : set) s += n[static_cast<std::size_t>(k)];
  return s;
}

RegionVote vote(const Counts &n) {
  const auto total = inside(n);
  if (total == 0) return {};
  std::size_t best = 1;
  for (std::size_t k = 2; k < n.size(); ++k)
    if (n[k] > n[best]) best = k;
  return {static_cast<int>(best), static_cast<double>(n[best]) / static_cast<double>(total)};
}

struct TreeStats {
  std::vector<Counts> own, sub;
  std::vector<double> sub_length;
};

TreeStats tree_stats(const VesselGraph &g, const LabelVolume &couinaud) {
  TreeStats st;
  st.own.resize(g.branches.size());
  for (const auto &b : g.branches) st.own[static_cast<std::size_t>(b.id)] = count(b.path, couinaud);
  st.sub = st.own;
  st.sub_length.resize(g.branches.size());
  auto order = g.preorder();
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const auto b = static_cast<std::size_t>(*it);
    st.sub_length[b] += g.branches[b].length_mm;
    for (const int c : g.branches[b].children) {
      const auto k = static_cast<std::size_t>(c);
      for (std::size_t s = 0; s < st.sub[b].size(); ++s) st.sub[b][s] += st.sub[k][s];
      st.sub_length[b] += st.sub_length[k];
    }
  }
  return st;
}

enum Side { kNeither, kRight, kLeft };

Side side(const Counts &n) {
  const auto total = inside(n);
  if (2 * in_set(n, kRightLiver) > total) return kRight;
  if (2 * in_set(n, kLeftLiver) > total) return kLeft;
  return kNeither;
}

// Longest subtree; ties to the lower id.
int largest(const std::vector<int> &ids, const TreeStats &st) {
  int best = -1;
  for (const int id : ids)
    if (best < 0 || st.sub_length[static_cast<std::size_t>(id)] > st.sub_length[static_cast<std::size_t>(best)])
      best = id;
  return best;
}

// Follows the largest child while all children share one majority segment.
std::vector<int> extend(const VesselGraph &g, const TreeStats &st, int start) {
  std::vector<int> chain{start};
  for (int cur = start;;) {
    const auto &kids = g.branch(cur).children;
    if (kids.empty()) break;
    std::set<int> segments;
    for (const int k : kids) segments.insert(vote(st.sub[static_cast<std::size_t>(k)]).segment);
    if (segments.size() > 1) break;
    cur = largest(kids, st);
    chain.push_back(cur);
  }
  return chain;
}

void require_tree(const VesselGraph &g, const LabelVolume &couinaud, const char *what) {
  if (!g.oriented || !g.root_node || !g.root_branch())
    throw DataError(std::string(what) + ": graph is not an oriented tree");
  if (g.dims != couinaud.dims()) throw DataError(std::string(what) + ": couinaud volume is on a different grid");
  validate_couinaud(couinaud);
}

// Names the remaining branches of the fused tree from their subtree majority.
AnatomicalLabeling finish(const FuseResult &fused, const LabelVolume &couinaud,
                          const std::vector<std::pair<int, std::string>> &named, std::vector<std::string> flags) {
  AnatomicalLabeling out;
  out.graph = fused.tree;
  out.flags = std::move(flags);
  const auto &g = out.graph;
  const auto st = tree_stats(g, couinaud);
  out.branches.resize(g.branches.size());
  for (const int b : g.preorder()) {
    auto &l = out.branches[static_cast<std::size_t>(b)];
    const int parent = g.branch(b).parent;
    l.generation = parent < 0 ? 0 : out.branches[static_cast<std::size_t>(parent)].generation + 1;
    const auto own = vote(st.own[static_cast<std::size_t>(b)]);
    l.segment = own.segment;
    l.confidence = own.confidence;
    if (own.confidence < kMinConfidence) l.flags.push_back("low_confidence");
  }
  for (const auto &[old_id, name] : named)
    out.branches[static_cast<std::size_t>(fused.new_id[static_cast<std::size_t>(old_id)])].path_name = name;
  for (const auto &b : g.branches) {
    auto &l = out.branches[static_cast<std::size_t>(b.id)];
    if (!l.path_name.empty()) continue;
    const auto sub = vote(st.sub[static_cast<std::size_t>(b.id)]);
    if (sub.segment > 0 && sub.confidence >= kMinConfidence) {
      l.path_name = "segment_" + std::to_string(sub.segment);
    } else {
      l.path_name = "gen" + std::to_string(std::max(1, l.generation)) + "_branch";
      if (sub.segment > 0 && l.flags.empty()) l.flags.push_back("low_confidence");
    }
  }
  return out;
}

} // namespace

void validate_couinaud(const LabelVolume &couinaud) {
  for (std::size_t i = 0; i < couinaud.size(); ++i)
    if (couinaud[i] > kCouinaudSegments)
      throw DataError("couinaud: label " + std::to_string(couinaud[i]) + " outside 0-8");
}

RegionVote region_vote(const std::vector<Voxel> &voxels, const LabelVolume &couinaud) {
  return vote(count(voxels, couinaud));
}

RegionVote branch_region(const Branch &branch, const LabelVolume &couinaud) {
  return region_vote(branch.path, couinaud);
}

bool valid_path_name(const std::string &name) {
  if (name == "main" || name == "right_branch" || name == "left_branch" || name == "middle_branch") return true;
  if (name.size() == 9 && name.rfind("segment_", 0) == 0) return name[8] >= '1' && name[8] <= '8';
  const std::string tail = "_branch";
  if (name.size() > 3 + tail.size() && name.rfind("gen", 0) == 0 &&
      name.compare(name.size() - tail.size(), tail.size(), tail) == 0) {
    const auto digits = name.substr(3, name.size() - 3 - tail.size());
    return digits[0] != '0' && std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; });
  }
  return false;
}

AnatomicalLabeling label_portal(const VesselGraph &tree, const LabelVolume &couinaud) {
  require_tree(tree, couinaud, "label_portal");
  const auto st = tree_stats(tree, couinaud);
  const int root = *tree.root_branch();

  // Fuse from the root until two children fall on opposite sides of the liver.
  std::vector<int> trunk{root};
  int right = -1, left = -1;
  for (int cur = root;;) {
    const auto &kids = tree.branch(cur).children;
    if (kids.empty()) break;
    std::vector<int> rights, lefts;
    for (const int k : kids) {
      const auto s = side(st.sub[static_cast<std::size_t>(k)]);
      if (s == kRight) rights.push_back(k);
      if (s == kLeft) lefts.push_back(k);
    }
    if (!rights.empty() && !lefts.empty()) {
      right = largest(rights, st);
      left = largest(lefts, st);
      break;
    }
    cur = largest(kids, st);
    trunk.push_back(cur);
  }

  if (right < 0) {
    const auto fused = fuse_chains(tree, {});
    return finish(fused, couinaud, {{root, "main"}}, {"no_left_right_split"});
  }
  const auto fused = fuse_chains(tree, {trunk, extend(tree, st, right), extend(tree, st, left)});
  return finish(fused, couinaud, {{root, "main"}, {right, "right_branch"}, {left, "left_branch"}}, {});
}

AnatomicalLabeling label_hepatic(const VesselGraph &tree, const LabelVolume &couinaud) {
  require_tree(tree, couinaud, "label_hepatic");
  const auto st = tree_stats(tree, couinaud);
  const int root = *tree.root_branch();

  auto kids = tree.branch(root).children;
  std::stable_sort(kids.begin(), kids.end(), [&](int a, int b) {
    return st.sub_length[static_cast<std::size_t>(a)] > st.sub_length[static_cast<std::size_t>(b)];
  });
  if (kids.size() > kHepatic.size()) kids.resize(kHepatic.size());
  std::sort(kids.begin(), kids.end());
  std::vector<std::string> flags;
  if (kids.size() < kHepatic.size()) flags.push_back("fewer_than_three_first_order");

  // Territory share of each first-order subtree; the assignment of distinct
  // names with the largest total share wins, first in enumeration order on ties.
  std::vector<std::array<double, kHepatic.size()>> share(kids.size());
  for (std::size_t i = 0; i < kids.size(); ++i) {
    const auto &n = st.sub[static_cast<std::size_t>(kids[i])];
    const auto total = inside(n);
    for (std::size_t t = 0; t < kHepatic.size(); ++t)
      share[i][t] = total ? static_cast<double>(in_set(n, kHepatic[t].segments)) / static_cast<double>(total) : 0.0;
  }
  std::array<std::size_t, kHepatic.size()> perm{0, 1, 2}, best = perm;
  double best_score = -1;
  do {
    double score = 0;
    for (std::size_t i = 0; i < kids.size(); ++i) score += share[i][perm[i]];
    if (score > best_score) {
      best_score = score;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));

  std::vector<std::vector<int>> chains;
  std::vector<std::pair<int, std::string>> named{{root, "main"}};
  for (std::size_t i = 0; i < kids.size(); ++i) {
    chains.push_back(extend(tree, st, kids[i]));
    named.emplace_back(kids[i], kHepatic[best[i]].name);
  }
  const auto fused = fuse_chains(tree, chains);
  auto out = finish(fused, couinaud, named, std::move(flags));
  for (std::size_t i = 0; i < kids.size(); ++i) {
    auto &f = out.branches[static_cast<std::size_t>(fused.new_id[static_cast<std::size_t>(kids[i])])].flags;
    if (share[i][best[i]] <= kMinConfidence && f.empty()) f.push_back("low_confidence");
  }
  return out;
}

nlohmann::ordered_json labeling_to_json(const AnatomicalLabeling &labeling) {
  auto j = graph_to_json(labeling.graph);
  for (std::size_t i = 0; i < labeling.branches.size(); ++i) {
    const auto &l = labeling.branches[i];
    auto &b = j["branches"][i];
    b["path_name"] = l.path_name;
    b["segment"] = l.segment;
    b["confidence"] = l.confidence;
    b["generation"] = l.generation;
    b["flags"] = l.flags;
  }
  j["labeling_flags"] = labeling.flags;
  return j;
}

} // namespace vesselkit
