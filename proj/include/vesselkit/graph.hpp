#pragma once

#include <optional>
#include <string>
#include <vector>

#include "vesselkit/volume.hpp"

namespace vesselkit {

enum class NodeKind { Endpoint, Junction };

struct Node {
  int id = -1;
  Voxel voxel;                       // representative voxel
  std::vector<Voxel> voxels;         // all skeleton voxels collapsed into this node
  std::vector<double> radius_samples; // aligned with voxels; empty without geometry
  int degree = 0;                    // incident branch ends (a self-loop counts twice)
  NodeKind kind = NodeKind::Endpoint;
  bool fused = false; // interior point of a fused chain; no branch ends here
};

struct Branch {
  int id = -1;
  int node_a = -1, node_b = -1;
  // Ordered 26-connected voxels; first and last belong to node_a and node_b.
  std::vector<Voxel> path;
  std::vector<double> radius_samples; // distance to background per path voxel (mm)

  double length_mm = 0;
  double radius_mm = 0; // median of radius_samples
  double radius_mean_mm = 0;
  double radius_max_mm = 0;
  bool leaves_mask = false; // some path voxel lies outside the source mask

  int parent = -1; // oriented graphs only
  std::vector<int> children;
};

// Skeleton branch graph. Node and branch ids equal their vector index.
struct VesselGraph {
  Dims dims;
  Spacing spacing;
  std::vector<Node> nodes;
  std::vector<Branch> branches;
  bool oriented = false;
  std::optional<int> root_node;

  const Branch &branch(int id) const { return branches.at(static_cast<std::size_t>(id)); }
  const Node &node(int id) const { return nodes.at(static_cast<std::size_t>(id)); }
  std::optional<int> root_branch() const;
  std::vector<int> preorder() const; // oriented graphs: branch ids, root first
};

struct BranchGeometry {
  double length_mm = 0;
  double radius_mm = 0;
  double radius_mean_mm = 0;
  double radius_max_mm = 0;
  Vec3 chord;
  std::vector<Voxel> bresenham_voxels;
  bool leaves_mask = false;
};

class CyclicComponent : public DataError {
public:
  using DataError::DataError;
};

inline constexpr double kDefaultMinBranchMm = 3.0;

// Nodes are skeleton voxels whose 26-degree differs from 2; mutually adjacent
// junction voxels collapse into one node at their centroid-nearest voxel.
// Branches are maximal chains of degree-2 voxels. Pure cycles get a node at
// their lowest-index voxel and a self-loop branch.
VesselGraph skeleton_to_graph(const BinaryMask &skeleton);

double path_length_mm(const std::vector<Voxel> &path, const Spacing &spacing);

// Fills radius samples (distance to the nearest background voxel of `mask`)
// and per-branch length/radius statistics.
void attach_geometry(VesselGraph &graph, const BinaryMask &mask);
void refresh_geometry(Branch &branch, const Spacing &spacing);
BranchGeometry branch_geometry(const Branch &branch, const Spacing &spacing);

// Integer 3D Bresenham line including both endpoints.
std::vector<Voxel> bresenham3d(const Voxel &a, const Voxel &b);

// Connected components of the graph: component index per node, numbered by
// smallest node id.
std::vector<int> graph_components(const VesselGraph &graph);

struct RootChoice {
  int component = -1;
  int node = -1;
  double distance_mm = 0; // distance to the liver (or to its surface for fallbacks)
  bool fallback = false;  // every endpoint was inside the liver
};

// Per component, the endpoint farthest from the liver among those outside it.
RootChoice find_root(const VesselGraph &graph, const BinaryMask &liver, int component);
std::vector<RootChoice> find_roots(const VesselGraph &graph, const BinaryMask &liver);

struct OrientResult {
  VesselGraph tree;
  std::vector<int> unreachable_nodes; // input node ids not connected to the root
  int removed_spurs = 0;
  int broken_cycles = 0;
  int merged_nodes = 0;
};

// Restricts to the root's component, breaks cycles by dropping the thinnest
// branch of each cycle (ties: shorter, then lower id), prunes leaf spurs
// shorter than min_branch_mm, merges degree-2 chains and orients the result
// breadth-first from the root. Output ids are renumbered: branches in
// pre-order, root node 0.
OrientResult orient_and_fuse(const VesselGraph &graph, int root_node, double min_branch_mm = kDefaultMinBranchMm);

struct FuseResult {
  VesselGraph tree;
  std::vector<int> new_id; // old branch id -> branch id in `tree`
};

// Replaces each chain (branch ids, each the parent of the next) by one branch.
// Other children of chain members hang off the fused branch; the chain's
// inner nodes stay as fused nodes. Output is renumbered in pre-order.
FuseResult fuse_chains(const VesselGraph &tree, const std::vector<std::vector<int>> &chains);

// Graph of `skeleton` with geometry from `mask`, oriented from the root of
// its largest component (most skeleton voxels, ties to the lower index).
OrientResult build_tree(const BinaryMask &skeleton, const BinaryMask &mask, const BinaryMask &liver,
                        double min_branch_mm = kDefaultMinBranchMm);

// Structural checks used by tests and the CLI; returns problems found.
std::vector<std::string> validate_tree(const VesselGraph &graph);

} // namespace vesselkit
