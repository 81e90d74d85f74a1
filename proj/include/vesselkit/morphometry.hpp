#pragma once

#include <optional>
#include <string>
#include <vector>

#include "vesselkit/anatomy.hpp"
#include "vesselkit/graph.hpp"

namespace vesselkit {

inline constexpr int kTangentWindow = 5;
inline constexpr double kPowerLawMin = 0.5, kPowerLawMax = 10.0;

inline constexpr const char *kMorphometryHeader =
    "tree_ID,tree_label,path_label,path_name,path_length,path_radius,path_ratio,children_id,children_length,"
    "children_radii,children_ratio,emergence_angle,end_angle,Power_law_index,gen,n_desc";

struct BranchRecord {
  std::string tree_id;
  std::string tree_label; // portal or hepatic
  int path_label = 0;     // branch id
  std::string path_name;
  double path_length = 0; // mm
  double path_radius = 0; // mm
  std::optional<double> path_ratio;
  std::vector<int> children_id;
  std::vector<double> children_length, children_radii;
  std::vector<std::optional<double>> children_ratio;
  std::optional<double> emergence_angle, end_angle, power_law_index; // degrees, degrees, exponent
  int gen = 0;
  int n_desc = 0;
  std::vector<std::string> flags; // not part of the CSV
};

// Chord over the first (or last) min(window, path length) voxels, in mm.
Vec3 initial_tangent(const std::vector<Voxel> &path, const Spacing &spacing, int window = kTangentWindow);
Vec3 terminal_tangent(const std::vector<Voxel> &path, const Spacing &spacing, int window = kTangentWindow);

// Angle between the parent's tangent where the child starts and the child's
// initial tangent. Children starting before the parent's end (fused chains)
// use the parent's tangent over the voxels leading to the attachment point.
std::optional<double> emergence_angle(const Branch &parent, const Branch &child, const Spacing &spacing,
                                      int window = kTangentWindow);
// Angle between the full chord and the terminal tangent.
std::optional<double> end_angle(const Branch &branch, const Spacing &spacing, int window = kTangentWindow);

struct PowerLaw {
  std::optional<double> index;
  std::string flag; // empty, "too_few_children", "no_root" or "out_of_range"
};

// Solves r_p^n = sum r_c^n for n on [0.5, 10] by bisection.
PowerLaw power_law_index(double parent_radius, const std::vector<double> &children_radii);

// One record per branch in pre-order. `names` is indexed by branch id; it may
// be empty, leaving path_name blank.
std::vector<BranchRecord> extract_table(const VesselGraph &tree, const std::vector<std::string> &names,
                                        const std::string &tree_label, const std::string &tree_id,
                                        int window = kTangentWindow);
std::vector<BranchRecord> extract_table(const AnatomicalLabeling &labeling, const std::string &tree_label,
                                        const std::string &tree_id, int window = kTangentWindow);

std::string table_to_csv(const std::vector<BranchRecord> &records);
std::vector<BranchRecord> table_from_csv(const std::string &csv);

} // namespace vesselkit
