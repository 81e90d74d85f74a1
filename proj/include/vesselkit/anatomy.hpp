#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "vesselkit/graph.hpp"
#include "vesselkit/volume.hpp"

namespace vesselkit {

// Couinaud segments: 1-8 inside the liver, 0 outside. 1 (caudate) is on
// neither side.
inline constexpr int kCouinaudSegments = 8;
void validate_couinaud(const LabelVolume &couinaud);

struct RegionVote {
  int segment = 0;
  double confidence = 0; // share of the counted voxels in `segment`
};

// Majority segment over voxels; 0 is ignored unless every voxel is 0, and
// exact ties go to the smaller segment id.
RegionVote region_vote(const std::vector<Voxel> &voxels, const LabelVolume &couinaud);
RegionVote branch_region(const Branch &branch, const LabelVolume &couinaud);

struct BranchLabel {
  std::string path_name;
  int segment = 0;       // majority over the branch's own path
  double confidence = 0;
  int generation = 0;    // branching levels below main
  std::vector<std::string> flags;
};

struct AnatomicalLabeling {
  VesselGraph graph;                 // oriented tree with the named chains fused
  std::vector<BranchLabel> branches; // indexed by branch id of `graph`
  std::vector<std::string> flags;    // whole-tree flags, e.g. "no_left_right_split"
};

// Names: main, right_branch, left_branch, middle_branch (hepatic only),
// segment_1 .. segment_8 and gen<g>_branch with g >= 1.
bool valid_path_name(const std::string &name);

AnatomicalLabeling label_portal(const VesselGraph &tree, const LabelVolume &couinaud);
AnatomicalLabeling label_hepatic(const VesselGraph &tree, const LabelVolume &couinaud);

// Graph JSON with path_name, segment, confidence, generation and flags added
// to each branch, and the tree flags under "labeling_flags".
nlohmann::ordered_json labeling_to_json(const AnatomicalLabeling &labeling);

} // namespace vesselkit
