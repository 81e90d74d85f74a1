#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "vesselkit/graph.hpp"
#include "vesselkit/kernels.hpp"
#include "vesselkit/volume.hpp"

namespace vesselkit {

struct SeparationParams {
  int dilate_radius = 1;
  int min_cc = 50;            // components below this size touching neither tree are dropped
  double max_dist_mm = 10.0;  // components farther than this from both trees are dropped
  double angle_deg = 60.0;    // strict: a branch attaches only below this angle
  int max_iters = 20;
};

struct ConflictComponent {
  int id = 0;
  std::vector<std::size_t> voxels; // linear indices, ascending
  bool touches_portal = false, touches_hepatic = false;
  std::size_t portal_contacts = 0, hepatic_contacts = 0; // component voxels 26-adjacent to each tree
  double portal_distance_mm = kInfDistance, hepatic_distance_mm = kInfDistance;

  std::size_t size() const { return voxels.size(); }
};

// Labels on the original support: 0 unassigned, 1 portal, 2 hepatic, 3 unresolved.
struct SeparationState {
  BinaryMask original;
  LabelVolume labels;
  std::vector<ConflictComponent> conflict_components;
  int iteration = 0;
  std::size_t conflicted = 0; // voxels in conflict components after the last triage
};

// Dilates each inferred class, keeps it on the original support and resolves
// doubly claimed voxels by distance to the undilated classes. Inferred labels
// other than 1 and 2 (0 or 3) count as unlabelled.
SeparationState paste_inference(const BinaryMask &original, const LabelVolume &inferred, int dilate_radius);

struct TriageCounts {
  int absorbed = 0, dropped = 0, conflicts = 0;
};

// Splits unassigned voxels into 26-connected components and applies the
// drop/absorb rules; components touching both trees become conflicts.
TriageCounts triage_components(SeparationState &state, const SeparationParams &params = {});

inline constexpr int kContextMarginVoxels = 6;
inline constexpr double kMinFixedRunMm = 5.0; // shorter tree runs on a branch count as component

struct BranchDecision {
  int branch = -1;
  std::uint8_t label = 0; // 0 when neither tree could take it
  bool fixed = false;     // lies on already labelled tree voxels
  double distance_mm = 0; // from the attaching tree's voxels
  double angle_deg = 0;   // against the upstream chord; NaN for fixed branches
};

struct Arbitration {
  VesselGraph graph; // skeleton graph of the component plus nearby tree voxels, full-grid coordinates
  std::vector<BranchDecision> decisions; // indexed by branch id
  std::vector<int> visit_order;          // candidate branches in attachment order
  std::vector<std::size_t> voxels;
  std::vector<std::uint8_t> labels; // per component voxel; 0 stays unassigned
  bool lump = false;                 // skeleton misses the component: whole component by contact count
};

// Skeletonizes the component together with the labelled tree voxels around
// it, cutting branches where they pass between tree and component voxels.
// Pieces on a tree are fixed to it; the remaining
// branches are attached outward from the fixed ones, nearest first, when
// their chord makes an angle below angle_deg_max with the upstream chord.
// Component voxels take the label of their nearest skeleton voxel.
Arbitration arbitrate_conflict(const ConflictComponent &component, const SeparationState &state,
                               double angle_deg_max = 60.0, int context_margin = kContextMarginVoxels);

struct SeparationReport {
  int iterations = 0;
  std::size_t portal = 0, hepatic = 0, unresolved = 0;
  int absorbed = 0, arbitrated = 0, dropped = 0;
  std::vector<std::size_t> conflicted_history; // conflicted voxels after each triage
  std::string stop_reason;                     // "resolved", "no_progress" or "max_iters"
  SeparationParams params;
};

struct SeparationResult {
  LabelVolume labels;
  SeparationReport report;
};

SeparationResult separate(const BinaryMask &original, const LabelVolume &inferred, const SeparationParams &params = {});

nlohmann::ordered_json report_to_json(const SeparationReport &report);

} // namespace vesselkit
