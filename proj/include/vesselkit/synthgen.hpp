#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "vesselkit/volume.hpp"

namespace vesselkit {

struct SyntheticTreeSpec {
  std::uint64_t seed = 1;
  int depth = 3;       // segment levels; 1 = trunk only
  int first_split = 2; // children at the end of the trunk (2 or 3)
  double trunk_length_mm = 30.0;
  double length_decay = 0.8;
  double trunk_radius_mm = 3.0;
  double radius_exponent = 3.0; // parent^n = k * child^n for k equal children
  double branch_angle_deg = 35.0;
  double angle_jitter_deg = 0.0;
  Dims dims{96, 96, 96};
  Spacing spacing{};

  bool second_tree = false;    // add a hepatic tree growing from the opposite face
  Vec3 second_offset_mm{};     // shift of the second root from the grid's x/z centre
  int bridges = 0;             // extra vessels from one tree ending on the other
  double bridge_max_angle_deg = 40.0;
  double bridge_max_length_mm = 40.0;
  double bridge_min_entry_angle_deg = 75.0; // line angle between a bridge and the segment it joins

  double dropout = 0.0; // fraction of labelled voxels removed from the inference
  double swap = 0.0;    // fraction of segments with flipped inference labels
  int blob_voxels = 100;

  double clearance_voxels = 3.0; // threshold for `well_separated`
  double liver_start_fraction = 0.5; // liver begins this far along the trunk unless a branch reaches further back
};

struct TruthSegment {
  int id = -1;
  int tree = 1; // 1 portal, 2 hepatic
  int parent = -1;
  int depth = 0; // trunk 0
  Vec3 start, end; // mm
  double radius_mm = 0;
  double planned_angle_deg = 0; // angle to the parent direction
  std::vector<int> children;
  bool bridge = false;

  double length_mm() const { return (end - start).norm(); }
  Vec3 direction() const;
};

struct GroundTruth {
  SyntheticTreeSpec spec;
  std::vector<TruthSegment> segments;
  LabelVolume labels;              // 1/2 per rendered voxel
  Grid<std::int32_t> owner;        // segment id per voxel, -1 elsewhere
  BinaryMask liver;
  LabelVolume couinaud;            // 2x2x2 partition of the liver box, labels 1-8
  LabelVolume inference;           // corrupted copy of `labels`
  int bridges_made = 0;
  double min_clearance_mm = 0;     // smallest surface gap between non-adjacent segments
  bool well_separated = false;
  bool well_formed = false;        // every root lies outside the liver box

  BinaryMask support() const { return mask_nonzero(labels); }
  int segment_count(int tree) const;
  int bifurcation_count(int tree) const;
};

// Uniform double in [0, 1) from 53 random bits; fixed across platforms.
double uniform01(std::uint64_t bits);

GroundTruth generate(const SyntheticTreeSpec &spec);

// Removes `dropout` of the labelled voxels in contiguous blobs and flips the
// labels of round(swap * segments) whole segments. Bridges are never present
// in the result.
LabelVolume corrupt_inference(const GroundTruth &truth, double dropout, double swap, std::uint64_t seed);

// Couinaud-style labels for an axis-aligned liver box: 1 + 4*ix + 2*iy + iz,
// ix = 1 on the high-x half (right liver 5-8), ix = 0 low-x (segments 1-4).
LabelVolume couinaud_boxes(const BinaryMask &liver);

nlohmann::ordered_json spec_to_json(const SyntheticTreeSpec &spec);
SyntheticTreeSpec spec_from_json(const nlohmann::json &j);
nlohmann::ordered_json truth_to_json(const GroundTruth &truth);

} // namespace vesselkit
