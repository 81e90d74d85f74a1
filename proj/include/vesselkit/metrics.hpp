#pragma once

#include <string>
#include <vector>

#include "vesselkit/skeleton.hpp"
#include "vesselkit/volume.hpp"

namespace vesselkit {

inline constexpr double kDefaultSurfaceTolMm = 2.0;

// Slack applied to "distance <= tolerance" tests so that values computed by
// the separable distance transform and by direct evaluation agree at ties.
inline constexpr double kToleranceSlackMm = 1e-9;

struct MetricOptions {
  double surface_tol_mm = kDefaultSurfaceTolMm;
  SkeletonMethod cldice_skeleton = SkeletonMethod::Lee;
  int soft_iterations = kDefaultSoftIterations;
  double hausdorff_percentile = 100.0;
};

struct ClassMetrics {
  int label = 0;
  double dice = 0, cldice = 0, surface_dice = 0, hausdorff_mm = 0;
};

struct MetricReport {
  double dice = 0;
  double cldice = 0;
  double surface_dice = 0;
  double surface_tolerance_mm = kDefaultSurfaceTolMm;
  double hausdorff_mm = 0;
  double hausdorff_percentile = 100.0;
  std::string cldice_skeleton = "lee";
  std::vector<ClassMetrics> per_class;
  std::vector<std::string> notes;
};

// 2|a ∩ b| / (|a| + |b|); 1 when both are empty.
double dice(const BinaryMask &a, const BinaryMask &b);

struct ClDiceTerms {
  double topology_precision = 0; // |S(pred) ∩ ref| / |S(pred)|
  double topology_sensitivity = 0; // |S(ref) ∩ pred| / |S(ref)|
  double value = 0;
};

// Harmonic mean of topology precision and topology sensitivity. Swapping the
// arguments swaps the two terms, so the value itself is symmetric.
ClDiceTerms cldice_terms(const BinaryMask &pred, const BinaryMask &ref, const BinaryMask &pred_skeleton,
                         const BinaryMask &ref_skeleton);
double cldice(const BinaryMask &pred, const BinaryMask &ref, SkeletonMethod method = SkeletonMethod::Lee,
              int soft_iterations = kDefaultSoftIterations);
double cldice_from_skeletons(const BinaryMask &pred, const BinaryMask &ref, const BinaryMask &pred_skeleton,
                             const BinaryMask &ref_skeleton);

// Foreground voxels with at least one background 6-neighbour; outside the grid
// counts as background.
BinaryMask surface(const BinaryMask &mask);

double surface_dice(const BinaryMask &a, const BinaryMask &b, double tol_mm = kDefaultSurfaceTolMm);

// Symmetric Hausdorff distance between surface voxel centers, in mm.
// percentile = 100 is the true maximum. Throws EmptyMask on empty input.
double hausdorff(const BinaryMask &a, const BinaryMask &b, double percentile = 100.0);

// Stand-in Hausdorff value when one side is empty: the grid's physical diagonal.
double worst_case_hausdorff(const Dims &dims, const Spacing &spacing);

MetricReport binary_report(const BinaryMask &pred, const BinaryMask &ref, const MetricOptions &options = {});

// Per-class metrics plus their unweighted mean. Classes absent from both
// volumes are skipped with a note; classes absent from one side score 0 and
// the worst-case Hausdorff.
MetricReport multiclass_report(const LabelVolume &pred, const LabelVolume &ref, const std::vector<int> &classes,
                               const MetricOptions &options = {});

// Skeleton comparison harness: candidate (e.g. soft or imported skeleton)
// scored against a reference skeleton (normally Lee).
MetricReport compare_skeletons(const BinaryMask &candidate, const BinaryMask &reference,
                               const MetricOptions &options = {});

std::string to_json_line(const MetricReport &report);

} // namespace vesselkit
