#include "vesselkit/metrics.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "vesselkit/kernels.hpp"

namespace vesselkit {

namespace {

std::size_t count_and(const BinaryMask &a, const BinaryMask &b) {
  const auto n = static_cast<std::ptrdiff_t>(a.size());
  std::size_t c = 0;
#pragma omp parallel for reduction(+ : c) schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i)
    if (a[static_cast<std::size_t>(i)] && b[static_cast<std::size_t>(i)]) ++c;
  return c;
}

BinaryMask skeleton_for(const BinaryMask &m, SkeletonMethod method, int soft_iterations) {
  return method == SkeletonMethod::Lee ? skeletonize_lee(m).mask : skeletonize_soft_mask(m, soft_iterations).mask;
}

// Directed distances from each surface voxel of `from` to the surface of `to`.
std::vector<double> directed_distances(const BinaryMask &from_surface, const DistanceField &to_field) {
  std::vector<double> out;
  for (std::size_t i = 0; i < from_surface.size(); ++i)
    if (from_surface[i]) out.push_back(to_field[i]);
  return out;
}

double percentile_of(std::vector<double> values, double percentile) {
  std::sort(values.begin(), values.end());
  if (percentile >= 100.0) return values.back();
  const auto n = values.size();
  auto rank = static_cast<std::size_t>(std::ceil(percentile / 100.0 * static_cast<double>(n)));
  rank = std::clamp<std::size_t>(rank, 1, n);
  return values[rank - 1];
}

const char *method_name(SkeletonMethod m) { return m == SkeletonMethod::Lee ? "lee" : "soft"; }

} // namespace

double dice(const BinaryMask &a, const BinaryMask &b) {
  require_same_grid(a, b, "dice");
  const auto na = a.count(), nb = b.count();
  if (na + nb == 0) return 1.0;
  return 2.0 * static_cast<double>(count_and(a, b)) / static_cast<double>(na + nb);
}

ClDiceTerms cldice_terms(const BinaryMask &pred, const BinaryMask &ref, const BinaryMask &pred_skeleton,
                         const BinaryMask &ref_skeleton) {
  require_same_grid(pred, ref, "cldice");
  require_same_grid(pred, pred_skeleton, "cldice");
  require_same_grid(ref, ref_skeleton, "cldice");
  ClDiceTerms t;
  if (pred.empty() && ref.empty()) {
    t.topology_precision = t.topology_sensitivity = t.value = 1.0;
    return t;
  }
  const auto sp = pred_skeleton.count(), sr = ref_skeleton.count();
  if (sp == 0 || sr == 0) return t;
  t.topology_precision = static_cast<double>(count_and(pred_skeleton, ref)) / static_cast<double>(sp);
  t.topology_sensitivity = static_cast<double>(count_and(ref_skeleton, pred)) / static_cast<double>(sr);
  const double sum = t.topology_precision + t.topology_sensitivity;
  t.value = sum == 0.0 ? 0.0 : 2.0 * t.topology_precision * t.topology_sensitivity / sum;
  return t;
}

double cldice_from_skeletons(const BinaryMask &pred, const BinaryMask &ref, const BinaryMask &pred_skeleton,
                             const BinaryMask &ref_skeleton) {
  return cldice_terms(pred, ref, pred_skeleton, ref_skeleton).value;
}

double cldice(const BinaryMask &pred, const BinaryMask &ref, SkeletonMethod method, int soft_iterations) {
  require_same_grid(pred, ref, "cldice");
  return cldice_from_skeletons(pred, ref, skeleton_for(pred, method, soft_iterations),
                               skeleton_for(ref, method, soft_iterations));
}

BinaryMask surface(const BinaryMask &mask) {
  const auto [nx, ny, nz] = mask.dims();
  BinaryMask out(mask.dims(), mask.spacing());
#pragma omp parallel for collapse(2) schedule(static)
  for (int z = 0; z < nz; ++z)
    for (int y = 0; y < ny; ++y)
      for (int x = 0; x < nx; ++x) {
        if (!mask(x, y, z)) continue;
        bool border = false;
        for (const auto &o : offsets6())
          if (!mask.get(x + o.x, y + o.y, z + o.z)) border = true;
        out(x, y, z) = border ? 1 : 0;
      }
  return out;
}

double surface_dice(const BinaryMask &a, const BinaryMask &b, double tol_mm) {
  require_same_grid(a, b, "surface_dice");
  if (!(tol_mm > 0.0)) throw DataError("surface_dice: tolerance must be positive");
  const auto sa = surface(a), sb = surface(b);
  const auto na = sa.count(), nb = sb.count();
  if (na + nb == 0) return 1.0;
  const auto da = distance_transform(sa), db = distance_transform(sb);
  const double limit = tol_mm + kToleranceSlackMm;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < sa.size(); ++i) {
    if (sa[i] && db[i] <= limit) ++hits;
    if (sb[i] && da[i] <= limit) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(na + nb);
}

double hausdorff(const BinaryMask &a, const BinaryMask &b, double percentile) {
  require_same_grid(a, b, "hausdorff");
  if (a.empty() || b.empty()) throw EmptyMask("hausdorff: input mask is empty");
  if (!(percentile > 0.0 && percentile <= 100.0)) throw DataError("hausdorff: percentile must lie in (0, 100]");
  const auto sa = surface(a), sb = surface(b);
  const auto ab = directed_distances(sa, distance_transform(sb));
  const auto ba = directed_distances(sb, distance_transform(sa));
  return std::max(percentile_of(ab, percentile), percentile_of(ba, percentile));
}

double worst_case_hausdorff(const Dims &d, const Spacing &s) {
  const double x = std::max(0, d.nx - 1) * s.x, y = std::max(0, d.ny - 1) * s.y, z = std::max(0, d.nz - 1) * s.z;
  return std::sqrt(x * x + y * y + z * z);
}

MetricReport binary_report(const BinaryMask &pred, const BinaryMask &ref, const MetricOptions &options) {
  require_same_grid(pred, ref, "metrics");
  MetricReport r;
  r.surface_tolerance_mm = options.surface_tol_mm;
  r.hausdorff_percentile = options.hausdorff_percentile;
  r.cldice_skeleton = method_name(options.cldice_skeleton);
  r.dice = dice(pred, ref);
  r.cldice = cldice(pred, ref, options.cldice_skeleton, options.soft_iterations);
  r.surface_dice = surface_dice(pred, ref, options.surface_tol_mm);
  if (pred.empty() && ref.empty()) {
    r.hausdorff_mm = 0.0;
    r.notes.push_back("both masks empty: identity conventions applied");
  } else if (pred.empty() || ref.empty()) {
    r.hausdorff_mm = worst_case_hausdorff(pred.dims(), pred.spacing());
    r.notes.push_back("one mask empty: hausdorff set to grid diagonal");
  } else {
    r.hausdorff_mm = hausdorff(pred, ref, options.hausdorff_percentile);
  }
  return r;
}

MetricReport multiclass_report(const LabelVolume &pred, const LabelVolume &ref, const std::vector<int> &classes,
                               const MetricOptions &options) {
  require_same_grid(pred, ref, "metrics");
  MetricReport r;
  r.surface_tolerance_mm = options.surface_tol_mm;
  r.hausdorff_percentile = options.hausdorff_percentile;
  r.cldice_skeleton = method_name(options.cldice_skeleton);

  for (const int c : classes) {
    if (c < 0 || c > 255) throw DataError("metrics: class label out of range: " + std::to_string(c));
    const auto pa = mask_of(pred, static_cast<std::uint8_t>(c));
    const auto pb = mask_of(ref, static_cast<std::uint8_t>(c));
    if (pa.empty() && pb.empty()) {
      r.notes.push_back("class " + std::to_string(c) + " absent from both volumes: skipped");
      continue;
    }
    ClassMetrics m;
    m.label = c;
    if (pa.empty() || pb.empty()) {
      m.hausdorff_mm = worst_case_hausdorff(pred.dims(), pred.spacing());
      r.notes.push_back("class " + std::to_string(c) + " absent from one volume: worst-case values");
    } else {
      const auto b = binary_report(pa, pb, options);
      m.dice = b.dice;
      m.cldice = b.cldice;
      m.surface_dice = b.surface_dice;
      m.hausdorff_mm = b.hausdorff_mm;
    }
    r.per_class.push_back(m);
  }

  if (r.per_class.empty()) {
    r.dice = r.cldice = r.surface_dice = 1.0;
    r.hausdorff_mm = 0.0;
    r.notes.push_back("no class present: identity conventions applied");
    return r;
  }
  const double n = static_cast<double>(r.per_class.size());
  for (const auto &m : r.per_class) {
    r.dice += m.dice / n;
    r.cldice += m.cldice / n;
    r.surface_dice += m.surface_dice / n;
    r.hausdorff_mm += m.hausdorff_mm / n;
  }
  return r;
}

MetricReport compare_skeletons(const BinaryMask &candidate, const BinaryMask &reference,
                               const MetricOptions &options) {
  require_same_grid(candidate, reference, "compare_skeletons");
  return binary_report(candidate, reference, options);
}

std::string to_json_line(const MetricReport &r) {
  nlohmann::ordered_json j;
  j["dice"] = r.dice;
  j["cldice"] = r.cldice;
  j["surface_dice"] = r.surface_dice;
  j["surface_tolerance_mm"] = r.surface_tolerance_mm;
  j["hausdorff_mm"] = r.hausdorff_mm;
  j["hausdorff_percentile"] = r.hausdorff_percentile;
  j["cldice_skeleton"] = r.cldice_skeleton;
  auto per = nlohmann::ordered_json::array();
  for (const auto &m : r.per_class)
    per.push_back({{"label", m.label},
                   {"dice", m.dice},
                   {"cldice", m.cldice},
                   {"surface_dice", m.surface_dice},
                   {"hausdorff_mm", m.hausdorff_mm}});
  j["per_class"] = per;
  j["notes"] = r.notes;
  return j.dump();
}

} // namespace vesselkit
