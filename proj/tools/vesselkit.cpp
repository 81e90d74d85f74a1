#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>

#include <omp.h>

#include <CLI11.hpp>

#include "vesselkit/anatomy.hpp"
#include "vesselkit/graph_io.hpp"
#include "vesselkit/metrics.hpp"
#include "vesselkit/morphometry.hpp"
#include "vesselkit/pipeline.hpp"
#include "vesselkit/skeleton.hpp"
#include "vesselkit/synthgen.hpp"
#include "vesselkit/vvol.hpp"

namespace fs = std::filesystem;
using namespace vesselkit;
using nlohmann::ordered_json;

namespace {

constexpr int kExitUsage = 2, kExitData = 3, kExitInternal = 4;

struct Globals {
  int jobs = 0; // 0: OpenMP default
  bool quiet = false;
};

class Timer {
public:
  double ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_).count();
  }

private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

void emit(const ordered_json &report, const std::string &report_path, const Globals &g) {
  if (!report_path.empty()) write_json(report_path, report);
  else if (!g.quiet) std::cout << report.dump() << '\n';
}

void print_error(const std::string &kind, const std::string &message, const std::string &stage = {},
                 const std::string &case_id = {}) {
  ordered_json e{{"kind", kind}, {"message", message}};
  if (!stage.empty()) e["stage"] = stage;
  if (!case_id.empty()) e["case_id"] = case_id;
  std::cerr << ordered_json{{"error", e}}.dump() << '\n';
}

std::vector<int> parse_classes(const std::string &s) {
  std::vector<int> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    std::size_t used = 0;
    int v = -1;
    try {
      v = std::stoi(item, &used);
    } catch (const std::exception &) {
      used = 0;
    }
    if (used != item.size() || v < 1 || v > 255) throw CLI::ValidationError("--classes", "bad class '" + item + "'");
    out.push_back(v);
  }
  return out;
}

void write_text(const fs::path &path, const std::string &text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw DataError("failed writing " + path.string());
}

// Subcommand bodies.

struct SkeletonizeArgs {
  std::string in, out, method = "lee", report;
  int soft_iters = kDefaultSoftIterations;
};

ordered_json cmd_skeletonize(const SkeletonizeArgs &a) {
  auto env = make_envelope("skeletonize", {{"method", a.method}, {"soft_iters", a.soft_iters}});
  Timer t;
  const auto mask = mask_nonzero(read_volume(a.in));
  env["timings_ms"]["read"] = t.ms();
  Timer k;
  const auto skel = a.method == "lee" ? skeletonize_lee(mask) : skeletonize_soft_mask(mask, a.soft_iters);
  env["timings_ms"]["skeletonize"] = k.ms();
  write_volume(to_labels(skel.mask), a.out);
  env["voxels"] = {{"input", mask.count()}, {"skeleton", skel.mask.count()}};
  if (mask.empty()) env["warnings"].push_back("input mask is empty");
  env["timings_ms"]["total"] = t.ms();
  return env;
}

struct MetricsArgs {
  std::string pred, ref, classes, skeleton = "lee", report;
  double surface_tol_mm = kDefaultSurfaceTolMm, hausdorff_percentile = 100.0;
  int soft_iters = kDefaultSoftIterations;
};

ordered_json cmd_metrics(const MetricsArgs &a) {
  MetricOptions o;
  o.surface_tol_mm = a.surface_tol_mm;
  o.cldice_skeleton = a.skeleton == "lee" ? SkeletonMethod::Lee : SkeletonMethod::Soft;
  o.soft_iterations = a.soft_iters;
  o.hausdorff_percentile = a.hausdorff_percentile;
  const auto classes = parse_classes(a.classes);
  Timer t;
  const auto pred = read_volume(a.pred), ref = read_volume(a.ref);
  require_same_grid(pred, ref, "metrics");
  const auto r = classes.empty() ? binary_report(mask_nonzero(pred), mask_nonzero(ref), o)
                                 : multiclass_report(pred, ref, classes, o);
  auto env = make_envelope("metrics", {{"classes", classes},
                                       {"surface_tol_mm", a.surface_tol_mm},
                                       {"skeleton", a.skeleton},
                                       {"soft_iters", a.soft_iters},
                                       {"hausdorff_percentile", a.hausdorff_percentile}});
  const auto body = ordered_json::parse(to_json_line(r));
  for (const auto &[k, v] : body.items()) {
    if (k == "notes") {
      for (const auto &n : v) env["warnings"].push_back(n);
      continue;
    }
    env[k] = v;
  }
  env["timings_ms"]["total"] = t.ms();
  return env;
}

struct GraphArgs {
  std::string skeleton, mask, liver, out, report;
  double min_branch_mm = kDefaultMinBranchMm;
};

ordered_json cmd_graph(const GraphArgs &a) {
  auto env = make_envelope("graph", {{"min_branch_mm", a.min_branch_mm}});
  Timer t;
  const auto skel = mask_nonzero(read_volume(a.skeleton));
  const auto mask = mask_nonzero(read_volume(a.mask));
  const auto liver = mask_nonzero(read_volume(a.liver));
  require_same_grid(skel, mask, "graph: skeleton vs mask");
  require_same_grid(skel, liver, "graph: skeleton vs liver");
  if (skel.empty()) throw DataError("graph: skeleton is empty");
  const auto r = build_tree(skel, mask, liver, a.min_branch_mm);
  const auto problems = validate_tree(r.tree);
  if (!problems.empty()) throw InvariantError("graph: " + problems.front());
  write_json(a.out, graph_to_json(r.tree));
  env["branches"] = r.tree.branches.size();
  env["nodes"] = r.tree.nodes.size();
  env["removed_spurs"] = r.removed_spurs;
  env["broken_cycles"] = r.broken_cycles;
  env["unreachable_nodes"] = r.unreachable_nodes.size();
  if (!r.unreachable_nodes.empty())
    env["warnings"].push_back(std::to_string(r.unreachable_nodes.size()) + " skeleton nodes outside the rooted component");
  env["timings_ms"]["total"] = t.ms();
  return env;
}

struct SeparateArgs {
  std::string single, dual, out, report;
  SeparationParams p;
};

ordered_json cmd_separate(const SeparateArgs &a) {
  Timer t;
  const auto single = mask_nonzero(read_volume(a.single));
  const auto dual = read_volume(a.dual);
  const auto r = separate(single, dual, a.p);
  write_volume(r.labels, a.out);
  const auto body = report_to_json(r.report);
  auto env = make_envelope("separate", body["params"]);
  for (const auto &[k, v] : body.items())
    if (k != "params") env[k] = v;
  if (r.report.unresolved) env["warnings"].push_back(std::to_string(r.report.unresolved) + " voxels unresolved");
  env["timings_ms"]["total"] = t.ms();
  return env;
}

struct LabelArgs {
  std::string graph, couinaud, tree = "portal", out, report;
};

ordered_json cmd_label(const LabelArgs &a) {
  auto env = make_envelope("label", {{"tree", a.tree}});
  Timer t;
  const auto g = graph_from_json(read_json(a.graph));
  const auto c = read_volume(a.couinaud);
  const auto l = a.tree == "portal" ? label_portal(g, c) : label_hepatic(g, c);
  write_json(a.out, labeling_to_json(l));
  env["branches"] = l.branches.size();
  for (const auto &f : l.flags) env["warnings"].push_back(f);
  env["timings_ms"]["total"] = t.ms();
  return env;
}

struct MorphometryArgs {
  std::string graph, tree_id, tree_label = "portal", out, report;
  int tangent_window = kTangentWindow;
};

ordered_json cmd_morphometry(const MorphometryArgs &a) {
  auto env = make_envelope("morphometry", {{"tree_id", a.tree_id},
                                           {"tree_label", a.tree_label},
                                           {"tangent_window", a.tangent_window}});
  Timer t;
  const auto j = read_json(a.graph);
  const auto g = graph_from_json(j);
  std::vector<std::string> names;
  for (const auto &b : j.value("branches", nlohmann::json::array()))
    if (b.contains("path_name")) names.push_back(b["path_name"].get<std::string>());
  if (names.size() != g.branches.size()) {
    if (!names.empty()) throw DataError("morphometry: path_name missing on some branches");
    env["warnings"].push_back("graph carries no anatomical names; path_name left empty");
  }
  const auto rows = extract_table(g, names, a.tree_label, a.tree_id, a.tangent_window);
  write_text(a.out, table_to_csv(rows));
  std::map<std::string, int> flags;
  for (const auto &r : rows)
    for (const auto &f : r.flags) ++flags[f];
  for (const auto &[f, n] : flags) env["warnings"].push_back(std::to_string(n) + " rows " + f);
  env["rows"] = rows.size();
  env["notes"] = {"end_angle: angle between the full chord and the terminal tangent",
                  "children_ratio: length / radius per child"};
  env["timings_ms"]["total"] = t.ms();
  return env;
}

struct SynthArgs {
  std::string spec, out_dir, report;
};

ordered_json cmd_synth(const SynthArgs &a) {
  Timer t;
  const auto spec = spec_from_json(read_json(a.spec));
  auto env = make_envelope("synth", spec_to_json(spec));
  const auto gt = generate(spec);
  const fs::path dir = a.out_dir;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create " + dir.string() + ": " + ec.message());
  write_volume(to_labels(gt.support()), dir / "truth.vvol");
  write_volume(gt.labels, dir / "labels.vvol");
  write_volume(gt.inference, dir / "inference.vvol");
  write_volume(gt.couinaud, dir / "couinaud.vvol");
  write_volume(to_labels(gt.liver), dir / "liver.vvol");
  write_json(dir / "truth_graph.json", truth_to_json(gt));
  write_json(dir / "spec-echo.json", spec_to_json(spec));
  const std::string id = dir.filename().empty() ? dir.parent_path().filename().string() : dir.filename().string();
  write_json(dir / "manifest.json", {{"case_id", id.empty() ? "case" : id},
                                     {"single", "truth.vvol"},
                                     {"dual", "inference.vvol"},
                                     {"liver", "liver.vvol"},
                                     {"couinaud", "couinaud.vvol"},
                                     {"out_dir", "out"}});
  env["segments"] = gt.segments.size();
  env["bridges"] = gt.bridges_made;
  env["well_formed"] = gt.well_formed;
  env["well_separated"] = gt.well_separated;
  if (!gt.well_formed) env["warnings"].push_back("a root lies inside the liver box");
  env["timings_ms"]["total"] = t.ms();
  return env;
}

struct PipelineArgs {
  std::vector<std::string> manifests;
  std::string report;
  PipelineParams p;
};

int cmd_pipeline(const PipelineArgs &a, const Globals &g) {
  Timer t;
  auto env = make_envelope("pipeline", params_to_json(a.p));
  const auto n = a.manifests.size();
  std::vector<ordered_json> results(n);
  std::vector<int> codes(n, 0);
  const int threads = g.jobs > 0 ? g.jobs : 1;

#pragma omp parallel for schedule(dynamic) num_threads(threads)
  for (std::size_t i = 0; i < n; ++i) {
    ordered_json r{{"manifest", a.manifests[i]}};
    try {
      const auto m = read_manifest(a.manifests[i]);
      r["case_id"] = m.case_id;
      const auto rep = run_case(m, a.p);
      r["status"] = "ok";
      r["report"] = (m.out_dir / "report.json").string();
      r["warnings"] = rep["warnings"];
    } catch (const StageError &e) {
      codes[i] = e.exit_code();
      r["status"] = "error";
      r["error"] = {{"stage", e.stage()}, {"case_id", e.case_id()}, {"message", e.what()}};
    } catch (const DataError &e) {
      codes[i] = kExitData;
      r["status"] = "error";
      r["error"] = {{"stage", "manifest"}, {"message", e.what()}};
    } catch (const std::exception &e) {
      codes[i] = kExitInternal;
      r["status"] = "error";
      r["error"] = {{"stage", "manifest"}, {"message", e.what()}};
    }
    results[i] = std::move(r);
  }

  int code = 0;
  for (std::size_t i = 0; i < n; ++i) {
    code = std::max(code, codes[i]);
    if (codes[i]) {
      const auto &e = results[i]["error"];
      print_error(codes[i] == kExitData ? "data" : "internal", e["message"], e["stage"], e.value("case_id", ""));
    }
  }
  env["cases"] = results;
  env["timings_ms"]["total"] = t.ms();
  emit(env, a.report, g);
  return code;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Vessel segmentation post-processing: skeletons, metrics, graphs, tree separation, anatomy and "
               "morphometry."};
  app.set_version_flag("--version", std::string("vesselkit ") + kToolVersion);
  Globals g;
  app.add_option("--jobs", g.jobs, "Worker threads (0: OpenMP default)")->check(CLI::NonNegativeNumber);
  app.add_flag("--quiet", g.quiet, "Do not print reports to stdout");
  app.require_subcommand(1);

  SkeletonizeArgs sk;
  auto *c_sk = app.add_subcommand("skeletonize", "Skeletonize a mask");
  c_sk->add_option("--in", sk.in, "Input volume")->required()->check(CLI::ExistingFile);
  c_sk->add_option("--out", sk.out, "Output skeleton volume")->required();
  c_sk->add_option("--method", sk.method, "lee or soft")->capture_default_str()->check(CLI::IsMember({"lee", "soft"}));
  c_sk->add_option("--soft-iters", sk.soft_iters, "Soft skeleton iterations")->capture_default_str()->check(CLI::PositiveNumber);
  c_sk->add_option("--report", sk.report, "Write the report here instead of stdout");

  MetricsArgs me;
  auto *c_me = app.add_subcommand("metrics", "Score a prediction against a reference");
  c_me->add_option("--pred", me.pred, "Predicted volume")->required()->check(CLI::ExistingFile);
  c_me->add_option("--ref", me.ref, "Reference volume")->required()->check(CLI::ExistingFile);
  c_me->add_option("--classes", me.classes, "Comma-separated labels; binary on nonzero when omitted");
  c_me->add_option("--surface-tol-mm", me.surface_tol_mm, "Surface dice tolerance")->capture_default_str()->check(CLI::NonNegativeNumber);
  c_me->add_option("--skeleton", me.skeleton, "Skeleton used by cldice")->capture_default_str()->check(CLI::IsMember({"lee", "soft"}));
  c_me->add_option("--soft-iters", me.soft_iters, "Soft skeleton iterations")->capture_default_str()->check(CLI::PositiveNumber);
  c_me->add_option("--hausdorff-percentile", me.hausdorff_percentile, "Hausdorff percentile")->capture_default_str()->check(CLI::Range(0.0, 100.0));
  c_me->add_option("--report", me.report, "Write the report here instead of stdout");

  GraphArgs gr;
  auto *c_gr = app.add_subcommand("graph", "Build the oriented branch graph of a skeleton");
  c_gr->add_option("--skeleton", gr.skeleton, "Skeleton volume")->required()->check(CLI::ExistingFile);
  c_gr->add_option("--mask", gr.mask, "Vessel mask for radii")->required()->check(CLI::ExistingFile);
  c_gr->add_option("--liver", gr.liver, "Liver mask for root detection")->required()->check(CLI::ExistingFile);
  c_gr->add_option("--out", gr.out, "Output graph JSON")->required();
  c_gr->add_option("--min-branch-mm", gr.min_branch_mm, "Spur pruning length")->capture_default_str()->check(CLI::NonNegativeNumber);
  c_gr->add_option("--report", gr.report, "Write the report here instead of stdout");

  SeparateArgs se;
  auto *c_se = app.add_subcommand("separate", "Separate portal and hepatic trees");
  c_se->add_option("--single", se.single, "Single-label vessel segmentation")->required()->check(CLI::ExistingFile);
  c_se->add_option("--dual", se.dual, "Dual-label inference")->required()->check(CLI::ExistingFile);
  c_se->add_option("--out", se.out, "Output label volume")->required();
  c_se->add_option("--dilate", se.p.dilate_radius, "Inference dilation radius")->capture_default_str()->check(CLI::NonNegativeNumber);
  c_se->add_option("--min-cc", se.p.min_cc, "Drop threshold in voxels")->capture_default_str()->check(CLI::NonNegativeNumber);
  c_se->add_option("--max-dist-mm", se.p.max_dist_mm, "Drop distance")->capture_default_str()->check(CLI::NonNegativeNumber);
  c_se->add_option("--angle-deg", se.p.angle_deg, "Strict attachment angle")->capture_default_str()->check(CLI::Range(0.0, 180.0));
  c_se->add_option("--max-iters", se.p.max_iters, "Iteration cap")->capture_default_str()->check(CLI::PositiveNumber);
  c_se->add_option("--report", se.report, "Write the report here instead of stdout");

  LabelArgs la;
  auto *c_la = app.add_subcommand("label", "Name branches from Couinaud segments");
  c_la->add_option("--graph", la.graph, "Oriented graph JSON")->required()->check(CLI::ExistingFile);
  c_la->add_option("--couinaud", la.couinaud, "Couinaud segment volume")->required()->check(CLI::ExistingFile);
  c_la->add_option("--tree", la.tree, "portal or hepatic")->required()->check(CLI::IsMember({"portal", "hepatic"}));
  c_la->add_option("--out", la.out, "Output labelled graph JSON")->required();
  c_la->add_option("--report", la.report, "Write the report here instead of stdout");

  MorphometryArgs mo;
  auto *c_mo = app.add_subcommand("morphometry", "Per-branch morphometry table");
  c_mo->add_option("--graph", mo.graph, "Labelled graph JSON")->required()->check(CLI::ExistingFile);
  c_mo->add_option("--tree-id", mo.tree_id, "Case identifier")->required();
  c_mo->add_option("--tree-label", mo.tree_label, "portal or hepatic")->required()->check(CLI::IsMember({"portal", "hepatic"}));
  c_mo->add_option("--out", mo.out, "Output CSV")->required();
  c_mo->add_option("--tangent-window", mo.tangent_window, "Tangent window in voxels")->capture_default_str()->check(CLI::PositiveNumber);
  c_mo->add_option("--report", mo.report, "Write the report here instead of stdout");

  SynthArgs sy;
  auto *c_sy = app.add_subcommand("synth", "Generate a synthetic case");
  c_sy->add_option("--spec", sy.spec, "Generator spec JSON")->required()->check(CLI::ExistingFile);
  c_sy->add_option("--out-dir", sy.out_dir, "Output directory")->required();
  c_sy->add_option("--report", sy.report, "Write the report here instead of stdout");

  PipelineArgs pi;
  auto *c_pi = app.add_subcommand("pipeline", "Run the full pipeline on case manifests");
  c_pi->add_option("--manifest,manifests", pi.manifests, "Case manifest JSON files")->required();
  c_pi->add_option("--dilate", pi.p.separation.dilate_radius, "Inference dilation radius")->capture_default_str()->check(CLI::NonNegativeNumber);
  c_pi->add_option("--min-cc", pi.p.separation.min_cc, "Drop threshold in voxels")->capture_default_str()->check(CLI::NonNegativeNumber);
  c_pi->add_option("--max-dist-mm", pi.p.separation.max_dist_mm, "Drop distance")->capture_default_str()->check(CLI::NonNegativeNumber);
  c_pi->add_option("--angle-deg", pi.p.separation.angle_deg, "Strict attachment angle")->capture_default_str()->check(CLI::Range(0.0, 180.0));
  c_pi->add_option("--max-iters", pi.p.separation.max_iters, "Iteration cap")->capture_default_str()->check(CLI::PositiveNumber);
  c_pi->add_option("--min-branch-mm", pi.p.min_branch_mm, "Spur pruning length")->capture_default_str()->check(CLI::NonNegativeNumber);
  c_pi->add_option("--tangent-window", pi.p.tangent_window, "Tangent window in voxels")->capture_default_str()->check(CLI::PositiveNumber);
  c_pi->add_option("--report", pi.report, "Write the batch summary here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    app.exit(e);
    return kExitUsage;
  }

  if (g.jobs > 0) omp_set_num_threads(g.jobs);
  std::string stage;
  try {
    if (*c_pi) return cmd_pipeline(pi, g);
    ordered_json report;
    std::string path;
    if (*c_sk) stage = "skeletonize", report = cmd_skeletonize(sk), path = sk.report;
    else if (*c_me) stage = "metrics", report = cmd_metrics(me), path = me.report;
    else if (*c_gr) stage = "graph", report = cmd_graph(gr), path = gr.report;
    else if (*c_se) stage = "separate", report = cmd_separate(se), path = se.report;
    else if (*c_la) stage = "label", report = cmd_label(la), path = la.report;
    else if (*c_mo) stage = "morphometry", report = cmd_morphometry(mo), path = mo.report;
    else if (*c_sy) stage = "synth", report = cmd_synth(sy), path = sy.report;
    emit(report, path, g);
    return 0;
  } catch (const CLI::ValidationError &e) {
    print_error("usage", e.what(), stage);
    return kExitUsage;
  } catch (const DataError &e) {
    print_error("data", e.what(), stage);
    return kExitData;
  } catch (const std::exception &e) {
    print_error("internal", e.what(), stage);
    return kExitInternal;
  }
}
