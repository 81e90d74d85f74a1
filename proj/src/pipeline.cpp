#include "vesselkit/pipeline.hpp"

#include <chrono>
#include <fstream>
#include <map>

#include "vesselkit/anatomy.hpp"
#include "vesselkit/graph_io.hpp"
#include "vesselkit/skeleton.hpp"
#include "vesselkit/vvol.hpp"

namespace vesselkit {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

fs::path resolve(const nlohmann::json &j, const char *key, const fs::path &base) {
  if (!j.contains(key) || !j[key].is_string()) throw DataError(std::string("manifest: missing string field '") + key + "'");
  const fs::path p = j[key].get<std::string>();
  return p.is_absolute() ? p : base / p;
}

class Stopwatch {
public:
  double lap_ms() {
    const auto now = std::chrono::steady_clock::now();
    const double ms = std::chrono::duration<double, std::milli>(now - last_).count();
    last_ = now;
    return ms;
  }

private:
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

struct Tree {
  const char *name;
  std::uint8_t label;
};
constexpr Tree kTrees[] = {{"portal", label::portal}, {"hepatic", label::hepatic}};

} // namespace

CaseManifest manifest_from_json(const nlohmann::json &j, const fs::path &base_dir) {
  if (!j.is_object()) throw DataError("manifest: expected a JSON object");
  CaseManifest m;
  if (!j.contains("case_id") || !j["case_id"].is_string() || j["case_id"].get<std::string>().empty())
    throw DataError("manifest: missing case_id");
  m.case_id = j["case_id"].get<std::string>();
  m.single = resolve(j, "single", base_dir);
  m.dual = resolve(j, "dual", base_dir);
  m.liver = resolve(j, "liver", base_dir);
  m.couinaud = resolve(j, "couinaud", base_dir);
  m.out_dir = resolve(j, "out_dir", base_dir);
  return m;
}

CaseManifest read_manifest(const fs::path &path) { return manifest_from_json(read_json(path), path.parent_path()); }

nlohmann::ordered_json manifest_to_json(const CaseManifest &m) {
  return {{"case_id", m.case_id},   {"single", m.single.string()},     {"dual", m.dual.string()},
          {"liver", m.liver.string()}, {"couinaud", m.couinaud.string()}, {"out_dir", m.out_dir.string()}};
}

void check_manifest(const CaseManifest &m) {
  const std::pair<const char *, const fs::path *> inputs[] = {
      {"single", &m.single}, {"dual", &m.dual}, {"liver", &m.liver}, {"couinaud", &m.couinaud}};
  for (const auto &[what, path] : inputs)
    if (!fs::is_regular_file(*path))
      throw DataError("case " + m.case_id + ": " + what + " file not found: " + path->string());
}

nlohmann::ordered_json params_to_json(const PipelineParams &p) {
  return {{"dilate", p.separation.dilate_radius},     {"min_cc", p.separation.min_cc},
          {"max_dist_mm", p.separation.max_dist_mm},  {"angle_deg", p.separation.angle_deg},
          {"max_iters", p.separation.max_iters},       {"min_branch_mm", p.min_branch_mm},
          {"tangent_window", p.tangent_window},        {"skeleton_method", "lee"}};
}

nlohmann::ordered_json make_envelope(const std::string &command, nlohmann::ordered_json params) {
  nlohmann::ordered_json j;
  j["tool_version"] = kToolVersion;
  j["command"] = command;
  j["params"] = std::move(params);
  j["timings_ms"] = nlohmann::ordered_json::object();
  j["warnings"] = nlohmann::ordered_json::array();
  return j;
}

nlohmann::ordered_json run_case(const CaseManifest &m, const PipelineParams &params) {
  auto report = make_envelope("pipeline", params_to_json(params));
  report["case_id"] = m.case_id;
  report["stages"] = kPipelineStages;
  // Keys are added to `report` below, so these are kept apart and merged at the end.
  auto timings = ordered_json::object();
  auto warnings = ordered_json::array();
  std::vector<std::string> artifacts;
  Stopwatch clock, total;

  std::string stage = "load";
  auto run = [&](const std::string &name, auto &&body) {
    stage = name;
    try {
      body();
    } catch (const DataError &e) {
      throw StageError(stage, m.case_id, 3, e.what());
    } catch (const std::exception &e) {
      throw StageError(stage, m.case_id, 4, e.what());
    }
    timings[name] = clock.lap_ms();
  };
  auto out = [&](const std::string &file) {
    artifacts.push_back(file);
    return m.out_dir / file;
  };

  LabelVolume single, dual, couinaud;
  BinaryMask liver;
  run("load", [&] {
    check_manifest(m);
    single = read_volume(m.single);
    dual = read_volume(m.dual);
    liver = mask_nonzero(read_volume(m.liver));
    couinaud = read_volume(m.couinaud);
    require_same_grid(single, dual, "pipeline: single vs dual");
    require_same_grid(single, liver, "pipeline: single vs liver");
    require_same_grid(single, couinaud, "pipeline: single vs couinaud");
    std::error_code ec;
    fs::create_directories(m.out_dir, ec);
    if (ec) throw DataError("cannot create " + m.out_dir.string() + ": " + ec.message());
  });

  LabelVolume separated;
  run("separate", [&] {
    auto r = separate(mask_nonzero(single), dual, params.separation);
    separated = std::move(r.labels);
    write_volume(separated, out("separated.vvol"));
    report["separation"] = report_to_json(r.report);
    if (r.report.unresolved)
      warnings.push_back(std::to_string(r.report.unresolved) + " voxels left unresolved by separation");
  });

  std::map<std::string, BinaryMask> masks, skeletons;
  run("skeletonize", [&] {
    for (const auto &t : kTrees) {
      auto mask = mask_of(separated, t.label);
      if (mask.empty()) {
        warnings.push_back(std::string(t.name) + " tree is empty after separation; skipped");
        continue;
      }
      auto skel = skeletonize_lee(mask).mask;
      write_volume(to_labels(skel), out(std::string(t.name) + "_skeleton.vvol"));
      masks[t.name] = std::move(mask);
      skeletons[t.name] = std::move(skel);
    }
  });

  std::map<std::string, VesselGraph> graphs;
  run("graph", [&] {
    for (const auto &t : kTrees) {
      if (!skeletons.count(t.name)) continue;
      auto r = build_tree(skeletons[t.name], masks[t.name], liver, params.min_branch_mm);
      if (!r.unreachable_nodes.empty())
        warnings.push_back(std::string(t.name) + ": " + std::to_string(r.unreachable_nodes.size()) +
                           " skeleton nodes outside the rooted component");
      if (r.broken_cycles)
        warnings.push_back(std::string(t.name) + ": broke " + std::to_string(r.broken_cycles) + " cycles");
      const auto problems = validate_tree(r.tree);
      if (!problems.empty()) throw InvariantError(std::string(t.name) + " graph: " + problems.front());
      write_json(out(std::string(t.name) + "_graph.json"), graph_to_json(r.tree));
      graphs[t.name] = std::move(r.tree);
    }
  });

  std::map<std::string, AnatomicalLabeling> labelings;
  run("label", [&] {
    for (const auto &t : kTrees) {
      if (!graphs.count(t.name)) continue;
      auto l = t.label == label::portal ? label_portal(graphs[t.name], couinaud) : label_hepatic(graphs[t.name], couinaud);
      for (const auto &f : l.flags) warnings.push_back(std::string(t.name) + ": " + f);
      write_json(out(std::string(t.name) + "_labels.json"), labeling_to_json(l));
      labelings[t.name] = std::move(l);
    }
  });

  run("morphometry", [&] {
    auto trees = nlohmann::ordered_json::object();
    for (const auto &t : kTrees) {
      if (!labelings.count(t.name)) continue;
      const auto rows = extract_table(labelings[t.name], t.name, m.case_id, params.tangent_window);
      std::ofstream csv(out(std::string(t.name) + "_morphometry.csv"), std::ios::binary);
      csv << table_to_csv(rows);
      if (!csv) throw DataError("failed writing " + (m.out_dir / (std::string(t.name) + "_morphometry.csv")).string());
      std::map<std::string, int> flags;
      for (const auto &r : rows)
        for (const auto &f : r.flags) ++flags[f];
      for (const auto &[f, n] : flags) warnings.push_back(std::string(t.name) + ": " + std::to_string(n) + " rows " + f);
      trees[t.name] = {{"branches", rows.size()}, {"labeling_flags", labelings[t.name].flags}};
    }
    report["trees"] = trees;
  });

  timings["total"] = total.lap_ms();
  report["timings_ms"] = timings;
  report["warnings"] = warnings;
  report["artifacts"] = artifacts;
  report["notes"] = {"end_angle: angle between the full chord and the terminal tangent",
                     "children_ratio: length / radius per child"};
  write_json(m.out_dir / "report.json", report);
  return report;
}

} // namespace vesselkit
