#include "vesselkit/graph_io.hpp"

#include <fstream>

namespace vesselkit {

namespace {

nlohmann::ordered_json xyz(const Voxel &v) { return {v.x, v.y, v.z}; }

Voxel voxel_from(const nlohmann::json &j) { return {j.at(0).get<int>(), j.at(1).get<int>(), j.at(2).get<int>()}; }

std::vector<Voxel> voxels_from(const nlohmann::json &j) {
  std::vector<Voxel> out;
  for (const auto &v : j) out.push_back(voxel_from(v));
  return out;
}

} // namespace

nlohmann::ordered_json graph_to_json(const VesselGraph &g) {
  nlohmann::ordered_json j;
  j["spacing"] = {g.spacing.x, g.spacing.y, g.spacing.z};
  j["dims"] = {g.dims.nx, g.dims.ny, g.dims.nz};
  auto nodes = nlohmann::ordered_json::array();
  for (const auto &n : g.nodes) {
    nlohmann::ordered_json o;
    o["id"] = n.id;
    o["xyz"] = xyz(n.voxel);
    o["kind"] = n.kind == NodeKind::Endpoint ? "endpoint" : "junction";
    o["degree"] = n.degree;
    o["fused"] = n.fused;
    auto vs = nlohmann::ordered_json::array();
    for (const auto &v : n.voxels) vs.push_back(xyz(v));
    o["voxels"] = vs;
    o["radius_samples"] = n.radius_samples;
    nodes.push_back(o);
  }
  j["nodes"] = nodes;
  auto branches = nlohmann::ordered_json::array();
  for (const auto &b : g.branches) {
    nlohmann::ordered_json o;
    o["id"] = b.id;
    o["node_a"] = b.node_a;
    o["node_b"] = b.node_b;
    auto path = nlohmann::ordered_json::array();
    for (const auto &v : b.path) path.push_back(xyz(v));
    o["path"] = path;
    o["length_mm"] = b.length_mm;
    o["radius_mm"] = b.radius_mm;
    o["radius_mean_mm"] = b.radius_mean_mm;
    o["radius_max_mm"] = b.radius_max_mm;
    o["radius_samples"] = b.radius_samples;
    o["leaves_mask"] = b.leaves_mask;
    o["parent"] = b.parent;
    o["children"] = b.children;
    branches.push_back(o);
  }
  j["branches"] = branches;
  j["root_node"] = g.root_node ? nlohmann::ordered_json(*g.root_node) : nlohmann::ordered_json();
  j["oriented"] = g.oriented;
  j["metadata"] = {{"radius_statistic", "median"}, {"units", "mm"}};
  return j;
}

VesselGraph graph_from_json(const nlohmann::json &j) {
  try {
    VesselGraph g;
    const auto &sp = j.at("spacing");
    g.spacing = {sp.at(0).get<double>(), sp.at(1).get<double>(), sp.at(2).get<double>()};
    if (j.contains("dims")) {
      const auto &d = j.at("dims");
      g.dims = {d.at(0).get<int>(), d.at(1).get<int>(), d.at(2).get<int>()};
    }
    for (const auto &o : j.at("nodes")) {
      Node n;
      n.id = o.at("id").get<int>();
      if (n.id != static_cast<int>(g.nodes.size())) throw DataError("graph json: node ids must equal their position");
      n.voxel = voxel_from(o.at("xyz"));
      n.kind = o.at("kind").get<std::string>() == "endpoint" ? NodeKind::Endpoint : NodeKind::Junction;
      n.degree = o.value("degree", 0);
      n.fused = o.value("fused", false);
      n.voxels = o.contains("voxels") ? voxels_from(o.at("voxels")) : std::vector<Voxel>{n.voxel};
      if (o.contains("radius_samples")) n.radius_samples = o.at("radius_samples").get<std::vector<double>>();
      g.nodes.push_back(std::move(n));
    }
    const int nnodes = static_cast<int>(g.nodes.size());
    for (const auto &o : j.at("branches")) {
      Branch b;
      b.id = o.at("id").get<int>();
      if (b.id != static_cast<int>(g.branches.size()))
        throw DataError("graph json: branch ids must equal their position");
      b.node_a = o.at("node_a").get<int>();
      b.node_b = o.at("node_b").get<int>();
      if (b.node_a < 0 || b.node_a >= nnodes || b.node_b < 0 || b.node_b >= nnodes)
        throw DataError("graph json: branch " + std::to_string(b.id) + " references a missing node");
      b.path = voxels_from(o.at("path"));
      if (b.path.empty()) throw DataError("graph json: branch " + std::to_string(b.id) + " has an empty path");
      b.length_mm = o.at("length_mm").get<double>();
      b.radius_mm = o.at("radius_mm").get<double>();
      b.radius_mean_mm = o.value("radius_mean_mm", b.radius_mm);
      b.radius_max_mm = o.value("radius_max_mm", b.radius_mm);
      if (o.contains("radius_samples")) b.radius_samples = o.at("radius_samples").get<std::vector<double>>();
      b.leaves_mask = o.value("leaves_mask", false);
      b.parent = o.value("parent", -1);
      if (o.contains("children")) b.children = o.at("children").get<std::vector<int>>();
      g.branches.push_back(std::move(b));
    }
    for (const auto &b : g.branches) {
      if (b.parent >= static_cast<int>(g.branches.size()))
        throw DataError("graph json: branch " + std::to_string(b.id) + " has a missing parent");
      for (const int c : b.children)
        if (c < 0 || c >= static_cast<int>(g.branches.size()))
          throw DataError("graph json: branch " + std::to_string(b.id) + " has a missing child");
    }
    if (j.contains("root_node") && !j.at("root_node").is_null()) {
      g.root_node = j.at("root_node").get<int>();
      if (*g.root_node < 0 || *g.root_node >= nnodes) throw DataError("graph json: root_node out of range");
    }
    g.oriented = j.value("oriented", false);
    return g;
  } catch (const nlohmann::json::exception &e) {
    throw DataError(std::string("graph json: ") + e.what());
  }
}

void write_json(const std::filesystem::path &path, const nlohmann::ordered_json &j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out << j.dump() << '\n';
  if (!out) throw DataError("failed writing " + path.string());
}

nlohmann::json read_json(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception &e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

} // namespace vesselkit
