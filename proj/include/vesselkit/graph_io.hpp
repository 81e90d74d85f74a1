#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "vesselkit/graph.hpp"

namespace vesselkit {

// Graph JSON: {spacing, dims, nodes, branches, root_node, oriented, metadata}.
// Arrays are ordered by id. Unknown keys are ignored on read.
nlohmann::ordered_json graph_to_json(const VesselGraph &graph);
VesselGraph graph_from_json(const nlohmann::json &j);

void write_json(const std::filesystem::path &path, const nlohmann::ordered_json &j);
nlohmann::json read_json(const std::filesystem::path &path);

} // namespace vesselkit
