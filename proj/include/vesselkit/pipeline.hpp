#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "vesselkit/graph.hpp"
#include "vesselkit/morphometry.hpp"
#include "vesselkit/separation.hpp"

namespace vesselkit {

inline constexpr const char *kToolVersion = "0.1.0";

struct CaseManifest {
  std::string case_id;
  std::filesystem::path single;   // binary vessel segmentation (any nonzero label)
  std::filesystem::path dual;     // portal/hepatic inference, labels 0-2
  std::filesystem::path liver;    // liver mask
  std::filesystem::path couinaud; // segments 0-8
  std::filesystem::path out_dir;
};

// Relative paths are resolved against `base_dir`.
CaseManifest manifest_from_json(const nlohmann::json &j, const std::filesystem::path &base_dir);
CaseManifest read_manifest(const std::filesystem::path &path);
nlohmann::ordered_json manifest_to_json(const CaseManifest &m);

// Throws DataError naming the first input file that does not exist.
void check_manifest(const CaseManifest &m);

struct PipelineParams {
  SeparationParams separation;
  double min_branch_mm = kDefaultMinBranchMm;
  int tangent_window = kTangentWindow;
};

nlohmann::ordered_json params_to_json(const PipelineParams &p);

// A stage failure with its CLI exit code (3 data, 4 internal).
class StageError : public std::runtime_error {
public:
  StageError(std::string stage, std::string case_id, int exit_code, const std::string &message)
      : std::runtime_error(message), stage_(std::move(stage)), case_id_(std::move(case_id)), exit_code_(exit_code) {}
  const std::string &stage() const { return stage_; }
  const std::string &case_id() const { return case_id_; }
  int exit_code() const { return exit_code_; }

private:
  std::string stage_, case_id_;
  int exit_code_;
};

inline const std::vector<std::string> kPipelineStages{"separate", "skeletonize", "graph", "label", "morphometry"};

// Shared report envelope: {tool_version, command, params, timings_ms, warnings}.
nlohmann::ordered_json make_envelope(const std::string &command, nlohmann::ordered_json params);

// Runs separate -> skeletonize -> graph -> label -> morphometry for one case,
// writing every artifact and report.json under the case's out_dir. Returns the
// report. Stage failures are rethrown as StageError.
nlohmann::ordered_json run_case(const CaseManifest &m, const PipelineParams &params);

} // namespace vesselkit
