#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <sys/wait.h>
#include <unistd.h>

#include <json.hpp>

#ifndef VESSELKIT_CLI
#error "VESSELKIT_CLI must name the command line binary"
#endif

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out, err;
};

std::string slurp(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

class Sandbox {
public:
  Sandbox() : dir_(fs::temp_directory_path() / ("vesselkit_cli_" + std::to_string(::getpid()))) {
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  ~Sandbox() { fs::remove_all(dir_); }
  const fs::path &dir() const { return dir_; }
  fs::path operator/(const std::string &name) const { return dir_ / name; }

  Run run(const std::string &args) const {
    const auto out = dir_ / "stdout.txt", err = dir_ / "stderr.txt";
    const std::string cmd = "cd '" + dir_.string() + "' && '" + VESSELKIT_CLI + "' " + args + " >'" + out.string() +
                            "' 2>'" + err.string() + "'";
    const int status = std::system(cmd.c_str());
    Run r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
  }

  void write(const std::string &name, const std::string &text) const {
    std::ofstream(dir_ / name, std::ios::binary) << text;
  }

private:
  fs::path dir_;
};

std::string spec_json(int seed) {
  return nlohmann::json{{"seed", seed},
                        {"depth", 3},
                        {"dims", {96, 96, 96}},
                        {"trunk_length_mm", 26},
                        {"trunk_radius_mm", 3},
                        {"angle_jitter_deg", 10},
                        {"second_tree", true},
                        {"bridges", 1},
                        {"dropout", 0.15}}
      .dump();
}

void make_case(const Sandbox &sb, const std::string &name, int seed) {
  sb.write(name + ".json", spec_json(seed));
  REQUIRE(sb.run("--quiet synth --spec " + name + ".json --out-dir " + name).code == 0);
}

nlohmann::json without_timings(nlohmann::json j) {
  j.erase("timings_ms");
  return j;
}

void check_envelope(const nlohmann::json &j, const std::string &command) {
  CHECK(j["tool_version"].is_string());
  CHECK(j["command"] == command);
  CHECK(j["params"].is_object());
  CHECK(j["timings_ms"].is_object());
  CHECK(j["warnings"].is_array());
}

} // namespace

TEST_CASE("version and usage errors") {
  Sandbox sb;
  const auto v = sb.run("--version");
  CHECK(v.code == 0);
  CHECK(v.out.find("vesselkit") != std::string::npos);
  CHECK(sb.run("").code == 2);
  CHECK(sb.run("no-such-command").code == 2);
  CHECK(sb.run("separate --single a.vvol").code == 2);
  CHECK(sb.run("--jobs -1 synth --spec x --out-dir y").code == 2);
}

TEST_CASE("data errors exit 3 with a structured message") {
  Sandbox sb;
  sb.write("junk.vvol", "not a volume at all, just text padding it out past the header");
  const auto r = sb.run("skeletonize --in junk.vvol --out s.vvol");
  CHECK(r.code == 3);
  const auto e = nlohmann::json::parse(r.err)["error"];
  CHECK(e["kind"] == "data");
  CHECK(e["stage"] == "skeletonize");
  CHECK(sb.run("metrics --pred junk.vvol --ref junk.vvol --classes 1,x").code == 2);
}

TEST_CASE("subcommands chain on a synthetic case") {
  Sandbox sb;
  make_case(sb, "c", 3);
  for (const char *f : {"truth.vvol", "labels.vvol", "inference.vvol", "couinaud.vvol", "liver.vvol", "truth_graph.json",
                        "spec-echo.json", "manifest.json"})
    CHECK(fs::exists(sb / (std::string("c/") + f)));

  auto r = sb.run("separate --single c/truth.vvol --dual c/inference.vvol --out sep.vvol");
  REQUIRE(r.code == 0);
  auto j = nlohmann::json::parse(r.out);
  check_envelope(j, "separate");
  CHECK(j["params"]["angle_deg"] == 60.0);
  CHECK(j["params"]["min_cc"] == 50);
  for (const char *k : {"portal", "hepatic", "unresolved"}) CHECK(j["voxels"].contains(k));
  for (const char *k : {"absorbed", "arbitrated", "dropped"}) CHECK(j["components"].contains(k));
  CHECK(j["iterations"].get<int>() >= 1);

  r = sb.run("metrics --pred sep.vvol --ref c/labels.vvol --classes 1,2 --surface-tol-mm 2.0");
  REQUIRE(r.code == 0);
  CHECK(std::count(r.out.begin(), r.out.end(), '\n') == 1);
  j = nlohmann::json::parse(r.out);
  check_envelope(j, "metrics");
  for (const char *k : {"dice", "cldice", "surface_dice", "hausdorff_mm", "per_class"}) CHECK(j.contains(k));
  CHECK(j["per_class"].size() == 2);
  CHECK(j["dice"].get<double>() > 0.98);

  REQUIRE(sb.run("--quiet skeletonize --in c/truth.vvol --out sk.vvol --method lee").code == 0);
  CHECK(fs::exists(sb / "sk.vvol"));

  // Portal tree on its own for graph, label and morphometry.
  REQUIRE(sb.run("--quiet pipeline c/manifest.json").code == 0);
  r = sb.run("graph --skeleton c/out/portal_skeleton.vvol --mask c/out/separated.vvol --liver c/liver.vvol --out g.json");
  REQUIRE(r.code == 0);
  CHECK(nlohmann::json::parse(r.out)["branches"].get<int>() > 1);
  REQUIRE(sb.run("label --graph g.json --couinaud c/couinaud.vvol --tree portal --out gl.json").code == 0);
  REQUIRE(sb.run("morphometry --graph gl.json --tree-id CASE07 --tree-label portal --out rows.csv").code == 0);
  const auto csv = slurp(sb / "rows.csv");
  CHECK(csv.rfind("tree_ID,tree_label,path_label,path_name,path_length,path_radius,path_ratio,children_id,"
                  "children_length,children_radii,children_ratio,emergence_angle,end_angle,Power_law_index,gen,"
                  "n_desc\nCASE07,portal,0,main,",
                  0) == 0);
  CHECK(sb.run("label --graph g.json --couinaud c/couinaud.vvol --tree arterial --out x.json").code == 2);
}

TEST_CASE("pipeline writes every artifact and a five-stage report") {
  Sandbox sb;
  make_case(sb, "c", 4);
  const auto r = sb.run("pipeline c/manifest.json");
  REQUIRE(r.code == 0);
  const auto summary = nlohmann::json::parse(r.out);
  check_envelope(summary, "pipeline");
  REQUIRE(summary["cases"].size() == 1);
  CHECK(summary["cases"][0]["status"] == "ok");

  const auto report = nlohmann::json::parse(slurp(sb / "c/out/report.json"));
  check_envelope(report, "pipeline");
  CHECK(report["stages"] == nlohmann::json({"separate", "skeletonize", "graph", "label", "morphometry"}));
  for (const auto &s : report["stages"]) CHECK(report["timings_ms"].contains(s.get<std::string>()));
  for (const auto &a : report["artifacts"]) CHECK(fs::exists(sb / ("c/out/" + a.get<std::string>())));
  for (const char *f : {"separated.vvol", "portal_graph.json", "hepatic_graph.json", "portal_labels.json",
                        "hepatic_labels.json", "portal_morphometry.csv", "hepatic_morphometry.csv"})
    CHECK(fs::exists(sb / (std::string("c/out/") + f)));
  CHECK(report["params"]["angle_deg"] == 60.0);
  CHECK(report["params"]["tangent_window"] == 5);
}

TEST_CASE("pipeline: missing couinaud file names the path") {
  Sandbox sb;
  make_case(sb, "c", 5);
  auto m = nlohmann::json::parse(slurp(sb / "c/manifest.json"));
  m["couinaud"] = "nowhere/couinaud.vvol";
  sb.write("c/bad.json", m.dump());
  const auto r = sb.run("pipeline c/bad.json");
  CHECK(r.code == 3);
  CHECK(r.err.find("nowhere/couinaud.vvol") != std::string::npos);
  const auto e = nlohmann::json::parse(r.err)["error"];
  CHECK(e["stage"] == "load");
  CHECK(e["case_id"] == "c");
}

TEST_CASE("pipeline batch is identical across runs and job counts") {
  Sandbox sb;
  for (int i = 0; i < 3; ++i) make_case(sb, "c" + std::to_string(i), 11 + i);
  const std::string manifests = "c0/manifest.json c1/manifest.json c2/manifest.json";

  auto snapshot = [&] {
    std::map<std::string, std::string> files;
    for (int i = 0; i < 3; ++i)
      for (const auto &e : fs::directory_iterator(sb / ("c" + std::to_string(i) + "/out"))) {
        const auto key = "c" + std::to_string(i) + "/" + e.path().filename().string();
        files[key] = e.path().filename() == "report.json"
                         ? without_timings(nlohmann::json::parse(slurp(e.path()))).dump()
                         : slurp(e.path());
      }
    return files;
  };

  auto r = sb.run("--jobs 1 pipeline " + manifests);
  REQUIRE(r.code == 0);
  const auto one = snapshot();
  const auto summary_one = nlohmann::json::parse(r.out);
  r = sb.run("--jobs 1 pipeline " + manifests);
  REQUIRE(r.code == 0);
  CHECK(snapshot() == one);
  r = sb.run("--jobs 8 pipeline " + manifests);
  REQUIRE(r.code == 0);
  CHECK(snapshot() == one);
  const auto summary_eight = nlohmann::json::parse(r.out);
  REQUIRE(summary_eight["cases"].size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(summary_eight["cases"][i]["case_id"] == "c" + std::to_string(i));
    CHECK(summary_eight["cases"][i]["warnings"] == summary_one["cases"][i]["warnings"]);
  }
  CHECK(one.size() >= 30);
}
