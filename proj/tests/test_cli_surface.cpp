#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

#include <json.hpp>

#include "dan/cli.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run dan_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "dan");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = dan::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);)
    if (!l.empty()) out.push_back(l);
  return out;
}

std::string strip_wall(const std::string& s) { return std::regex_replace(s, std::regex("\"wall_ms\": ?[0-9.e+-]+"), ""); }

fs::path fresh_dir(const std::string& name) {
  const auto d = fs::temp_directory_path() / ("dan_cli_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

const char* kTinyTrain =
    R"({"profile":"desk","model":{"d":8},"n_min":5,"n_max":8,"batch_instances":2,"validation_size":4,
        "refresh_every":2,"checkpoint_every":2,"seed":5})";

}  // namespace

TEST_CASE("generate") {
  const auto dir = fresh_dir("gen");
  const auto r = dan_cli({"generate", "--n", "50", "--m", "5", "--count", "3", "--seed", "1", "--out", dir.string()});
  REQUIRE(r.code == 0);
  const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
  REQUIRE(manifest["instances"].size() == 3);
  std::set<std::uint64_t> seeds;
  for (const auto& e : manifest["instances"]) {
    seeds.insert(e["seed"].get<std::uint64_t>());
    CHECK(fs::exists(dir / e["file"].get<std::string>()));
  }
  CHECK(seeds.size() == 3);

  CHECK(dan_cli({"generate", "--n", "1", "--m", "2", "--out", dir.string()}).code != 0);
  CHECK(dan_cli({"generate", "--m", "2"}).code != 0);
}

TEST_CASE("help and argument errors") {
  CHECK(dan_cli({"--help"}).code == 0);
  CHECK(dan_cli({}).code != 0);
  CHECK(dan_cli({"solve", "--instance", "x.json", "--solver", "lkh"}).code != 0);
}

TEST_CASE("solve, plot") {
  const auto dir = fresh_dir("solve");
  REQUIRE(dan_cli({"generate", "--n", "15", "--m", "3", "--count", "1", "--out", dir.string()}).code == 0);
  const auto inst = (dir / "mtsp_n15_m3_0000.json").string();

  const auto a = dan_cli({"solve", "--instance", inst, "--solver", "nn", "--out", (dir / "a.json").string()});
  const auto b = dan_cli({"solve", "--instance", inst, "--solver", "nn", "--out", (dir / "b.json").string()});
  REQUIRE(a.code == 0);
  CHECK(lines_of(a.out).size() == 1);
  CHECK(strip_wall(slurp(dir / "a.json")) == strip_wall(slurp(dir / "b.json")));

  const auto sol = nlohmann::json::parse(slurp(dir / "a.json"));
  for (const char* key : {"instance", "solver", "seed", "tours", "lengths", "minmax_normalized",
                          "minmax_source_units", "wall_ms"}) {
    CHECK(sol.contains(key));
  }

  const auto missing = dan_cli({"solve", "--instance", inst, "--solver", "dan-greedy", "--checkpoint",
                                (dir / "nope.bin").string()});
  CHECK(missing.code != 0);
  CHECK(missing.err.find("checkpoint") != std::string::npos);

  const auto bad = dan_cli({"solve", "--instance", (dir / "absent.json").string(), "--solver", "nn"});
  CHECK(bad.code != 0);
  CHECK_FALSE(bad.err.empty());

  const auto svg_path = (dir / "a.svg").string();
  REQUIRE(dan_cli({"plot", "--instance", inst, "--solution", (dir / "a.json").string(), "--out", svg_path}).code == 0);
  const auto svg = slurp(svg_path);
  const auto tours = sol["tours"].get<std::vector<std::vector<int>>>();
  std::regex poly("<polyline[^>]*points=\"([^\"]*)\"");
  std::size_t k = 0;
  for (auto it = std::sregex_iterator(svg.begin(), svg.end(), poly); it != std::sregex_iterator(); ++it, ++k) {
    REQUIRE(k < tours.size());
    std::istringstream pts((*it)[1].str());
    std::size_t vertices = 0;
    for (std::string p; pts >> p;) ++vertices;
    CHECK(vertices == tours[k].size());
  }
  CHECK(k == 3);

  // a solution for another instance is rejected
  REQUIRE(dan_cli({"generate", "--n", "9", "--m", "3", "--count", "1", "--out", (dir / "other").string()}).code == 0);
  CHECK(dan_cli({"plot", "--instance", (dir / "other" / "mtsp_n9_m3_0000.json").string(), "--solution",
                 (dir / "a.json").string()})
            .code != 0);
}

TEST_CASE("TSPLIB input") {
  const auto eil = std::string(DAN_TEST_DATA) + "/eil51.tsp";
  CHECK(dan_cli({"solve", "--instance", eil, "--solver", "nn"}).code != 0);
  const auto r = dan_cli({"solve", "--instance", eil, "--solver", "nn2opt", "--m", "5"});
  CHECK(r.code == 0);
  CHECK(r.out.find("n=51 m=5") != std::string::npos);
}

TEST_CASE("train, resume and use the checkpoint") {
  const auto dir = fresh_dir("train");
  write(dir / "cfg.json", kTinyTrain);

  const auto full = (dir / "full").string();
  REQUIRE(dan_cli({"train", "--config", (dir / "cfg.json").string(), "--out-dir", full, "--steps", "6"}).code == 0);
  const auto full_log = lines_of(slurp(fs::path(full) / "train_log.jsonl"));
  CHECK(full_log.size() == 6);

  const auto part = (dir / "part").string();
  REQUIRE(dan_cli({"train", "--config", (dir / "cfg.json").string(), "--out-dir", part, "--steps", "3"}).code == 0);
  REQUIRE(dan_cli({"train", "--resume", (fs::path(part) / "checkpoint.bin").string(), "--out-dir", part, "--steps",
                   "6"})
              .code == 0);
  const auto part_log = lines_of(slurp(fs::path(part) / "train_log.jsonl"));
  REQUIRE(part_log.size() == 6);
  for (std::size_t i = 0; i < 6; ++i) CHECK(strip_wall(part_log[i]) == strip_wall(full_log[i]));
  CHECK(slurp(fs::path(full) / "checkpoint.bin") == slurp(fs::path(part) / "checkpoint.bin"));

  // the checkpoint drives dan solvers, also through the environment variable
  REQUIRE(dan_cli({"generate", "--n", "8", "--m", "2", "--count", "3", "--out", (dir / "inst").string()}).code == 0);
  const auto inst = (dir / "inst" / "mtsp_n8_m2_0000.json").string();
  const auto ckpt = (fs::path(full) / "checkpoint.bin").string();
  CHECK(dan_cli({"solve", "--instance", inst, "--solver", "dan-sample", "--samples", "4", "--checkpoint", ckpt}).code ==
        0);
  setenv("DAN_CHECKPOINT", ckpt.c_str(), 1);
  CHECK(dan_cli({"solve", "--instance", inst, "--solver", "dan-greedy"}).code == 0);

  const auto csv = (dir / "bench.csv").string();
  const auto bench = dan_cli({"bench", "--instances", (dir / "inst").string(), "--solvers", "dan-greedy,nn", "--out", csv});
  unsetenv("DAN_CHECKPOINT");
  CHECK(bench.code == 0);
  const auto rows = lines_of(slurp(csv));
  CHECK(rows.size() == 7);
  CHECK(rows[0] == "instance,n,m,solver,samples,seed,minmax,seconds");
  CHECK(bench.out.find("Max.") != std::string::npos);

  // without a model the dan rows fail, the others still run
  const auto partial = dan_cli({"bench", "--instances", (dir / "inst").string(), "--solvers", "dan-greedy,nn2opt"});
  CHECK(partial.code != 0);
  CHECK(partial.out.find("nn2opt") != std::string::npos);
}

TEST_CASE("interrupted training leaves a usable checkpoint") {
  const auto dir = fresh_dir("interrupt");
  write(dir / "cfg.json", kTinyTrain);
  dan::train_stop_flag().store(true);
  const auto r = dan_cli({"train", "--config", (dir / "cfg.json").string(), "--out-dir", dir.string(), "--steps", "50"});
  dan::train_stop_flag().store(false);
  CHECK(r.code == 0);
  CHECK(r.err.find("interrupted") != std::string::npos);
  CHECK(fs::exists(dir / "checkpoint.bin"));
  CHECK(dan_cli({"train", "--resume", (dir / "checkpoint.bin").string(), "--out-dir", dir.string(), "--steps", "2"})
            .code == 0);
  CHECK(lines_of(slurp(dir / "train_log.jsonl")).size() == 2);
}
