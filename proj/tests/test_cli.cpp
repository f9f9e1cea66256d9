// End-to-end tests of the mpct binary. The test runner provides MPCT_CLI
// (path to the built binary) and MPCT_WORKDIR (scratch directory).

#include <doctest.h>

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::string env(const char* name) {
  const char* v = std::getenv(name);
  REQUIRE_MESSAGE(v != nullptr, name << " must be set");
  return v;
}

fs::path workdir() {
  static fs::path dir = [] {
    fs::path d = env("MPCT_WORKDIR");
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

int run_cli(const std::string& args) {
  const std::string cmd = env("MPCT_CLI") + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return status < 0 ? status : WEXITSTATUS(status);
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE_MESSAGE(in.good(), "missing file " << path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Independent FNV-1a 64 (the manifest hash algorithm).
std::string fnv_hex(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[32];
  std::snprintf(buf, sizeof(buf), "fnv1a64:%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace

TEST_CASE("gen-data: dataset reload hash matches the manifest") {
  const fs::path dir = workdir() / "gen";
  fs::create_directories(dir);
  write_file(dir / "cfg.json",
             R"({"schema":"mpct-config-v1","seed":7,
                 "dataset":{"kind":"linear","n":4,"samples":60,"seed":7}})");
  REQUIRE(run_cli("gen-data --config " + (dir / "cfg.json").string() + " --out " +
                  (dir / "out").string()) == 0);
  const json manifest = json::parse(read_file(dir / "out" / "manifest.json"));
  const std::string on_disk = read_file(dir / "out" / "dataset.json");
  CHECK(manifest.at("files").at("dataset.json").get<std::string>() == fnv_hex(on_disk));
  CHECK(manifest.at("rng").get<std::string>() == "mt19937_64/box-muller/v1");
  CHECK(manifest.at("seed").get<std::uint64_t>() == 7);
}

TEST_CASE("sweep-gradients: 5-block net, h in {1,3,5}, cos at h=T is 1") {
  const fs::path dir = workdir() / "sweep";
  fs::create_directories(dir);
  write_file(dir / "cfg.json",
             R"({"schema":"mpct-config-v1","seed":5,
                 "dataset":{"kind":"trig","samples":200,"seed":5},
                 "network":{"kind":"res-mlp","depth":5,"width":10,"out_dim":4,"seed":11},
                 "sweep":{"horizons":[1,3,5],"checkpoint_epochs":[0],"probe_batch":100}})");
  REQUIRE(run_cli("sweep-gradients --config " + (dir / "cfg.json").string() + " --out " +
                  (dir / "out").string()) == 0);
  std::istringstream csv(read_file(dir / "out" / "sweep.csv"));
  std::string line;
  std::getline(csv, line);
  CHECK(line == "epoch,h,cos_theta,sin_deviation,grad_norm_h,grad_norm_T");
  int rows = 0;
  std::string last;
  while (std::getline(csv, line) && !line.empty()) {
    ++rows;
    last = line;
  }
  CHECK(rows == 3);
  CHECK(last.rfind("0,5,1,0,", 0) == 0);  // h=T: cos=1, deviation=0 exactly
}

TEST_CASE("select-horizon: planted profile agrees with --brute-force") {
  const fs::path dir = workdir() / "select";
  fs::create_directories(dir);
  // cos^2 = 1 - 0.5(1-h/16)^3, M = 2h+1, weighted objective.
  json cfg = {
      {"schema", "mpct-config-v1"},
      {"seed", 1},
      {"dataset", {{"kind", "linear"}, {"n", 4}, {"samples", 40}, {"seed", 1}}},
      {"network", {{"kind", "linear-residual"}, {"depth", 16}, {"width", 4}, {"seed", 1}}},
  };
  json measured = {{"depth", 16},
                   {"horizons", {1, 4, 8, 12, 16}},
                   {"cos", json::array()},
                   {"mem", json::array()}};
  for (int h : {1, 4, 8, 12, 16}) {
    const double frac = 1.0 - h / 16.0;
    measured["cos"].push_back(1.0 - 0.5 * frac * frac * frac);
    measured["mem"].push_back(2.0 * h + 1.0);
  }
  cfg["selection"] = {{"measured", measured},
                      {"objective", {{"kind", "weighted"}, {"lambda", 0.02}}},
                      {"cost", {{"kind", "linear"}, {"unit_cost", 1.0}, {"node_memory", 4.0}}}};
  write_file(dir / "cfg.json", cfg.dump());
  REQUIRE(run_cli("select-horizon --config " + (dir / "cfg.json").string() + " --out " +
                  (dir / "a").string()) == 0);
  REQUIRE(run_cli("select-horizon --brute-force --config " + (dir / "cfg.json").string() +
                  " --out " + (dir / "b").string()) == 0);
  auto h_star = [](const std::string& report) {
    const auto pos = report.find("h_star=");
    REQUIRE(pos != std::string::npos);
    return report.substr(pos, report.find('\n', pos) - pos);
  };
  const std::string ha = h_star(read_file(dir / "a" / "selection_report.txt"));
  const std::string hb = h_star(read_file(dir / "b" / "selection_report.txt"));
  CHECK(ha == hb);
  CHECK(ha != "h_star=0");
}

TEST_CASE("profile-memory: eager fit residual and static T=4,h=2 value") {
  const fs::path dir = workdir() / "mem";
  fs::create_directories(dir);
  write_file(dir / "cfg.json",
             R"({"schema":"mpct-config-v1","seed":0,"depth":4,
                 "memory":{"state_units":1.0,"fixed_overhead":0.0}})");
  REQUIRE(run_cli("profile-memory --mode eager --config " + (dir / "cfg.json").string() +
                  " --out " + (dir / "eager").string()) == 0);
  const std::string eager = read_file(dir / "eager" / "memory.csv");
  const auto pos = eager.find("fit_residual=");
  REQUIRE(pos != std::string::npos);
  CHECK(std::stod(eager.substr(pos + 13)) <= 1e-9);

  REQUIRE(run_cli("profile-memory --mode static --config " + (dir / "cfg.json").string() +
                  " --out " + (dir / "static").string()) == 0);
  const std::string stat = read_file(dir / "static" / "memory.csv");
  CHECK(stat.find("\n2,7\n") != std::string::npos);
}

TEST_CASE("evaluate: the best algorithm maps to Rel=0") {
  const fs::path dir = workdir() / "eval";
  fs::create_directories(dir);
  write_file(dir / "cfg.json",
             R"({"schema":"mpct-config-v1","seed":5,
                 "dataset":{"kind":"trig","samples":400,"seed":5},
                 "network":{"kind":"res-mlp","depth":6,"width":10,"out_dim":4,"seed":11},
                 "evaluate":{"horizons":[1,3],
                   "train":{"learning_rate":0.01,"batch_size":100,"epochs":4},
                   "objective":{"kind":"weighted","lambda":0.005},
                   "cost":{"kind":"linear","unit_cost":1.0,"node_memory":10.0},
                   "memory":{"mode":"eager","state_units":1.0}}})");
  REQUIRE(run_cli("evaluate --config " + (dir / "cfg.json").string() + " --out " +
                  (dir / "out").string()) == 0);
  std::istringstream csv(read_file(dir / "out" / "evaluate.csv"));
  std::string line;
  std::getline(csv, line);
  CHECK(line == "algorithm,objective_value,rel");
  double best_value = 0.0, best_rel = -1.0;
  bool first = true;
  while (std::getline(csv, line) && !line.empty()) {
    const auto c1 = line.find(','), c2 = line.rfind(',');
    const double value = std::stod(line.substr(c1 + 1, c2 - c1 - 1));
    const double rel = std::stod(line.substr(c2 + 1));
    if (first || value < best_value) {
      best_value = value;
      best_rel = rel;
      first = false;
    }
  }
  CHECK(best_rel == 0.0);
}

TEST_CASE("verify-theory passes its own window") {
  const fs::path dir = workdir() / "theory";
  fs::create_directories(dir);
  write_file(dir / "cfg.json",
             R"({"schema":"mpct-config-v1","seed":3,
                 "theory":{"lemma_chains":2,"lemma_depth":32,"lemma_samples":20}})");
  REQUIRE(run_cli("verify-theory --config " + (dir / "cfg.json").string() + " --out " +
                  (dir / "out").string()) == 0);
  const std::string report = read_file(dir / "out" / "verify_report.txt");
  CHECK(report.find("slope_window=[2,4] pass") != std::string::npos);
  CHECK(report.find("lemma_violations=0") != std::string::npos);
}

TEST_CASE("unknown config keys and bad schema are usage errors") {
  const fs::path dir = workdir() / "bad";
  fs::create_directories(dir);
  write_file(dir / "unknown.json",
             R"({"schema":"mpct-config-v1","seed":0,
                 "dataset":{"kind":"linear","n":4,"samples":10,"seed":0,"typo_key":1}})");
  CHECK(run_cli("gen-data --config " + (dir / "unknown.json").string() + " --out " +
                (dir / "o1").string()) != 0);
  write_file(dir / "schema.json", R"({"schema":"mpct-config-v0","seed":0})");
  CHECK(run_cli("gen-data --config " + (dir / "schema.json").string() + " --out " +
                (dir / "o2").string()) != 0);
  CHECK(run_cli("no-such-command --config x --out y") != 0);
}

TEST_CASE("train rerun reproduces byte-identical artifacts") {
  const fs::path dir = workdir() / "repro";
  fs::create_directories(dir);
  write_file(dir / "cfg.json",
             R"({"schema":"mpct-config-v1","seed":9,
                 "dataset":{"kind":"trig","samples":300,"seed":9},
                 "network":{"kind":"res-mlp","depth":5,"width":10,"out_dim":4,"seed":2},
                 "train":{"horizon":5,"learning_rate":0.01,"batch_size":100,"epochs":3}})");
  REQUIRE(run_cli("train --config " + (dir / "cfg.json").string() + " --out " +
                  (dir / "r1").string()) == 0);
  REQUIRE(run_cli("train --config " + (dir / "cfg.json").string() + " --out " +
                  (dir / "r2").string()) == 0);
  for (const char* name : {"train_record.csv", "network.json", "manifest.json"})
    CHECK(read_file(dir / "r1" / name) == read_file(dir / "r2" / name));
}

TEST_CASE("--seed overrides the config seed") {
  const fs::path dir = workdir() / "seedflag";
  fs::create_directories(dir);
  write_file(dir / "cfg.json",
             R"({"schema":"mpct-config-v1","seed":1,
                 "dataset":{"kind":"linear","n":3,"samples":20,"seed":1}})");
  REQUIRE(run_cli("gen-data --seed 42 --config " + (dir / "cfg.json").string() + " --out " +
                  (dir / "out").string()) == 0);
  const json manifest = json::parse(read_file(dir / "out" / "manifest.json"));
  CHECK(manifest.at("seed").get<std::uint64_t>() == 42);
  CHECK(manifest.at("config").at("seed").get<std::uint64_t>() == 42);
}
