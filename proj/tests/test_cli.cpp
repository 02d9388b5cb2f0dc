#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

#include <unistd.h>

#include <json.hpp>

#include "rds/cli.hpp"
#include "rds/error.hpp"

using namespace rds;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("rds_cli_" + std::to_string(::getpid()) + "_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

std::vector<std::string> lines(const fs::path& p) {
  std::istringstream in(slurp(p));
  std::vector<std::string> out;
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

struct Result {
  int status;
  std::string out, err;
};

Result invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "rds");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int s = run_main(static_cast<int>(argv.size()), argv.data(), out, err);
  return {s, out.str(), err.str()};
}

ErrorKind parse_kind(const std::vector<std::string>& args) {
  try {
    parse_config(args);
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected a usage error");
  return ErrorKind::InvalidParameter;
}

}  // namespace

TEST_CASE("parse examples") {
  const RunConfig c =
      parse_config({"rotation", "--eps", "0.9", "--sigma", "0.05", "--a-min", "0", "--a-max", "0.5", "--steps", "101"});
  CHECK(c.subcommand == "rotation");
  CHECK(c.eps == 0.9);
  CHECK(c.a_max == 0.5);
  CHECK(c.steps == 101);
  CHECK(c.out == "rho.csv");

  CHECK(parse_kind({"density", "--sigma", "-0.1"}) == ErrorKind::UsageError);
  try {
    parse_config({"density", "--map", "logistic", "--a", "3.999", "--sigma", "0.005"});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::UsageError);
    // the model's message is forwarded
    CHECK(std::string(e.what()).find("map descriptor") != std::string::npos);
  }
  CHECK(parse_kind({"escape", "--sigma", "0.05"}) == ErrorKind::UsageError);
  CHECK(parse_kind({"density", "--grid", "4"}) == ErrorKind::UsageError);
  CHECK(parse_kind({"nosuch"}) == ErrorKind::UsageError);
}

TEST_CASE("windows and CSV fields") {
  const auto w = parse_window("0.1:0.2,0.5:0.9");
  REQUIRE(w.size() == 2);
  CHECK(w[1].lo == 0.5);
  CHECK(w[1].hi == 0.9);
  CHECK_THROWS_AS(parse_window("0.3:0.1"), Error);
  CHECK_THROWS_AS(parse_window("abc"), Error);
  CHECK(csv_real(0.1) == "0.10000000000000001");
  CHECK(csv_field("plain") == "plain");
  CHECK(csv_field("a,b") == "\"a,b\"");
  CHECK(csv_field("say \"hi\"") == "\"say \"\"hi\"\"\"");
}

TEST_CASE("config file with flag override") {
  const fs::path dir = scratch("config");
  const fs::path cfg = dir / "run.cfg";
  std::ofstream(cfg) << "# circle run\nmap = standard-circle\neps = 0.9\nsigma = 0.05\ngrid = 512\n";
  const RunConfig c = parse_config({"density", "--config", cfg.string(), "--grid", "256"});
  CHECK(c.eps == 0.9);
  CHECK(c.sigma == 0.05);
  CHECK(c.grid == 256);

  std::ofstream(dir / "bad.cfg") << "sigma = 0.05\nbogus = 1\n";
  CHECK(parse_kind({"density", "--config", (dir / "bad.cfg").string()}) == ErrorKind::UsageError);
  fs::remove_all(dir);
}

TEST_CASE("exit codes") {
  CHECK(invoke({}).status == 2);
  CHECK(invoke({"density", "--no-such-flag", "1"}).status == 2);
  const auto bad = invoke({"density", "--sigma", "-1"});
  CHECK(bad.status == 2);
  CHECK(bad.err.find("error:") == 0);
  const auto help = invoke({"--help"});
  CHECK(help.status == 0);
  CHECK(help.out.find("--sigma") != std::string::npos);

  // module errors exit 1 and still leave a manifest
  const fs::path dir = scratch("exit");
  const auto r = invoke({"escape", "--map", "standard-circle", "--a", "0.05", "--eps", "0.9", "--sigma", "0.05",
                         "--grid", "128", "--window", "0:1", "--mc", "100", "--max-steps", "1000", "--out",
                         (dir / "e.csv").string()});
  CHECK(r.status == 1);
  const auto man = nlohmann::json::parse(slurp(dir / "e.manifest.json"));
  CHECK(man.contains("error"));
  fs::remove_all(dir);
}

TEST_CASE("density shape contract and plot script") {
  const fs::path dir = scratch("density");
  const auto r = invoke({"density", "--map", "standard-circle", "--a", "0.05", "--eps", "0.9", "--sigma", "0.05",
                         "--grid", "2048", "--out", (dir / "density.csv").string()});
  REQUIRE(r.status == 0);
  const auto rows = lines(dir / "density.csv");
  REQUIRE(rows.size() == 2049);
  CHECK(rows[0] == "x,phi");
  CHECK(fs::exists(dir / "density.plt"));
  const auto man = nlohmann::json::parse(slurp(dir / "density.manifest.json"));
  CHECK(man["version"] == kVersion);
  CHECK(man["config"]["grid"] == "2048");
  CHECK(man["metrics"]["m"] == 1.0);
  fs::remove_all(dir);
}

TEST_CASE("every subcommand writes its CSV and manifest") {
  const fs::path dir = scratch("all");
  const std::vector<std::string> circle = {"--map", "standard-circle", "--eps", "0.9", "--sigma", "0.05", "--grid", "128"};
  struct Run {
    std::string sub;
    std::vector<std::string> extra;
    std::string header;
  };
  const std::vector<Run> runs = {
      {"density", {"--a", "0.05"}, "x,phi"},
      {"spectrum", {"--a", "0.05", "--k", "4"}, "re,im,modulus,group"},
      {"support", {"--a", "0.05"}, "component,lo,hi"},
      {"kernel", {"--a", "0.05", "--x", "0.3"}, "y,density"},
      {"escape", {"--a", "0.12", "--window", "0.9:1.2", "--mc", "200", "--max-steps", "100000"},
       "alpha,T_spectral,mc_mean,mc_se,censored"},
      {"rotation", {"--a-min", "0", "--a-max", "0.2", "--steps", "3", "--n-iter", "10000"}, "a,rho_mc,rho_spectral"},
      {"sweep", {"--a-min", "0.05", "--a-max", "0.15", "--steps", "5", "--no-detectors"},
       "a,m,n_components,hausdorff_prev,supdist_prev,eta"},
      {"represent", {"--a", "0.05", "--kernel-from-map", "--probe-x", "0.3", "--mu-points", "11"}, "mu,f_mu_x"},
      {"matrix", {"--a", "0.05"}, "n_cells"},
  };
  for (const auto& run : runs) {
    INFO(run.sub);
    std::vector<std::string> args = {run.sub};
    args.insert(args.end(), circle.begin(), circle.end());
    args.insert(args.end(), run.extra.begin(), run.extra.end());
    const fs::path out = dir / (run.sub + ".csv");
    args.insert(args.end(), {"--out", out.string()});
    const auto r = invoke(args);
    INFO(r.err);
    REQUIRE(r.status == 0);
    const auto rows = lines(out);
    REQUIRE(rows.size() >= 2);
    CHECK(rows[0] == run.header);
    const auto man = nlohmann::json::parse(slurp(dir / (run.sub + ".manifest.json")));
    CHECK(man["config"]["subcommand"] == run.sub);
    CHECK_FALSE(man.contains("error"));
  }
  CHECK(lines(dir / "represent.csv").size() == 12);
  CHECK(lines(dir / "rotation.csv").size() == 4);
  CHECK(fs::exists(dir / "events.csv"));
  fs::remove_all(dir);
}

TEST_CASE("determinism and manifest replay") {
  const fs::path dir = scratch("replay");
  const std::vector<std::string> base = {"escape", "--map", "logistic", "--a", "3.86", "--sigma", "0.005",
                                         "--grid", "256", "--window", "0.1:0.6", "--mc", "500", "--seed", "9"};
  auto with_out = [&](const std::string& name) {
    auto a = base;
    a.insert(a.end(), {"--out", (dir / name).string()});
    return a;
  };
  REQUIRE(invoke(with_out("one.csv")).status == 0);
  REQUIRE(invoke(with_out("two.csv")).status == 0);
  const std::string first = slurp(dir / "one.csv");
  CHECK(first == slurp(dir / "two.csv"));

  // turn the echoed config back into a config file and run it again
  const auto man = nlohmann::json::parse(slurp(dir / "one.manifest.json"));
  std::ofstream cfg(dir / "replay.cfg");
  std::vector<std::string> args = {man["config"]["subcommand"].get<std::string>()};
  for (const auto& [key, value] : man["config"].items()) {
    const std::string v = value.get<std::string>();
    if (key == "subcommand" || key == "out" || key == "events" || key == "manifest" || key == "plot") continue;
    if (key == "a" && v == "default") continue;
    if (key == "window" && v.empty()) continue;
    if (key == "detectors") {
      if (v == "false") args.push_back("--no-detectors");
      continue;
    }
    cfg << key << " = " << v << "\n";
  }
  cfg.close();
  args.insert(args.end(), {"--config", (dir / "replay.cfg").string(), "--out", (dir / "three.csv").string()});
  REQUIRE(invoke(args).status == 0);
  CHECK(first == slurp(dir / "three.csv"));

  // a different seed changes the Monte Carlo column
  auto other = with_out("four.csv");
  other[other.size() - 3] = "10";
  REQUIRE(invoke(other).status == 0);
  CHECK(first != slurp(dir / "four.csv"));
  fs::remove_all(dir);
}
