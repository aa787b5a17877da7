#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

std::string cli() {
  const char* path = std::getenv("ISTAB_CLI");
  REQUIRE_MESSAGE(path != nullptr, "ISTAB_CLI must point at the built binary");
  return path;
}

int run(const std::string& args) {
  std::string command = cli() + " " + args + " > /dev/null 2>&1";
  int status = std::system(command.c_str());
  REQUIRE(status != -1);
  return WEXITSTATUS(status);
}

fs::path scratch() {
  fs::path dir = fs::temp_directory_path() / "istab-cli-tests";
  fs::create_directories(dir);
  return dir;
}

fs::path write_file(const std::string& name, const std::string& content) {
  fs::path path = scratch() / name;
  std::ofstream out(path);
  out << content;
  return path;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path linear_system() {
  return write_file("linear.json", R"({
    "name": "linear", "state_dim": 1, "input_dim": 1,
    "input_set": {"type": "box", "lo": [-1.0], "hi": [1.0]},
    "field": ["-x1 + u1"]
  })");
}

fs::path drift_system() {
  return write_file("drift.json", R"({
    "name": "drift", "state_dim": 1, "input_dim": 1,
    "input_set": {"type": "box", "lo": [-0.5], "hi": [0.5]},
    "field": ["-1 + u1"]
  })");
}

fs::path good_cert() {
  return write_file("cert.json", R"({
    "V": "(x1 - y1)^2",
    "metric": {"kind": "euclidean"},
    "alpha_lo": {"family": "power", "c": 0.5, "p": 2.0},
    "alpha_hi": {"family": "power", "c": 1.0, "p": 2.0},
    "kappa": 2.0
  })");
}

} // namespace

TEST_CASE("check: sound certificate exits 0 and writes a report") {
  fs::path out = scratch() / "check.json";
  int code = run("check --system " + linear_system().string() + " --certificate " +
                 good_cert().string() + " --mode gas --seed 5 --out " + out.string());
  CHECK(code == 0);
  std::string report = slurp(out);
  CHECK(report.find("\"verdict\": \"pass\"") != std::string::npos);
  CHECK(report.find("empirical, sampled") != std::string::npos);
  CHECK(fs::exists(out.string() + ".meta.json"));
}

TEST_CASE("check: violated decrease condition exits 1") {
  int code = run("check --system " + drift_system().string() + " --certificate " +
                 good_cert().string() + " --mode gas --seed 5");
  CHECK(code == 1);
}

TEST_CASE("falsify: counterexample search") {
  int found = run("falsify --system " + drift_system().string() + " --certificate " +
                  good_cert().string() + " --mode gas --condition decrease --seed 7");
  CHECK(found == 1);
  int none = run("falsify --system " + linear_system().string() + " --certificate " +
                 good_cert().string() + " --mode gas --condition decrease --seed 7");
  CHECK(none == 0);
}

TEST_CASE("simulate writes a trajectory CSV") {
  fs::path out = scratch() / "traj.csv";
  int code = run("simulate --system " + linear_system().string() +
                 " --x0 1.0 --input-const 0.0 --horizon 1.0 --out " + out.string());
  CHECK(code == 0);
  std::string csv = slurp(out);
  CHECK(csv.rfind("t,x1\n0,1\n", 0) == 0);
}

TEST_CASE("errors exit 2 with a single-line message") {
  CHECK(run("check --system /nonexistent.json --certificate " +
            good_cert().string()) == 2);
  fs::path bad = write_file("bad.json", "{ not json");
  CHECK(run("check --system " + bad.string() + " --certificate " +
            good_cert().string()) == 2);
  CHECK(run("check --system " + linear_system().string() + " --certificate " +
            good_cert().string() + " --mode bogus") == 2);
  CHECK(run("frobnicate") == 2);
}

TEST_CASE("rho subcommand reproduces the worked construction") {
  fs::path beta = write_file("beta.json",
                             R"({"k": {"family": "linear", "c": 2.0}, "lambda": 1.0})");
  fs::path gamma = write_file("gamma.json", R"({"family": "linear", "c": 1.0})");
  fs::path out = scratch() / "rho.json";
  CHECK(run("rho --beta " + beta.string() + " --gamma " + gamma.string() + " --out " +
            out.string()) == 0);
  CHECK(slurp(out).find("0.0625") != std::string::npos);
}

TEST_CASE("reports are byte-identical across reruns") {
  fs::path a = scratch() / "a.json";
  fs::path b = scratch() / "b.json";
  std::string base = "check --system " + drift_system().string() + " --certificate " +
                     good_cert().string() + " --mode gas --seed 11 --out ";
  CHECK(run(base + a.string()) == 1);
  CHECK(run(base + b.string()) == 1);
  CHECK(slurp(a) == slurp(b));
  CHECK_FALSE(slurp(a).empty());

  fs::path fa = scratch() / "fa.json";
  fs::path fb = scratch() / "fb.json";
  std::string fal = "falsify --system " + drift_system().string() + " --certificate " +
                    good_cert().string() + " --mode gas --seed 11 --out ";
  CHECK(run(fal + fa.string()) == 1);
  CHECK(run(fal + fb.string()) == 1);
  CHECK(slurp(fa) == slurp(fb));
}

TEST_CASE("envelope subcommand emits fit and trace files") {
  fs::path metric = write_file("euclid.json", R"({"kind": "euclidean"})");
  fs::path fit = scratch() / "fit.json";
  fs::path trace = scratch() / "trace.csv";
  int code = run("envelope --system " + linear_system().string() + " --kind gas" +
                 " --metric " + metric.string() +
                 " --pairs 10 --horizon 4.0 --seed 3 --out " + fit.string() +
                 " --trace " + trace.string());
  CHECK(code == 0);
  CHECK(slurp(fit).find("\"verdict\": \"ok\"") != std::string::npos);
  CHECK(slurp(trace).rfind("pair_id,t,r0,distance\n", 0) == 0);
}
