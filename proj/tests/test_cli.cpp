#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string output;  // stdout + stderr
};

struct CliSandbox {
  fs::path dir;
  CliSandbox() {
    dir = fs::temp_directory_path() /
          ("xprecode_cli_" + std::to_string(::getpid()));
    fs::create_directories(dir);
  }
  ~CliSandbox() { fs::remove_all(dir); }

  std::string path(const std::string& name) const {
    return (dir / name).string();
  }

  RunResult run(const std::string& args,
                const std::string& env_prefix = "") const {
    const std::string out = path("last_output.txt");
    const std::string cmd = env_prefix + " " + std::string(XPRECODE_CLI_PATH) +
                            " " + args + " > " + out + " 2>&1";
    const int status = std::system(cmd.c_str());
    RunResult r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream in(out);
    std::stringstream ss;
    ss << in.rdbuf();
    r.output = ss.str();
    return r;
  }

  std::string slurp(const std::string& name) const {
    std::ifstream in(path(name), std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }
};

}  // namespace

TEST_CASE("help and usage errors") {
  CliSandbox sb;
  const auto help = sb.run("--help");
  CHECK(help.exit_code == 0);
  CHECK(help.output.find("optimize-pair") != std::string::npos);
  CHECK(help.output.find("build-tables") != std::string::npos);

  CHECK(sb.run("").exit_code == 2);
  CHECK(sb.run("no-such-command").exit_code == 2);
  CHECK(sb.run("optimize-pair --beta").exit_code == 2);
  CHECK(sb.run("optimize-pair --beta 1 --snr-db 17 --qam 32").exit_code == 2);
  CHECK(sb.run("sweep --beta 2 --snr-db 10:0:1 --qam 4 "
               "--strategy gaussian-wf").exit_code == 2);
  CHECK(sb.run("sweep --beta 2 --snr-db 0:10:5 --qam 4 --strategy nonsense")
            .exit_code == 2);

  // a failed run must not leave partial output behind
  const auto bad = sb.run("optimize-pair --beta 1 --qam 4 --out " +
                          sb.path("never.json"));
  CHECK(bad.exit_code == 2);
  CHECK(!fs::exists(sb.path("never.json")));
}

TEST_CASE("optimize-pair reports the symmetric optimum and slices") {
  CliSandbox sb;
  const auto r = sb.run(
      "optimize-pair --beta 1 --alpha 1 --snr-db 17 --qam 16 --out " +
      sb.path("op.json"));
  REQUIRE(r.exit_code == 0);

  const auto j = json::parse(sb.slurp("op.json"));
  CHECK(j["alphabet"] == "qam16");
  REQUIRE(j["results"].size() == 1);
  CHECK(std::abs(j["results"][0]["f"].get<double>() - 0.5) <= 0.02);
  CHECK(j["results"][0]["snr_dB"] == 17.0);
  REQUIRE(j.contains("theta_slice_at_f_star"));
  REQUIRE(j.contains("f_slice_at_theta_star"));
  CHECK(j["theta_slice_at_f_star"].size() == 90);
  CHECK(j["f_slice_at_theta_star"].size() == 51);

  // equal gains: the theta slice is flat
  double lo = 1e300, hi = -1e300;
  for (const auto& row : j["theta_slice_at_f_star"]) {
    const double v = row["mi_bits"].get<double>();
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  CHECK(hi - lo < 5e-3);
}

TEST_CASE("build-tables writes deterministic table files") {
  CliSandbox sb;
  // nonexistent directory is an I/O error
  CHECK(sb.run("build-tables --qam 4 --betas 1 --snr-db 0:10:10 --table-dir " +
               sb.path("missing_dir")).exit_code == 2);

  fs::create_directories(sb.path("tables"));
  const std::string flags =
      "build-tables --qam 4 --betas 1,2 --snr-db 0:10:10 --table-dir " +
      sb.path("tables");
  REQUIRE(sb.run(flags).exit_code == 0);
  REQUIRE(fs::exists(sb.path("tables/qam4.json")));
  const auto first = sb.slurp("tables/qam4.json");

  const auto j = json::parse(first);
  CHECK(j["alphabet"] == "qam4");
  CHECK(j["beta_bins"].size() == 2);
  CHECK(j["snr_dB"].size() == 2);
  CHECK(j["cells"][0][0]["f"] == 0.5);  // beta = 1 row

  REQUIRE(sb.run(flags).exit_code == 0);
  CHECK(sb.slurp("tables/qam4.json") == first);  // rebuild is bit-identical

  // the environment variable stands in for --table-dir
  fs::create_directories(sb.path("envtables"));
  const auto env = sb.run("build-tables --qam 4 --betas 1 --snr-db 0:10:10",
                          "XPRECODE_TABLE_DIR=" + sb.path("envtables"));
  REQUIRE(env.exit_code == 0);
  CHECK(fs::exists(sb.path("envtables/qam4.json")));
}

TEST_CASE("sweep emits schema-tagged CSV with dominance intact") {
  CliSandbox sb;
  const auto r = sb.run(
      "sweep --beta 2 --alpha 1 --snr-db 0:10:5 --qam 4 "
      "--strategy gaussian-wf,wf-discrete,mercury-wf --out " +
      sb.path("sweep.csv"));
  REQUIRE(r.exit_code == 0);

  const auto text = sb.slurp("sweep.csv");
  CHECK(text.find("schema,snr_db,strategy,mi_bits,mi_stderr,meta\r\n") == 0);

  std::vector<std::vector<std::string>> data;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> f;
    std::stringstream ls(line);
    std::string tok;
    while (std::getline(ls, tok, ',')) f.push_back(tok);
    if (!f.empty() && f[0] == "xprecode.sweep.v1" && !f[1].empty())
      data.push_back(f);
  }
  REQUIRE(data.size() == 9);  // 3 SNRs x 3 strategies

  for (const double snr : {0.0, 5.0, 10.0}) {
    double gw = -1, dw = -1, mw = -1;
    for (const auto& f : data) {
      if (std::stod(f[1]) != snr) continue;
      const double mi = std::stod(f[3]);
      if (f[2] == "gaussian-wf") gw = mi;
      if (f[2] == "wf-discrete") dw = mi;
      if (f[2] == "mercury-wf") mw = mi;
    }
    CHECK(gw >= mw - 1e-9);
    CHECK(mw >= dw - 1e-9);
  }

  // xcode strategies refuse to run without a table
  const auto no_table = sb.run(
      "sweep --beta 2 --snr-db 5 --qam 4 --strategy xcode-x --table-dir " +
      sb.path("nowhere"));
  CHECK(no_table.exit_code == 2);
  CHECK(no_table.output.find("build-tables") != std::string::npos);
}

TEST_CASE("plan is deterministic and validates the channel") {
  CliSandbox sb;
  {
    std::ofstream ch(sb.path("diag2.json"));
    ch << R"({"diagonal": [1.0, 0.4]})";
  }
  const std::string flags = "plan --channel " + sb.path("diag2.json") +
                            " --snr-db 12 --qam 4 --strategy exhaustive "
                            "--seed 3 --out ";
  REQUIRE(sb.run(flags + sb.path("p1.json")).exit_code == 0);
  REQUIRE(sb.run(flags + sb.path("p2.json")).exit_code == 0);
  CHECK(sb.slurp("p1.json") == sb.slurp("p2.json"));

  const auto j = json::parse(sb.slurp("p1.json"));
  CHECK(j["strategy"] == "exhaustive");
  REQUIRE(j["pairs"].size() == 1);
  CHECK(j["pairs"][0]["i"] == 1);
  CHECK(j["pairs"][0]["j"] == 2);
  CHECK(j["pairs"][0]["pbar2"] == 1.0);
  CHECK(j["total_mi_bits"].get<double>() > 0.0);

  {
    std::ofstream ch(sb.path("odd.json"));
    ch << R"({"diagonal": [1.0, 0.5, 0.2]})";
  }
  CHECK(sb.run("plan --channel " + sb.path("odd.json") +
               " --snr-db 12 --qam 4 --strategy exhaustive").exit_code == 2);

  CHECK(sb.run("plan --channel " + sb.path("missing.json") +
               " --snr-db 12 --qam 4").exit_code == 2);

  // precoder sidecar
  REQUIRE(sb.run(flags + sb.path("p3.json") + " --precoder-out " +
                 sb.path("pre.json")).exit_code == 0);
  const auto pre = json::parse(sb.slurp("pre.json"));
  CHECK(pre["n_t"] == 2);
  double sum = 0.0;
  for (const auto& x : pre["p2"]) sum += x.get<double>();
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
}
