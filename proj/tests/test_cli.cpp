#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"

namespace fs = std::filesystem;

#ifndef FACTCLI
#define FACTCLI "./factcli"
#endif

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("factcli_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  static int& counter() {
    static int c = 0;
    return c;
  }
  std::string operator/(const std::string& name) const {
    return (path / name).string();
  }
};

struct RunResult {
  int code = -1;
  std::string out;  // stdout + stderr
};

RunResult run(const std::string& args) {
  static int n = 0;
  const std::string log = (fs::temp_directory_path() /
                           ("factcli_log_" + std::to_string(::getpid()) + "_" +
                            std::to_string(n++)))
                              .string();
  const std::string cmd = std::string(FACTCLI) + " " + args + " >" + log +
                          " 2>&1";
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream is(log);
  std::stringstream ss;
  ss << is.rdbuf();
  r.out = ss.str();
  fs::remove(log);
  return r;
}

std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  REQUIRE(is.good());
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream os(path);
  os << text;
}

// Small synthetic dataset + prep directory shared by several cases.
struct Pipeline {
  TempDir dir;
  std::string csv, prep;
  Pipeline() {
    csv = dir / "data.csv";
    prep = dir / "prep";
    const std::string cfg = dir / "synth.ini";
    write_file(cfg,
               "n_drivers = 20\nhorizon_days = 3\nfrailty_sd = 0.5\n"
               "history_coef = 0.4\nseed = 42\n");
    REQUIRE(run("synth --config " + cfg + " --out " + csv).code == 0);
    REQUIRE(run("prep --in " + csv + " --lookback 5 --out " + prep).code == 0);
  }
};

Pipeline& pipeline() {
  static Pipeline p;
  return p;
}

}  // namespace

TEST_CASE("synth + prep produce the expected artifacts") {
  const Pipeline& p = pipeline();
  CHECK(fs::exists(p.csv));
  CHECK(fs::exists(p.csv + ".truth"));
  for (const char* f :
       {"train.fwin", "val.fwin", "test.fwin", "scaler.txt", "records.csv",
        "manifest.txt"})
    CHECK(fs::exists(fs::path(p.prep) / f));
  const std::string manifest = slurp(fs::path(p.prep) / "manifest.txt");
  CHECK(manifest.find("status = ok") != std::string::npos);
  CHECK(manifest.find("command = prep") != std::string::npos);
}

TEST_CASE("identical commands produce byte-identical outputs") {
  const Pipeline& p = pipeline();
  TempDir d;
  const std::string cfg = d / "synth.ini";
  write_file(cfg, "n_drivers = 8\nhorizon_days = 2\nseed = 7\n");
  REQUIRE(run("synth --config " + cfg + " --out " + (d / "a.csv")).code == 0);
  REQUIRE(run("synth --config " + cfg + " --out " + (d / "b.csv")).code == 0);
  CHECK(slurp(d / "a.csv") == slurp(d / "b.csv"));

  // same for a full fit: checkpoints must match bit for bit
  const std::string tcfg = d / "train.ini";
  write_file(tcfg,
             "lr = 0.01\nmax_epochs = 2\nbatch_size = 64\n"
             "[model]\nn_heads = 2\nn_layers = 1\nhidden_dim = 8\n");
  REQUIRE(run("fit --model fact --data " + p.prep + " --config " + tcfg +
              " --out " + (d / "runA") + " --seed 5")
              .code == 0);
  REQUIRE(run("fit --model fact --data " + p.prep + " --config " + tcfg +
              " --out " + (d / "runB") + " --seed 5")
              .code == 0);
  CHECK(slurp(d / "runA/model.ckpt") == slurp(d / "runB/model.ckpt"));
  CHECK(slurp(d / "runA/epochs.csv") == slurp(d / "runB/epochs.csv"));
}

TEST_CASE("fit -> eval -> attention round trip") {
  const Pipeline& p = pipeline();
  TempDir d;
  const std::string tcfg = d / "train.ini";
  write_file(tcfg,
             "lr = 0.01\nmax_epochs = 2\nbatch_size = 64\n"
             "[model]\nn_heads = 2\nn_layers = 1\nhidden_dim = 8\n"
             "frailty_dim = 2\n");
  const RunResult fit = run("fit --model fact --data " + p.prep +
                            " --config " + tcfg + " --out " + (d / "run"));
  REQUIRE(fit.code == 0);
  CHECK(fit.out.find("best_val_c_index=") != std::string::npos);
  CHECK(fs::exists(d / "run/model.ckpt"));
  CHECK(fs::exists(d / "run/epochs.csv"));

  const RunResult ev = run("eval --model " + (d / "run/model.ckpt") +
                           " --data " + p.prep + " --out " + (d / "run"));
  REQUIRE(ev.code == 0);
  const std::string report = slurp(d / "run/eval_report.txt");
  CHECK(report.find("format_version=1") != std::string::npos);
  CHECK(report.find("c_index_integrated=") != std::string::npos);
  CHECK(report.find("ibs=") != std::string::npos);
  CHECK(report.find("config_fingerprint=fact:") != std::string::npos);

  const RunResult at = run("attention --model " + (d / "run/model.ckpt") +
                           " --data " + p.prep + " --out " +
                           (d / "attention.csv"));
  REQUIRE(at.code == 0);
  std::ifstream is(d / "attention.csv");
  std::string header;
  std::getline(is, header);
  CHECK(header == "position,mean_weight");
  double total = 0, w;
  char comma;
  int pos, rows = 0;
  while (is >> pos >> comma >> w) {
    total += w;
    ++rows;
  }
  CHECK(rows == 6);  // lookback 5 -> seq_len 6
  CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("km writes one curve per stratum plus pairwise log-rank results") {
  const Pipeline& p = pipeline();
  TempDir d;
  const RunResult r = run("km --in " + p.csv + " --stratify time_of_day " +
                          "--out " + (d / "km") + " --svg");
  REQUIRE(r.code == 0);
  int curves = 0;
  for (const auto& entry : fs::directory_iterator(d / "km")) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("km_", 0) == 0 && name.size() > 4 &&
        name.substr(name.size() - 4) == ".csv")
      ++curves;
  }
  CHECK(curves == 4);
  CHECK(fs::exists(d / "km/km.svg"));
  const std::string logrank = slurp(d / "km/logrank.csv");
  CHECK(logrank.find("group_a,group_b,chi2,p_value") != std::string::npos);
  // 4 strata -> header + 6 pairs
  CHECK(std::count(logrank.begin(), logrank.end(), '\n') == 7);
}

TEST_CASE("grid and ablate write ranked result tables") {
  const Pipeline& p = pipeline();
  TempDir d;
  const std::string spec = d / "grid.ini";
  write_file(spec,
             "lr = 0.01\nmax_epochs = 1\n"
             "[grid]\nm = 2\nn = 2,4\nl = 1\nd = 8\n");
  REQUIRE(run("grid --spec " + spec + " --data " + p.prep + " --out " +
              (d / "grid"))
              .code == 0);
  const std::string grid = slurp(d / "grid/grid.csv");
  CHECK(grid.find("rank,m,n,l,d,val_c_index,status") != std::string::npos);
  CHECK(std::count(grid.begin(), grid.end(), '\n') == 3);  // header + 2 cells

  const std::string tcfg = d / "ablate.ini";
  write_file(tcfg,
             "lr = 0.01\nmax_epochs = 1\nseeds = 1\nlookback = 2\n"
             "[model]\nn_heads = 2\nn_layers = 1\nhidden_dim = 8\n"
             "frailty_dim = 2\n");
  REQUIRE(run("ablate --config " + tcfg + " --data " + p.prep + " --out " +
              (d / "ab"))
              .code == 0);
  const std::string ab = slurp(d / "ab/ablation.csv");
  CHECK(ab.find("scenario,embedding,test_c_index,sd,status") !=
        std::string::npos);
  CHECK(std::count(ab.begin(), ab.end(), '\n') == 13);  // header + 12 cells
  CHECK(ab.find("no_history,on") != std::string::npos);
  CHECK(ab.find("full,off") != std::string::npos);
}

TEST_CASE("error paths map to the documented exit codes") {
  const Pipeline& p = pipeline();
  TempDir d;

  // missing required option -> usage (2)
  CHECK(run("prep --out " + (d / "x")).code == 2);
  // nonexistent input file -> usage (2, CLI-level existence check)
  CHECK(run("km --in /nonexistent.csv --out " + (d / "x")).code == 2);
  // unknown config key -> schema (4)
  const std::string bad = d / "bad.ini";
  write_file(bad, "n_drivers = 5\nno_such_key = 1\n");
  const RunResult r = run("synth --config " + bad + " --out " + (d / "y.csv"));
  CHECK(r.code == 4);
  CHECK(r.out.find("error category=schema") != std::string::npos);
  CHECK(r.out.find("no_such_key") != std::string::npos);
  // unknown stratification rule -> invalid-argument (5)
  CHECK(run("km --in " + p.csv + " --stratify bogus --out " + (d / "z")).code ==
        5);
  // malformed CSV -> schema (4)
  write_file(d / "junk.csv", "not,a,valid,header\n1,2,3,4\n");
  CHECK(run("prep --in " + (d / "junk.csv") + " --out " + (d / "w")).code == 4);
}

TEST_CASE("eval rejects a checkpoint trained on a different window shape") {
  const Pipeline& p = pipeline();
  TempDir d;
  // prep the same csv with a different lookback, fit there, eval here
  REQUIRE(run("prep --in " + p.csv + " --lookback 2 --out " + (d / "prep2"))
              .code == 0);
  const std::string tcfg = d / "train.ini";
  write_file(tcfg, "lr = 0.01\nmax_epochs = 1\n");
  REQUIRE(run("fit --model coxph --data " + (d / "prep2") + " --config " +
              tcfg + " --out " + (d / "run"))
              .code == 0);
  const RunResult r = run("eval --model " + (d / "run/model.ckpt") +
                          " --data " + p.prep + " --out " + (d / "evalrun"));
  CHECK(r.code == 4);
  CHECK(r.out.find("error category=schema") != std::string::npos);
  // the manifest still records the failure
  const std::string manifest = slurp(d / "evalrun/manifest.txt");
  CHECK(manifest.find("status = schema") != std::string::npos);
}

TEST_CASE("FACT_SEED environment variable sets the default seed") {
  TempDir d;
  const std::string cfg = d / "synth.ini";
  write_file(cfg, "n_drivers = 5\nhorizon_days = 2\n");
  ::setenv("FACT_SEED", "99", 1);
  REQUIRE(run("synth --config " + cfg + " --out " + (d / "a.csv")).code == 0);
  ::unsetenv("FACT_SEED");
  REQUIRE(run("synth --config " + cfg + " --out " + (d / "b.csv") +
              " --seed 99")
              .code == 0);
  REQUIRE(run("synth --config " + cfg + " --out " + (d / "c.csv") +
              " --seed 100")
              .code == 0);
  CHECK(slurp(d / "a.csv") == slurp(d / "b.csv"));
  CHECK(slurp(d / "a.csv") != slurp(d / "c.csv"));
}
