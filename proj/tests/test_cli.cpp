#include <doctest.h>

#include <fstream>
#include <sstream>

#include "fsmgfn/cli.hpp"
#include "fsmgfn/event_log.hpp"
#include "oracles.hpp"

using namespace fsmgfn;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

}  // namespace

TEST_CASE("help and usage errors") {
  CHECK(cli({"--help"}).code == kExitOk);
  CHECK(cli({}).code == kExitUsage);
  CHECK(cli({"frobnicate"}).code == kExitUsage);
  CHECK(cli({"train", "--episodes", "many"}).code == kExitUsage);
  CHECK(cli({"train", "--optimizer", "rmsprop", "--episodes", "1"}).code == kExitUsage);
  CHECK(cli({"evaluate", "--generated", "x"}).code == kExitUsage);
}

TEST_CASE("train, generate, validate, evaluate, classify") {
  const auto dir = oracle::scratch_dir("cli_flow");
  const auto ck = (dir / "ck.txt").string();
  const auto stats = (dir / "stats.csv").string();
  auto r = cli({"--seed", "3", "train", "--episodes", "200", "--out", ck, "--stats", stats});
  REQUIRE(r.code == kExitOk);
  CHECK(fs::exists(ck));
  CHECK(oracle::slurp(stats).rfind("episode,reward,length,terminated,loss\n", 0) == 0);

  const auto corpus = (dir / "corpus").string();
  r = cli({"--seed", "4", "generate", "--checkpoint", ck, "--out-dir", corpus, "-n", "8", "--events", "300"});
  REQUIRE(r.code == kExitOk);
  CHECK(list_logs(corpus).size() == 8);
  CHECK(read_log_csv(fs::path(corpus) / "log_00003.csv").size() == 300);

  r = cli({"validate", corpus});
  CHECK(r.code == kExitOk);
  CHECK(r.out.find("8/8 files valid") != std::string::npos);

  const auto uniform = (dir / "uniform").string();
  CHECK(cli({"generate", "--uniform", "--out-dir", uniform, "-n", "5", "--events", "200"}).code == kExitOk);

  const auto report = (dir / "metrics.json").string();
  r = cli({"evaluate", "--generated", uniform, "--baseline", corpus, "--mode", "protocol", "--k", "2",
           "--iterations", "5", "--report", report});
  CHECK(r.code == kExitOk);
  CHECK(oracle::slurp(report).find("\"protocol\"") != std::string::npos);
  CHECK(cli({"evaluate", "--generated", uniform, "--baseline", corpus, "--mode", "protocol", "--k", "9"}).code ==
        kExitUsage);
  CHECK(cli({"evaluate", "--generated", uniform, "--baseline", corpus, "--mode", "median"}).code == kExitUsage);

  r = cli({"classify", "--train-dir", corpus, "--test-dir", uniform});
  CHECK(r.code == kExitOk);

  const auto gt = (dir / "gt.csv").string();
  CHECK(cli({"expert-trace", "--repetitions", "15", "--out", gt}).code == kExitOk);
  CHECK(read_log_csv(fs::path(gt)).size() == 121);
  CHECK(cli({"validate", gt}).code == kExitOk);
  fs::remove_all(dir);
}

TEST_CASE("validate verdicts and exit codes") {
  const auto dir = oracle::scratch_dir("cli_validate");
  write(dir / "good.csv", "state,event\nS1,A8\nS2,A1\n");
  CHECK(cli({"validate", (dir / "good.csv").string()}).code == kExitOk);

  write(dir / "bad.csv", "state,event\nS1,A8\nS3,K1\n");
  auto r = cli({"validate", dir.string()});
  CHECK(r.code == kExitValidation);
  CHECK(r.out.find("invalid at row 1") != std::string::npos);

  fs::remove(dir / "bad.csv");
  write(dir / "empty.csv", "");
  r = cli({"validate", dir.string()});
  CHECK(r.code == kExitValidation);
  CHECK(r.out.find("empty") != std::string::npos);

  CHECK(cli({"validate", (dir / "nope").string()}).code == kExitIo);
  write(dir / "broken.fsm", "states A\n");
  CHECK(cli({"--fsm", (dir / "broken.fsm").string(), "validate", (dir / "good.csv").string()}).code == kExitUsage);
  CHECK(cli({"--fsm", (dir / "missing.fsm").string(), "validate", (dir / "good.csv").string()}).code == kExitIo);
  fs::remove_all(dir);
}

TEST_CASE("clean command") {
  const auto dir = oracle::scratch_dir("cli_clean");
  write(dir / "raw.csv", "1695000,S1,\"A8 nav\",640,480\n");
  CHECK(cli({"clean", "--in", (dir / "raw.csv").string(), "--out", (dir / "c.csv").string(), "--columns",
             "state=1,event=2"})
            .code == kExitOk);
  CHECK(oracle::slurp(dir / "c.csv") == "state,event\nS1,A8\n");

  CHECK(cli({"clean", "--in", (dir / "c.csv").string(), "--out", (dir / "c2.csv").string()}).code == kExitOk);
  CHECK(oracle::slurp(dir / "c2.csv") == oracle::slurp(dir / "c.csv"));

  write(dir / "noevent.csv", "time,state\n1,S1\n");
  auto r = cli({"clean", "--in", (dir / "noevent.csv").string(), "--out", (dir / "x.csv").string()});
  CHECK(r.code == kExitUsage);
  CHECK(r.err.find("event") != std::string::npos);

  CHECK(cli({"clean", "--in", (dir / "absent.csv").string(), "--out", (dir / "x.csv").string()}).code == kExitIo);
  fs::remove_all(dir);
}

TEST_CASE("generate and pipeline error paths") {
  const auto dir = oracle::scratch_dir("cli_errors");
  CHECK(cli({"generate", "--checkpoint", (dir / "none.txt").string(), "--out-dir", dir.string()}).code == kExitIo);
  write(dir / "garbage.txt", "hello\n");
  CHECK(cli({"generate", "--checkpoint", (dir / "garbage.txt").string(), "--out-dir", dir.string()}).code ==
        kExitUsage);
  CHECK(cli({"generate", "--out-dir", dir.string()}).code == kExitUsage);

  const auto out = (dir / "pipe").string();
  auto r = cli({"pipeline", "--out", out, "--set", "num_logs=3", "--set", "k=5"});
  CHECK(r.code == kExitUsage);
  CHECK_FALSE(fs::exists(fs::path(out) / "checkpoint.txt"));
  CHECK(cli({"pipeline", "--config", (dir / "missing.cfg").string()}).code == kExitIo);
  CHECK(cli({"pipeline", "--set", "bogus=1"}).code == kExitUsage);
  fs::remove_all(dir);
}
