#include <doctest.h>

#include <nlohmann/json.hpp>
#include <sstream>

#include "fsmgfn/errors.hpp"
#include "fsmgfn/pipeline.hpp"
#include "oracles.hpp"

using namespace fsmgfn;
namespace fs = std::filesystem;

namespace {

PipelineConfig small_config(const fs::path& out) {
  PipelineConfig cfg;
  cfg.apply_text(
      "# small end-to-end run\n"
      "seed=11\n"
      "episodes=300\n"
      "num_logs=12\n"
      "events_min=200\n"
      "events_max=260\n"
      "k=3\n"
      "iterations=10\n"
      "clf_epochs=100\n");
  cfg.out = out.string();
  return cfg;
}

std::vector<std::string> artifact_names(const fs::path& dir) {
  std::vector<std::string> names;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) names.push_back(fs::relative(e.path(), dir).string());
  std::sort(names.begin(), names.end());
  return names;
}

}  // namespace

TEST_CASE("config text parsing") {
  PipelineConfig cfg;
  cfg.apply_text("episodes = 42\noptimizer=sgd\nhover_in_training=true\nmode=per-file\n# comment\n\n");
  CHECK(cfg.train.episodes == 42);
  CHECK(cfg.train.optimizer == OptimizerKind::sgd);
  CHECK(cfg.train.hover_in_training);
  CHECK(cfg.mode == EvalMode::per_file);
  CHECK_THROWS_AS(cfg.set("nonsense", "1"), UsageError);
  CHECK_THROWS_AS(cfg.set("episodes", "-3"), UsageError);
  CHECK_THROWS_AS(cfg.set("epsilon", "abc"), UsageError);
  CHECK_THROWS_AS(cfg.apply_text("episodes 3\n"), UsageError);

  PipelineConfig round;
  round.apply_text(cfg.to_text());
  CHECK(round.to_text() == cfg.to_text());
}

TEST_CASE("validation happens before any work") {
  const auto dir = oracle::scratch_dir("pipe_invalid");
  auto cfg = small_config(dir / "run");
  cfg.k = 50;
  std::ostringstream log;
  CHECK_THROWS_AS(run_pipeline(cfg, log), UsageError);
  CHECK_FALSE(fs::exists(dir / "run" / "checkpoint.txt"));
  CHECK(log.str().find("train") == std::string::npos);

  cfg = small_config(dir / "run");
  cfg.baseline = (dir / "missing").string();
  CHECK_THROWS(run_pipeline(cfg, log));
  CHECK_FALSE(fs::exists(dir / "run" / "checkpoint.txt"));
  fs::remove_all(dir);
}

TEST_CASE("pipeline produces every artifact and replays byte for byte") {
  const auto dir = oracle::scratch_dir("pipe_replay");
  std::ostringstream log;
  const auto first = run_pipeline(small_config(dir / "a"), log);
  CHECK(fs::exists(first.checkpoint));
  CHECK(fs::exists(first.metrics_report));
  CHECK(fs::exists(first.classifier_report));
  CHECK(fs::exists(first.manifest));
  CHECK(list_logs(first.corpus_dir).size() == 12);
  CHECK(fs::exists(dir / "a" / "baseline" / "expert.csv"));

  // Replay from the written manifest into a different directory.
  auto replay = load_pipeline_config(first.manifest);
  replay.out = (dir / "b").string();
  run_pipeline(replay, log);

  const auto names = artifact_names(dir / "a");
  CHECK(names == artifact_names(dir / "b"));
  for (const auto& n : names) CHECK_MESSAGE(oracle::slurp(dir / "a" / n) == oracle::slurp(dir / "b" / n), n);

  const auto metrics = nlohmann::json::parse(oracle::slurp(first.metrics_report));
  CHECK(metrics["mode"] == "protocol");
  CHECK(metrics["protocol"]["k"] == 3);
  // Expert baseline: hover-rich corpus against a hover-free trace.
  CHECK(metrics["metrics"]["chi2"].get<double>() > 1e6);
  CHECK(metrics["metrics"]["bigram_overlap"].get<double>() > 0.0);
  CHECK(first.classifier.accuracy >= 0.99);
  fs::remove_all(dir);
}

TEST_CASE("held-out baseline and aggregate mode") {
  const auto dir = oracle::scratch_dir("pipe_heldout");
  auto cfg = small_config(dir / "run");
  cfg.baseline = "heldout";
  cfg.baseline_logs = 3;
  cfg.mode = EvalMode::aggregate;
  std::ostringstream log;
  const auto res = run_pipeline(cfg, log);
  CHECK(list_logs(dir / "run" / "baseline").size() == 3);
  CHECK(res.metrics.metrics.kl < 0.05);
  CHECK_FALSE(res.metrics.protocol.has_value());
  fs::remove_all(dir);
}
