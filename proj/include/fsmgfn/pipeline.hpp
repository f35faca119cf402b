#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "fsmgfn/generator.hpp"
#include "fsmgfn/intent.hpp"
#include "fsmgfn/metrics.hpp"
#include "fsmgfn/trainer.hpp"

namespace fsmgfn {

/// End-to-end run settings. Text form is one `key=value` per line, `#`
/// comments; the keys are the flag names of the individual subcommands.
struct PipelineConfig {
  std::uint64_t seed = 0;
  std::string fsm;  // empty: built-in UI task machine
  std::string out = "pipeline_out";

  TrainConfig train;
  GenConfig gen;

  /// "expert", "heldout", or a directory of cleaned logs.
  std::string baseline = "expert";
  std::size_t baseline_logs = 5;        // heldout corpus size
  std::size_t expert_repetitions = 15;  // cycles in the expert baseline

  EvalMode mode = EvalMode::protocol;
  std::size_t k = 5;
  std::size_t iterations = 100;

  double test_fraction = 0.2;  // tail of the corpus held out for the classifier
  std::string test_dir;        // overrides test_fraction when set
  ClassifierTrainConfig classifier;

  /// Sets one key; throws UsageError on unknown keys or bad values.
  void set(std::string_view key, std::string_view value);
  /// Applies every `key=value` line of a config text.
  void apply_text(std::string_view text);
  /// Checks every stage's settings; throws UsageError before any work starts.
  void validate() const;
  /// Per-stage seeds derived from `seed`.
  void derive_seeds();

  /// Canonical key=value rendering (with a version line); parseable by
  /// apply_text.
  std::string to_text() const;
};

PipelineConfig load_pipeline_config(const std::filesystem::path& path);

struct PipelineResult {
  std::filesystem::path checkpoint;
  std::filesystem::path corpus_dir;
  std::filesystem::path metrics_report;
  std::filesystem::path classifier_report;
  std::filesystem::path manifest;
  MetricReport metrics;
  ClassifierReport classifier;
};

/// train -> generate -> evaluate -> classify under cfg.out. `log` receives
/// progress lines.
PipelineResult run_pipeline(PipelineConfig cfg, std::ostream& log);

}  // namespace fsmgfn
