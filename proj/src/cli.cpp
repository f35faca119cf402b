#include "fsmgfn/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "fsmgfn/checkpoint.hpp"
#include "fsmgfn/clean.hpp"
#include "fsmgfn/errors.hpp"
#include "fsmgfn/event_log.hpp"
#include "fsmgfn/generator.hpp"
#include "fsmgfn/intent.hpp"
#include "fsmgfn/metrics.hpp"
#include "fsmgfn/ui_task_fsm.hpp"
#include "fsmgfn/pipeline.hpp"
#include "fsmgfn/trainer.hpp"

namespace fsmgfn {

namespace fs = std::filesystem;

namespace {

struct GlobalOptions {
  std::uint64_t seed = 0;
  std::string fsm;
  bool verbose = false;
  bool seed_set = false;

  FsmSpec machine() const { return fsm.empty() ? ui_task_fsm() : load_fsm(fsm); }
};

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

// --- validate --------------------------------------------------------------

struct ValidateArgs {
  std::string logs;
  std::string report;
};

int cmd_validate(const GlobalOptions& g, const ValidateArgs& a, std::ostream& out) {
  const auto fsm = g.machine();
  std::ostringstream listing;
  std::size_t bad = 0, total = 0;
  for (const auto& path : list_logs(a.logs)) {
    ++total;
    std::string verdict;
    try {
      const auto log = read_log_csv(path);
      if (log.rows.empty()) {
        verdict = "empty";
        ++bad;
      } else if (auto v = validate_log(fsm, log.rows); v.ok) {
        verdict = "ok (" + std::to_string(log.rows.size()) + " rows)";
      } else {
        verdict = "invalid at row " + std::to_string(v.index) + ": " + v.reason;
        ++bad;
      }
    } catch (const FormatError& e) {
      verdict = std::string("malformed: ") + e.what();
      ++bad;
    }
    listing << path.string() << ": " << verdict << '\n';
  }
  listing << total - bad << "/" << total << " files valid\n";
  out << listing.str();
  if (!a.report.empty()) write_file(a.report, listing.str());
  return bad == 0 ? kExitOk : kExitValidation;
}

// --- clean -----------------------------------------------------------------

struct CleanArgs {
  std::string input;
  std::string output;
  std::string columns;
};

int cmd_clean(const CleanArgs& a, std::ostream& out) {
  std::optional<ColumnSpec> cols;
  if (!a.columns.empty()) cols = parse_column_spec(a.columns);

  auto clean_one = [&](const fs::path& in_path, const fs::path& out_path) {
    std::ifstream in(in_path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + in_path.string() + "'");
    std::ostringstream cleaned;
    try {
      clean_log(in, cleaned, cols);
    } catch (const FormatError& e) {
      throw FormatError(in_path.string() + ": " + e.what());
    }
    write_file(out_path, cleaned.str());
  };

  std::error_code ec;
  if (fs::is_directory(a.input, ec)) {
    std::size_t n = 0;
    for (const auto& p : list_logs(a.input)) {
      clean_one(p, fs::path(a.output) / p.filename());
      ++n;
    }
    out << "cleaned " << n << " files into " << a.output << '\n';
  } else {
    clean_one(a.input, a.output);
    out << "cleaned " << a.input << " -> " << a.output << '\n';
  }
  return kExitOk;
}

// --- train -----------------------------------------------------------------

struct TrainArgs {
  TrainConfig cfg;
  std::string optimizer = "adam";
  std::string out = "checkpoint.txt";
  std::string stats;
};

int cmd_train(const GlobalOptions& g, TrainArgs a, std::ostream& out, std::ostream& err) {
  const auto fsm = g.machine();
  a.cfg.seed = g.seed;
  a.cfg.optimizer = parse_optimizer(a.optimizer);
  a.cfg.validate();
  EpisodeCallback progress;
  if (g.verbose) {
    progress = [&](const EpisodeStats& s) {
      if (s.episode % 500 == 0)
        err << "episode " << s.episode << " reward " << s.reward << " length " << s.length << '\n';
    };
  }
  const auto res = train(fsm, a.cfg, progress);
  write_checkpoint(a.out, make_checkpoint(fsm, res.params, a.cfg.t_max));
  if (!a.stats.empty()) {
    std::ostringstream csv;
    write_stats_csv(csv, res.history);
    write_file(a.stats, csv.str());
  }
  std::size_t done = 0;
  for (const auto& h : res.history) done += h.terminated ? 1 : 0;
  out << "trained " << res.history.size() << " episodes, " << done
      << " terminated; checkpoint " << a.out << '\n';
  return kExitOk;
}

// --- generate --------------------------------------------------------------

struct GenerateArgs {
  std::string checkpoint;
  std::string out_dir = "synthetic_logs";
  GenConfig cfg;
  std::size_t events = 0;
  bool uniform = false;
};

int cmd_generate(const GlobalOptions& g, GenerateArgs a, std::ostream& out) {
  const auto fsm = g.machine();
  PolicyParams params;
  if (a.uniform) {
    params = uniform_policy(fsm);
    if (a.cfg.t_max == 0) a.cfg.t_max = 60;
  } else {
    if (a.checkpoint.empty()) throw UsageError("--checkpoint is required (or pass --uniform)");
    const auto ckpt = read_checkpoint(a.checkpoint);
    ckpt.check_compatible(fsm);
    params = ckpt.params;
    a.cfg.t_max = ckpt.t_max;
  }
  if (a.events > 0) a.cfg.set_exact_length(a.events);
  a.cfg.seed = g.seed;
  a.cfg.validate();
  const auto paths = generate_batch(fsm, params, a.cfg, a.out_dir);
  out << "wrote " << paths.size() << " logs to " << a.out_dir << '\n';
  return kExitOk;
}

// --- evaluate --------------------------------------------------------------

struct EvaluateArgs {
  std::string generated;
  std::string baseline;
  std::string mode = "aggregate";
  std::size_t k = 5;
  std::size_t iterations = 100;
  std::string report;
};

int cmd_evaluate(const GlobalOptions& g, const EvaluateArgs& a, std::ostream& out) {
  const auto fsm = g.machine();
  const auto mode = parse_eval_mode(a.mode);
  const auto gen = read_log_dir(a.generated, LogSource::generated);
  const auto base = read_log_dir(a.baseline, LogSource::real);
  if (gen.empty()) throw UsageError("no .csv logs under " + a.generated);
  if (base.empty()) throw UsageError("no .csv logs under " + a.baseline);
  const auto report = mode == EvalMode::protocol
                          ? protocol_run(gen, base, {a.k, a.iterations, g.seed}, &fsm)
                          : evaluate(gen, base, mode, &fsm);
  const auto json = report_to_json(report);
  if (!a.report.empty()) write_file(a.report, json);
  out << json;
  return kExitOk;
}

// --- classify --------------------------------------------------------------

struct ClassifyArgs {
  std::string train_dir;
  std::string test_dir;
  ClassifierTrainConfig cfg;
  std::string report;
};

int cmd_classify(const GlobalOptions& g, ClassifyArgs a, std::ostream& out) {
  a.cfg.seed = g.seed;
  const auto train_logs = read_log_dir(a.train_dir, LogSource::generated);
  const auto test_logs = read_log_dir(a.test_dir, LogSource::real);
  if (train_logs.empty()) throw UsageError("no .csv logs under " + a.train_dir);
  if (test_logs.empty()) throw UsageError("no .csv logs under " + a.test_dir);
  const auto train_set = build_dataset(train_logs);
  const auto test_set = build_dataset(test_logs);
  const auto model = train_classifier(train_set, a.cfg);
  const auto report = evaluate_classifier(model, test_set);
  const auto json =
      classifier_report_json(report, train_set.class_counts(), test_set.class_counts());
  if (!a.report.empty()) write_file(a.report, json);
  out << json;
  return kExitOk;
}

// --- expert-trace ----------------------------------------------------------

int cmd_expert(const GlobalOptions& g, std::size_t repetitions, const std::string& path,
               std::ostream& out) {
  const auto fsm = g.machine();
  const EventLog log{expert_trace(fsm, repetitions), LogSource::expert};
  if (path.empty()) {
    write_log_csv(out, log);
  } else {
    std::ostringstream csv;
    write_log_csv(csv, log);
    write_file(path, csv.str());
    out << "wrote " << log.rows.size() << " rows to " << path << '\n';
  }
  return kExitOk;
}

// --- pipeline --------------------------------------------------------------

struct PipelineArgs {
  std::string config;
  std::string out;
  std::vector<std::string> overrides;
};

int cmd_pipeline(const GlobalOptions& g, const PipelineArgs& a, std::ostream& out,
                 std::ostream& err) {
  PipelineConfig cfg;
  if (!a.config.empty()) cfg = load_pipeline_config(a.config);
  for (const auto& kv : a.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + kv + "'");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (g.seed_set) cfg.seed = g.seed;
  if (!g.fsm.empty()) cfg.fsm = g.fsm;
  if (!a.out.empty()) cfg.out = a.out;

  std::ostringstream sink;
  const auto res = run_pipeline(cfg, g.verbose ? err : static_cast<std::ostream&>(sink));
  out << "checkpoint  " << res.checkpoint.string() << '\n'
      << "corpus      " << res.corpus_dir.string() << '\n'
      << "metrics     " << res.metrics_report.string() << '\n'
      << "classifier  " << res.classifier_report.string() << '\n'
      << "manifest    " << res.manifest.string() << '\n';
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"FSM-constrained generative policy for synthetic event logs", "fsmgfn"};
  app.require_subcommand(1);
  app.set_version_flag("--version", FSMGFN_VERSION);

  GlobalOptions g;
  app.add_option("--seed", g.seed, "Random seed")->each([&](const std::string&) { g.seed_set = true; });
  app.add_option("--fsm", g.fsm, "Machine description (default: built-in UI task machine)");
  app.add_flag("-v,--verbose", g.verbose, "Progress output on stderr");

  auto* validate = app.add_subcommand("validate", "Check logs against the machine");
  ValidateArgs va;
  validate->add_option("logs,--logs", va.logs, "Log file or directory of .csv logs")->required();
  validate->add_option("--report", va.report, "Also write the verdict listing here");

  auto* clean = app.add_subcommand("clean", "Reduce raw logs to state,event columns");
  CleanArgs ca;
  clean->add_option("--in", ca.input, "Raw log file or directory")->required();
  clean->add_option("--out", ca.output, "Cleaned file or directory")->required();
  clean->add_option("--columns", ca.columns, "Headerless input: state=<idx>,event=<idx>");

  auto* trainc = app.add_subcommand("train", "Train the policy");
  TrainArgs ta;
  trainc->add_option("--episodes", ta.cfg.episodes, "Training episodes")->capture_default_str();
  trainc->add_option("--t-max,--t_max", ta.cfg.t_max, "Policy steps per episode")->capture_default_str();
  trainc->add_option("--epsilon", ta.cfg.epsilon, "Exploration rate")->capture_default_str();
  trainc->add_option("--lr,--learning-rate", ta.cfg.learning_rate, "Learning rate")->capture_default_str();
  trainc->add_option("--hidden", ta.cfg.hidden, "Hidden units")->capture_default_str();
  trainc->add_option("--optimizer", ta.optimizer, "adam or sgd")->capture_default_str();
  trainc->add_flag("--hover-in-training", ta.cfg.hover_in_training, "Inject hovers during rollouts");
  trainc->add_option("--p-hover", ta.cfg.p_hover, "Hover probability during training")->capture_default_str();
  trainc->add_option("--out", ta.out, "Checkpoint path")->capture_default_str();
  trainc->add_option("--stats", ta.stats, "Per-episode statistics CSV");

  auto* generate = app.add_subcommand("generate", "Sample synthetic logs");
  GenerateArgs ga;
  ga.cfg.t_max = 0;
  generate->add_option("--checkpoint", ga.checkpoint, "Trained checkpoint");
  generate->add_flag("--uniform", ga.uniform, "Uniform random valid actions instead of a policy");
  generate->add_option("--out-dir,--out", ga.out_dir, "Output directory")->capture_default_str();
  generate->add_option("--num-logs,-n", ga.cfg.num_logs, "Number of logs")->capture_default_str();
  generate->add_option("--events", ga.events, "Exact events per log");
  generate->add_option("--events-min", ga.cfg.events_min, "Minimum events per log")->capture_default_str();
  generate->add_option("--events-max", ga.cfg.events_max, "Maximum events per log")->capture_default_str();
  generate->add_option("--p-hover", ga.cfg.p_hover, "Hover injection probability")->capture_default_str();
  generate->add_option("--epsilon", ga.cfg.epsilon, "Exploration during sampling")->capture_default_str();

  auto* evaluatec = app.add_subcommand("evaluate", "Distributional metrics against a baseline");
  EvaluateArgs ea;
  evaluatec->add_option("--generated", ea.generated, "Generated logs")->required();
  evaluatec->add_option("--baseline", ea.baseline, "Baseline logs")->required();
  evaluatec->add_option("--mode", ea.mode, "aggregate, per-file or protocol")->capture_default_str();
  evaluatec->add_option("--k", ea.k, "Logs per protocol run")->capture_default_str();
  evaluatec->add_option("--iterations", ea.iterations, "Protocol runs")->capture_default_str();
  evaluatec->add_option("--report", ea.report, "JSON report path");

  auto* classify = app.add_subcommand("classify", "Intent classification use case");
  ClassifyArgs cla;
  classify->add_option("--train-dir", cla.train_dir, "Training logs")->required();
  classify->add_option("--test-dir", cla.test_dir, "Test logs")->required();
  classify->add_option("--epochs", cla.cfg.epochs, "Gradient descent epochs")->capture_default_str();
  classify->add_option("--lr", cla.cfg.learning_rate, "Learning rate")->capture_default_str();
  classify->add_option("--l2", cla.cfg.l2, "L2 penalty")->capture_default_str();
  classify->add_option("--report", cla.report, "JSON report path");

  auto* expert = app.add_subcommand("expert-trace", "Scripted expert trace");
  std::size_t repetitions = 15;
  std::string expert_out;
  expert->add_option("--repetitions", repetitions, "Task cycles")->capture_default_str();
  expert->add_option("--out", expert_out, "CSV path (default stdout)");

  auto* pipeline = app.add_subcommand("pipeline", "train -> generate -> evaluate -> classify");
  PipelineArgs pa;
  pipeline->add_option("--config", pa.config, "key=value config or a previous manifest");
  pipeline->add_option("--out", pa.out, "Output directory");
  pipeline->add_option("--set", pa.overrides, "Override a config key (key=value)");

  for (auto* sub : app.get_subcommands([](CLI::App*) { return true; })) sub->fallthrough();

  std::vector<std::string> argv_rev(args.rbegin(), args.rend());
  try {
    app.parse(argv_rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << FSMGFN_VERSION << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (validate->parsed()) return cmd_validate(g, va, out);
    if (clean->parsed()) return cmd_clean(ca, out);
    if (trainc->parsed()) return cmd_train(g, ta, out, err);
    if (generate->parsed()) return cmd_generate(g, ga, out);
    if (evaluatec->parsed()) return cmd_evaluate(g, ea, out);
    if (classify->parsed()) return cmd_classify(g, cla, out);
    if (expert->parsed()) return cmd_expert(g, repetitions, expert_out, out);
    if (pipeline->parsed()) return cmd_pipeline(g, pa, out, err);
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const FormatError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const SemanticError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  return kExitUsage;
}

}  // namespace fsmgfn
