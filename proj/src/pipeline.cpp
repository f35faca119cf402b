#include "fsmgfn/pipeline.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "fsmgfn/checkpoint.hpp"
#include "fsmgfn/csv.hpp"
#include "fsmgfn/errors.hpp"
#include "fsmgfn/ui_task_fsm.hpp"

namespace fsmgfn {

namespace {

std::uint64_t parse_u64(std::string_view key, std::string_view v) {
  std::uint64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    throw UsageError(std::string(key) + ": expected a non-negative integer, got '" +
                     std::string(v) + "'");
  return out;
}

double parse_double(std::string_view key, std::string_view v) {
  const std::string s(v);
  char* end = nullptr;
  const double out = std::strtod(s.c_str(), &end);
  if (s.empty() || *end != '\0' || !std::isfinite(out))
    throw UsageError(std::string(key) + ": expected a number, got '" + s + "'");
  return out;
}

bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "1" || v == "true" || v == "on" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "off" || v == "no") return false;
  throw UsageError(std::string(key) + ": expected a boolean, got '" + std::string(v) + "'");
}

std::string fmt_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

enum Stage : std::uint64_t { kTrain = 1, kGenerate = 2, kHeldout = 3, kProtocol = 4, kClassifier = 5 };

std::uint64_t stage_seed(std::uint64_t seed, Stage s) { return splitmix64(seed ^ (s << 56)); }

}  // namespace

void PipelineConfig::set(std::string_view key, std::string_view value) {
  const std::string v = csv::trim(value);
  const std::string k(key);
  if (k == "seed") seed = parse_u64(k, v);
  else if (k == "fsm") fsm = v;
  else if (k == "out") out = v;
  else if (k == "episodes") train.episodes = parse_u64(k, v);
  else if (k == "t_max") train.t_max = parse_u64(k, v);
  else if (k == "epsilon") train.epsilon = parse_double(k, v);
  else if (k == "lr") train.learning_rate = parse_double(k, v);
  else if (k == "hidden") train.hidden = parse_u64(k, v);
  else if (k == "optimizer") train.optimizer = parse_optimizer(v);
  else if (k == "hover_in_training") train.hover_in_training = parse_bool(k, v);
  else if (k == "train_p_hover") train.p_hover = parse_double(k, v);
  else if (k == "num_logs") gen.num_logs = parse_u64(k, v);
  else if (k == "events_min") gen.events_min = parse_u64(k, v);
  else if (k == "events_max") gen.events_max = parse_u64(k, v);
  else if (k == "p_hover") gen.p_hover = parse_double(k, v);
  else if (k == "gen_epsilon") gen.epsilon = parse_double(k, v);
  else if (k == "baseline") baseline = v;
  else if (k == "baseline_logs") baseline_logs = parse_u64(k, v);
  else if (k == "expert_repetitions") expert_repetitions = parse_u64(k, v);
  else if (k == "mode") mode = parse_eval_mode(v);
  else if (k == "k") this->k = parse_u64(k, v);
  else if (k == "iterations") iterations = parse_u64(k, v);
  else if (k == "test_fraction") test_fraction = parse_double(k, v);
  else if (k == "test_dir") test_dir = v;
  else if (k == "clf_epochs") classifier.epochs = parse_u64(k, v);
  else if (k == "clf_lr") classifier.learning_rate = parse_double(k, v);
  else if (k == "clf_l2") classifier.l2 = parse_double(k, v);
  else if (k == "version") {
    // Recorded for provenance only.
  } else {
    throw UsageError("unknown config key '" + k + "'");
  }
}

void PipelineConfig::apply_text(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto t = csv::trim(line);
    if (t.empty() || t == "\r") continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw UsageError("config line " + std::to_string(lineno) + ": expected key=value");
    std::string val = t.substr(eq + 1);
    if (!val.empty() && val.back() == '\r') val.pop_back();
    set(csv::trim(t.substr(0, eq)), val);
  }
}

void PipelineConfig::derive_seeds() {
  train.seed = stage_seed(seed, kTrain);
  gen.seed = stage_seed(seed, kGenerate);
  gen.t_max = train.t_max;
  classifier.seed = stage_seed(seed, kClassifier);
}

void PipelineConfig::validate() const {
  train.validate();
  gen.validate();
  if (baseline.empty()) throw UsageError("baseline must be 'expert', 'heldout' or a directory");
  if (baseline == "heldout" && baseline_logs < 1) throw UsageError("baseline_logs must be >= 1");
  if (mode == EvalMode::protocol) {
    if (k < 1 || iterations < 1) throw UsageError("protocol needs k >= 1 and iterations >= 1");
    if (k > gen.num_logs)
      throw UsageError("protocol k = " + std::to_string(k) + " exceeds num_logs = " +
                       std::to_string(gen.num_logs));
  }
  if (test_dir.empty()) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0))
      throw UsageError("test_fraction must lie in (0, 1)");
    const auto test = static_cast<std::size_t>(std::ceil(test_fraction * gen.num_logs));
    if (test < 1 || test >= gen.num_logs)
      throw UsageError("num_logs too small to hold out a classifier test split");
  }
  if (classifier.epochs < 1 || !(classifier.learning_rate > 0.0) || classifier.l2 < 0.0)
    throw UsageError("classifier settings out of range");
}

std::string PipelineConfig::to_text() const {
  std::ostringstream o;
  o << "# fsmgfn pipeline manifest\n";
  o << "version=" << FSMGFN_VERSION << '\n';
  o << "seed=" << seed << '\n';
  o << "fsm=" << fsm << '\n';
  o << "episodes=" << train.episodes << '\n';
  o << "t_max=" << train.t_max << '\n';
  o << "epsilon=" << fmt_double(train.epsilon) << '\n';
  o << "lr=" << fmt_double(train.learning_rate) << '\n';
  o << "hidden=" << train.hidden << '\n';
  o << "optimizer=" << to_string(train.optimizer) << '\n';
  o << "hover_in_training=" << (train.hover_in_training ? "true" : "false") << '\n';
  o << "train_p_hover=" << fmt_double(train.p_hover) << '\n';
  o << "num_logs=" << gen.num_logs << '\n';
  o << "events_min=" << gen.events_min << '\n';
  o << "events_max=" << gen.events_max << '\n';
  o << "p_hover=" << fmt_double(gen.p_hover) << '\n';
  o << "gen_epsilon=" << fmt_double(gen.epsilon) << '\n';
  o << "baseline=" << baseline << '\n';
  o << "baseline_logs=" << baseline_logs << '\n';
  o << "expert_repetitions=" << expert_repetitions << '\n';
  o << "mode=" << to_string(mode) << '\n';
  o << "k=" << k << '\n';
  o << "iterations=" << iterations << '\n';
  o << "test_fraction=" << fmt_double(test_fraction) << '\n';
  o << "test_dir=" << test_dir << '\n';
  o << "clf_epochs=" << classifier.epochs << '\n';
  o << "clf_lr=" << fmt_double(classifier.learning_rate) << '\n';
  o << "clf_l2=" << fmt_double(classifier.l2) << '\n';
  return o.str();
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  PipelineConfig cfg;
  cfg.apply_text(buf.str());
  return cfg;
}

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace

PipelineResult run_pipeline(PipelineConfig cfg, std::ostream& log) {
  namespace fs = std::filesystem;
  cfg.derive_seeds();
  cfg.validate();

  const FsmSpec fsm = cfg.fsm.empty() ? ui_task_fsm() : load_fsm(cfg.fsm);
  if (cfg.gen.p_hover > 0.0 || cfg.train.hover_in_training) hover_action_index(fsm);

  // Read every external input before spending time on training.
  std::vector<EventLog> baseline;
  if (cfg.baseline != "expert" && cfg.baseline != "heldout") {
    baseline = read_log_dir(cfg.baseline, LogSource::real);
    if (baseline.empty()) throw UsageError("baseline directory holds no .csv logs");
  }
  std::vector<EventLog> external_test;
  if (!cfg.test_dir.empty()) {
    external_test = read_log_dir(cfg.test_dir, LogSource::real);
    if (external_test.empty()) throw UsageError("test directory holds no .csv logs");
  }

  const fs::path out = cfg.out;
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw IoError("cannot create '" + out.string() + "': " + ec.message());

  PipelineResult res;
  write_text(out / "fsm.txt", serialize_fsm(fsm));

  log << "train: " << cfg.train.episodes << " episodes\n";
  const auto trained = train(fsm, cfg.train);
  res.checkpoint = out / "checkpoint.txt";
  write_checkpoint(res.checkpoint, make_checkpoint(fsm, trained.params, cfg.train.t_max));
  {
    std::ostringstream stats;
    write_stats_csv(stats, trained.history);
    write_text(out / "train_stats.csv", stats.str());
  }

  log << "generate: " << cfg.gen.num_logs << " logs\n";
  res.corpus_dir = out / "corpus";
  fs::remove_all(res.corpus_dir, ec);
  const auto corpus = generate_corpus(fsm, trained.params, cfg.gen);
  write_corpus(corpus, res.corpus_dir);

  const fs::path baseline_dir = out / "baseline";
  fs::remove_all(baseline_dir, ec);
  if (cfg.baseline == "expert") {
    EventLog gt{expert_trace(fsm, cfg.expert_repetitions), LogSource::expert};
    fs::create_directories(baseline_dir);
    write_log_csv(baseline_dir / "expert.csv", gt);
    baseline.push_back(std::move(gt));
  } else if (cfg.baseline == "heldout") {
    GenConfig held = cfg.gen;
    held.num_logs = cfg.baseline_logs;
    held.seed = stage_seed(cfg.seed, kHeldout);
    baseline = generate_corpus(fsm, trained.params, held);
    write_corpus(baseline, baseline_dir);
  }

  log << "evaluate: " << to_string(cfg.mode) << '\n';
  if (cfg.mode == EvalMode::protocol) {
    res.metrics = protocol_run(corpus, baseline,
                               {cfg.k, cfg.iterations, stage_seed(cfg.seed, kProtocol)}, &fsm);
  } else {
    res.metrics = evaluate(corpus, baseline, cfg.mode, &fsm);
  }
  res.metrics_report = out / "metrics.json";
  write_text(res.metrics_report, report_to_json(res.metrics));

  log << "classify\n";
  std::span<const EventLog> train_logs(corpus);
  std::span<const EventLog> test_logs(external_test);
  if (cfg.test_dir.empty()) {
    const auto n_test = static_cast<std::size_t>(std::ceil(cfg.test_fraction * corpus.size()));
    train_logs = std::span<const EventLog>(corpus).first(corpus.size() - n_test);
    test_logs = std::span<const EventLog>(corpus).last(n_test);
  }
  const auto train_set = build_dataset(train_logs);
  const auto test_set = build_dataset(test_logs);
  const auto model = train_classifier(train_set, cfg.classifier);
  res.classifier = evaluate_classifier(model, test_set);
  res.classifier_report = out / "classifier.json";
  write_text(res.classifier_report,
             classifier_report_json(res.classifier, train_set.class_counts(),
                                    test_set.class_counts()));

  res.manifest = out / "manifest.txt";
  std::ostringstream manifest;
  manifest << cfg.to_text();
  manifest << "# derived seeds: train=" << cfg.train.seed << " generate=" << cfg.gen.seed
           << " heldout=" << stage_seed(cfg.seed, kHeldout)
           << " protocol=" << stage_seed(cfg.seed, kProtocol)
           << " classifier=" << cfg.classifier.seed << '\n';
  write_text(res.manifest, manifest.str());
  return res;
}

}  // namespace fsmgfn
