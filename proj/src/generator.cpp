#include "fsmgfn/generator.hpp"

#include <algorithm>
#include <iomanip>
#include <sstream>

#include "fsmgfn/errors.hpp"
#include "fsmgfn/trainer.hpp"

namespace fsmgfn {

void GenConfig::validate() const {
  if (num_logs < 1) throw UsageError("num_logs must be at least 1");
  if (events_min < 1) throw UsageError("events per log must be at least 1");
  if (events_max < events_min) throw UsageError("events_max must be >= events_min");
  if (!(p_hover >= 0.0 && p_hover <= 1.0)) throw UsageError("p_hover must lie in [0, 1]");
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw UsageError("epsilon must lie in [0, 1]");
  if (t_max < 1) throw UsageError("t_max must be at least 1");
}

EventLog generate_log(const FsmSpec& fsm, const PolicyParams& params, const GenConfig& cfg,
                      std::size_t events, Rng& rng) {
  if (params.num_states() != fsm.num_states() || params.num_actions() != fsm.num_actions())
    throw UsageError("policy dimensions do not match the machine");
  const bool hovers = cfg.p_hover > 0.0;
  const std::size_t hover = hovers ? hover_action_index(fsm) : 0;

  EventLog log;
  log.source = LogSource::generated;
  log.rows.reserve(events);
  std::size_t s = fsm.initial();
  std::size_t t = 0;
  while (log.rows.size() < events) {
    if (hovers && rng.bernoulli(cfg.p_hover)) {
      log.rows.push_back({fsm.state(s), fsm.action(hover)});
      if (log.rows.size() == events) break;
    }
    const auto enc = encode_state(fsm.num_states(), s, t, cfg.t_max);
    const auto dist = masked_distribution(params, enc, fsm.mask(s));
    const auto a = sample_action(dist, cfg.epsilon, rng);
    log.rows.push_back({fsm.state(s), fsm.action(a)});
    s = step(fsm, s, a, rng);
    ++t;
    if (fsm.is_terminal(s)) {
      s = fsm.initial();
      t = 0;
    }
  }
  return log;
}

std::uint64_t log_seed(std::uint64_t seed, std::size_t k) {
  return seed ^ static_cast<std::uint64_t>(k);
}

EventLog generate_indexed_log(const FsmSpec& fsm, const PolicyParams& params,
                              const GenConfig& cfg, std::size_t k) {
  Rng rng(log_seed(cfg.seed, k));
  const std::size_t span = cfg.events_max - cfg.events_min + 1;
  const std::size_t events = cfg.events_min + (span > 1 ? rng.below(span) : 0);
  return generate_log(fsm, params, cfg, events, rng);
}

std::vector<EventLog> generate_corpus(const FsmSpec& fsm, const PolicyParams& params,
                                      const GenConfig& cfg) {
  cfg.validate();
  std::vector<EventLog> out;
  out.reserve(cfg.num_logs);
  for (std::size_t k = 0; k < cfg.num_logs; ++k)
    out.push_back(generate_indexed_log(fsm, params, cfg, k));
  return out;
}

std::string log_file_name(std::size_t k, std::size_t count) {
  int width = 5;
  for (std::size_t n = count > 0 ? count - 1 : 0; n >= 100000; n /= 10) ++width;
  std::ostringstream name;
  name << "log_" << std::setw(width) << std::setfill('0') << k << ".csv";
  return name.str();
}

std::vector<std::filesystem::path> write_corpus(std::span<const EventLog> logs,
                                                const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());
  std::vector<std::filesystem::path> paths;
  paths.reserve(logs.size());
  for (std::size_t k = 0; k < logs.size(); ++k) {
    paths.push_back(dir / log_file_name(k, logs.size()));
    write_log_csv(paths.back(), logs[k]);
  }
  return paths;
}

std::vector<std::filesystem::path> generate_batch(const FsmSpec& fsm, const PolicyParams& params,
                                                  const GenConfig& cfg,
                                                  const std::filesystem::path& dir) {
  cfg.validate();
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());
  std::vector<std::filesystem::path> paths;
  paths.reserve(cfg.num_logs);
  for (std::size_t k = 0; k < cfg.num_logs; ++k) {
    paths.push_back(dir / log_file_name(k, cfg.num_logs));
    write_log_csv(paths.back(), generate_indexed_log(fsm, params, cfg, k));
  }
  return paths;
}

PolicyParams uniform_policy(const FsmSpec& fsm, std::size_t hidden) {
  return PolicyParams::zeros(fsm.num_states(), fsm.num_actions(), hidden);
}

}  // namespace fsmgfn
