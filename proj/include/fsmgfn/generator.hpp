#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "fsmgfn/event_log.hpp"
#include "fsmgfn/fsm.hpp"
#include "fsmgfn/policy.hpp"
#include "fsmgfn/rng.hpp"

namespace fsmgfn {

struct GenConfig {
  std::size_t num_logs = 100;
  std::size_t events_min = 1000;  // per-log length drawn uniformly in
  std::size_t events_max = 1500;  // [events_min, events_max]
  double p_hover = 0.4;
  double epsilon = 0.0;
  std::uint64_t seed = 0;
  std::size_t t_max = 60;

  void set_exact_length(std::size_t n) { events_min = events_max = n; }
  /// Throws UsageError when a field is out of range.
  void validate() const;
};

/// Emits exactly `events` rows. Each iteration optionally emits a hover at
/// the current state, then one policy step; entering a terminal state resets
/// the state to q0 and the step counter to 0.
EventLog generate_log(const FsmSpec& fsm, const PolicyParams& params, const GenConfig& cfg,
                      std::size_t events, Rng& rng);

/// Seed of log k: cfg.seed XOR k.
std::uint64_t log_seed(std::uint64_t seed, std::size_t k);

/// Log k of a batch, reproducible on its own: length drawn from
/// [events_min, events_max] then generate_log, both from Rng(log_seed).
EventLog generate_indexed_log(const FsmSpec& fsm, const PolicyParams& params,
                              const GenConfig& cfg, std::size_t k);

/// In-memory batch of cfg.num_logs logs.
std::vector<EventLog> generate_corpus(const FsmSpec& fsm, const PolicyParams& params,
                                      const GenConfig& cfg);

/// `log_<k>.csv` for a batch of `count` logs; k is zero-padded to a fixed
/// width (at least 5 digits).
std::string log_file_name(std::size_t k, std::size_t count);

/// Writes cfg.num_logs files into `dir` (created if missing) and returns
/// their paths in index order.
std::vector<std::filesystem::path> generate_batch(const FsmSpec& fsm, const PolicyParams& params,
                                                  const GenConfig& cfg,
                                                  const std::filesystem::path& dir);

/// Writes logs as `log_<k>.csv` into `dir` (created if missing).
std::vector<std::filesystem::path> write_corpus(std::span<const EventLog> logs,
                                                const std::filesystem::path& dir);

/// Uniform-random-valid-action policy (all-zero parameters).
PolicyParams uniform_policy(const FsmSpec& fsm, std::size_t hidden = 1);

}  // namespace fsmgfn
