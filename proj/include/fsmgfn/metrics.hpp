#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fsmgfn/event_log.hpp"
#include "fsmgfn/fsm.hpp"

namespace fsmgfn {

/// Smoothing constant shared by KL, chi-squared and entropy.
inline constexpr double kMetricEpsilon = 1e-10;

/// Event-frequency distribution over an explicit, ordered vocabulary.
struct EventDistribution {
  std::vector<std::string> support;
  std::vector<double> counts;
  std::vector<double> probs;
  double total = 0.0;
};

/// Sorted union of the event alphabets of both sides.
std::vector<std::string> event_vocabulary(std::span<const EventLog> a, std::span<const EventLog> b);

/// Pools all rows of `logs`. Throws UsageError when logs is empty or an
/// event is missing from vocab.
EventDistribution event_distribution(std::span<const EventLog> logs,
                                     const std::vector<std::string>& vocab);
EventDistribution event_distribution(const EventLog& log, const std::vector<std::string>& vocab);

/// sum q_i ln(q_i / (p_i + eps)); q_i == 0 terms contribute 0.
double kl_divergence(const EventDistribution& q, const EventDistribution& p);

/// sum (o_i - e_i)^2 / (e_i + eps) with e_i = baseline.probs[i] * observed.total.
double chi_squared(const EventDistribution& observed, const EventDistribution& baseline);

/// -sum q_i ln(q_i + eps).
double entropy(const EventDistribution& q);

using EventSequence = std::vector<std::string>;

/// |B(g) intersect B(b)| / max(|B(b)|, 1) over bigram multisets, where the
/// intersection takes the minimum multiplicity of each bigram.
double bigram_overlap(std::span<const std::string> generated, std::span<const std::string> baseline);

/// Same, with each side given as independent segments; no bigram spans two
/// segments.
double bigram_overlap(std::span<const EventSequence> generated,
                      std::span<const EventSequence> baseline);

/// Event sequences of a log: split after terminal-entering events when a
/// machine is given, otherwise the whole log as one sequence.
std::vector<EventSequence> event_segments(const EventLog& log, const FsmSpec* fsm = nullptr);

enum class EvalMode { aggregate, per_file, protocol };

const char* to_string(EvalMode m);
EvalMode parse_eval_mode(std::string_view s);

struct FiveNumber {
  double min = 0, q1 = 0, median = 0, q3 = 0, max = 0;
};

/// Linear-interpolation quartiles. Throws UsageError on empty input.
FiveNumber five_number_summary(std::vector<double> values);

struct MetricValues {
  double kl = 0.0;
  double chi2 = 0.0;
  double entropy = 0.0;
  double bigram_overlap = 0.0;
};

struct PerFileStats {
  FiveNumber kl, chi2, entropy, bigram_overlap;
  std::size_t files = 0;
};

struct ProtocolSummary {
  std::size_t k = 0;
  std::size_t iterations = 0;
  MetricValues mean;
  MetricValues sd;
};

struct MetricReport {
  EvalMode mode = EvalMode::aggregate;
  /// aggregate: pooled values; per-file and protocol: means.
  MetricValues metrics;
  std::optional<PerFileStats> per_file;
  std::optional<ProtocolSummary> protocol;
};

/// Aggregate mode pools each side; per-file mode scores every generated log
/// against the pooled baseline. `fsm`, when given, keeps bigrams from
/// spanning a terminal reset. Throws UsageError on empty inputs or
/// mode == protocol.
MetricReport evaluate(std::span<const EventLog> generated, std::span<const EventLog> baseline,
                      EvalMode mode, const FsmSpec* fsm = nullptr);

struct ProtocolConfig {
  std::size_t logs_per_run = 5;
  std::size_t iterations = 100;
  std::uint64_t seed = 0;
};

/// Repeats aggregate evaluation on `logs_per_run` generated logs drawn
/// without replacement, `iterations` times; reports mean and sample sd.
MetricReport protocol_run(std::span<const EventLog> generated, std::span<const EventLog> baseline,
                          const ProtocolConfig& cfg, const FsmSpec* fsm = nullptr);

/// {mode, metrics:{kl,chi2,entropy,bigram_overlap}, per_file_stats?, protocol?}
std::string report_to_json(const MetricReport& report);

}  // namespace fsmgfn
