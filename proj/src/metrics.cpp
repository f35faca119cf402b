#include "fsmgfn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <unordered_map>

#include <json.hpp>

#include "fsmgfn/errors.hpp"
#include "fsmgfn/rng.hpp"

namespace fsmgfn {

std::vector<std::string> event_vocabulary(std::span<const EventLog> a, std::span<const EventLog> b) {
  std::set<std::string> seen;
  for (auto side : {a, b})
    for (const auto& log : side)
      for (const auto& r : log.rows) seen.insert(r.event.name);
  return {seen.begin(), seen.end()};
}

EventDistribution event_distribution(std::span<const EventLog> logs,
                                     const std::vector<std::string>& vocab) {
  if (logs.empty()) throw UsageError("event_distribution needs at least one log");
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < vocab.size(); ++i) index.emplace(vocab[i], i);

  EventDistribution d;
  d.support = vocab;
  d.counts.assign(vocab.size(), 0.0);
  for (const auto& log : logs)
    for (const auto& r : log.rows) {
      auto it = index.find(r.event.name);
      if (it == index.end()) throw UsageError("event '" + r.event.name + "' missing from vocabulary");
      d.counts[it->second] += 1.0;
    }
  d.total = std::accumulate(d.counts.begin(), d.counts.end(), 0.0);
  if (d.total == 0.0) throw UsageError("event_distribution needs at least one event");
  d.probs.assign(vocab.size(), 0.0);
  for (std::size_t i = 0; i < vocab.size(); ++i) d.probs[i] = d.counts[i] / d.total;
  return d;
}

EventDistribution event_distribution(const EventLog& log, const std::vector<std::string>& vocab) {
  return event_distribution(std::span<const EventLog>(&log, 1), vocab);
}

namespace {

void require_aligned(const EventDistribution& a, const EventDistribution& b) {
  if (a.support != b.support) throw UsageError("distributions have misaligned supports");
}

}  // namespace

double kl_divergence(const EventDistribution& q, const EventDistribution& p) {
  require_aligned(q, p);
  double kl = 0.0;
  for (std::size_t i = 0; i < q.probs.size(); ++i)
    if (q.probs[i] > 0.0) kl += q.probs[i] * std::log(q.probs[i] / (p.probs[i] + kMetricEpsilon));
  return kl;
}

double chi_squared(const EventDistribution& observed, const EventDistribution& baseline) {
  require_aligned(observed, baseline);
  double chi2 = 0.0;
  for (std::size_t i = 0; i < observed.counts.size(); ++i) {
    const double e = baseline.probs[i] * observed.total;
    const double diff = observed.counts[i] - e;
    chi2 += diff * diff / (e + kMetricEpsilon);
  }
  return chi2;
}

double entropy(const EventDistribution& q) {
  double h = 0.0;
  for (double x : q.probs) h -= x * std::log(x + kMetricEpsilon);
  return h;
}

// ---------------------------------------------------------------------------
// Bigrams

namespace {

class BigramCounter {
 public:
  std::uint32_t intern(const std::string& s) {
    auto [it, fresh] = ids_.emplace(s, static_cast<std::uint32_t>(ids_.size()));
    return it->second;
  }

  std::unordered_map<std::uint64_t, std::size_t> count(std::span<const EventSequence> segments,
                                                       std::size_t& total) {
    std::unordered_map<std::uint64_t, std::size_t> out;
    total = 0;
    for (const auto& seg : segments) {
      for (std::size_t i = 1; i < seg.size(); ++i) {
        const std::uint64_t key = (std::uint64_t{intern(seg[i - 1])} << 32) | intern(seg[i]);
        ++out[key];
        ++total;
      }
    }
    return out;
  }

 private:
  std::unordered_map<std::string, std::uint32_t> ids_;
};

}  // namespace

double bigram_overlap(std::span<const EventSequence> generated,
                      std::span<const EventSequence> baseline) {
  BigramCounter counter;
  std::size_t total_g = 0, total_b = 0;
  const auto g = counter.count(generated, total_g);
  const auto b = counter.count(baseline, total_b);
  std::size_t shared = 0;
  for (const auto& [key, n] : g) {
    auto it = b.find(key);
    if (it != b.end()) shared += std::min(n, it->second);
  }
  return static_cast<double>(shared) / static_cast<double>(std::max<std::size_t>(total_b, 1));
}

double bigram_overlap(std::span<const std::string> generated, std::span<const std::string> baseline) {
  const EventSequence g(generated.begin(), generated.end());
  const EventSequence b(baseline.begin(), baseline.end());
  return bigram_overlap(std::span<const EventSequence>(&g, 1), std::span<const EventSequence>(&b, 1));
}

std::vector<EventSequence> event_segments(const EventLog& log, const FsmSpec* fsm) {
  std::vector<EventSequence> out;
  if (!fsm) {
    out.push_back(log.events());
    return out;
  }
  for (auto seg : split_segments(*fsm, log.rows)) {
    EventSequence s;
    s.reserve(seg.size());
    for (const auto& r : seg) s.push_back(r.event.name);
    out.push_back(std::move(s));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Evaluation

const char* to_string(EvalMode m) {
  switch (m) {
    case EvalMode::aggregate: return "aggregate";
    case EvalMode::per_file: return "per-file";
    case EvalMode::protocol: return "protocol";
  }
  return "?";
}

EvalMode parse_eval_mode(std::string_view s) {
  if (s == "aggregate") return EvalMode::aggregate;
  if (s == "per-file") return EvalMode::per_file;
  if (s == "protocol") return EvalMode::protocol;
  throw UsageError("unknown mode '" + std::string(s) + "' (aggregate, per-file, protocol)");
}

FiveNumber five_number_summary(std::vector<double> v) {
  if (v.empty()) throw UsageError("five-number summary of an empty sample");
  std::sort(v.begin(), v.end());
  auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
  };
  return {v.front(), quantile(0.25), quantile(0.5), quantile(0.75), v.back()};
}

namespace {

struct PooledBaseline {
  std::vector<EventSequence> segments;
};

PooledBaseline pool_baseline(std::span<const EventLog> baseline, const FsmSpec* fsm) {
  PooledBaseline pb;
  for (const auto& log : baseline) {
    auto segs = event_segments(log, fsm);
    pb.segments.insert(pb.segments.end(), std::make_move_iterator(segs.begin()),
                       std::make_move_iterator(segs.end()));
  }
  return pb;
}

MetricValues score(std::span<const EventLog> generated, std::span<const EventLog> baseline,
                   const PooledBaseline& pooled, const FsmSpec* fsm) {
  const auto vocab = event_vocabulary(generated, baseline);
  const auto q = event_distribution(generated, vocab);
  const auto p = event_distribution(baseline, vocab);
  std::vector<EventSequence> gen_segments;
  for (const auto& log : generated) {
    auto segs = event_segments(log, fsm);
    gen_segments.insert(gen_segments.end(), std::make_move_iterator(segs.begin()),
                        std::make_move_iterator(segs.end()));
  }
  MetricValues m;
  m.kl = kl_divergence(q, p);
  m.chi2 = chi_squared(q, p);
  m.entropy = entropy(q);
  m.bigram_overlap = bigram_overlap(gen_segments, pooled.segments);
  return m;
}

void require_nonempty(std::span<const EventLog> generated, std::span<const EventLog> baseline) {
  if (generated.empty()) throw UsageError("no generated logs to evaluate");
  if (baseline.empty()) throw UsageError("no baseline logs to evaluate against");
}

}  // namespace

MetricReport evaluate(std::span<const EventLog> generated, std::span<const EventLog> baseline,
                      EvalMode mode, const FsmSpec* fsm) {
  require_nonempty(generated, baseline);
  if (mode == EvalMode::protocol) throw UsageError("use protocol_run for protocol mode");
  const auto pooled = pool_baseline(baseline, fsm);

  MetricReport report;
  report.mode = mode;
  if (mode == EvalMode::aggregate) {
    report.metrics = score(generated, baseline, pooled, fsm);
    return report;
  }

  std::vector<double> kl, chi2, ent, big;
  for (std::size_t i = 0; i < generated.size(); ++i) {
    const auto m = score(generated.subspan(i, 1), baseline, pooled, fsm);
    kl.push_back(m.kl);
    chi2.push_back(m.chi2);
    ent.push_back(m.entropy);
    big.push_back(m.bigram_overlap);
  }
  auto mean = [](const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  };
  report.metrics = {mean(kl), mean(chi2), mean(ent), mean(big)};
  report.per_file = PerFileStats{five_number_summary(kl), five_number_summary(chi2),
                                 five_number_summary(ent), five_number_summary(big),
                                 generated.size()};
  return report;
}

MetricReport protocol_run(std::span<const EventLog> generated, std::span<const EventLog> baseline,
                          const ProtocolConfig& cfg, const FsmSpec* fsm) {
  require_nonempty(generated, baseline);
  if (cfg.logs_per_run < 1 || cfg.iterations < 1)
    throw UsageError("protocol needs k >= 1 and at least one iteration");
  if (generated.size() < cfg.logs_per_run)
    throw UsageError("corpus of " + std::to_string(generated.size()) +
                     " logs is smaller than k = " + std::to_string(cfg.logs_per_run));

  const auto pooled = pool_baseline(baseline, fsm);
  Rng rng(cfg.seed);
  std::vector<std::size_t> order(generated.size());
  std::vector<MetricValues> runs;
  runs.reserve(cfg.iterations);
  for (std::size_t r = 0; r < cfg.iterations; ++r) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    // Partial Fisher-Yates: the first k slots become a uniform k-subset.
    for (std::size_t i = 0; i < cfg.logs_per_run; ++i)
      std::swap(order[i], order[i + rng.below(order.size() - i)]);
    std::vector<std::size_t> pick(order.begin(), order.begin() + cfg.logs_per_run);
    std::sort(pick.begin(), pick.end());
    std::vector<EventLog> sample;
    sample.reserve(pick.size());
    for (auto i : pick) sample.push_back(generated[i]);
    runs.push_back(score(sample, baseline, pooled, fsm));
  }

  auto stats = [&](double MetricValues::*field, double& mean, double& sd) {
    double s = 0.0;
    for (const auto& m : runs) s += m.*field;
    mean = s / static_cast<double>(runs.size());
    double ss = 0.0;
    for (const auto& m : runs) ss += (m.*field - mean) * (m.*field - mean);
    sd = runs.size() > 1 ? std::sqrt(ss / static_cast<double>(runs.size() - 1)) : 0.0;
  };
  ProtocolSummary summary;
  summary.k = cfg.logs_per_run;
  summary.iterations = cfg.iterations;
  stats(&MetricValues::kl, summary.mean.kl, summary.sd.kl);
  stats(&MetricValues::chi2, summary.mean.chi2, summary.sd.chi2);
  stats(&MetricValues::entropy, summary.mean.entropy, summary.sd.entropy);
  stats(&MetricValues::bigram_overlap, summary.mean.bigram_overlap, summary.sd.bigram_overlap);

  MetricReport report;
  report.mode = EvalMode::protocol;
  report.metrics = summary.mean;
  report.protocol = summary;
  return report;
}

// ---------------------------------------------------------------------------

namespace {

nlohmann::ordered_json values_json(const MetricValues& m) {
  nlohmann::ordered_json j;
  j["kl"] = m.kl;
  j["chi2"] = m.chi2;
  j["entropy"] = m.entropy;
  j["bigram_overlap"] = m.bigram_overlap;
  return j;
}

nlohmann::ordered_json five_json(const FiveNumber& f) {
  nlohmann::ordered_json j;
  j["min"] = f.min;
  j["q1"] = f.q1;
  j["median"] = f.median;
  j["q3"] = f.q3;
  j["max"] = f.max;
  return j;
}

}  // namespace

std::string report_to_json(const MetricReport& report) {
  nlohmann::ordered_json j;
  j["mode"] = to_string(report.mode);
  j["metrics"] = values_json(report.metrics);
  if (report.per_file) {
    nlohmann::ordered_json pf;
    pf["files"] = report.per_file->files;
    pf["kl"] = five_json(report.per_file->kl);
    pf["chi2"] = five_json(report.per_file->chi2);
    pf["entropy"] = five_json(report.per_file->entropy);
    pf["bigram_overlap"] = five_json(report.per_file->bigram_overlap);
    j["per_file_stats"] = pf;
  }
  if (report.protocol) {
    nlohmann::ordered_json p;
    p["k"] = report.protocol->k;
    p["R"] = report.protocol->iterations;
    p["mean"] = values_json(report.protocol->mean);
    p["sd"] = values_json(report.protocol->sd);
    j["protocol"] = p;
  }
  return j.dump(2) + "\n";
}

}  // namespace fsmgfn
