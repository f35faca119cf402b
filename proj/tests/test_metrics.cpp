#include <doctest.h>

#include <cmath>
#include <nlohmann/json.hpp>

#include "fsmgfn/errors.hpp"
#include "fsmgfn/metrics.hpp"
#include "fsmgfn/ui_task_fsm.hpp"
#include "oracles.hpp"

using namespace fsmgfn;

namespace {

EventLog log_of(const std::vector<std::string>& events) {
  EventLog log;
  for (const auto& e : events) log.rows.push_back({StateId{"S"}, ActionId{e}});
  return log;
}

EventDistribution dist_of(const std::vector<std::string>& support, const std::vector<double>& probs) {
  EventDistribution d;
  d.support = support;
  d.probs = probs;
  d.counts = probs;
  d.total = 1.0;
  for (auto& c : d.counts) c *= 1.0;
  return d;
}

std::vector<std::string> random_seq(Rng& rng, std::size_t alphabet) {
  const std::size_t n = 1 + rng.below(12);
  std::vector<std::string> s;
  for (std::size_t i = 0; i < n; ++i) s.push_back(std::string(1, char('A' + rng.below(alphabet))));
  return s;
}

MetricValues metrics_of(const std::vector<std::string>& gen, const std::vector<std::string>& base) {
  std::vector<EventLog> g{log_of(gen)}, b{log_of(base)};
  return evaluate(g, b, EvalMode::aggregate).metrics;
}

}  // namespace

TEST_CASE("event_distribution") {
  auto d = event_distribution(log_of({"A", "A", "B"}), {"A", "B", "C"});
  CHECK(d.probs[0] == doctest::Approx(2.0 / 3.0));
  CHECK(d.probs[1] == doctest::Approx(1.0 / 3.0));
  CHECK(d.probs[2] == 0.0);
  CHECK(d.total == 3.0);
  CHECK_THROWS_AS(event_distribution(log_of({}), {"A"}), UsageError);
  CHECK_THROWS_AS(event_distribution(log_of({"Z"}), {"A"}), UsageError);

  const auto fsm = ui_task_fsm();
  EventLog expert;
  expert.rows = expert_trace(fsm, 15);
  std::vector<std::string> vocab;
  for (const auto& a : fsm.actions()) vocab.push_back(a.name);
  std::sort(vocab.begin(), vocab.end());
  const auto e = event_distribution(expert, vocab);
  const auto m = std::find(vocab.begin(), vocab.end(), "M") - vocab.begin();
  CHECK(e.probs[m] == 0.0);
}

TEST_CASE("vocabulary is the sorted union") {
  std::vector<EventLog> a{log_of({"K", "A"})}, b{log_of({"M", "A"})};
  CHECK(event_vocabulary(a, b) == std::vector<std::string>{"A", "K", "M"});
}

TEST_CASE("hand-evaluated metric values") {
  const std::vector<std::string> ab{"A", "B"};
  CHECK(kl_divergence(dist_of(ab, {0.9, 0.1}), dist_of(ab, {0.5, 0.5})) ==
        doctest::Approx(0.3681).epsilon(1e-4 / 0.3681));
  CHECK(kl_divergence(dist_of(ab, {0.5, 0.5}), dist_of(ab, {0.5, 0.5})) == doctest::Approx(0.0).epsilon(1e-8));
  CHECK(kl_divergence(dist_of(ab, {1.0, 0.0}), dist_of(ab, {0.0, 1.0})) ==
        doctest::Approx(std::log(1e10)).epsilon(1e-6));

  // O = [10, 0] against baseline probs [0.5, 0.5].
  std::vector<EventLog> obs{log_of(std::vector<std::string>(10, "A"))};
  std::vector<EventLog> base{log_of({"A", "B"})};
  const auto vocab = event_vocabulary(obs, base);
  const auto x2 = chi_squared(event_distribution(obs, vocab), event_distribution(base, vocab));
  CHECK(std::abs(x2 - 10.0) <= 1e-6);

  std::vector<EventLog> prop{log_of({"A", "A", "B", "B"})};
  CHECK(chi_squared(event_distribution(prop, vocab), event_distribution(base, vocab)) <= 1e-6);

  // Observed mass on a symbol the baseline never uses.
  std::vector<EventLog> base_a{log_of({"A"})};
  std::vector<EventLog> obs_b{log_of({"B", "B", "B"})};
  const auto v2 = event_vocabulary(obs_b, base_a);
  const auto big = chi_squared(event_distribution(obs_b, v2), event_distribution(base_a, v2));
  CHECK(big == doctest::Approx(9.0 / 1e-10).epsilon(1e-6));

  CHECK(entropy(dist_of({"A"}, {1.0})) == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(entropy(dist_of(ab, {0.5, 0.5})) == doctest::Approx(0.6931).epsilon(1e-4));
  std::vector<std::string> seven{"a", "b", "c", "d", "e", "f", "g"};
  CHECK(entropy(dist_of(seven, std::vector<double>(7, 1.0 / 7))) == doctest::Approx(std::log(7.0)).epsilon(1e-9));

  const std::vector<std::string> gen{"A", "B"}, b4{"A", "B", "A", "B"};
  CHECK(std::abs(bigram_overlap(gen, b4) - 1.0 / 3.0) <= 1e-9);
  CHECK(bigram_overlap(b4, b4) == 1.0);
  const std::vector<std::string> xy{"X", "Y", "X"};
  CHECK(bigram_overlap(xy, b4) == 0.0);
  const std::vector<std::string> one{"A"};
  CHECK(bigram_overlap(gen, one) == 0.0);
}

TEST_CASE("misaligned supports are rejected") {
  CHECK_THROWS_AS(kl_divergence(dist_of({"A"}, {1.0}), dist_of({"B"}, {1.0})), UsageError);
  CHECK_THROWS_AS(chi_squared(dist_of({"A", "B"}, {1.0, 0.0}), dist_of({"A"}, {1.0})), UsageError);
}

TEST_CASE("property: metrics agree with the brute-force oracle") {
  Rng rng(2718);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto alphabet = 1 + rng.below(5);
    const auto gen = random_seq(rng, alphabet);
    const auto base = random_seq(rng, alphabet);
    const auto m = metrics_of(gen, base);
    const double want_kl = oracle::kl(gen, base);
    const double want_x2 = oracle::chi2(gen, base);
    const double want_h = oracle::entropy(gen);
    const double want_bg = oracle::bigram(gen, base);
    auto rel = [](double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); };
    worst = std::max({worst, rel(m.kl, want_kl), rel(m.chi2, want_x2), rel(m.entropy, want_h),
                      rel(m.bigram_overlap, want_bg)});
  }
  CHECK(worst <= 1e-9);
}

TEST_CASE("property: metric ranges and invariances") {
  Rng rng(31);
  for (int trial = 0; trial < 500; ++trial) {
    const auto alphabet = 1 + rng.below(6);
    auto gen = random_seq(rng, alphabet);
    auto base = random_seq(rng, alphabet);
    const auto m = metrics_of(gen, base);
    CHECK(m.kl >= -1e-9);
    CHECK(m.chi2 >= 0.0);
    CHECK(m.entropy >= -1e-9);
    CHECK(m.entropy <= std::log(double(alphabet)) + 1e-9);
    CHECK(m.bigram_overlap >= 0.0);
    CHECK(m.bigram_overlap <= 1.0);

    const auto self = metrics_of(base, base);
    CHECK(self.kl <= 1e-8);
    CHECK(self.chi2 <= 1e-6);
    CHECK(self.bigram_overlap == (base.size() > 1 ? 1.0 : 0.0));

    // Unigram metrics ignore order.
    auto shuffled = gen;
    for (std::size_t i = shuffled.size(); i > 1; --i) std::swap(shuffled[i - 1], shuffled[rng.below(i)]);
    const auto ms = metrics_of(shuffled, base);
    CHECK(ms.kl == doctest::Approx(m.kl).epsilon(1e-12));
    CHECK(ms.chi2 == doctest::Approx(m.chi2).epsilon(1e-12));
    CHECK(ms.entropy == doctest::Approx(m.entropy).epsilon(1e-12));
  }
}

TEST_CASE("bigrams do not span segments or files") {
  const auto fsm = ui_task_fsm();
  EventLog log;
  log.rows = {{StateId{"S1"}, ActionId{"A2"}}, {StateId{"S1"}, ActionId{"A8"}}};
  const auto segs = event_segments(log, &fsm);
  REQUIRE(segs.size() == 2);
  CHECK(event_segments(log).size() == 1);

  std::vector<EventSequence> a{{"A"}, {"B"}};
  std::vector<EventSequence> b{{"A", "B"}};
  CHECK(bigram_overlap(a, b) == 0.0);
  std::vector<EventSequence> c{{"A", "B"}, {"A", "B"}};
  CHECK(bigram_overlap(c, b) == 1.0);
}

TEST_CASE("evaluate modes") {
  std::vector<EventLog> base{log_of({"A", "B", "A", "C"}), log_of({"B", "B", "C"})};
  SUBCASE("self comparison") {
    const auto r = evaluate(base, base, EvalMode::aggregate);
    CHECK(r.metrics.kl <= 1e-8);
    CHECK(r.metrics.chi2 <= 1e-6);
    CHECK(r.metrics.bigram_overlap == 1.0);
    CHECK_FALSE(r.per_file.has_value());
  }
  SUBCASE("per-file over identical files has zero-width summaries") {
    std::vector<EventLog> same(5, log_of({"A", "B", "B", "C"}));
    const auto r = evaluate(same, base, EvalMode::per_file);
    REQUIRE(r.per_file.has_value());
    CHECK(r.per_file->files == 5);
    for (auto f : {r.per_file->kl, r.per_file->chi2, r.per_file->entropy, r.per_file->bigram_overlap})
      CHECK(f.max - f.min == 0.0);
    const auto one = evaluate(std::vector<EventLog>{same[0]}, base, EvalMode::aggregate);
    CHECK(r.metrics.kl == doctest::Approx(one.metrics.kl));
  }
  SUBCASE("empty inputs") {
    CHECK_THROWS_AS(evaluate(std::vector<EventLog>{}, base, EvalMode::aggregate), UsageError);
    CHECK_THROWS_AS(evaluate(base, std::vector<EventLog>{}, EvalMode::aggregate), UsageError);
  }
}

TEST_CASE("protocol_run") {
  Rng rng(8);
  std::vector<EventLog> gen, base;
  for (int i = 0; i < 20; ++i) gen.push_back(log_of(random_seq(rng, 4)));
  for (int i = 0; i < 5; ++i) base.push_back(log_of(random_seq(rng, 4)));

  SUBCASE("degenerate protocol equals aggregate evaluate") {
    ProtocolConfig cfg{gen.size(), 1, 3};
    const auto p = protocol_run(gen, base, cfg);
    const auto a = evaluate(gen, base, EvalMode::aggregate);
    CHECK(p.protocol->mean.kl == doctest::Approx(a.metrics.kl).epsilon(1e-12));
    CHECK(p.protocol->mean.chi2 == doctest::Approx(a.metrics.chi2).epsilon(1e-12));
    CHECK(p.protocol->mean.entropy == doctest::Approx(a.metrics.entropy).epsilon(1e-12));
    CHECK(p.protocol->mean.bigram_overlap == doctest::Approx(a.metrics.bigram_overlap).epsilon(1e-12));
    CHECK(p.protocol->sd.kl == 0.0);
  }
  SUBCASE("fixed seed is deterministic and reports mean and sd") {
    ProtocolConfig cfg{5, 100, 11};
    const auto a = protocol_run(gen, base, cfg);
    const auto b = protocol_run(gen, base, cfg);
    CHECK(report_to_json(a) == report_to_json(b));
    REQUIRE(a.protocol.has_value());
    CHECK(a.protocol->k == 5);
    CHECK(a.protocol->iterations == 100);
    CHECK(a.protocol->sd.kl > 0.0);
    cfg.seed = 12;
    CHECK(report_to_json(protocol_run(gen, base, cfg)) != report_to_json(a));
  }
  SUBCASE("k larger than the corpus") {
    CHECK_THROWS_AS(protocol_run(gen, base, ProtocolConfig{21, 10, 0}), UsageError);
    CHECK_THROWS_AS(protocol_run(gen, base, ProtocolConfig{0, 10, 0}), UsageError);
  }
}

TEST_CASE("five-number summary interpolates") {
  const auto f = five_number_summary({4, 1, 3, 2, 5});
  CHECK(f.min == 1);
  CHECK(f.q1 == 2);
  CHECK(f.median == 3);
  CHECK(f.q3 == 4);
  CHECK(f.max == 5);
  const auto g = five_number_summary({1, 2});
  CHECK(g.median == 1.5);
  CHECK(g.q1 == 1.25);
}

TEST_CASE("report json schema") {
  std::vector<EventLog> gen{log_of({"A", "B"}), log_of({"B", "A"})};
  const auto p = nlohmann::json::parse(report_to_json(protocol_run(gen, gen, ProtocolConfig{1, 3, 0})));
  CHECK(p["mode"] == "protocol");
  for (auto key : {"kl", "chi2", "entropy", "bigram_overlap"}) {
    CHECK(p["metrics"].contains(key));
    CHECK(p["protocol"]["mean"].contains(key));
    CHECK(p["protocol"]["sd"].contains(key));
  }
  CHECK(p["protocol"]["k"] == 1);
  CHECK(p["protocol"]["R"] == 3);
  const auto f = nlohmann::json::parse(report_to_json(evaluate(gen, gen, EvalMode::per_file)));
  CHECK(f["mode"] == "per-file");
  CHECK(f.contains("per_file_stats"));
  CHECK(parse_eval_mode("per-file") == EvalMode::per_file);
  CHECK_THROWS_AS(parse_eval_mode("mean"), UsageError);
}
