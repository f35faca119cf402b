#include "fsmgfn/intent.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <unordered_map>

#include <json.hpp>

#include "fsmgfn/errors.hpp"
#include "fsmgfn/rng.hpp"

namespace fsmgfn {

const char* to_string(IntentLabel l) {
  switch (l) {
    case IntentLabel::open_app: return "Open_App";
    case IntentLabel::navigate: return "navigate";
    case IntentLabel::edit: return "Edit";
  }
  return "?";
}

IntentLabel label_row(std::string_view state, std::string_view event) {
  if (event == "A1" || state == "S1") return IntentLabel::open_app;
  if (event == "A8" || state == "S2") return IntentLabel::navigate;
  if (event == "K1" || event == "K3" || event == "K4" || state == "S3" || state == "S4")
    return IntentLabel::edit;
  return IntentLabel::edit;
}

std::string row_token(const Step& s) { return s.state.name + "|" + s.event.name; }

std::array<std::size_t, kNumIntents> IntentDataset::class_counts() const {
  std::array<std::size_t, kNumIntents> c{};
  for (auto l : labels) ++c[static_cast<std::size_t>(l)];
  return c;
}

IntentDataset build_dataset(std::span<const EventLog> logs) {
  if (logs.empty()) throw UsageError("build_dataset needs at least one log");
  IntentDataset d;
  std::set<std::string> vocab;
  for (const auto& log : logs)
    for (const auto& r : log.rows) {
      d.tokens.push_back(row_token(r));
      d.labels.push_back(label_row(r.state.name, r.event.name));
      vocab.insert(d.tokens.back());
    }
  if (d.tokens.empty()) throw UsageError("build_dataset: logs contain no rows");
  d.vocabulary.assign(vocab.begin(), vocab.end());
  return d;
}

// ---------------------------------------------------------------------------

std::array<double, kNumIntents> ClassifierModel::scores(const std::string& token) const {
  std::array<double, kNumIntents> z = bias;
  auto it = std::lower_bound(vocabulary.begin(), vocabulary.end(), token);
  if (it != vocabulary.end() && *it == token) {
    const auto v = static_cast<std::size_t>(it - vocabulary.begin());
    for (std::size_t c = 0; c < kNumIntents; ++c) z[c] += weights[c * vocabulary.size() + v];
  }
  return z;
}

IntentLabel ClassifierModel::predict(const std::string& token) const {
  const auto z = scores(token);
  return static_cast<IntentLabel>(std::max_element(z.begin(), z.end()) - z.begin());
}

namespace {

std::array<double, kNumIntents> softmax(const std::array<double, kNumIntents>& z) {
  const double top = *std::max_element(z.begin(), z.end());
  std::array<double, kNumIntents> p{};
  double total = 0.0;
  for (std::size_t c = 0; c < kNumIntents; ++c) total += (p[c] = std::exp(z[c] - top));
  for (auto& x : p) x /= total;
  return p;
}

}  // namespace

ClassifierModel train_classifier(const IntentDataset& data, const ClassifierTrainConfig& cfg) {
  if (data.size() == 0 || data.vocabulary.empty()) throw UsageError("empty training set");
  if (data.labels.size() != data.tokens.size()) throw UsageError("tokens and labels differ in length");

  const std::size_t V = data.vocabulary.size();
  ClassifierModel model;
  model.vocabulary = data.vocabulary;
  model.weights.assign(kNumIntents * V, 0.0);
  Rng rng(cfg.seed);
  for (auto& w : model.weights) w = rng.uniform(-0.01, 0.01);

  // With one-hot features every row sharing a token has the same gradient,
  // so the full-batch gradient is exactly a sum over (token, class) counts.
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t v = 0; v < V; ++v) index.emplace(data.vocabulary[v], v);
  std::vector<double> token_count(V, 0.0);
  std::vector<double> label_count(V * kNumIntents, 0.0);
  for (std::size_t i = 0; i < data.size(); ++i) {
    auto it = index.find(data.tokens[i]);
    if (it == index.end()) throw UsageError("token '" + data.tokens[i] + "' missing from vocabulary");
    token_count[it->second] += 1.0;
    label_count[it->second * kNumIntents + static_cast<std::size_t>(data.labels[i])] += 1.0;
  }
  const double n = static_cast<double>(data.size());

  std::vector<double> gw(kNumIntents * V);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::fill(gw.begin(), gw.end(), 0.0);
    std::array<double, kNumIntents> gb{};
    double loss = 0.0;
    for (std::size_t v = 0; v < V; ++v) {
      if (token_count[v] == 0.0) continue;
      std::array<double, kNumIntents> z = model.bias;
      for (std::size_t c = 0; c < kNumIntents; ++c) z[c] += model.weights[c * V + v];
      const auto p = softmax(z);
      for (std::size_t c = 0; c < kNumIntents; ++c) {
        const double y = label_count[v * kNumIntents + c];
        const double g = (token_count[v] * p[c] - y) / n;
        gw[c * V + v] += g;
        gb[c] += g;
        if (y > 0.0) loss -= y * std::log(std::max(p[c], 1e-300)) / n;
      }
    }
    double reg = 0.0;
    for (std::size_t i = 0; i < gw.size(); ++i) {
      gw[i] += cfg.l2 * model.weights[i];
      reg += model.weights[i] * model.weights[i];
    }
    loss += 0.5 * cfg.l2 * reg;
    if (!std::isfinite(loss)) throw NumericError("classifier training diverged");
    for (std::size_t i = 0; i < gw.size(); ++i) model.weights[i] -= cfg.learning_rate * gw[i];
    for (std::size_t c = 0; c < kNumIntents; ++c) model.bias[c] -= cfg.learning_rate * gb[c];
  }
  return model;
}

// ---------------------------------------------------------------------------

ClassifierReport score_predictions(std::span<const IntentLabel> truth,
                                   std::span<const IntentLabel> predicted) {
  if (truth.empty()) throw UsageError("cannot score an empty dataset");
  if (truth.size() != predicted.size()) throw UsageError("label and prediction counts differ");
  ClassifierReport r;
  r.examples = truth.size();
  std::size_t correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const auto t = static_cast<std::size_t>(truth[i]);
    const auto p = static_cast<std::size_t>(predicted[i]);
    ++r.confusion[t][p];
    if (t == p) ++correct;
  }
  r.accuracy = static_cast<double>(correct) / static_cast<double>(truth.size());
  double f1_sum = 0.0;
  for (std::size_t c = 0; c < kNumIntents; ++c) {
    std::size_t tp = r.confusion[c][c], pred = 0, actual = 0;
    for (std::size_t k = 0; k < kNumIntents; ++k) {
      pred += r.confusion[k][c];
      actual += r.confusion[c][k];
    }
    auto& m = r.per_class[c];
    m.support = actual;
    m.precision = pred ? static_cast<double>(tp) / static_cast<double>(pred) : 0.0;
    m.recall = actual ? static_cast<double>(tp) / static_cast<double>(actual) : 0.0;
    m.f1 = (m.precision + m.recall) > 0.0
               ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
               : 0.0;
    f1_sum += m.f1;
  }
  r.macro_f1 = f1_sum / static_cast<double>(kNumIntents);
  return r;
}

ClassifierReport evaluate_classifier(const ClassifierModel& model, const IntentDataset& data) {
  std::vector<IntentLabel> predicted;
  predicted.reserve(data.size());
  std::map<std::string, IntentLabel> cache;
  for (const auto& tok : data.tokens) {
    auto it = cache.find(tok);
    if (it == cache.end()) it = cache.emplace(tok, model.predict(tok)).first;
    predicted.push_back(it->second);
  }
  return score_predictions(data.labels, predicted);
}

std::string classifier_report_json(const ClassifierReport& r,
                                   const std::array<std::size_t, kNumIntents>& train_counts,
                                   const std::array<std::size_t, kNumIntents>& test_counts) {
  nlohmann::ordered_json j;
  j["accuracy"] = r.accuracy;
  j["macro_f1"] = r.macro_f1;
  j["examples"] = r.examples;
  nlohmann::ordered_json per;
  for (std::size_t c = 0; c < kNumIntents; ++c) {
    nlohmann::ordered_json m;
    m["precision"] = r.per_class[c].precision;
    m["recall"] = r.per_class[c].recall;
    m["f1"] = r.per_class[c].f1;
    m["support"] = r.per_class[c].support;
    per[to_string(kIntentOrder[c])] = m;
  }
  j["per_class"] = per;
  nlohmann::ordered_json labels = nlohmann::ordered_json::array();
  for (auto l : kIntentOrder) labels.push_back(to_string(l));
  j["confusion"]["labels"] = labels;
  j["confusion"]["matrix"] = r.confusion;
  nlohmann::ordered_json dist;
  for (std::size_t c = 0; c < kNumIntents; ++c) {
    dist["train"][to_string(kIntentOrder[c])] = train_counts[c];
    dist["test"][to_string(kIntentOrder[c])] = test_counts[c];
  }
  j["class_distribution"] = dist;
  return j.dump(2) + "\n";
}

}  // namespace fsmgfn
