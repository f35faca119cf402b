#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fsmgfn/event_log.hpp"

namespace fsmgfn {

enum class IntentLabel : std::uint8_t { open_app = 0, navigate = 1, edit = 2 };

inline constexpr std::size_t kNumIntents = 3;
inline constexpr std::array<IntentLabel, kNumIntents> kIntentOrder{
    IntentLabel::open_app, IntentLabel::navigate, IntentLabel::edit};

/// "Open_App", "navigate", "Edit".
const char* to_string(IntentLabel l);

/// Heuristic labeling, first matching rule wins:
///   event A1 or state S1            -> Open_App
///   event A8 or state S2            -> navigate
///   event K1/K3/K4 or state S3/S4   -> Edit
/// Anything else falls back to Edit.
IntentLabel label_row(std::string_view state, std::string_view event);

/// Categorical token for a row: "STATE|EVENT".
std::string row_token(const Step& s);

struct IntentDataset {
  std::vector<std::string> tokens;
  std::vector<IntentLabel> labels;
  std::vector<std::string> vocabulary;  // sorted distinct tokens

  std::size_t size() const noexcept { return tokens.size(); }
  std::array<std::size_t, kNumIntents> class_counts() const;
};

/// One example per row of every log. Throws UsageError on empty input.
IntentDataset build_dataset(std::span<const EventLog> logs);

/// Multinomial logistic regression over one-hot token features.
/// Class order is kIntentOrder.
struct ClassifierModel {
  std::vector<std::string> vocabulary;
  std::vector<double> weights;  // kNumIntents x |vocabulary|, row-major
  std::array<double, kNumIntents> bias{};

  /// Class scores for a token; unseen tokens get an all-zero feature vector.
  std::array<double, kNumIntents> scores(const std::string& token) const;
  IntentLabel predict(const std::string& token) const;

  bool operator==(const ClassifierModel&) const = default;
};

struct ClassifierTrainConfig {
  double learning_rate = 1.0;
  std::size_t epochs = 500;
  double l2 = 1e-4;
  std::uint64_t seed = 0;
};

/// Full-batch gradient descent on mean softmax cross-entropy plus
/// (l2 / 2) * ||W||^2. Throws UsageError on empty data and NumericError on
/// divergence.
ClassifierModel train_classifier(const IntentDataset& data, const ClassifierTrainConfig& cfg);

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
};

struct ClassifierReport {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  std::array<ClassMetrics, kNumIntents> per_class{};
  /// confusion[true][predicted]
  std::array<std::array<std::size_t, kNumIntents>, kNumIntents> confusion{};
  std::size_t examples = 0;
};

/// Macro F1 averages all three classes; a class absent from both labels and
/// predictions scores F1 = 0.
ClassifierReport score_predictions(std::span<const IntentLabel> truth,
                                   std::span<const IntentLabel> predicted);

ClassifierReport evaluate_classifier(const ClassifierModel& model, const IntentDataset& data);

std::string classifier_report_json(const ClassifierReport& report,
                                   const std::array<std::size_t, kNumIntents>& train_counts,
                                   const std::array<std::size_t, kNumIntents>& test_counts);

}  // namespace fsmgfn
