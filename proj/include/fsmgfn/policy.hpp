#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fsmgfn/fsm.hpp"
#include "fsmgfn/rng.hpp"

namespace fsmgfn {

/// Additive smoothing inside log(mask + eps) before the hard zeroing.
inline constexpr double kMaskEpsilon = 1e-9;

/// State features: one-hot of the FSM state followed by min(t / t_max, 1).
struct Encoding {
  std::vector<double> values;

  std::size_t size() const noexcept { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
};

Encoding encode_state(const FsmSpec& fsm, const StateId& s, std::size_t t, std::size_t t_max);
Encoding encode_state(std::size_t num_states, std::size_t s, std::size_t t, std::size_t t_max);

/// Two-layer perceptron: logits = W2 * relu(W1 * x + b1) + b2.
/// Matrices are row-major. The same layout doubles as the gradient type.
struct PolicyParams {
  std::size_t inputs = 0;   // |Q| + 1
  std::size_t hidden = 0;   // H
  std::size_t outputs = 0;  // |Sigma|
  std::vector<double> w1;   // hidden x inputs
  std::vector<double> b1;   // hidden
  std::vector<double> w2;   // outputs x hidden
  std::vector<double> b2;   // outputs

  static PolicyParams zeros(std::size_t num_states, std::size_t num_actions, std::size_t hidden);

  std::size_t num_states() const noexcept { return inputs - 1; }
  std::size_t num_actions() const noexcept { return outputs; }
  std::size_t parameter_count() const noexcept {
    return w1.size() + b1.size() + w2.size() + b2.size();
  }

  /// Visits every parameter in the order w1, b1, w2, b2.
  template <typename F>
  void for_each(F&& f) {
    for (auto* v : {&w1, &b1, &w2, &b2})
      for (auto& x : *v) f(x);
  }
  template <typename F>
  void for_each(F&& f) const {
    for (const auto* v : {&w1, &b1, &w2, &b2})
      for (const auto& x : *v) f(x);
  }

  /// this += scale * other; shapes must match.
  void add_scaled(const PolicyParams& other, double scale);
  bool all_finite() const;
  bool same_shape(const PolicyParams& other) const;

  bool operator==(const PolicyParams&) const = default;
};

using PolicyGradient = PolicyParams;

/// Uniform(-r, r) weights with r = sqrt(6 / (fan_in + fan_out)); zero biases.
PolicyParams init_params(std::size_t num_states, std::size_t num_actions, std::size_t hidden,
                         Rng& rng);

/// pi(. | s) restricted to the mask's support.
struct MaskedDistribution {
  std::vector<double> probs;
  ActionMask support;
};

/// Raw network output before masking.
std::vector<double> logits(const PolicyParams& params, const Encoding& enc);

/// Softmax of logits + log(mask + kMaskEpsilon), then hard-zeroed outside
/// the mask and renormalized. Throws UsageError on an all-false mask.
MaskedDistribution masked_distribution(const PolicyParams& params, const Encoding& enc,
                                       const ActionMask& mask);

/// Epsilon-greedy draw: uniform over valid actions with probability
/// epsilon, otherwise categorical on dist.probs.
std::size_t sample_action(const MaskedDistribution& dist, double epsilon, Rng& rng);

/// d log pi(a | enc) / d params by backpropagation. The mask shift is a
/// constant and carries no gradient. Throws UsageError when a is masked out.
PolicyGradient grad_log_prob(const PolicyParams& params, const Encoding& enc,
                             const ActionMask& mask, std::size_t action);

/// grad += scale * d log pi(a | enc) / d params; returns log pi(a | enc).
/// One forward and one backward pass.
double accumulate_grad_log_prob(const PolicyParams& params, const Encoding& enc,
                                const ActionMask& mask, std::size_t action, double scale,
                                PolicyGradient& grad);

/// log pi(a | enc) under the masked distribution.
double log_prob(const PolicyParams& params, const Encoding& enc, const ActionMask& mask,
                std::size_t action);

}  // namespace fsmgfn
