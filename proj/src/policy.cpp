#include "fsmgfn/policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fsmgfn/errors.hpp"

namespace fsmgfn {

Encoding encode_state(std::size_t num_states, std::size_t s, std::size_t t, std::size_t t_max) {
  if (s >= num_states) throw UsageError("state index out of range");
  if (t_max == 0) throw UsageError("t_max must be at least 1");
  Encoding enc;
  enc.values.assign(num_states + 1, 0.0);
  enc.values[s] = 1.0;
  enc.values[num_states] =
      std::min(static_cast<double>(t) / static_cast<double>(t_max), 1.0);
  return enc;
}

Encoding encode_state(const FsmSpec& fsm, const StateId& s, std::size_t t, std::size_t t_max) {
  return encode_state(fsm.num_states(), fsm.state_index(s.name), t, t_max);
}

// ---------------------------------------------------------------------------
// PolicyParams

PolicyParams PolicyParams::zeros(std::size_t num_states, std::size_t num_actions,
                                 std::size_t hidden) {
  PolicyParams p;
  p.inputs = num_states + 1;
  p.hidden = hidden;
  p.outputs = num_actions;
  p.w1.assign(hidden * p.inputs, 0.0);
  p.b1.assign(hidden, 0.0);
  p.w2.assign(num_actions * hidden, 0.0);
  p.b2.assign(num_actions, 0.0);
  return p;
}

bool PolicyParams::same_shape(const PolicyParams& o) const {
  return inputs == o.inputs && hidden == o.hidden && outputs == o.outputs &&
         w1.size() == o.w1.size() && b1.size() == o.b1.size() && w2.size() == o.w2.size() &&
         b2.size() == o.b2.size();
}

void PolicyParams::add_scaled(const PolicyParams& other, double scale) {
  if (!same_shape(other)) throw UsageError("parameter shape mismatch");
  auto axpy = [scale](std::vector<double>& y, const std::vector<double>& x) {
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += scale * x[i];
  };
  axpy(w1, other.w1);
  axpy(b1, other.b1);
  axpy(w2, other.w2);
  axpy(b2, other.b2);
}

bool PolicyParams::all_finite() const {
  bool ok = true;
  for_each([&ok](double x) { ok = ok && std::isfinite(x); });
  return ok;
}

PolicyParams init_params(std::size_t num_states, std::size_t num_actions, std::size_t hidden,
                         Rng& rng) {
  if (hidden == 0) throw UsageError("hidden size must be at least 1");
  PolicyParams p = PolicyParams::zeros(num_states, num_actions, hidden);
  const double r1 = std::sqrt(6.0 / static_cast<double>(p.inputs + hidden));
  const double r2 = std::sqrt(6.0 / static_cast<double>(hidden + num_actions));
  for (auto& w : p.w1) w = rng.uniform(-r1, r1);
  for (auto& w : p.w2) w = rng.uniform(-r2, r2);
  return p;
}

// ---------------------------------------------------------------------------
// Forward / backward

namespace {

struct Forward {
  std::vector<double> pre;     // W1 x + b1
  std::vector<double> hidden;  // relu(pre)
  std::vector<double> z;       // W2 h + b2
};

Forward forward(const PolicyParams& p, const Encoding& enc) {
  if (enc.size() != p.inputs) throw UsageError("encoding size does not match policy inputs");
  Forward f;
  f.pre.resize(p.hidden);
  f.hidden.resize(p.hidden);
  for (std::size_t j = 0; j < p.hidden; ++j) {
    const double* row = &p.w1[j * p.inputs];
    double acc = p.b1[j];
    for (std::size_t i = 0; i < p.inputs; ++i) acc += row[i] * enc.values[i];
    f.pre[j] = acc;
    f.hidden[j] = acc > 0.0 ? acc : 0.0;
  }
  f.z.resize(p.outputs);
  for (std::size_t k = 0; k < p.outputs; ++k) {
    const double* row = &p.w2[k * p.hidden];
    double acc = p.b2[k];
    for (std::size_t j = 0; j < p.hidden; ++j) acc += row[j] * f.hidden[j];
    f.z[k] = acc;
  }
  return f;
}

std::vector<double> masked_probs(const std::vector<double>& z, const ActionMask& mask) {
  if (mask.size() != z.size()) throw UsageError("mask size does not match policy outputs");
  if (mask.none()) throw UsageError("cannot build a distribution from an all-false mask");
  std::vector<double> l(z.size());
  for (std::size_t i = 0; i < z.size(); ++i)
    l[i] = z[i] + std::log((mask[i] ? 1.0 : 0.0) + kMaskEpsilon);
  const double top = *std::max_element(l.begin(), l.end());
  std::vector<double> p(z.size());
  double total = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    p[i] = std::exp(l[i] - top);
    total += p[i];
  }
  // Soft mask leaves ~1e-9 relative mass on invalid actions; drop it exactly.
  double kept = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    p[i] = mask[i] ? p[i] / total : 0.0;
    kept += p[i];
  }
  for (auto& x : p) x /= kept;
  return p;
}

}  // namespace

std::vector<double> logits(const PolicyParams& params, const Encoding& enc) {
  return forward(params, enc).z;
}

MaskedDistribution masked_distribution(const PolicyParams& params, const Encoding& enc,
                                       const ActionMask& mask) {
  auto f = forward(params, enc);
  return {masked_probs(f.z, mask), mask};
}

std::size_t sample_action(const MaskedDistribution& dist, double epsilon, Rng& rng) {
  if (epsilon < 0.0 || epsilon > 1.0) throw UsageError("epsilon must lie in [0, 1]");
  const auto valid = dist.support.indices();
  if (valid.empty()) throw UsageError("cannot sample from an empty support");
  if (epsilon > 0.0 && rng.uniform() < epsilon) return valid[rng.below(valid.size())];

  const double u = rng.uniform();
  double cum = 0.0;
  for (auto i : valid) {
    cum += dist.probs[i];
    if (u < cum) return i;
  }
  // u landed in the rounding slack above the last cumulative sum.
  for (auto it = valid.rbegin(); it != valid.rend(); ++it)
    if (dist.probs[*it] > 0.0) return *it;
  return valid.back();
}

double accumulate_grad_log_prob(const PolicyParams& params, const Encoding& enc,
                                const ActionMask& mask, std::size_t action, double scale,
                                PolicyGradient& grad) {
  if (action >= params.outputs || !mask[action])
    throw UsageError("action is not valid under the mask");
  if (!grad.same_shape(params)) throw UsageError("gradient shape mismatch");
  auto f = forward(params, enc);

  // log pi(a) = z_a - logsumexp over the valid support (the shared mask
  // shift cancels), so d/dz_j = [j == a] - p_j on the support, 0 elsewhere.
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < params.outputs; ++k)
    if (mask[k]) top = std::max(top, f.z[k]);
  double total = 0.0;
  for (std::size_t k = 0; k < params.outputs; ++k)
    if (mask[k]) total += std::exp(f.z[k] - top);
  const double log_norm = top + std::log(total);
  const double logp = f.z[action] - log_norm;
  if (scale == 0.0) return logp;

  std::vector<double> dz(params.outputs, 0.0);
  for (std::size_t k = 0; k < params.outputs; ++k)
    if (mask[k]) dz[k] = (k == action ? 1.0 : 0.0) - std::exp(f.z[k] - log_norm);

  std::vector<double> dh(params.hidden, 0.0);
  for (std::size_t k = 0; k < params.outputs; ++k) {
    if (dz[k] == 0.0) continue;
    const double g = scale * dz[k];
    grad.b2[k] += g;
    const double* wrow = &params.w2[k * params.hidden];
    double* grow = &grad.w2[k * params.hidden];
    for (std::size_t j = 0; j < params.hidden; ++j) {
      grow[j] += g * f.hidden[j];
      dh[j] += dz[k] * wrow[j];
    }
  }
  for (std::size_t j = 0; j < params.hidden; ++j) {
    if (f.pre[j] <= 0.0) continue;
    const double g = scale * dh[j];
    grad.b1[j] += g;
    double* grow = &grad.w1[j * params.inputs];
    for (std::size_t i = 0; i < params.inputs; ++i) grow[i] += g * enc.values[i];
  }
  return logp;
}

PolicyGradient grad_log_prob(const PolicyParams& params, const Encoding& enc,
                             const ActionMask& mask, std::size_t action) {
  auto grad = PolicyParams::zeros(params.num_states(), params.outputs, params.hidden);
  accumulate_grad_log_prob(params, enc, mask, action, 1.0, grad);
  return grad;
}

double log_prob(const PolicyParams& params, const Encoding& enc, const ActionMask& mask,
                std::size_t action) {
  auto grad = PolicyParams::zeros(params.num_states(), params.outputs, params.hidden);
  return accumulate_grad_log_prob(params, enc, mask, action, 0.0, grad);
}

}  // namespace fsmgfn
