#include "fsmgfn/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include "fsmgfn/errors.hpp"

namespace fsmgfn {

const char* to_string(OptimizerKind k) {
  return k == OptimizerKind::adam ? "adam" : "sgd";
}

OptimizerKind parse_optimizer(std::string_view name) {
  if (name == "adam") return OptimizerKind::adam;
  if (name == "sgd") return OptimizerKind::sgd;
  throw UsageError("unknown optimizer '" + std::string(name) + "' (expected adam or sgd)");
}

void TrainConfig::validate() const {
  if (episodes < 1) throw UsageError("episodes must be at least 1");
  if (t_max < 1) throw UsageError("t_max must be at least 1");
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw UsageError("epsilon must lie in [0, 1]");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
    throw UsageError("learning_rate must be positive");
  if (hidden < 1) throw UsageError("hidden must be at least 1");
  if (!(p_hover >= 0.0 && p_hover <= 1.0)) throw UsageError("p_hover must lie in [0, 1]");
}

std::size_t hover_action_index(const FsmSpec& fsm) {
  auto m = fsm.find_action(kHoverAction);
  if (!m) throw SemanticError("machine has no hover action 'M'");
  for (std::size_t s = 0; s < fsm.num_states(); ++s) {
    if (fsm.is_terminal(s)) continue;
    auto succ = fsm.successors(s, *m);
    if (succ.size() != 1 || succ[0] != s)
      throw SemanticError("hover action 'M' is not a self-loop at " + fsm.state(s).name);
  }
  return *m;
}

std::vector<Step> Trajectory::named(const FsmSpec& fsm) const {
  std::vector<Step> out;
  out.reserve(steps.size());
  for (const auto& s : steps) out.push_back({fsm.state(s.state), fsm.action(s.action)});
  return out;
}

Trajectory rollout(const FsmSpec& fsm, const PolicyParams& params, const TrainConfig& cfg,
                   Rng& rng) {
  if (params.num_states() != fsm.num_states() || params.num_actions() != fsm.num_actions())
    throw UsageError("policy dimensions do not match the machine");
  const std::size_t hover = cfg.hover_in_training ? hover_action_index(fsm) : 0;

  Trajectory traj;
  std::size_t s = fsm.initial();
  std::size_t t = 0;
  while (!fsm.is_terminal(s) && t < cfg.t_max) {
    if (cfg.hover_in_training && rng.bernoulli(cfg.p_hover)) {
      traj.steps.push_back({s, hover});
      traj.policy_step.push_back(false);
      traj.time.push_back(t);
    }
    const auto enc = encode_state(fsm.num_states(), s, t, cfg.t_max);
    const auto& mask = fsm.mask(s);
    const auto dist = masked_distribution(params, enc, mask);
    const auto a = sample_action(dist, cfg.epsilon, rng);
    traj.steps.push_back({s, a});
    traj.policy_step.push_back(true);
    traj.time.push_back(t);
    s = step(fsm, s, a, rng);
    ++t;
  }
  traj.terminal_reached = fsm.is_terminal(s);
  return traj;
}

double reward(const Trajectory& traj) {
  if (!traj.terminal_reached) return 0.0;
  return std::log(static_cast<double>(traj.steps.size()) + 1.0);
}

// ---------------------------------------------------------------------------

Optimizer::Optimizer(OptimizerKind kind, double learning_rate, const PolicyParams& shape)
    : kind_(kind),
      lr_(learning_rate),
      m_(PolicyParams::zeros(shape.num_states(), shape.num_actions(), shape.hidden)),
      v_(m_) {}

void Optimizer::step(PolicyParams& params, const PolicyGradient& g) {
  if (!params.same_shape(g)) throw UsageError("gradient shape mismatch");
  ++t_;
  if (kind_ == OptimizerKind::sgd) {
    params.add_scaled(g, -lr_);
    return;
  }
  const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
  auto update = [&](std::vector<double>& p, const std::vector<double>& grad, std::vector<double>& m,
                    std::vector<double>& v) {
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = kBeta1 * m[i] + (1.0 - kBeta1) * grad[i];
      v[i] = kBeta2 * v[i] + (1.0 - kBeta2) * grad[i] * grad[i];
      // Moments of long-idle coordinates decay into subnormals, which are
      // slow on most CPUs and too small to move a parameter.
      if (std::abs(m[i]) < std::numeric_limits<double>::min()) m[i] = 0.0;
      if (v[i] < std::numeric_limits<double>::min()) v[i] = 0.0;
      p[i] -= lr_ * (m[i] / c1) / (std::sqrt(v[i] / c2) + kEps);
    }
  };
  update(params.w1, g.w1, m_.w1, v_.w1);
  update(params.b1, g.b1, m_.b1, v_.b1);
  update(params.w2, g.w2, m_.w2, v_.w2);
  update(params.b2, g.b2, m_.b2, v_.b2);
}

EpisodeStats episode_update(const FsmSpec& fsm, PolicyParams& params, Optimizer& opt,
                            const TrainConfig& cfg, Rng& rng) {
  const auto traj = rollout(fsm, params, cfg, rng);
  EpisodeStats stats;
  stats.reward = reward(traj);
  stats.length = traj.size();
  stats.terminated = traj.terminal_reached;
  if (stats.reward == 0.0) return stats;

  // dL/dtheta = -R * sum grad log pi over policy-sampled steps.
  auto grad = PolicyParams::zeros(params.num_states(), params.num_actions(), params.hidden);
  double sum_logp = 0.0;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    if (!traj.policy_step[i]) continue;
    const auto& st = traj.steps[i];
    const auto enc = encode_state(fsm.num_states(), st.state, traj.time[i], cfg.t_max);
    sum_logp += accumulate_grad_log_prob(params, enc, fsm.mask(st.state), st.action,
                                         -stats.reward, grad);
  }
  stats.loss = -stats.reward * sum_logp;
  if (!std::isfinite(stats.loss) || !grad.all_finite())
    throw NumericError("non-finite loss or gradient in episode update");
  opt.step(params, grad);
  if (!params.all_finite()) throw NumericError("parameters became non-finite");
  return stats;
}

TrainResult train(const FsmSpec& fsm, const TrainConfig& cfg, const EpisodeCallback& on_episode) {
  cfg.validate();
  if (cfg.hover_in_training) hover_action_index(fsm);
  Rng rng(cfg.seed);
  TrainResult result;
  result.params = init_params(fsm.num_states(), fsm.num_actions(), cfg.hidden, rng);
  Optimizer opt(cfg.optimizer, cfg.learning_rate, result.params);
  result.history.reserve(cfg.episodes);
  for (std::size_t e = 0; e < cfg.episodes; ++e) {
    auto stats = episode_update(fsm, result.params, opt, cfg, rng);
    stats.episode = e + 1;
    if (on_episode) on_episode(stats);
    result.history.push_back(stats);
  }
  return result;
}

double termination_rate(const FsmSpec& fsm, const PolicyParams& params, const TrainConfig& cfg,
                        std::size_t rollouts, Rng& rng) {
  if (rollouts == 0) return 0.0;
  TrainConfig eval = cfg;
  eval.hover_in_training = false;
  std::size_t done = 0;
  for (std::size_t i = 0; i < rollouts; ++i)
    if (rollout(fsm, params, eval, rng).terminal_reached) ++done;
  return static_cast<double>(done) / static_cast<double>(rollouts);
}

void write_stats_csv(std::ostream& out, const std::vector<EpisodeStats>& history) {
  out << "episode,reward,length,terminated,loss\n";
  char buf[64];
  for (const auto& h : history) {
    out << h.episode << ',';
    std::snprintf(buf, sizeof buf, "%.17g", h.reward);
    out << buf << ',' << h.length << ',' << (h.terminated ? 1 : 0) << ',';
    std::snprintf(buf, sizeof buf, "%.17g", h.loss);
    out << buf << '\n';
  }
}

}  // namespace fsmgfn
