#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "fsmgfn/fsm.hpp"
#include "fsmgfn/policy.hpp"
#include "fsmgfn/rng.hpp"

namespace fsmgfn {

/// Name of the self-looping hover event injected by rollouts and the
/// generator.
inline constexpr std::string_view kHoverAction = "M";

enum class OptimizerKind { adam, sgd };

const char* to_string(OptimizerKind k);
OptimizerKind parse_optimizer(std::string_view name);

struct TrainConfig {
  std::size_t episodes = 5000;
  std::size_t t_max = 60;
  double epsilon = 0.1;
  double learning_rate = 1e-3;
  std::size_t hidden = 64;
  std::uint64_t seed = 0;
  bool hover_in_training = false;
  double p_hover = 0.4;
  OptimizerKind optimizer = OptimizerKind::adam;

  /// Throws UsageError when a field is out of range.
  void validate() const;
};

/// Checks that kHoverAction exists and self-loops in every non-terminal
/// state; returns its index. Throws SemanticError otherwise.
std::size_t hover_action_index(const FsmSpec& fsm);

struct Trajectory {
  std::vector<IndexedStep> steps;
  std::vector<bool> policy_step;     // false for injected hovers
  std::vector<std::size_t> time;     // step counter t used in the encoding
  bool terminal_reached = false;

  std::size_t size() const noexcept { return steps.size(); }
  std::vector<Step> named(const FsmSpec& fsm) const;
};

struct EpisodeStats {
  std::size_t episode = 0;
  double reward = 0.0;
  std::size_t length = 0;
  bool terminated = false;
  double loss = 0.0;
};

/// One episode from q0 until a terminal state or t_max policy steps.
Trajectory rollout(const FsmSpec& fsm, const PolicyParams& params, const TrainConfig& cfg,
                   Rng& rng);

/// log(|tau| + 1) for a terminated trajectory, 0 otherwise. |tau| counts
/// every emitted step, including the terminating one and injected hovers.
double reward(const Trajectory& traj);

/// First-order optimizer over PolicyParams. Minimizes: step() moves against
/// the gradient it is given.
class Optimizer {
 public:
  Optimizer(OptimizerKind kind, double learning_rate, const PolicyParams& shape);

  void step(PolicyParams& params, const PolicyGradient& loss_grad);

  OptimizerKind kind() const noexcept { return kind_; }
  std::uint64_t steps_taken() const noexcept { return t_; }

  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;

 private:
  OptimizerKind kind_;
  double lr_;
  std::uint64_t t_ = 0;
  PolicyParams m_;
  PolicyParams v_;
};

/// Rollout, reward, and one optimizer step on L = -R * sum(log pi) over
/// policy-sampled steps. Leaves params untouched when R == 0. Throws
/// NumericError on a non-finite loss or gradient.
EpisodeStats episode_update(const FsmSpec& fsm, PolicyParams& params, Optimizer& opt,
                            const TrainConfig& cfg, Rng& rng);

struct TrainResult {
  PolicyParams params;
  std::vector<EpisodeStats> history;
};

using EpisodeCallback = std::function<void(const EpisodeStats&)>;

/// init_params followed by cfg.episodes calls to episode_update, all driven
/// by one Rng seeded from cfg.seed.
TrainResult train(const FsmSpec& fsm, const TrainConfig& cfg, const EpisodeCallback& on_episode = {});

/// Fraction of `rollouts` episodes (cfg.epsilon, no hovers) that reach a
/// terminal state within cfg.t_max steps.
double termination_rate(const FsmSpec& fsm, const PolicyParams& params, const TrainConfig& cfg,
                        std::size_t rollouts, Rng& rng);

/// CSV with header episode,reward,length,terminated,loss.
void write_stats_csv(std::ostream& out, const std::vector<EpisodeStats>& history);

}  // namespace fsmgfn
