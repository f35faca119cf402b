#pragma once

#include <compare>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "fsmgfn/rng.hpp"

namespace fsmgfn {

struct StateId {
  std::string name;
  auto operator<=>(const StateId&) const = default;
};

struct ActionId {
  std::string name;
  auto operator<=>(const ActionId&) const = default;
};

/// One (state, event) row of a trace: the state the machine was in when the
/// event fired.
struct Step {
  StateId state;
  ActionId event;
  bool operator==(const Step&) const = default;
};

/// Index-based step used on the hot paths (rollout, generation).
struct IndexedStep {
  std::size_t state = 0;
  std::size_t action = 0;
  bool operator==(const IndexedStep&) const = default;
};

/// Valid-action bits for one state, indexed by the machine's action order.
class ActionMask {
 public:
  ActionMask() = default;
  explicit ActionMask(std::size_t n) : bits_(n, false) {}

  std::size_t size() const noexcept { return bits_.size(); }
  bool operator[](std::size_t i) const { return bits_[i]; }
  void set(std::size_t i, bool v = true) { bits_[i] = v; }
  std::size_t count() const noexcept;
  bool none() const noexcept { return count() == 0; }
  /// Indices of the true bits in ascending order.
  std::vector<std::size_t> indices() const;

  bool operator==(const ActionMask&) const = default;

 private:
  std::vector<bool> bits_;
};

/// A finite state machine (Q, Sigma, delta, q0, F) with a set-valued
/// transition relation. Immutable once built; every accessor is const and
/// safe to share between threads.
class FsmSpec {
 public:
  class Builder;

  std::size_t num_states() const noexcept { return states_.size(); }
  std::size_t num_actions() const noexcept { return actions_.size(); }

  const std::vector<StateId>& states() const noexcept { return states_; }
  const std::vector<ActionId>& actions() const noexcept { return actions_; }
  const StateId& state(std::size_t i) const { return states_.at(i); }
  const ActionId& action(std::size_t i) const { return actions_.at(i); }

  std::size_t initial() const noexcept { return initial_; }
  bool is_terminal(std::size_t s) const { return terminal_.at(s); }
  std::vector<std::size_t> terminals() const;

  /// Throws UsageError for names not in the machine.
  std::size_t state_index(std::string_view name) const;
  std::size_t action_index(std::string_view name) const;
  std::optional<std::size_t> find_state(std::string_view name) const;
  std::optional<std::size_t> find_action(std::string_view name) const;

  /// Successor set of delta(s, a); empty when undefined.
  std::span<const std::size_t> successors(std::size_t s, std::size_t a) const;
  bool defined(std::size_t s, std::size_t a) const { return !successors(s, a).empty(); }

  const ActionMask& mask(std::size_t s) const { return masks_.at(s); }

  bool operator==(const FsmSpec&) const = default;

 private:
  std::vector<StateId> states_;
  std::vector<ActionId> actions_;
  std::unordered_map<std::string, std::size_t> state_lookup_;
  std::unordered_map<std::string, std::size_t> action_lookup_;
  // delta_[s * |Sigma| + a] = sorted successor indices.
  std::vector<std::vector<std::size_t>> delta_;
  std::vector<bool> terminal_;
  std::vector<ActionMask> masks_;
  std::size_t initial_ = 0;
};

/// Incremental construction with full invariant checking in build().
class FsmSpec::Builder {
 public:
  Builder& add_state(const std::string& name);
  Builder& add_action(const std::string& name);
  Builder& set_initial(const std::string& name);
  Builder& add_terminal(const std::string& name);
  Builder& add_transition(const std::string& from, const std::string& action,
                          const std::vector<std::string>& to);

  /// Throws SemanticError when an invariant fails.
  FsmSpec build() const;

 private:
  struct Edge {
    std::string from;
    std::string action;
    std::vector<std::string> to;
  };
  std::vector<std::string> states_;
  std::vector<std::string> actions_;
  std::optional<std::string> initial_;
  std::vector<std::string> terminals_;
  std::vector<Edge> edges_;
};

/// Parses the line-based machine description:
///
///   states: S1 S2 ...
///   actions: A1 M ...
///   initial: S1
///   terminal: TERM
///   transition: S1 A1 -> S3 S4
///
/// `#` starts a comment. Throws FormatError (with line number) on syntax
/// problems and SemanticError on invariant violations.
FsmSpec parse_fsm(std::string_view text);

/// Canonical text form; parse_fsm(serialize_fsm(m)) == m.
std::string serialize_fsm(const FsmSpec& fsm);

FsmSpec load_fsm(const std::string& path);

ActionMask valid_actions(const FsmSpec& fsm, const StateId& s);

/// One transition. Picks uniformly among set-valued successors using rng.
/// Throws UsageError when delta(s, a) is undefined.
std::size_t step(const FsmSpec& fsm, std::size_t s, std::size_t a, Rng& rng);
StateId step(const FsmSpec& fsm, const StateId& s, const ActionId& a, Rng& rng);

struct TraceVerdict {
  bool ok = true;
  std::size_t index = 0;  // first offending row when !ok
  std::string reason;
  bool ends_in_terminal = false;  // last event can enter a terminal state

  explicit operator bool() const noexcept { return ok; }
};

/// Checks a single task trace starting at `start` (q0 when unset).
TraceVerdict validate_trace(const FsmSpec& fsm, std::span<const Step> trace,
                            std::optional<StateId> start = std::nullopt);

/// Checks a log that may contain several tasks: after an event that can enter
/// a terminal state, the next row may restart at q0.
TraceVerdict validate_log(const FsmSpec& fsm, std::span<const Step> rows);

/// Splits rows into task segments. A segment ends after an event whose
/// successors are all terminal.
std::vector<std::span<const Step>> split_segments(const FsmSpec& fsm, std::span<const Step> rows);

/// Deterministic scripted expert run: `repetitions` task cycles
/// (navigate, open a file, compute, write the summary, return) followed by a
/// terminating A2. Contains no hover events. Throws SemanticError when the
/// cycle is not expressible in `fsm`.
std::vector<Step> expert_trace(const FsmSpec& fsm, std::size_t repetitions);

/// The scripted cycle, as (state, event) names.
std::span<const Step> expert_cycle();

}  // namespace fsmgfn
