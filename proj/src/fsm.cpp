#include "fsmgfn/fsm.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <set>
#include <sstream>

#include "fsmgfn/errors.hpp"

namespace fsmgfn {

namespace {

bool is_identifier(std::string_view s) {
  if (s.empty()) return false;
  return std::all_of(s.begin(), s.end(), [](unsigned char c) {
    return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') ||
           c == '_';
  });
}

std::vector<std::string> split_ws(std::string_view s) {
  std::vector<std::string> out;
  std::istringstream in{std::string(s)};
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

std::size_t ActionMask::count() const noexcept {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), true));
}

std::vector<std::size_t> ActionMask::indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < bits_.size(); ++i)
    if (bits_[i]) out.push_back(i);
  return out;
}

// ---------------------------------------------------------------------------
// FsmSpec

std::vector<std::size_t> FsmSpec::terminals() const {
  std::vector<std::size_t> out;
  for (std::size_t s = 0; s < terminal_.size(); ++s)
    if (terminal_[s]) out.push_back(s);
  return out;
}

std::optional<std::size_t> FsmSpec::find_state(std::string_view name) const {
  auto it = state_lookup_.find(std::string(name));
  if (it == state_lookup_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> FsmSpec::find_action(std::string_view name) const {
  auto it = action_lookup_.find(std::string(name));
  if (it == action_lookup_.end()) return std::nullopt;
  return it->second;
}

std::size_t FsmSpec::state_index(std::string_view name) const {
  if (auto i = find_state(name)) return *i;
  throw UsageError("unknown state '" + std::string(name) + "'");
}

std::size_t FsmSpec::action_index(std::string_view name) const {
  if (auto i = find_action(name)) return *i;
  throw UsageError("unknown action '" + std::string(name) + "'");
}

std::span<const std::size_t> FsmSpec::successors(std::size_t s, std::size_t a) const {
  return delta_.at(s * actions_.size() + a);
}

// ---------------------------------------------------------------------------
// Builder

FsmSpec::Builder& FsmSpec::Builder::add_state(const std::string& name) {
  states_.push_back(name);
  return *this;
}

FsmSpec::Builder& FsmSpec::Builder::add_action(const std::string& name) {
  actions_.push_back(name);
  return *this;
}

FsmSpec::Builder& FsmSpec::Builder::set_initial(const std::string& name) {
  initial_ = name;
  return *this;
}

FsmSpec::Builder& FsmSpec::Builder::add_terminal(const std::string& name) {
  terminals_.push_back(name);
  return *this;
}

FsmSpec::Builder& FsmSpec::Builder::add_transition(const std::string& from,
                                                   const std::string& action,
                                                   const std::vector<std::string>& to) {
  edges_.push_back({from, action, to});
  return *this;
}

FsmSpec FsmSpec::Builder::build() const {
  FsmSpec m;
  for (const auto& s : states_) {
    if (!is_identifier(s)) throw SemanticError("invalid state identifier '" + s + "'");
    if (!m.state_lookup_.emplace(s, m.states_.size()).second)
      throw SemanticError("duplicate state '" + s + "'");
    m.states_.push_back({s});
  }
  for (const auto& a : actions_) {
    if (!is_identifier(a)) throw SemanticError("invalid action identifier '" + a + "'");
    if (!m.action_lookup_.emplace(a, m.actions_.size()).second)
      throw SemanticError("duplicate action '" + a + "'");
    m.actions_.push_back({a});
  }
  if (m.states_.empty()) throw SemanticError("machine declares no states");

  auto state_of = [&](const std::string& name, const char* role) {
    auto i = m.find_state(name);
    if (!i) throw SemanticError(std::string(role) + " refers to unknown state '" + name + "'");
    return *i;
  };

  if (!initial_) throw SemanticError("missing initial state");
  m.initial_ = state_of(*initial_, "initial");

  m.terminal_.assign(m.states_.size(), false);
  for (const auto& t : terminals_) m.terminal_[state_of(t, "terminal")] = true;

  const std::size_t na = m.actions_.size();
  m.delta_.assign(m.states_.size() * na, {});
  for (const auto& e : edges_) {
    const std::size_t s = state_of(e.from, "transition source");
    auto a = m.find_action(e.action);
    if (!a) throw SemanticError("transition uses unknown action '" + e.action + "'");
    if (m.terminal_[s])
      throw SemanticError("terminal state '" + e.from + "' has an outgoing transition");
    if (e.to.empty()) throw SemanticError("transition " + e.from + " " + e.action + " has no target");
    auto& succ = m.delta_[s * na + *a];
    for (const auto& t : e.to) succ.push_back(state_of(t, "transition target"));
    std::sort(succ.begin(), succ.end());
    succ.erase(std::unique(succ.begin(), succ.end()), succ.end());
  }

  m.masks_.assign(m.states_.size(), ActionMask(na));
  for (std::size_t s = 0; s < m.states_.size(); ++s) {
    for (std::size_t a = 0; a < na; ++a)
      if (!m.delta_[s * na + a].empty()) m.masks_[s].set(a);
    if (!m.terminal_[s] && m.masks_[s].none())
      throw SemanticError("non-terminal state '" + m.states_[s].name + "' is a dead end");
  }
  return m;
}

// ---------------------------------------------------------------------------
// Text format

FsmSpec parse_fsm(std::string_view text) {
  FsmSpec::Builder b;
  bool have_states = false, have_actions = false, have_initial = false;
  std::size_t lineno = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++lineno;

    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    const auto colon = line.find(':');
    if (colon == std::string_view::npos) throw FormatError("expected '<directive>: ...'", lineno);
    const std::string key{trim(line.substr(0, colon))};
    const std::string_view rest = trim(line.substr(colon + 1));
    auto ids = split_ws(rest);

    auto require_ids = [&](const std::vector<std::string>& v) {
      for (const auto& id : v)
        if (!is_identifier(id)) throw FormatError("invalid identifier '" + id + "'", lineno);
    };

    if (key == "states") {
      if (ids.empty()) throw FormatError("'states' needs at least one identifier", lineno);
      require_ids(ids);
      for (auto& s : ids) b.add_state(s);
      have_states = true;
    } else if (key == "actions") {
      require_ids(ids);
      for (auto& a : ids) b.add_action(a);
      have_actions = true;
    } else if (key == "initial") {
      if (ids.size() != 1) throw FormatError("'initial' takes exactly one state", lineno);
      require_ids(ids);
      if (have_initial) throw FormatError("duplicate 'initial' directive", lineno);
      b.set_initial(ids[0]);
      have_initial = true;
    } else if (key == "terminal") {
      if (ids.empty()) throw FormatError("'terminal' needs at least one state", lineno);
      require_ids(ids);
      for (auto& t : ids) b.add_terminal(t);
    } else if (key == "transition") {
      auto arrow = std::find(ids.begin(), ids.end(), "->");
      if (arrow == ids.end() || std::distance(ids.begin(), arrow) != 2 || arrow + 1 == ids.end())
        throw FormatError("expected 'transition: <state> <action> -> <state ...>'", lineno);
      std::vector<std::string> to(arrow + 1, ids.end());
      require_ids({ids[0], ids[1]});
      require_ids(to);
      b.add_transition(ids[0], ids[1], to);
    } else {
      throw FormatError("unknown directive '" + key + "'", lineno);
    }
  }
  if (!have_states) throw FormatError("missing 'states' directive");
  if (!have_initial) throw FormatError("missing 'initial' directive");
  (void)have_actions;  // a machine with no actions is legal if every state is terminal
  return b.build();
}

std::string serialize_fsm(const FsmSpec& fsm) {
  std::ostringstream out;
  out << "states:";
  for (const auto& s : fsm.states()) out << ' ' << s.name;
  out << "\nactions:";
  for (const auto& a : fsm.actions()) out << ' ' << a.name;
  out << "\ninitial: " << fsm.state(fsm.initial()).name << '\n';
  const auto terms = fsm.terminals();
  if (!terms.empty()) {
    out << "terminal:";
    for (auto t : terms) out << ' ' << fsm.state(t).name;
    out << '\n';
  }
  for (std::size_t s = 0; s < fsm.num_states(); ++s)
    for (std::size_t a = 0; a < fsm.num_actions(); ++a) {
      auto succ = fsm.successors(s, a);
      if (succ.empty()) continue;
      out << "transition: " << fsm.state(s).name << ' ' << fsm.action(a).name << " ->";
      for (auto t : succ) out << ' ' << fsm.state(t).name;
      out << '\n';
    }
  return out.str();
}

FsmSpec load_fsm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open FSM file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_fsm(buf.str());
}

// ---------------------------------------------------------------------------
// Queries

ActionMask valid_actions(const FsmSpec& fsm, const StateId& s) {
  return fsm.mask(fsm.state_index(s.name));
}

std::size_t step(const FsmSpec& fsm, std::size_t s, std::size_t a, Rng& rng) {
  auto succ = fsm.successors(s, a);
  if (succ.empty())
    throw UsageError("FSM violation: " + fsm.action(a).name + " is undefined at " +
                     fsm.state(s).name);
  if (succ.size() == 1) return succ[0];
  return succ[rng.below(succ.size())];
}

StateId step(const FsmSpec& fsm, const StateId& s, const ActionId& a, Rng& rng) {
  return fsm.state(step(fsm, fsm.state_index(s.name), fsm.action_index(a.name), rng));
}

namespace {

bool any_terminal(const FsmSpec& fsm, std::span<const std::size_t> succ) {
  return std::any_of(succ.begin(), succ.end(), [&](std::size_t t) { return fsm.is_terminal(t); });
}

bool all_terminal(const FsmSpec& fsm, std::span<const std::size_t> succ) {
  return !succ.empty() &&
         std::all_of(succ.begin(), succ.end(), [&](std::size_t t) { return fsm.is_terminal(t); });
}

TraceVerdict fail(std::size_t i, std::string reason) {
  TraceVerdict v;
  v.ok = false;
  v.index = i;
  v.reason = std::move(reason);
  return v;
}

// Shared walker; `allow_reset` lets a row restart at q0 after a terminal entry.
TraceVerdict walk(const FsmSpec& fsm, std::span<const Step> rows, std::size_t start,
                  bool allow_reset) {
  TraceVerdict verdict;
  std::span<const std::size_t> prev_succ;
  std::size_t prev_state = start;
  bool first = true;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    auto s = fsm.find_state(r.state.name);
    if (!s) return fail(i, "unknown state '" + r.state.name + "'");
    auto a = fsm.find_action(r.event.name);
    if (!a) return fail(i, "unknown event '" + r.event.name + "'");

    if (first) {
      if (*s != start)
        return fail(i, "trace starts at " + r.state.name + ", expected " + fsm.state(start).name);
    } else {
      const bool consistent = std::find(prev_succ.begin(), prev_succ.end(), *s) != prev_succ.end();
      const bool reset = allow_reset && *s == fsm.initial() && any_terminal(fsm, prev_succ);
      if (!consistent && !reset) {
        std::string expect;
        for (auto t : prev_succ) expect += (expect.empty() ? "" : "|") + fsm.state(t).name;
        return fail(i, "state " + r.state.name + " inconsistent with delta(" +
                           fsm.state(prev_state).name + "," + rows[i - 1].event.name +
                           ")=" + expect);
      }
    }
    if (fsm.is_terminal(*s))
      return fail(i, "event " + r.event.name + " after terminal state " + r.state.name);
    prev_succ = fsm.successors(*s, *a);
    if (prev_succ.empty())
      return fail(i, r.event.name + " undefined at " + r.state.name);
    prev_state = *s;
    first = false;
  }
  verdict.ends_in_terminal = !rows.empty() && any_terminal(fsm, prev_succ);
  return verdict;
}

}  // namespace

TraceVerdict validate_trace(const FsmSpec& fsm, std::span<const Step> trace,
                            std::optional<StateId> start) {
  std::size_t s0 = fsm.initial();
  if (start) {
    auto s = fsm.find_state(start->name);
    if (!s) return fail(0, "unknown start state '" + start->name + "'");
    s0 = *s;
  }
  return walk(fsm, trace, s0, false);
}

TraceVerdict validate_log(const FsmSpec& fsm, std::span<const Step> rows) {
  return walk(fsm, rows, fsm.initial(), true);
}

std::vector<std::span<const Step>> split_segments(const FsmSpec& fsm, std::span<const Step> rows) {
  std::vector<std::span<const Step>> out;
  std::size_t begin = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto s = fsm.find_state(rows[i].state.name);
    auto a = fsm.find_action(rows[i].event.name);
    if (s && a && all_terminal(fsm, fsm.successors(*s, *a))) {
      out.push_back(rows.subspan(begin, i + 1 - begin));
      begin = i + 1;
    }
  }
  if (begin < rows.size()) out.push_back(rows.subspan(begin));
  return out;
}

// ---------------------------------------------------------------------------
// Expert trace

std::span<const Step> expert_cycle() {
  // Pair two files and write their summary: browse to the data folder,
  // select and open the files, compute totals in Calculator, type the
  // summary in Notepad, close back to File Explorer.
  static const std::array<Step, 8> cycle{{
      {{"S1"}, {"A8"}},
      {{"S2"}, {"K3"}},
      {{"S2"}, {"K4"}},
      {{"S2"}, {"A1"}},
      {{"S4"}, {"K1"}},
      {{"S4"}, {"A1"}},
      {{"S3"}, {"K1"}},
      {{"S3"}, {"A2"}},
  }};
  return cycle;
}

std::vector<Step> expert_trace(const FsmSpec& fsm, std::size_t repetitions) {
  const Step finish{{"S1"}, {"A2"}};
  auto cycle = expert_cycle();

  // The cycle must start at q0, chain through delta and return to its start;
  // the finishing step must enter a terminal.
  std::vector<Step> probe(cycle.begin(), cycle.end());
  probe.push_back(finish);
  if (fsm.find_state(cycle.front().state.name) != fsm.initial())
    throw SemanticError("expert cycle does not start at the initial state");
  auto v = validate_trace(fsm, probe);
  if (!v.ok)
    throw SemanticError("expert cycle not expressible in this machine: row " +
                        std::to_string(v.index) + ": " + v.reason);
  auto fs = fsm.state_index(finish.state.name);
  auto fa = fsm.action_index(finish.event.name);
  if (!all_terminal(fsm, fsm.successors(fs, fa)))
    throw SemanticError("expert finishing step does not enter a terminal state");

  std::vector<Step> out;
  out.reserve(repetitions * cycle.size() + 1);
  for (std::size_t r = 0; r < repetitions; ++r) out.insert(out.end(), cycle.begin(), cycle.end());
  out.push_back(finish);
  return out;
}

}  // namespace fsmgfn
