#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "fsmgfn/fsm.hpp"
#include "fsmgfn/policy.hpp"

namespace fsmgfn {

/// A trained policy together with the machine ordering it was trained on.
///
/// On disk (text, LF endings):
///
///   fsmgfn-policy 1
///   states <n> <name>...
///   actions <m> <name>...
///   hidden <H>
///   t_max <T>
///   w1 <rows> <cols>
///   <one row of hex floats per line>
///   b1 <n>
///   ...w2, b2 likewise
///
/// Values are printed as C99 hex floats so a load reproduces every bit.
struct Checkpoint {
  static constexpr int kFormatVersion = 1;

  std::vector<std::string> states;
  std::vector<std::string> actions;
  std::size_t t_max = 0;
  PolicyParams params;

  /// Throws SemanticError when the orderings differ from `fsm`.
  void check_compatible(const FsmSpec& fsm) const;

  bool operator==(const Checkpoint&) const = default;
};

Checkpoint make_checkpoint(const FsmSpec& fsm, const PolicyParams& params, std::size_t t_max);

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt);
void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint(std::istream& in);
Checkpoint read_checkpoint(const std::filesystem::path& path);

}  // namespace fsmgfn
