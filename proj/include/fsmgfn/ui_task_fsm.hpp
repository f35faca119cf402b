#pragma once

#include <string_view>

#include "fsmgfn/fsm.hpp"

namespace fsmgfn {

/// Text of data/ui_task_fsm.txt, compiled in so tools work without a path.
inline constexpr std::string_view kUiTaskFsmText = R"fsm(
# UI interaction machine for the pair-and-summarize task.
# S1 File Explorer open, S2 File Explorer navigating, S3 Notepad open,
# S4 Calculator open, TERM end of task.
states: S1 S2 S3 S4 TERM
actions: A1 A2 A8 K1 K3 K4 M
initial: S1
terminal: TERM

transition: S1 A8 -> S2
transition: S1 A1 -> S3 S4
transition: S1 K1 -> S1
transition: S1 M -> S1
transition: S1 A2 -> TERM

transition: S2 A1 -> S3 S4
transition: S2 A8 -> S1
transition: S2 K3 -> S2
transition: S2 K4 -> S2
transition: S2 M -> S2

transition: S3 A1 -> S4
transition: S3 A2 -> S1
transition: S3 K1 -> S3
transition: S3 M -> S3

transition: S4 A1 -> S3
transition: S4 A2 -> S1
transition: S4 K1 -> S4
transition: S4 M -> S4
)fsm";

inline FsmSpec ui_task_fsm() { return parse_fsm(kUiTaskFsmText); }

}  // namespace fsmgfn
