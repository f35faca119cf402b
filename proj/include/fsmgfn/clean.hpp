#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>

namespace fsmgfn {

/// Positional column indices for headerless raw logs.
struct ColumnSpec {
  std::size_t state = 0;
  std::size_t event = 0;
};

/// Parses "state=<idx>,event=<idx>". Throws UsageError.
ColumnSpec parse_column_spec(std::string_view text);

/// Leading action-code token of an event cell: "A1:open notepad" -> "A1".
std::string action_code(std::string_view cell);

/// Keeps only the state and event columns and reduces events to their action
/// code. With `columns` unset the first line must be a header naming
/// `state` and `event` (case-insensitive); otherwise the input is treated as
/// headerless. Output is `state,event` CSV with LF endings. Throws
/// FormatError naming a missing column.
void clean_log(std::istream& in, std::ostream& out, const std::optional<ColumnSpec>& columns);

}  // namespace fsmgfn
