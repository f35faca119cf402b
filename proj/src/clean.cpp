#include "fsmgfn/clean.hpp"

#include <cctype>
#include <istream>
#include <ostream>
#include <vector>

#include "fsmgfn/csv.hpp"
#include "fsmgfn/errors.hpp"

namespace fsmgfn {

ColumnSpec parse_column_spec(std::string_view text) {
  ColumnSpec spec;
  bool have_state = false, have_event = false;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto comma = text.find(',', pos);
    if (comma == std::string_view::npos) comma = text.size();
    const auto item = text.substr(pos, comma - pos);
    pos = comma + 1;
    const auto eq = item.find('=');
    if (eq == std::string_view::npos) throw UsageError("--columns expects state=<idx>,event=<idx>");
    const auto key = csv::lower(csv::trim(item.substr(0, eq)));
    const auto val = csv::trim(item.substr(eq + 1));
    if (val.empty() || val.find_first_not_of("0123456789") != std::string::npos)
      throw UsageError("--columns index must be a non-negative integer, got '" + val + "'");
    const auto idx = static_cast<std::size_t>(std::stoull(val));
    if (key == "state") {
      spec.state = idx;
      have_state = true;
    } else if (key == "event") {
      spec.event = idx;
      have_event = true;
    } else {
      throw UsageError("--columns: unknown key '" + key + "'");
    }
  }
  if (!have_state || !have_event) throw UsageError("--columns needs both state and event");
  return spec;
}

std::string action_code(std::string_view cell) {
  std::size_t i = 0;
  while (i < cell.size() && (cell[i] == ' ' || cell[i] == '\t')) ++i;
  std::size_t j = i;
  while (j < cell.size() &&
         (std::isalnum(static_cast<unsigned char>(cell[j])) || cell[j] == '_'))
    ++j;
  return std::string(cell.substr(i, j - i));
}

void clean_log(std::istream& in, std::ostream& out, const std::optional<ColumnSpec>& columns) {
  std::string line;
  std::size_t lineno = 0;
  std::optional<ColumnSpec> cols = columns;
  out << "state,event\n";
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = csv::split_line(line, lineno);
    if (!cols) {
      std::optional<std::size_t> s, e;
      for (std::size_t i = 0; i < fields.size(); ++i) {
        const auto name = csv::lower(csv::trim(fields[i]));
        if (name == "state") s = i;
        if (name == "event") e = i;
      }
      if (!s) throw FormatError("missing required column 'state'", lineno);
      if (!e) throw FormatError("missing required column 'event'", lineno);
      cols = ColumnSpec{*s, *e};
      continue;
    }
    if (cols->state >= fields.size())
      throw FormatError("row has no state column (index " + std::to_string(cols->state) + ")", lineno);
    if (cols->event >= fields.size())
      throw FormatError("row has no event column (index " + std::to_string(cols->event) + ")", lineno);
    const auto state = csv::trim(fields[cols->state]);
    const auto event = action_code(fields[cols->event]);
    if (lineno == 1 && csv::lower(state) == "state" && csv::lower(event) == "event") continue;
    if (state.empty() || event.empty()) throw FormatError("empty state or event", lineno);
    out << state << ',' << event << '\n';
  }
  if (!cols) throw FormatError("missing required column 'state'");
}

}  // namespace fsmgfn
