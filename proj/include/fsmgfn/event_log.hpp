#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "fsmgfn/fsm.hpp"

namespace fsmgfn {

enum class LogSource { generated, real, expert };

const char* to_string(LogSource s);

struct EventLog {
  std::vector<Step> rows;
  LogSource source = LogSource::generated;

  std::size_t size() const noexcept { return rows.size(); }
  std::vector<std::string> events() const;
};

/// Cleaned-log CSV: header `state,event`, one row per step, LF endings.
void write_log_csv(std::ostream& out, const EventLog& log);
void write_log_csv(const std::filesystem::path& path, const EventLog& log);

/// Reads a cleaned log. The header must name exactly the columns state and
/// event (case-insensitive, either order). Throws FormatError / IoError.
EventLog read_log_csv(std::istream& in, LogSource source = LogSource::real);
EventLog read_log_csv(const std::filesystem::path& path, LogSource source = LogSource::real);

/// `*.csv` files of a directory in lexicographic order, or the path itself
/// when it names a file.
std::vector<std::filesystem::path> list_logs(const std::filesystem::path& dir_or_file);

std::vector<EventLog> read_log_dir(const std::filesystem::path& dir_or_file,
                                   LogSource source = LogSource::real);

}  // namespace fsmgfn
