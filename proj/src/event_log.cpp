#include "fsmgfn/event_log.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "fsmgfn/csv.hpp"
#include "fsmgfn/errors.hpp"

namespace fsmgfn {

const char* to_string(LogSource s) {
  switch (s) {
    case LogSource::generated: return "generated";
    case LogSource::real: return "real";
    case LogSource::expert: return "expert";
  }
  return "?";
}

std::vector<std::string> EventLog::events() const {
  std::vector<std::string> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.event.name);
  return out;
}

void write_log_csv(std::ostream& out, const EventLog& log) {
  out << "state,event\n";
  for (const auto& r : log.rows) out << r.state.name << ',' << r.event.name << '\n';
}

void write_log_csv(const std::filesystem::path& path, const EventLog& log) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  write_log_csv(out, log);
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

EventLog read_log_csv(std::istream& in, LogSource source) {
  EventLog log;
  log.source = source;
  std::string line;
  std::size_t lineno = 0;
  int state_col = -1, event_col = -1;
  std::size_t ncols = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = csv::split_line(line, lineno);
    if (state_col < 0) {
      for (std::size_t i = 0; i < fields.size(); ++i) {
        auto name = csv::lower(csv::trim(fields[i]));
        if (name == "state") state_col = static_cast<int>(i);
        if (name == "event") event_col = static_cast<int>(i);
      }
      if (state_col < 0 || event_col < 0 || fields.size() != 2)
        throw FormatError("expected header 'state,event'", lineno);
      ncols = fields.size();
      continue;
    }
    if (fields.size() != ncols)
      throw FormatError("expected " + std::to_string(ncols) + " fields, got " +
                            std::to_string(fields.size()),
                        lineno);
    Step s{{csv::trim(fields[state_col])}, {csv::trim(fields[event_col])}};
    if (s.state.name.empty() || s.event.name.empty()) throw FormatError("empty field", lineno);
    log.rows.push_back(std::move(s));
  }
  if (in.bad()) throw IoError("read failure");
  return log;
}

EventLog read_log_csv(const std::filesystem::path& path, LogSource source) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  try {
    return read_log_csv(in, source);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

std::vector<std::filesystem::path> list_logs(const std::filesystem::path& dir_or_file) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (fs::is_regular_file(dir_or_file, ec)) return {dir_or_file};
  if (!fs::is_directory(dir_or_file, ec))
    throw IoError("no such file or directory '" + dir_or_file.string() + "'");
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir_or_file)) {
    if (entry.is_regular_file() && entry.path().extension() == ".csv") out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<EventLog> read_log_dir(const std::filesystem::path& dir_or_file, LogSource source) {
  std::vector<EventLog> out;
  for (const auto& p : list_logs(dir_or_file)) out.push_back(read_log_csv(p, source));
  return out;
}

}  // namespace fsmgfn
