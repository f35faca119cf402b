#pragma once

#include <string>
#include <string_view>
#include <vector>

// Minimal RFC 4180 field splitting shared by the log reader and the cleaner.
namespace fsmgfn::csv {

/// Splits one physical line. Quoted fields may contain commas and doubled
/// quotes; embedded newlines are not supported. Throws FormatError on an
/// unterminated quote.
std::vector<std::string> split_line(std::string_view line, std::size_t lineno = 0);

std::string trim(std::string_view s);
std::string lower(std::string_view s);

}  // namespace fsmgfn::csv
