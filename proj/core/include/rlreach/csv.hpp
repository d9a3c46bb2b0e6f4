#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace rlreach::csv {

// RFC 4180 table with LF line endings. Fields containing a comma, quote or
// newline are quoted on output; every row has exactly header.size() fields.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(std::string_view name) const;  // throws LookupError
};

Table parse(std::string_view text);
std::string emit(const Table& table);

}  // namespace rlreach::csv
