#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace irlpilot {

/// 17 significant digits; non-finite values spelled NaN, Inf, -Inf.
std::string FormatNumber(double value);

/// Writes comma-separated fields terminated by '\n'.
class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& os) : os_(os) {}

  void Header(const std::vector<std::string>& columns);
  CsvWriter& operator<<(double value);
  CsvWriter& operator<<(std::string_view text);
  void EndRow();

 private:
  void Separator();

  std::ostream& os_;
  bool row_started_ = false;
};

}  // namespace irlpilot
