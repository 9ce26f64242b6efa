#include "irlpilot/csv.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

namespace irlpilot {

std::string FormatNumber(double value) {
  if (std::isnan(value)) return "NaN";
  if (std::isinf(value)) return value > 0 ? "Inf" : "-Inf";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

void CsvWriter::Header(const std::vector<std::string>& columns) {
  for (const auto& c : columns) *this << std::string_view(c);
  EndRow();
}

void CsvWriter::Separator() {
  if (row_started_) os_ << ',';
  row_started_ = true;
}

CsvWriter& CsvWriter::operator<<(double value) {
  Separator();
  os_ << FormatNumber(value);
  return *this;
}

CsvWriter& CsvWriter::operator<<(std::string_view text) {
  Separator();
  os_ << text;
  return *this;
}

void CsvWriter::EndRow() {
  os_ << '\n';
  row_started_ = false;
}

}  // namespace irlpilot
