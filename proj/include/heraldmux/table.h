#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace heraldmux {

/// Rectangular table of pre-formatted cells, rendered either as CSV or as
/// aligned text. Both renderings carry identical cell strings.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void add_row(std::vector<std::string> row);
  void write_csv(std::ostream& out) const;
  void write_text(std::ostream& out) const;
};

/// Numeric cell formatting shared by every table: 10 significant digits,
/// "nan" and "inf" spelled out.
std::string format_number(double x);

}  // namespace heraldmux
