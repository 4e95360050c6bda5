#pragma once

#include <string>
#include <vector>

namespace nfloc {

// Shortest-roundtrip-safe decimal text for CSV cells ("%.*g"); "inf"/"nan" for non-finite.
std::string format_number(double v, int digits = 10);

std::string join_row(const std::vector<std::string>& cells);

// Writes text to path, or to stdout when path is empty or "-". Throws on I/O failure.
void write_text(const std::string& path, const std::string& text);

}  // namespace nfloc
