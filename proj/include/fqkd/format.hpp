// Locale-independent number formatting and atomic file output.
#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace fqkd {

/// Shortest round-trip-free rendering with 12 significant digits
/// (printf "%.12g" semantics, independent of the global locale).
std::string format_number(double value);

/// Writes `contents` to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

} // namespace fqkd
