#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace tcfg::io {

// Shortest decimal form that round-trips the double exactly.
std::string format_double(double v);

// Writes `contents` to `path`, creating parent directories. Throws kIo.
void write_text_file(const std::filesystem::path& path, std::string_view contents);

std::string read_text_file(const std::filesystem::path& path);

}  // namespace tcfg::io
