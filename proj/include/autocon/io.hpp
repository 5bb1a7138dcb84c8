#pragma once

#include <filesystem>
#include <string_view>

namespace autocon {

/// Writes to a sibling temp file then renames over `path`.
void write_text_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace autocon
