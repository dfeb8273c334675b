#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "dynoscan/segmentation.hpp"

namespace dynoscan {

// JSON lines: {"t": <f64>, "idx": [<u32>...]} per frame.
// Binary: "DYNL", then per frame f64 t, u32 count, count x u32 index (little-endian).

std::string to_json_line(const DynamicLabel& label);
/// Parses one JSON line; indices are normalized. Throws FormatError.
DynamicLabel parse_json_line(const std::string& line);

std::vector<DynamicLabel> read_labels_jsonl(const std::filesystem::path& path);
void write_labels_jsonl(const std::vector<DynamicLabel>& labels, const std::filesystem::path& path);

std::vector<DynamicLabel> read_labels_binary(const std::filesystem::path& path);
void write_labels_binary(const std::vector<DynamicLabel>& labels, const std::filesystem::path& path);

/// Dispatches on content: files starting with the DYNL magic are binary.
std::vector<DynamicLabel> read_labels(const std::filesystem::path& path);
/// `.dynl` / `.bin` extensions write binary, anything else JSON lines.
void write_labels(const std::vector<DynamicLabel>& labels, const std::filesystem::path& path);

/// Writes to a sibling temporary file and renames it over the target.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace dynoscan
