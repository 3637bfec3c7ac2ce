#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace gamkit::io {

// One JSON-lines dataset entry. bbox follows image convention
// [x_min, y_min, x_max, y_max] with x = column and y = row; min is
// inclusive, max exclusive.
struct ManifestRecord {
  std::string id;
  std::string image_path;
  std::optional<std::string> label;  // int labels are canonicalized to text
  std::optional<std::array<int, 4>> bbox;
  std::optional<std::string> mask_path;
  std::optional<std::string> pair_with;
};

std::vector<ManifestRecord> read_manifest(const std::string& path);
void write_manifest(const std::string& path,
                    const std::vector<ManifestRecord>& records);

}  // namespace gamkit::io
