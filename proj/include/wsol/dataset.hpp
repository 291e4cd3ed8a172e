#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "wsol/box.hpp"

namespace wsol {

struct ManifestRecord {
  std::string image_id;
  std::filesystem::path image_path;
  std::filesystem::path attention_path;
  int label = 0;
  std::vector<BBox> gt_boxes;
};

/// Images with their tensors on disk. Paths are stored relative to `root`
/// (the directory holding the manifest CSV) when written.
struct DatasetManifest {
  std::filesystem::path root;
  std::vector<ManifestRecord> records;

  std::filesystem::path resolve(const std::filesystem::path& p) const;
  int n_classes() const;  ///< max label + 1
  const ManifestRecord* find(const std::string& image_id) const;
};

inline constexpr const char* kManifestHeader = "image_id,image_path,attention_path,label,x0,y0,x1,y1";

/// One row per gt box; an image without boxes gets one row with empty box fields.
void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& csv_path);

/// Groups rows by image_id in order of first appearance. Throws Format on
/// malformed rows or conflicting per-image fields, Io when a referenced file is missing.
DatasetManifest read_manifest(const std::filesystem::path& csv_path);

}  // namespace wsol
