#include "wsol/dataset.hpp"

#include <algorithm>
#include <unordered_map>

#include "wsol/csv.hpp"
#include "wsol/error.hpp"

namespace wsol {

std::filesystem::path DatasetManifest::resolve(const std::filesystem::path& p) const {
  return p.is_absolute() ? p : root / p;
}

int DatasetManifest::n_classes() const {
  int n = 0;
  for (const auto& r : records) n = std::max(n, r.label + 1);
  return n;
}

const ManifestRecord* DatasetManifest::find(const std::string& image_id) const {
  auto it = std::find_if(records.begin(), records.end(),
                         [&](const ManifestRecord& r) { return r.image_id == image_id; });
  return it == records.end() ? nullptr : &*it;
}

void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& csv_path) {
  csv::Writer out(csv_path, kManifestHeader);
  for (const auto& r : manifest.records) {
    const std::vector<std::string> head = {r.image_id, r.image_path.generic_string(),
                                           r.attention_path.generic_string(), std::to_string(r.label)};
    if (r.gt_boxes.empty()) {
      auto fields = head;
      fields.insert(fields.end(), 4, "");
      out.row(fields);
    }
    for (const auto& b : r.gt_boxes) {
      auto fields = head;
      for (int v : {b.x0, b.y0, b.x1, b.y1}) fields.push_back(std::to_string(v));
      out.row(fields);
    }
  }
  out.close();
}

DatasetManifest read_manifest(const std::filesystem::path& csv_path) {
  DatasetManifest m;
  m.root = csv_path.parent_path();
  std::unordered_map<std::string, std::size_t> index;
  for (const auto& row : csv::read(csv_path, kManifestHeader)) {
    const std::string& id = row[0];
    if (id.empty()) fail(ErrorKind::Format, "manifest row with empty image_id");
    const long long label = csv::parse_int(row[3], "manifest label");
    if (label < 0) fail(ErrorKind::Format, "manifest label must be >= 0");

    auto [it, inserted] = index.try_emplace(id, m.records.size());
    if (inserted) {
      ManifestRecord r;
      r.image_id = id;
      r.image_path = row[1];
      r.attention_path = row[2];
      r.label = static_cast<int>(label);
      m.records.push_back(std::move(r));
    }
    auto& rec = m.records[it->second];
    if (rec.image_path != row[1] || rec.attention_path != row[2] || rec.label != label) {
      fail(ErrorKind::Format, "manifest rows for '" + id + "' disagree");
    }
    const bool no_box = row[4].empty() && row[5].empty() && row[6].empty() && row[7].empty();
    if (no_box) continue;
    BBox b{static_cast<int>(csv::parse_int(row[4], "x0")), static_cast<int>(csv::parse_int(row[5], "y0")),
           static_cast<int>(csv::parse_int(row[6], "x1")), static_cast<int>(csv::parse_int(row[7], "y1"))};
    if (b.x0 < 0 || b.y0 < 0 || b.x1 <= b.x0 || b.y1 <= b.y0) {
      fail(ErrorKind::Format, "invalid gt box for '" + id + "'");
    }
    rec.gt_boxes.push_back(b);
  }
  for (const auto& r : m.records) {
    for (const auto& p : {r.image_path, r.attention_path}) {
      if (!std::filesystem::exists(m.resolve(p))) {
        fail(ErrorKind::Io, "manifest path not found: " + m.resolve(p).string());
      }
    }
  }
  return m;
}

}  // namespace wsol
