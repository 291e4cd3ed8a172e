#include "wsol/pseudolabel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "wsol/csv.hpp"
#include "wsol/error.hpp"
#include "wsol/rng.hpp"

namespace wsol {

std::size_t sample_count(double n_frac, std::size_t count) {
  if (count == 0) return 0;
  // 0.1 * 80 evaluates to 8.000000000000002; the slack keeps that at 8.
  const double raw = n_frac * static_cast<double>(count);
  auto k = static_cast<std::size_t>(std::ceil(raw - 1e-9 * std::max(1.0, raw)));
  return std::clamp<std::size_t>(k, 1, count);
}

PseudoLabels sample_pseudo_labels(const Proposal& prop, double n_frac) {
  if (!(n_frac > 0.0 && n_frac <= 1.0)) fail(ErrorKind::InvalidParam, "n_frac must be in (0, 1]");
  require_f32(prop.attention, 2, "sample_pseudo_labels attention");
  const int h = static_cast<int>(prop.attention.extent(0));
  const int w = static_cast<int>(prop.attention.extent(1));
  if (!prop.box.valid_in(w, h)) fail(ErrorKind::InvalidInput, "proposal box outside the attention map");
  if (prop.box.area() == static_cast<std::int64_t>(h) * w) {
    fail(ErrorKind::EmptyBackground, "proposal box covers the whole image");
  }

  const auto att = prop.attention.f32_data();
  std::vector<int> inside, outside;
  for (int p = 0; p < h * w; ++p) (prop.box.contains(p % w, p / w) ? inside : outside).push_back(p);

  std::stable_sort(inside.begin(), inside.end(), [&](int a, int b) { return att[a] > att[b]; });
  std::stable_sort(outside.begin(), outside.end(), [&](int a, int b) { return att[a] < att[b]; });

  PseudoLabels out;
  out.height = h;
  out.width = w;
  out.n_frac = n_frac;
  out.fg.assign(inside.begin(), inside.begin() + static_cast<std::ptrdiff_t>(sample_count(n_frac, inside.size())));
  out.bg.assign(outside.begin(), outside.begin() + static_cast<std::ptrdiff_t>(sample_count(n_frac, outside.size())));
  std::sort(out.fg.begin(), out.fg.end());
  std::sort(out.bg.begin(), out.bg.end());
  return out;
}

namespace {

// Partial Fisher-Yates: the first k slots become a uniform k-subset.
std::vector<int> pick(const std::vector<int>& from, std::size_t k, Rng& rng) {
  if (k >= from.size()) return from;
  std::vector<int> v = from;
  for (std::size_t i = 0; i < k; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.below(v.size() - i));
    std::swap(v[i], v[j]);
  }
  v.resize(k);
  std::sort(v.begin(), v.end());
  return v;
}

}  // namespace

PseudoLabels subsample(const PseudoLabels& labels, int k, std::uint64_t rng_seed) {
  if (k < 1) fail(ErrorKind::InvalidParam, "subsample k must be >= 1");
  Rng rng(rng_seed);
  PseudoLabels out = labels;
  out.fg = pick(labels.fg, static_cast<std::size_t>(k), rng);
  out.bg = pick(labels.bg, static_cast<std::size_t>(k), rng);
  return out;
}

void write_pseudo_labels(const std::vector<LabeledImage>& images, const std::filesystem::path& csv_path) {
  csv::Writer out(csv_path, kPseudoLabelHeader);
  for (const auto& img : images) {
    // Merge the two sorted sets so rows are in pixel order.
    std::size_t i = 0, j = 0;
    const auto& fg = img.labels.fg;
    const auto& bg = img.labels.bg;
    while (i < fg.size() || j < bg.size()) {
      const bool take_fg = j >= bg.size() || (i < fg.size() && fg[i] < bg[j]);
      const int p = take_fg ? fg[i++] : bg[j++];
      out.row({img.image_id, std::to_string(p), take_fg ? "1" : "0"});
    }
  }
  out.close();
}

std::vector<LabeledImage> read_pseudo_labels(const std::filesystem::path& csv_path) {
  std::vector<LabeledImage> images;
  std::unordered_map<std::string, std::size_t> index;
  for (const auto& row : csv::read(csv_path, kPseudoLabelHeader)) {
    const auto p = csv::parse_int(row[1], "pixel_index");
    const auto label = csv::parse_int(row[2], "label");
    if (p < 0 || (label != 0 && label != 1)) fail(ErrorKind::Format, "pseudo-label row out of range");
    auto [it, inserted] = index.try_emplace(row[0], images.size());
    if (inserted) images.push_back({row[0], {}});
    auto& labels = images[it->second].labels;
    (label == 1 ? labels.fg : labels.bg).push_back(static_cast<int>(p));
  }
  for (auto& img : images) {
    auto& l = img.labels;
    std::sort(l.fg.begin(), l.fg.end());
    std::sort(l.bg.begin(), l.bg.end());
    std::vector<int> both;
    std::set_intersection(l.fg.begin(), l.fg.end(), l.bg.begin(), l.bg.end(), std::back_inserter(both));
    if (!both.empty()) fail(ErrorKind::Format, "pixel labelled both fg and bg in '" + img.image_id + "'");
  }
  return images;
}

}  // namespace wsol
