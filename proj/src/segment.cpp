#include "wsol/segment.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <tuple>

#include "wsol/error.hpp"

namespace wsol {

int otsu_bin(float value) {
  const int bin = static_cast<int>(std::floor(static_cast<double>(value) * kOtsuBins));
  return std::clamp(bin, 0, kOtsuBins - 1);
}

double otsu_between_class_variance(std::int64_t n0, std::int64_t sum0, std::int64_t n1, std::int64_t sum1) {
  if (n0 == 0 || n1 == 0) return 0.0;
  // w0 w1 (mu0 - mu1)^2 = (sum0 n1 - sum1 n0)^2 / (N^2 n0 n1); the 1/N^2 factor is
  // common to every split and dropped.
  const double d = static_cast<double>(sum0 * n1 - sum1 * n0);
  return d * d / (static_cast<double>(n0) * static_cast<double>(n1));
}

namespace {

int dims_h(const Tensor& m) { return static_cast<int>(m.extent(0)); }
int dims_w(const Tensor& m) { return static_cast<int>(m.extent(1)); }

}  // namespace

double otsu_threshold(const Tensor& map) {
  require_f32(map, 2, "otsu_threshold");
  std::array<std::int64_t, kOtsuBins> hist{};
  for (float v : map.f32_data()) {
    if (!(v >= 0.0f && v <= 1.0f)) fail(ErrorKind::InvalidInput, "otsu_threshold expects values in [0,1]");
    ++hist[otsu_bin(v)];
  }
  const auto occupied = std::count_if(hist.begin(), hist.end(), [](std::int64_t c) { return c > 0; });
  if (occupied < 2) fail(ErrorKind::DegenerateMap, "map occupies a single histogram bin");

  std::int64_t total_n = 0, total_sum = 0;
  for (int i = 0; i < kOtsuBins; ++i) {
    total_n += hist[i];
    total_sum += hist[i] * i;
  }
  std::int64_t n0 = 0, sum0 = 0;
  int best_t = 0;
  double best = -1.0;
  for (int t = 0; t < kOtsuBins; ++t) {
    n0 += hist[t];
    sum0 += hist[t] * t;
    const double var = otsu_between_class_variance(n0, sum0, total_n - n0, total_sum - sum0);
    if (var > best) {
      best = var;
      best_t = t;
    }
  }
  return (best_t + 1) / static_cast<double>(kOtsuBins);
}

BinaryMask binarize_otsu(const Tensor& map, double threshold) {
  require_f32(map, 2, "binarize_otsu");
  const int split = static_cast<int>(std::lround(threshold * kOtsuBins)) - 1;
  BinaryMask mask(dims_h(map), dims_w(map));
  const auto data = map.f32_data();
  for (std::size_t i = 0; i < data.size(); ++i) mask.bits[i] = otsu_bin(data[i]) > split ? 1 : 0;
  return mask;
}

BinaryMask binarize_above(const Tensor& map, double tau) {
  require_f32(map, 2, "binarize_above");
  BinaryMask mask(dims_h(map), dims_w(map));
  const auto data = map.f32_data();
  for (std::size_t i = 0; i < data.size(); ++i) mask.bits[i] = static_cast<double>(data[i]) > tau ? 1 : 0;
  return mask;
}

std::vector<Component> connected_components(const BinaryMask& mask, Connectivity connectivity) {
  const int h = mask.height;
  const int w = mask.width;
  std::vector<int> label(mask.bits.size(), -1);
  std::vector<Component> comps;
  std::vector<int> stack;

  static constexpr int kDy[8] = {-1, 1, 0, 0, -1, -1, 1, 1};
  static constexpr int kDx[8] = {0, 0, -1, 1, -1, 1, -1, 1};
  const int n_neighbors = connectivity == Connectivity::Eight ? 8 : 4;

  for (int start = 0; start < h * w; ++start) {
    if (!mask.bits[start] || label[start] >= 0) continue;
    const int id = static_cast<int>(comps.size());
    Component c;
    c.bbox = {start % w, start / w, start % w + 1, start / w + 1};
    label[start] = id;
    stack.push_back(start);
    while (!stack.empty()) {
      const int p = stack.back();
      stack.pop_back();
      c.pixels.push_back(p);
      const int y = p / w;
      const int x = p % w;
      c.bbox.x0 = std::min(c.bbox.x0, x);
      c.bbox.y0 = std::min(c.bbox.y0, y);
      c.bbox.x1 = std::max(c.bbox.x1, x + 1);
      c.bbox.y1 = std::max(c.bbox.y1, y + 1);
      for (int k = 0; k < n_neighbors; ++k) {
        const int ny = y + kDy[k];
        const int nx = x + kDx[k];
        if (ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
        const int q = ny * w + nx;
        if (mask.bits[q] && label[q] < 0) {
          label[q] = id;
          stack.push_back(q);
        }
      }
    }
    std::sort(c.pixels.begin(), c.pixels.end());
    c.area = static_cast<std::int64_t>(c.pixels.size());
    comps.push_back(std::move(c));
  }

  std::stable_sort(comps.begin(), comps.end(), [](const Component& a, const Component& b) {
    return std::make_tuple(-a.area, a.bbox.y0, a.bbox.x0, a.pixels.front()) <
           std::make_tuple(-b.area, b.bbox.y0, b.bbox.x0, b.pixels.front());
  });
  return comps;
}

std::vector<BBox> boxes_from_map(const Tensor& map, double min_area_frac, Connectivity connectivity) {
  require_f32(map, 2, "boxes_from_map");
  double t = 0.0;
  try {
    t = otsu_threshold(map);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::DegenerateMap) return {};
    throw;
  }
  const double min_area = min_area_frac * static_cast<double>(map.extent(0) * map.extent(1));
  std::vector<BBox> boxes;
  for (const auto& c : connected_components(binarize_otsu(map, t), connectivity)) {
    if (static_cast<double>(c.bbox.area()) >= min_area) boxes.push_back(c.bbox);
  }
  return boxes;
}

double iou(const BBox& a, const BBox& b) {
  const std::int64_t iw = std::max(0, std::min(a.x1, b.x1) - std::max(a.x0, b.x0));
  const std::int64_t ih = std::max(0, std::min(a.y1, b.y1) - std::max(a.y0, b.y0));
  const std::int64_t inter = iw * ih;
  const std::int64_t uni = a.area() + b.area() - inter;
  return uni > 0 ? static_cast<double>(inter) / static_cast<double>(uni) : 0.0;
}

}  // namespace wsol
