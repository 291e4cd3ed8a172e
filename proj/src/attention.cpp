#include "wsol/attention.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "wsol/error.hpp"

namespace wsol {

std::string_view to_string(CandidateSource s) {
  switch (s) {
    case CandidateSource::Head0: return "Head0";
    case CandidateSource::Head1: return "Head1";
    case CandidateSource::Head2: return "Head2";
    case CandidateSource::Head3: return "Head3";
    case CandidateSource::MeanOfAllHeads: return "MeanOfAllHeads";
  }
  return "?";
}

std::vector<float> normalize_minmax(std::span<const double> values) {
  std::vector<float> out(values.size(), 0.0f);
  if (values.empty()) return out;
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  const double min = *lo;
  const double range = *hi - min;
  if (!(range > 0.0)) return out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    out[i] = static_cast<float>(std::clamp((values[i] - min) / range, 0.0, 1.0));
  }
  return out;
}

CandidateMaps select_candidates(const Tensor& stack) {
  require_f32(stack, 3, "attention stack");
  const std::size_t k = stack.extent(0);
  const std::size_t h = stack.extent(1);
  const std::size_t w = stack.extent(2);
  if (k < kMinHeads) {
    fail(ErrorKind::InsufficientHeads, "attention stack has " + std::to_string(k) + " heads, need >= 5");
  }
  const auto data = stack.f32_data();
  if (!std::all_of(data.begin(), data.end(), [](float v) { return std::isfinite(v); })) {
    fail(ErrorKind::InvalidInput, "attention stack contains non-finite values");
  }

  const std::size_t plane = h * w;
  CandidateMaps out;
  std::vector<double> buf(plane);
  for (std::size_t head = 0; head < 4; ++head) {
    std::copy_n(data.begin() + head * plane, plane, buf.begin());
    out.maps[head] = Tensor::f32({h, w}, normalize_minmax(buf));
  }
  std::fill(buf.begin(), buf.end(), 0.0);
  for (std::size_t head = 0; head < k; ++head)
    for (std::size_t p = 0; p < plane; ++p) buf[p] += data[head * plane + p];
  for (auto& v : buf) v /= static_cast<double>(k);
  out.maps[4] = Tensor::f32({h, w}, normalize_minmax(buf));
  return out;
}

Tensor upsample_bilinear(const Tensor& map, int height, int width) {
  require_f32(map, 2, "upsample_bilinear");
  if (height < 1 || width < 1) fail(ErrorKind::InvalidParam, "upsample target must be >= 1x1");
  const int sh = static_cast<int>(map.extent(0));
  const int sw = static_cast<int>(map.extent(1));
  const auto src = map.f32_data();
  if (sh == height && sw == width) return map;

  const double ry = height > 1 ? static_cast<double>(sh - 1) / (height - 1) : 0.0;
  const double rx = width > 1 ? static_cast<double>(sw - 1) / (width - 1) : 0.0;
  std::vector<float> out(static_cast<std::size_t>(height) * width);
  for (int y = 0; y < height; ++y) {
    const double fy = y * ry;
    const int y0 = std::min(static_cast<int>(fy), sh - 1);
    const int y1 = std::min(y0 + 1, sh - 1);
    const double ty = fy - y0;
    for (int x = 0; x < width; ++x) {
      const double fx = x * rx;
      const int x0 = std::min(static_cast<int>(fx), sw - 1);
      const int x1 = std::min(x0 + 1, sw - 1);
      const double tx = fx - x0;
      const double v00 = src[static_cast<std::size_t>(y0) * sw + x0];
      const double v01 = src[static_cast<std::size_t>(y0) * sw + x1];
      const double v10 = src[static_cast<std::size_t>(y1) * sw + x0];
      const double v11 = src[static_cast<std::size_t>(y1) * sw + x1];
      const double top = v00 + tx * (v01 - v00);
      const double bottom = v10 + tx * (v11 - v10);
      const double v = top + ty * (bottom - top);
      const double lo = std::min({v00, v01, v10, v11});
      const double hi = std::max({v00, v01, v10, v11});
      out[static_cast<std::size_t>(y) * width + x] = static_cast<float>(std::clamp(v, lo, hi));
    }
  }
  return Tensor::f32({static_cast<std::size_t>(height), static_cast<std::size_t>(width)}, std::move(out));
}

}  // namespace wsol
