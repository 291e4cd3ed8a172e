#pragma once

#include <cstdint>
#include <vector>

#include "wsol/box.hpp"
#include "wsol/tensor.hpp"

namespace wsol {

inline constexpr int kOtsuBins = 256;

enum class Connectivity { Four = 4, Eight = 8 };

struct BinaryMask {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> bits;  // row-major, 0 or 1

  BinaryMask() = default;
  BinaryMask(int h, int w) : height(h), width(w), bits(static_cast<std::size_t>(h) * w, 0) {}
  bool at(int y, int x) const { return bits[static_cast<std::size_t>(y) * width + x] != 0; }
};

struct Component {
  std::vector<int> pixels;  // sorted row-major indices
  std::int64_t area = 0;
  BBox bbox;
};

/// Histogram bin of a value in [0,1]: bin i covers [i/256, (i+1)/256), 1.0 goes to bin 255.
int otsu_bin(float value);

/// Otsu's threshold on a fixed 256-bin histogram of a [H,W] map in [0,1].
/// Returns (t + 1) / 256 for the split "bins <= t vs bins > t" maximizing the
/// between-class variance, smallest t on ties.
/// Throws DegenerateMap when only one bin is occupied, InvalidInput on values outside [0,1].
double otsu_threshold(const Tensor& map);

/// Between-class variance for the split at bin `t`, computed from exact integer
/// class counts and bin-index sums; both the fast path and brute-force checks
/// feed it identical integers.
double otsu_between_class_variance(std::int64_t n0, std::int64_t sum0, std::int64_t n1, std::int64_t sum1);

/// Foreground iff the value's histogram bin lies above the Otsu split.
BinaryMask binarize_otsu(const Tensor& map, double threshold);

/// Foreground iff value > tau.
BinaryMask binarize_above(const Tensor& map, double tau);

/// Components sorted by area descending, then top row, left column, first pixel.
std::vector<Component> connected_components(const BinaryMask& mask,
                                            Connectivity connectivity = Connectivity::Eight);

/// Otsu, binarize, label, and take each component's tight box, keeping boxes
/// with area >= min_area_frac * H * W. Degenerate maps give no boxes.
std::vector<BBox> boxes_from_map(const Tensor& map, double min_area_frac = 0.0,
                                 Connectivity connectivity = Connectivity::Eight);

double iou(const BBox& a, const BBox& b);

}  // namespace wsol
