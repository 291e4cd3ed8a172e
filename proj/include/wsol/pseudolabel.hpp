#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "wsol/proposal.hpp"

namespace wsol {

/// Foreground/background pixel sets for one image; pixels in neither are ignored.
struct PseudoLabels {
  int height = 0;
  int width = 0;
  double n_frac = 0.0;
  std::vector<int> fg;  // sorted row-major pixel indices
  std::vector<int> bg;  // sorted row-major pixel indices

  bool empty() const noexcept { return fg.empty() && bg.empty(); }
  friend bool operator==(const PseudoLabels&, const PseudoLabels&) = default;
};

/// ceil(n_frac * count) guarded against floating-point overshoot, at least 1
/// when count > 0.
std::size_t sample_count(double n_frac, std::size_t count);

/// Highest-attention n_frac of the pixels inside the box become foreground and
/// lowest-attention n_frac of those outside become background; ties resolve by
/// row-major index. Throws InvalidParam when n_frac is outside (0, 1] and
/// EmptyBackground when the box covers the image.
PseudoLabels sample_pseudo_labels(const Proposal& prop, double n_frac = 0.1);

/// Seeded uniform subset of at most k pixels from each set.
PseudoLabels subsample(const PseudoLabels& labels, int k, std::uint64_t rng_seed);

inline constexpr const char* kPseudoLabelHeader = "image_id,pixel_index,label";

struct LabeledImage {
  std::string image_id;
  PseudoLabels labels;
};

void write_pseudo_labels(const std::vector<LabeledImage>& images, const std::filesystem::path& csv_path);

/// Reads a dump back; dims and n_frac are not stored and are left at zero.
std::vector<LabeledImage> read_pseudo_labels(const std::filesystem::path& csv_path);

}  // namespace wsol
