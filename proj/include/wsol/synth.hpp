#pragma once

#include <cstdint>
#include <filesystem>

#include "wsol/dataset.hpp"

namespace wsol {

/// Parameters of the seeded synthetic localization dataset.
struct SynthConfig {
  int n_images = 200;
  int height = 48;
  int width = 48;
  int n_classes = 4;
  int n_heads = 6;
  double noise_sigma = 0.1;
  double distractor_prob = 0.3;
  std::uint64_t rng_seed = 7;
  int attention_stride = 2;  ///< image pixels per attention cell along each axis

  void validate() const;  ///< throws InvalidParam
};

/// Class c is drawn as a rectangle (even c) or ellipse (odd c) in the c-th hue
/// of an evenly spaced palette over smooth low-saturation background noise.
/// Heads 0..3 of the attention stack are the blurred object mask plus
/// per-head noise (one of them may carry a distractor blob); the remaining heads
/// are smooth noise. Every head is min-max normalized.
///
/// Writes images/<id>.tnsr [H,W,3], attention/<id>.tnsr [K,h,w] and
/// manifest.csv under `out_dir`, and returns the manifest.
DatasetManifest generate_synthetic(const SynthConfig& cfg, const std::filesystem::path& out_dir);

}  // namespace wsol
