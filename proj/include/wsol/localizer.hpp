#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "wsol/tensor.hpp"

namespace wsol {

inline constexpr int kFeatureDim = 6;   // r, g, b, x/(W-1), y/(H-1), attention
inline constexpr int kHiddenDim = 16;
inline constexpr int kChannels = 2;     // background, foreground
inline constexpr int kHeadInputs = kFeatureDim + 1;

/// Per-pixel two-layer tanh MLP producing (background, foreground) logits, plus
/// the linear class head used by the class-alignment loss. All f64.
struct LocalizerParams {
  std::vector<double> w1;    // [16, 6]
  std::vector<double> b1;    // [16]
  std::vector<double> w2;    // [2, 16]
  std::vector<double> b2;    // [2]
  std::vector<double> head;  // [n_classes, 7], last column is the bias
  int n_classes = 0;

  static LocalizerParams zeros(int n_classes);
  /// Scaled-normal init for w1/w2 (std 1/sqrt(fan_in)), zero biases, zero head.
  static LocalizerParams seeded(int n_classes, std::uint64_t seed);

  friend bool operator==(const LocalizerParams&, const LocalizerParams&) = default;
};

struct PixelFeatures {
  int height = 0;
  int width = 0;
  std::vector<double> values;  // [H*W, 6]

  std::size_t pixels() const noexcept { return static_cast<std::size_t>(height) * width; }
  std::span<const double> at(std::size_t p) const { return {values.data() + p * kFeatureDim, kFeatureDim}; }
};

/// `image` is [H,W,3] in [0,1]; `attention` is [H,W] in [0,1].
PixelFeatures make_features(const Tensor& image, const Tensor& attention);

struct LocalizationMap {
  int height = 0;
  int width = 0;
  std::vector<double> probs;  // [H*W, 2]

  std::size_t pixels() const noexcept { return static_cast<std::size_t>(height) * width; }
  double bg(std::size_t p) const { return probs[2 * p]; }
  double fg(std::size_t p) const { return probs[2 * p + 1]; }

  Tensor to_tensor() const;   ///< [H,W,2] f32
  Tensor foreground() const;  ///< [H,W] f32
};

/// Hidden activations kept from the forward pass for backpropagation.
struct ForwardCache {
  std::vector<double> hidden;  // [H*W, 16]
};

LocalizationMap forward(const LocalizerParams& params, const PixelFeatures& features,
                        ForwardCache* cache = nullptr);

struct ParamGradient {
  std::vector<double> w1, b1, w2, b2;
};

/// Chain rule from dL/dS (layout [H*W, 2]) through softmax and the MLP.
ParamGradient backward(const LocalizerParams& params, const PixelFeatures& features,
                       const ForwardCache& cache, const LocalizationMap& map,
                       std::span<const double> grad_probs);

/// Checkpoint directory with w1.tnsr, b1.tnsr, w2.tnsr, b2.tnsr, head.tnsr (f32).
void save_params(const LocalizerParams& params, const std::filesystem::path& dir);
LocalizerParams load_params(const std::filesystem::path& dir);

}  // namespace wsol
