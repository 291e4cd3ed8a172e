#pragma once

// Data-parallel inner loops. Each kernel has a plain serial reference and an
// OpenMP version computing every output element with the same arithmetic in
// the same order, so the two agree bit for bit; tests hold them to that and
// bench/ compares their speed. Library code calls the dispatching overloads.

#include <span>
#include <vector>

#include "wsol/localizer.hpp"

namespace wsol::kernels {

/// Normalized 1-D Gaussian taps, radius ceil(3*sigma), index 0 is offset -radius.
std::vector<double> gaussian_taps(double sigma);

struct PottsResult {
  double value = 0.0;
  std::vector<double> grad;  // [N, channels]
};

namespace serial {
/// Clamp-to-edge separable convolution of an interleaved [H,W,C] image.
void separable_blur(std::span<const float> in, std::span<float> out, int height, int width, int channels,
                    std::span<const double> taps);

/// Relaxed Potts energy (1/N^2) sum_c sum_{i!=j} W_ij S_i^c (1 - S_j^c) with
/// W_ij = exp(-|f_i - f_j|^2 / 2) over pre-scaled features [N, dim].
PottsResult dense_potts(std::span<const double> features, int dim, std::span<const double> probs,
                        int channels);

void mlp_forward(const LocalizerParams& params, std::span<const double> features, std::span<double> probs,
                 std::span<double> hidden);
}  // namespace serial

namespace parallel {
void separable_blur(std::span<const float> in, std::span<float> out, int height, int width, int channels,
                    std::span<const double> taps);
PottsResult dense_potts(std::span<const double> features, int dim, std::span<const double> probs,
                        int channels);
void mlp_forward(const LocalizerParams& params, std::span<const double> features, std::span<double> probs,
                 std::span<double> hidden);
}  // namespace parallel

void separable_blur(std::span<const float> in, std::span<float> out, int height, int width, int channels,
                    std::span<const double> taps);
PottsResult dense_potts(std::span<const double> features, int dim, std::span<const double> probs,
                        int channels);
void mlp_forward(const LocalizerParams& params, std::span<const double> features, std::span<double> probs,
                 std::span<double> hidden);

/// Number of threads parallel kernels and per-image loops may use.
int max_threads();
void set_threads(int n);

}  // namespace wsol::kernels
