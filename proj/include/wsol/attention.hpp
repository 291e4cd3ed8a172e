#pragma once

#include <array>
#include <string_view>

#include "wsol/tensor.hpp"

namespace wsol {

inline constexpr int kNumCandidates = 5;
inline constexpr int kMinHeads = 5;

enum class CandidateSource { Head0, Head1, Head2, Head3, MeanOfAllHeads };

std::string_view to_string(CandidateSource s);

/// The first four heads plus the mean over all heads, each min-max normalized.
struct CandidateMaps {
  std::array<Tensor, kNumCandidates> maps;  // [h, w] each
  std::array<CandidateSource, kNumCandidates> provenance{
      CandidateSource::Head0, CandidateSource::Head1, CandidateSource::Head2, CandidateSource::Head3,
      CandidateSource::MeanOfAllHeads};
};

/// Maps values to [0,1] by (v - min) / (max - min); a constant plane becomes all zeros.
std::vector<float> normalize_minmax(std::span<const double> values);

/// `stack` is [K, h, w] f32 with K >= 5. The mean is taken over raw head values
/// before normalization.
/// Throws InsufficientHeads when K < 5 and InvalidInput on non-finite values.
CandidateMaps select_candidates(const Tensor& stack);

/// Corner-aligned bilinear resampling of an [h, w] map to [height, width].
Tensor upsample_bilinear(const Tensor& map, int height, int width);

}  // namespace wsol
