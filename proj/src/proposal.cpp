#include "wsol/proposal.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "wsol/error.hpp"
#include "wsol/kernels.hpp"

namespace wsol {

Tensor gaussian_blur(const Tensor& image, double sigma) {
  require_f32(image, 3, "gaussian_blur");
  if (image.extent(2) != 3) fail(ErrorKind::InvalidInput, "gaussian_blur expects [H,W,3]");
  const auto taps = kernels::gaussian_taps(sigma);
  Tensor out = Tensor::f32(image.shape());
  kernels::separable_blur(image.f32_data(), out.f32_data(), static_cast<int>(image.extent(0)),
                          static_cast<int>(image.extent(1)), 3, taps);
  return out;
}

double default_blur_sigma(int height, int width) { return std::min(height, width) / 8.0; }

Tensor composite(const Tensor& image, const Tensor& blurred, const BBox& box) {
  if (image.shape() != blurred.shape()) fail(ErrorKind::InvalidInput, "composite: shape mismatch");
  const int w = static_cast<int>(image.extent(1));
  Tensor out = blurred;
  const auto src = image.f32_data();
  auto dst = out.f32_data();
  for (int y = box.y0; y < box.y1; ++y) {
    const auto begin = (static_cast<std::size_t>(y) * w + box.x0) * 3;
    const auto end = (static_cast<std::size_t>(y) * w + box.x1) * 3;
    std::copy(src.begin() + begin, src.begin() + end, dst.begin() + begin);
  }
  return out;
}

ProposalSet make_proposals(const Tensor& image, const CandidateMaps& candidates, const ProposalOptions& opts) {
  require_f32(image, 3, "make_proposals image");
  const int h = static_cast<int>(image.extent(0));
  const int w = static_cast<int>(image.extent(1));
  const double sigma = opts.sigma > 0.0 ? opts.sigma : default_blur_sigma(h, w);

  ProposalSet set;
  std::array<std::vector<BBox>, kNumCandidates> boxes;
  bool any = false;
  for (int m = 0; m < kNumCandidates; ++m) {
    set.upsampled[m] = upsample_bilinear(candidates.maps[m], h, w);
    boxes[m] = boxes_from_map(set.upsampled[m], opts.min_area_frac, opts.connectivity);
    any = any || !boxes[m].empty();
  }
  if (!any) return set;

  const Tensor blurred = gaussian_blur(image, sigma);
  for (int m = 0; m < kNumCandidates; ++m) {
    for (const auto& b : boxes[m]) set.proposals.push_back({composite(image, blurred, b), b, m});
  }
  return set;
}

std::pair<std::size_t, int> argmax_confidence(const std::vector<std::vector<double>>& confidences) {
  if (confidences.empty()) fail(ErrorKind::NoProposal, "no proposals to select from");
  std::size_t best_p = 0;
  int best_c = -1;
  double best = 0.0;
  for (std::size_t p = 0; p < confidences.size(); ++p) {
    for (std::size_t c = 0; c < confidences[p].size(); ++c) {
      const double v = confidences[p][c];
      if (!std::isfinite(v)) fail(ErrorKind::Numeric, "non-finite proposal confidence");
      if (best_c < 0 || v > best) {
        best = v;
        best_p = p;
        best_c = static_cast<int>(c);
      }
    }
  }
  if (best_c < 0) fail(ErrorKind::NoProposal, "scorer returned no classes");
  return {best_p, best_c};
}

Proposal select_best(const ProposalSet& set, const Scorer& scorer, std::string_view image_id) {
  if (set.proposals.empty()) fail(ErrorKind::NoProposal, "no proposals for image '" + std::string(image_id) + "'");
  std::vector<std::vector<double>> conf;
  conf.reserve(set.proposals.size());
  for (std::size_t i = 0; i < set.proposals.size(); ++i) {
    conf.push_back(scorer.score(image_id, i, set.proposals[i].image));
  }
  const auto [index, cls] = argmax_confidence(conf);
  const auto& win = set.proposals[index];
  return {win.box, win.source_map, cls, conf[index][cls], index, set.upsampled[win.source_map]};
}

}  // namespace wsol
